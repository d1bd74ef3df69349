#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

namespace regbench {

/// Process-wide worker count for the parallel loops below. Values < 1 select
/// the OpenMP default. Results never depend on this setting: every parallel
/// loop writes to per-index slots and reductions are done serially afterwards.
void set_thread_count(int threads);
int thread_count();

/// Runs body(i) for i in [0, n) with a static schedule.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body);

/// Deterministic 64-bit seed derivation (splitmix64 over the inputs), used to
/// give every trial / cell / view its own generator independent of scheduling.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

}  // namespace regbench
