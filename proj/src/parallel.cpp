#include "regbench/parallel.h"

#include <omp.h>

#include <exception>
#include <mutex>

#include "regbench/error.h"

namespace regbench {

namespace {
int g_threads = 0;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}
}  // namespace

std::string_view error_class_name(ErrorClass cls) {
    switch (cls) {
        case ErrorClass::InvalidInput: return "invalid_input";
        case ErrorClass::DegenerateGeometry: return "degenerate_geometry";
        case ErrorClass::Parse: return "parse_error";
        case ErrorClass::AlignmentFailed: return "alignment_failed";
        case ErrorClass::Usage: return "usage";
        case ErrorClass::Io: return "io_error";
    }
    return "unknown";
}

void set_thread_count(int threads) { g_threads = threads < 1 ? 0 : threads; }

int thread_count() { return g_threads > 0 ? g_threads : omp_get_max_threads(); }

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& body) {
    const auto count = static_cast<std::int64_t>(n);
    if (count == 0) return;
    const int threads = thread_count();
    if (threads == 1 || count == 1) {
        for (std::int64_t i = 0; i < count; ++i) body(static_cast<std::size_t>(i));
        return;
    }
    // Exceptions cannot cross the OpenMP region; keep the one from the lowest
    // index so the rethrown error is schedule-independent.
    std::mutex mutex;
    std::exception_ptr first_error;
    std::int64_t first_index = count;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            body(static_cast<std::size_t>(i));
        } catch (...) {
            std::lock_guard lock(mutex);
            if (i < first_index) {
                first_index = i;
                first_error = std::current_exception();
            }
        }
    }
    if (first_error) std::rethrow_exception(first_error);
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b,
                          std::uint64_t c) {
    std::uint64_t h = splitmix64(base);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

}  // namespace regbench
