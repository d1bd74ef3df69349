#pragma once

#include <cstdint>
#include <string>

#include "json.hpp"
#include "regbench/descriptors.h"
#include "regbench/detectors.h"
#include "regbench/evaluation.h"
#include "regbench/icp.h"
#include "regbench/matching.h"
#include "regbench/transform.h"

namespace regbench {

/// Every interchange document is an object carrying "schema" (a
/// "regbench.<kind>" string), "version" and the "seed" that produced it.
inline constexpr int kSchemaVersion = 1;

nlohmann::json keypoints_to_json(const KeypointSet& keypoints, std::uint64_t seed);
KeypointSet keypoints_from_json(const nlohmann::json& doc);

nlohmann::json descriptors_to_json(const DescriptorSet& descriptors, std::uint64_t seed);
DescriptorSet descriptors_from_json(const nlohmann::json& doc);

nlohmann::json correspondences_to_json(const CorrespondenceSet& correspondences, std::uint64_t seed);
CorrespondenceSet correspondences_from_json(const nlohmann::json& doc);

/// {"scale": s, "rotation": [[..],[..],[..]], "translation": [..]}
nlohmann::json transform_json(const SimilarityTransform& t);
SimilarityTransform transform_from_json(const nlohmann::json& j);

nlohmann::json battery_to_json(const TransformBattery& battery);
nlohmann::json icp_result_to_json(const IcpResult& result, std::uint64_t seed);
nlohmann::json coarse_to_json(const CoarseAlignment& coarse, std::uint64_t seed);

/// Two-space indented dump followed by a newline (Io error on failure).
void write_json_file(const std::string& path, const nlohmann::json& doc);

}  // namespace regbench
