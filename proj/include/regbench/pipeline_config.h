#pragma once

#include <string>

#include "json.hpp"
#include "regbench/descriptors.h"
#include "regbench/detectors.h"
#include "regbench/icp.h"
#include "regbench/matching.h"

namespace regbench {

/// Everything one registration run needs. All lengths are meters.
struct PipelineConfig {
    DetectorConfig detector;
    DescriptorKind descriptor = DescriptorKind::Shot;
    double descriptor_radius = 0.04;
    double normal_radius = 0.04;
    Vec3 viewpoint = Vec3::Zero();
    bool coarse_enabled = true;
    RansacParams ransac;
    IcpParams icp;
    std::string source_path;
    std::string target_path;
    std::string output_path;
};

/// Defaults scaled to a cloud resolution: detector defaults, normal radius
/// 4 * resolution, descriptor radius 4 cm, inlier threshold 3 * resolution,
/// point-to-plane ICP gated at 10 * resolution.
PipelineConfig default_pipeline_config(double resolution);

/// Applies a JSON document on top of `base`. Recognized layout:
///   { "detector":   { "name": "iss3d", "params": { ... } },
///     "descriptor": { "name": "shot", "radius": 0.04 },
///     "normals":    { "radius": 0.04, "viewpoint": [0, 0, 0] },
///     "coarse":     { "enabled": true, "seed": 0, "trials": 1000,
///                     "inlier_threshold": 0.03, "min_inliers": 5 },
///     "icp":        { "variant": "point-to-plane", "max_iterations": 50,
///                     "max_correspondence_distance": 0.1,
///                     "transform_epsilon": 1e-8, "mse_epsilon": 1e-6 },
///     "io":         { "source": "...", "target": "...", "output": "..." } }
/// Unknown keys and unknown detector / descriptor / variant names throw
/// Usage; wrong value types throw Parse.
PipelineConfig apply_config_json(const PipelineConfig& base, const nlohmann::json& doc);

/// Reads and parses a JSON file (Io / Parse errors).
nlohmann::json read_json_file(const std::string& path);

nlohmann::json to_json(const PipelineConfig& config);

/// Throws InvalidInput when a radius or threshold is not positive.
void validate(const PipelineConfig& config);

FeatureParams feature_params(const PipelineConfig& config);
CoarseParams coarse_params(const PipelineConfig& config);

}  // namespace regbench
