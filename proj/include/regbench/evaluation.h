#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regbench/descriptors.h"
#include "regbench/detectors.h"
#include "regbench/matching.h"
#include "regbench/pipeline_config.h"
#include "regbench/point_cloud.h"
#include "regbench/transform.h"

namespace regbench {

enum class BatteryKind { Identity, RotationSmall, RotationLarge, Translation, Scaling };

std::string_view to_string(BatteryKind kind);
/// "identity", "rotation-small", "rotation-large", "translation", "scaling".
std::optional<BatteryKind> parse_battery(std::string_view name);

struct BatteryCase {
    std::string name;
    SimilarityTransform transform;
};

struct TransformBattery {
    BatteryKind kind = BatteryKind::Identity;
    std::vector<BatteryCase> cases;
    std::uint64_t seed = 0;
};

/// RotationSmall / RotationLarge: 5 / 40 degrees about x, y and z.
/// Translation: three seeded translations, components uniform in
/// [-1.5, 1.5] m. Scaling: uniform scales 0.5 and 2. Identity: one case.
TransformBattery make_battery(BatteryKind kind, std::uint64_t seed);

/// Fraction of source keypoints with a target keypoint (mapped back through
/// invert(gt)) within `threshold`. 0 when there are no source keypoints.
double repeatability(std::span<const Vec3> source_keypoints, std::span<const Vec3> target_keypoints,
                     const SimilarityTransform& gt, double threshold);

struct RepeatabilityCurve {
    std::vector<double> thresholds;
    std::vector<double> values;
    /// Trapezoidal area under the curve over the threshold axis.
    double area() const;
    /// Value at the first threshold >= t (linear search); 0 if none.
    double value_at(double t) const;
};

/// 30 equidistant thresholds from 0 to 3 cm.
std::vector<double> default_thresholds();

RepeatabilityCurve repeatability_curve(std::span<const Vec3> source_keypoints,
                                       std::span<const Vec3> target_keypoints,
                                       const SimilarityTransform& gt,
                                       std::span<const double> thresholds);

struct SuccessRate {
    double value = 0.0;
    bool empty = false;  // no correspondences at all; value is 0
};

/// Fraction of correspondences (i, j) for which target keypoint j mapped
/// through invert(gt) lies within epsilon of source keypoint i.
SuccessRate success_rate(const CorrespondenceSet& correspondences,
                         std::span<const Vec3> source_keypoints,
                         std::span<const Vec3> target_keypoints, const SimilarityTransform& gt,
                         double epsilon);

struct Misalignment {
    double mse = 0.0;  // m^2
    double rms = 0.0;  // m
};

/// Mean over source points of |estimated(p) - gt(p)|^2. Throws InvalidInput
/// for an empty cloud.
Misalignment misalignment(const PointCloud& source, const SimilarityTransform& estimated,
                          const SimilarityTransform& gt);

/// A view of a multi-view capture with its exact pose (view -> world).
struct PosedView {
    PointCloud cloud;
    SimilarityTransform pose;
};

struct CumulativeTrace {
    std::vector<int> view_index;
    std::vector<double> error;  // RMS distance, m
    std::vector<SimilarityTransform> estimated_pose;
    bool truncated = false;
    int failed_view = -1;
    std::string failure;
};

/// View 0 is anchored at its true pose. Each following view is registered
/// onto the model grown from the views before it: the optional coarse step
/// aligns it with the previous view, ICP then refines against the whole
/// model. The error of view k is the RMS distance between its points placed
/// by the estimated and by the true pose. A failed registration truncates
/// the trace and records why.
CumulativeTrace cumulative_error(std::span<const PosedView> views, const PipelineConfig& config);

struct MatrixConfig {
    std::vector<DetectorKind> detectors;
    std::vector<DescriptorKind> descriptors;
    std::vector<BatteryKind> batteries;
    std::vector<double> thresholds = default_thresholds();
    /// Descriptor radii for the success-rate sweep.
    std::vector<double> radii;
    /// Descriptor radii at which coarse alignment and misalignment are run
    /// (empty disables them).
    std::vector<double> misalignment_radii;
    /// Perturbation of every target point along its normal, m.
    double noise_sigma = 0.0;
    std::uint64_t seed = 0;
    /// Success-rate tolerance; <= 0 selects 2 * resolution.
    double epsilon = 0.0;
    /// Normal orientation point; NaN selects the source bounding-box center.
    Vec3 viewpoint = Vec3::Constant(std::numeric_limits<double>::quiet_NaN());
    int ransac_trials = 1000;
};

/// [0, 5] cm in steps of `step` (inclusive of both ends when they fall on the
/// lattice).
std::vector<double> radius_sweep(double step);

struct RepeatabilityRecord {
    DetectorKind detector;
    BatteryKind battery;
    std::string battery_case;
    RepeatabilityCurve curve;
    std::size_t source_keypoints = 0;
    std::size_t target_keypoints = 0;
};

struct SuccessRecord {
    DetectorKind detector;
    DescriptorKind descriptor;
    BatteryKind battery;
    std::string battery_case;
    double radius = 0.0;
    double value = 0.0;
    bool empty = false;
};

struct MisalignmentRecord {
    DetectorKind detector;
    DescriptorKind descriptor;
    BatteryKind battery;
    std::string battery_case;
    double radius = 0.0;
    Misalignment value;
};

struct CellFailure {
    std::string combination;
    std::string battery_case;
    double radius = 0.0;
    std::string message;
};

struct EvaluationReport {
    std::uint64_t seed = 0;
    double resolution = 0.0;
    std::vector<RepeatabilityRecord> repeatability;
    std::vector<SuccessRecord> success;
    std::vector<MisalignmentRecord> misalignment;
    std::vector<std::pair<std::string, CumulativeTrace>> traces;
    std::vector<CellFailure> failures;

    /// Mean curve area over the cases of one battery for one detector.
    double mean_repeatability_area(DetectorKind detector, BatteryKind battery) const;
    /// Mean repeatability at threshold t over the cases of one battery.
    double mean_repeatability_at(DetectorKind detector, BatteryKind battery, double t) const;
    /// Mean success rate over the cases of one battery at one radius.
    double mean_success(DetectorKind detector, DescriptorKind descriptor, BatteryKind battery,
                        double radius) const;
};

/// Target for one battery case: the source perturbed along its normals by
/// noise_sigma, then transformed. The result carries no normals.
PointCloud make_battery_target(const PointCloud& source_with_normals, const SimilarityTransform& t,
                               double noise_sigma, std::uint64_t seed);

/// detector x battery repeatability curves, detector x descriptor x battery
/// x radius success rates, and misalignment after coarse alignment at the
/// configured radii. Every cell draws its randomness from (seed, cell
/// coordinates), so a cell's result does not depend on what else is in the
/// matrix. Cell failures are recorded and the run continues.
EvaluationReport run_matrix(const PointCloud& scene, const MatrixConfig& config);

/// Curves in `combination,battery_case,threshold_m,threshold_cm,value` form;
/// combination is prefixed by the metric ("repeatability:iss3d",
/// "success_rate:iss3d-shot", "misalignment_rms:iss3d-shot"). Leading
/// '#' lines carry the seed.
std::string report_curves_csv(const EvaluationReport& report);
/// `view_index,error_m` rows.
std::string trace_csv(const CumulativeTrace& trace, std::uint64_t seed);

/// Nine significant digits, the format used by every CSV writer.
std::string format_number(double value);

}  // namespace regbench
