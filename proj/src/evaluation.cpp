#include "regbench/evaluation.h"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include "regbench/error.h"
#include "regbench/geometry.h"
#include "regbench/icp.h"
#include "regbench/kdtree.h"
#include "regbench/parallel.h"
#include "regbench/synthetic.h"

namespace regbench {

namespace {

/// Distance from every source keypoint to the closest target keypoint
/// mapped back through invert(gt); infinity when there are no targets.
std::vector<double> nearest_mapped_distances(std::span<const Vec3> source,
                                             std::span<const Vec3> target,
                                             const SimilarityTransform& gt) {
    std::vector<double> out(source.size(), std::numeric_limits<double>::infinity());
    if (source.empty() || target.empty()) return out;
    const auto inv = invert(gt);
    std::vector<Vec3> mapped(target.size());
    for (std::size_t j = 0; j < target.size(); ++j) mapped[j] = inv.apply(target[j]);
    const KdTree tree(mapped);
    parallel_for(source.size(), [&](std::size_t i) {
        std::size_t idx = 0;
        double d2 = 0.0;
        tree.nearest(source[i], idx, d2);
        out[i] = std::sqrt(d2);
    });
    return out;
}

std::string combination_name(DetectorKind d, DescriptorKind e) {
    return std::string(to_string(d)) + "-" + std::string(to_string(e));
}

bool same_radius(double a, double b) { return std::abs(a - b) <= 1e-12; }

Vec3 bounding_center(const PointCloud& cloud) {
    Vec3 lo = cloud.points.front();
    Vec3 hi = lo;
    for (const auto& p : cloud.points) {
        lo = lo.cwiseMin(p);
        hi = hi.cwiseMax(p);
    }
    return 0.5 * (lo + hi);
}

}  // namespace

std::string_view to_string(BatteryKind kind) {
    switch (kind) {
        case BatteryKind::Identity: return "identity";
        case BatteryKind::RotationSmall: return "rotation-small";
        case BatteryKind::RotationLarge: return "rotation-large";
        case BatteryKind::Translation: return "translation";
        case BatteryKind::Scaling: return "scaling";
    }
    return "identity";
}

std::optional<BatteryKind> parse_battery(std::string_view name) {
    std::string lower(name);
    for (auto& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    for (auto k : {BatteryKind::Identity, BatteryKind::RotationSmall, BatteryKind::RotationLarge,
                   BatteryKind::Translation, BatteryKind::Scaling})
        if (lower == to_string(k)) return k;
    return std::nullopt;
}

TransformBattery make_battery(BatteryKind kind, std::uint64_t seed) {
    TransformBattery b;
    b.kind = kind;
    b.seed = seed;
    const char* axis_names[3] = {"x", "y", "z"};
    switch (kind) {
        case BatteryKind::Identity:
            b.cases.push_back({"identity", SimilarityTransform::identity()});
            break;
        case BatteryKind::RotationSmall:
        case BatteryKind::RotationLarge: {
            const double deg = kind == BatteryKind::RotationSmall ? 5.0 : 40.0;
            for (int a = 0; a < 3; ++a) {
                b.cases.push_back({"rot" + std::to_string(static_cast<int>(deg)) + "-" + axis_names[a],
                                   SimilarityTransform::from_axis_angle(Vec3::Unit(a),
                                                                        deg * std::numbers::pi / 180.0)});
            }
            break;
        }
        case BatteryKind::Translation: {
            std::mt19937_64 rng(derive_seed(seed, 3));
            std::uniform_real_distribution<double> u(-1.5, 1.5);
            for (int c = 0; c < 3; ++c) {
                const double x = u(rng);
                const double y = u(rng);
                const double z = u(rng);
                b.cases.push_back({"trans-" + std::to_string(c), SimilarityTransform::from_translation(Vec3(x, y, z))});
            }
            break;
        }
        case BatteryKind::Scaling:
            b.cases.push_back({"scale-0.5", SimilarityTransform::from_scale(0.5)});
            b.cases.push_back({"scale-2", SimilarityTransform::from_scale(2.0)});
            break;
    }
    return b;
}

double repeatability(std::span<const Vec3> source_keypoints, std::span<const Vec3> target_keypoints,
                     const SimilarityTransform& gt, double threshold) {
    if (source_keypoints.empty()) return 0.0;
    const auto d = nearest_mapped_distances(source_keypoints, target_keypoints, gt);
    std::size_t hit = 0;
    for (double v : d)
        if (v <= threshold) ++hit;
    return static_cast<double>(hit) / static_cast<double>(source_keypoints.size());
}

double RepeatabilityCurve::area() const {
    double a = 0.0;
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        a += 0.5 * (values[i] + values[i - 1]) * (thresholds[i] - thresholds[i - 1]);
    return a;
}

double RepeatabilityCurve::value_at(double t) const {
    for (std::size_t i = 0; i < thresholds.size(); ++i)
        if (thresholds[i] >= t - 1e-15) return values[i];
    return 0.0;
}

std::vector<double> default_thresholds() {
    std::vector<double> t(30);
    for (int i = 0; i < 30; ++i) t[i] = 0.03 * static_cast<double>(i) / 29.0;
    return t;
}

RepeatabilityCurve repeatability_curve(std::span<const Vec3> source_keypoints,
                                       std::span<const Vec3> target_keypoints,
                                       const SimilarityTransform& gt,
                                       std::span<const double> thresholds) {
    for (std::size_t i = 1; i < thresholds.size(); ++i)
        if (!(thresholds[i] > thresholds[i - 1])) throw_invalid("thresholds must be strictly increasing");
    RepeatabilityCurve curve;
    curve.thresholds.assign(thresholds.begin(), thresholds.end());
    curve.values.assign(thresholds.size(), 0.0);
    if (source_keypoints.empty()) return curve;
    const auto d = nearest_mapped_distances(source_keypoints, target_keypoints, gt);
    for (std::size_t t = 0; t < thresholds.size(); ++t) {
        std::size_t hit = 0;
        for (double v : d)
            if (v <= thresholds[t]) ++hit;
        curve.values[t] = static_cast<double>(hit) / static_cast<double>(source_keypoints.size());
    }
    return curve;
}

SuccessRate success_rate(const CorrespondenceSet& correspondences,
                         std::span<const Vec3> source_keypoints,
                         std::span<const Vec3> target_keypoints, const SimilarityTransform& gt,
                         double epsilon) {
    SuccessRate out;
    if (correspondences.empty()) {
        out.empty = true;
        return out;
    }
    const auto inv = invert(gt);
    std::size_t correct = 0;
    for (const auto& c : correspondences) {
        if (c.source >= source_keypoints.size() || c.target >= target_keypoints.size())
            throw_invalid("correspondence index out of range");
        if ((inv.apply(target_keypoints[c.target]) - source_keypoints[c.source]).norm() <= epsilon) ++correct;
    }
    out.value = static_cast<double>(correct) / static_cast<double>(correspondences.size());
    return out;
}

Misalignment misalignment(const PointCloud& source, const SimilarityTransform& estimated,
                          const SimilarityTransform& gt) {
    if (source.empty()) throw_invalid("misalignment of an empty cloud");
    double sum = 0.0;
    for (const auto& p : source.points) sum += (estimated.apply(p) - gt.apply(p)).squaredNorm();
    Misalignment m;
    m.mse = sum / static_cast<double>(source.size());
    m.rms = std::sqrt(m.mse);
    return m;
}

CumulativeTrace cumulative_error(std::span<const PosedView> views, const PipelineConfig& config) {
    if (views.empty()) throw_invalid("cumulative error needs at least one view");
    validate(config);
    CumulativeTrace trace;
    const FeatureParams fparams = feature_params(config);

    auto prepare = [&](const PointCloud& cloud) {
        return estimate_normals(cloud, config.normal_radius, config.viewpoint);
    };

    PointCloud previous = prepare(views[0].cloud);
    std::optional<FeatureCloud> previous_features;
    PointCloud model = apply_transform(previous, views[0].pose);
    trace.view_index.push_back(0);
    trace.error.push_back(0.0);
    trace.estimated_pose.push_back(views[0].pose);

    for (std::size_t k = 1; k < views.size(); ++k) {
        const PointCloud current = prepare(views[k].cloud);
        SimilarityTransform init = trace.estimated_pose.back();
        try {
            if (config.coarse_enabled) {
                if (!previous_features) previous_features = compute_features(previous, fparams, true);
                FeatureCloud current_features = compute_features(current, fparams, true);
                RansacParams rp = config.ransac;
                rp.seed = derive_seed(config.ransac.seed, k);
                const auto coarse = estimate_coarse(current_features, *previous_features, rp);
                init = compose(trace.estimated_pose.back(), coarse.transform);
                previous_features = std::move(current_features);
            }
            const auto refined = icp(current, model, init, config.icp);
            if (!std::isfinite(refined.final_mse))
                throw Error(ErrorClass::AlignmentFailed,
                            "ICP found no correspondences within the gate");
            trace.estimated_pose.push_back(refined.transform);
        } catch (const Error& e) {
            trace.truncated = true;
            trace.failed_view = static_cast<int>(k);
            trace.failure = std::string(error_class_name(e.error_class())) + ": " + e.what();
            break;
        }
        const auto& est = trace.estimated_pose.back();
        trace.view_index.push_back(static_cast<int>(k));
        trace.error.push_back(misalignment(views[k].cloud, est, views[k].pose).rms);
        model.append(apply_transform(current, est));
        previous = current;
        if (!config.coarse_enabled) previous_features.reset();
    }
    return trace;
}

std::vector<double> radius_sweep(double step) {
    if (!(step > 0.0)) throw_invalid("radius step must be positive");
    const auto n = static_cast<std::size_t>(std::floor(0.05 / step + 1e-9)) + 1;
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n; ++i) r[i] = static_cast<double>(i) * step;
    return r;
}

double EvaluationReport::mean_repeatability_area(DetectorKind detector, BatteryKind battery) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : repeatability)
        if (r.detector == detector && r.battery == battery) {
            sum += r.curve.area();
            ++n;
        }
    return n ? sum / n : 0.0;
}

double EvaluationReport::mean_repeatability_at(DetectorKind detector, BatteryKind battery,
                                               double t) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : repeatability)
        if (r.detector == detector && r.battery == battery) {
            sum += r.curve.value_at(t);
            ++n;
        }
    return n ? sum / n : 0.0;
}

double EvaluationReport::mean_success(DetectorKind detector, DescriptorKind descriptor,
                                      BatteryKind battery, double radius) const {
    double sum = 0.0;
    int n = 0;
    for (const auto& s : success)
        if (s.detector == detector && s.descriptor == descriptor && s.battery == battery &&
            same_radius(s.radius, radius)) {
            sum += s.value;
            ++n;
        }
    return n ? sum / n : 0.0;
}

PointCloud make_battery_target(const PointCloud& source_with_normals, const SimilarityTransform& t,
                               double noise_sigma, std::uint64_t seed) {
    PointCloud noisy = perturb_along_normals(source_with_normals, noise_sigma, seed);
    noisy.normals.clear();
    noisy.normal_valid.clear();
    return apply_transform(noisy, t);
}

EvaluationReport run_matrix(const PointCloud& scene, const MatrixConfig& config) {
    if (scene.size() < 2) throw_invalid("evaluation scene needs at least 2 points");
    if (config.detectors.empty() || config.batteries.empty())
        throw_invalid("evaluation matrix needs at least one detector and one battery");
    for (double r : config.radii)
        if (!(r >= 0.0)) throw_invalid("descriptor radii must be non-negative");
    for (double r : config.misalignment_radii)
        if (!(r > 0.0)) throw_invalid("misalignment radii must be positive");

    EvaluationReport report;
    report.seed = config.seed;
    const double res = compute_resolution(scene);
    report.resolution = res;
    const double eps = config.epsilon > 0.0 ? config.epsilon : 2.0 * res;
    const Vec3 vp = config.viewpoint.allFinite() ? config.viewpoint : bounding_center(scene);
    const double normal_radius = 4.0 * res;
    const PointCloud source = estimate_normals(scene, normal_radius, vp);

    // Source-side work shared by every battery case.
    std::map<DetectorKind, KeypointSet> source_keypoints;
    std::map<DetectorKind, std::string> source_failure;
    for (auto d : config.detectors) {
        if (source_keypoints.count(d) || source_failure.count(d)) continue;
        try {
            source_keypoints[d] = detect(source, default_detector_config(d, res));
        } catch (const Error& e) {
            source_failure[d] = e.what();
        }
    }
    std::map<std::tuple<DetectorKind, DescriptorKind, double>, DescriptorSet> source_descriptors;
    auto source_desc = [&](DetectorKind d, DescriptorKind e, double r) -> const DescriptorSet& {
        const auto key = std::make_tuple(d, e, r);
        auto it = source_descriptors.find(key);
        if (it == source_descriptors.end())
            it = source_descriptors.emplace(key, describe(e, source, source_keypoints.at(d), r)).first;
        return it->second;
    };

    for (auto bk : config.batteries) {
        const auto battery = make_battery(bk, derive_seed(config.seed, 5, static_cast<std::uint64_t>(bk)));
        for (std::size_t ci = 0; ci < battery.cases.size(); ++ci) {
            const auto& bc = battery.cases[ci];
            const double s = bc.transform.scale;
            const PointCloud raw = make_battery_target(
                source, bc.transform, config.noise_sigma,
                derive_seed(config.seed, 11, static_cast<std::uint64_t>(bk), ci));
            const PointCloud target = estimate_normals(raw, normal_radius * s, bc.transform.apply(vp));

            for (auto d : config.detectors) {
                const std::string det_name(to_string(d));
                if (source_failure.count(d)) {
                    report.failures.push_back({det_name, bc.name, 0.0, source_failure[d]});
                    continue;
                }
                const auto& skp = source_keypoints.at(d);
                KeypointSet tkp;
                try {
                    tkp = detect(target, scaled(default_detector_config(d, res), s));
                } catch (const Error& e) {
                    report.failures.push_back({det_name, bc.name, 0.0, e.what()});
                    continue;
                }
                const auto spos = skp.positions(source);
                const auto tpos = tkp.positions(target);
                report.repeatability.push_back({d, bk, bc.name,
                                                repeatability_curve(spos, tpos, bc.transform, config.thresholds),
                                                skp.size(), tkp.size()});

                for (auto e : config.descriptors) {
                    for (double r : config.radii) {
                        SuccessRecord rec{d, e, bk, bc.name, r, 0.0, true};
                        try {
                            const auto& ds = source_desc(d, e, r);
                            const auto dt = describe(e, target, tkp, r * s);
                            CorrespondenceSet corr;
                            if (ds.valid_count() > 0 && dt.valid_count() > 0)
                                corr = match_descriptors(ds, dt, true);
                            const auto sr = success_rate(corr, spos, tpos, bc.transform, eps);
                            rec.value = sr.value;
                            rec.empty = sr.empty;
                        } catch (const Error& ex) {
                            report.failures.push_back({combination_name(d, e), bc.name, r, ex.what()});
                        }
                        report.success.push_back(rec);
                    }
                    for (double r : config.misalignment_radii) {
                        try {
                            FeatureCloud fs{source, skp, source_desc(d, e, r), spos};
                            FeatureCloud ft{target, tkp, describe(e, target, tkp, r * s), tpos};
                            RansacParams rp;
                            rp.trials = config.ransac_trials;
                            rp.inlier_threshold = 3.0 * res * s;
                            rp.seed = derive_seed(derive_seed(config.seed, 13, static_cast<std::uint64_t>(d),
                                                              static_cast<std::uint64_t>(e)),
                                                  static_cast<std::uint64_t>(bk), ci);
                            const auto coarse = estimate_coarse(fs, ft, rp);
                            report.misalignment.push_back(
                                {d, e, bk, bc.name, r, misalignment(source, coarse.transform, bc.transform)});
                        } catch (const Error& ex) {
                            report.failures.push_back({combination_name(d, e), bc.name, r, ex.what()});
                        }
                    }
                }
            }
        }
    }
    return report;
}

std::string format_number(double value) {
    if (value == 0.0) return "0";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string report_curves_csv(const EvaluationReport& report) {
    std::ostringstream out;
    out << "# seed=" << report.seed << "\n";
    out << "# resolution_m=" << format_number(report.resolution) << "\n";
    out << "combination,battery_case,threshold_m,threshold_cm,value\n";
    for (const auto& r : report.repeatability)
        for (std::size_t i = 0; i < r.curve.thresholds.size(); ++i)
            out << "repeatability:" << to_string(r.detector) << "," << r.battery_case << ","
                << format_number(r.curve.thresholds[i]) << ","
                << format_number(r.curve.thresholds[i] * 100.0) << ","
                << format_number(r.curve.values[i]) << "\n";
    for (const auto& s : report.success)
        out << "success_rate:" << combination_name(s.detector, s.descriptor) << "," << s.battery_case << ","
            << format_number(s.radius) << "," << format_number(s.radius * 100.0) << ","
            << format_number(s.value) << "\n";
    for (const auto& m : report.misalignment)
        out << "misalignment_rms:" << combination_name(m.detector, m.descriptor) << "," << m.battery_case
            << "," << format_number(m.radius) << "," << format_number(m.radius * 100.0) << ","
            << format_number(m.value.rms) << "\n";
    for (const auto& f : report.failures)
        out << "# failure combination=" << f.combination << " case=" << f.battery_case
            << " radius_m=" << format_number(f.radius) << " message=" << f.message << "\n";
    return out.str();
}

std::string trace_csv(const CumulativeTrace& trace, std::uint64_t seed) {
    std::ostringstream out;
    out << "# seed=" << seed << "\n";
    if (trace.truncated)
        out << "# truncated at view " << trace.failed_view << ": " << trace.failure << "\n";
    out << "view_index,error_m\n";
    for (std::size_t i = 0; i < trace.error.size(); ++i)
        out << trace.view_index[i] << "," << format_number(trace.error[i]) << "\n";
    return out.str();
}

}  // namespace regbench
