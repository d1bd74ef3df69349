// Command-line front end: every subcommand reads clouds / JSON, runs one
// library operation and writes JSON, CSV or cloud files.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "regbench/cloud_io.h"
#include "regbench/error.h"
#include "regbench/evaluation.h"
#include "regbench/geometry.h"
#include "regbench/icp.h"
#include "regbench/matching.h"
#include "regbench/parallel.h"
#include "regbench/pipeline_config.h"
#include "regbench/serialization.h"
#include "regbench/synthetic.h"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace regbench;

namespace {

struct Globals {
    std::string config_path;
    std::uint64_t seed = 0;
    int threads = 0;
    bool strict = false;
    bool seed_given = false;
};

Globals g;

[[noreturn]] void usage(const std::string& message) { throw Error(ErrorClass::Usage, message); }

template <typename Kind>
std::string valid_list(const std::vector<Kind>& kinds) {
    std::string out;
    for (const auto k : kinds) out += (out.empty() ? "" : ", ") + std::string(to_string(k));
    return out;
}

DetectorKind detector_or_usage(const std::string& name) {
    if (auto d = parse_detector(name)) return *d;
    usage("unknown detector '" + name + "'; valid values: " + valid_list(all_detectors()));
}

DescriptorKind descriptor_or_usage(const std::string& name) {
    if (auto d = parse_descriptor(name)) return *d;
    usage("unknown descriptor '" + name + "'; valid values: " + valid_list(all_descriptors()));
}

IcpVariant variant_or_usage(const std::string& name) {
    if (auto v = parse_icp_variant(name)) return *v;
    usage("unknown ICP variant '" + name + "'; valid values: point-to-point, point-to-plane");
}

BatteryKind battery_or_usage(const std::string& name) {
    if (auto b = parse_battery(name)) return *b;
    usage("unknown battery '" + name +
          "'; valid values: identity, rotation-small, rotation-large, translation, scaling");
}

bool on_off(const std::string& value, const char* flag) {
    if (value == "on" || value == "true" || value == "1") return true;
    if (value == "off" || value == "false" || value == "0") return false;
    usage(std::string("--") + flag + " expects on or off, got '" + value + "'");
}

PointCloud load(const std::string& path) {
    ReadReport report;
    PointCloud cloud = read_cloud(path, ReadOptions{g.strict}, &report);
    if (report.nan_points_dropped > 0)
        std::cerr << path << ": dropped " << report.nan_points_dropped << " points with NaN coordinates\n";
    for (const auto& w : report.warnings) std::cerr << path << ": " << w << "\n";
    return cloud;
}

void write_text(const std::string& path, const std::string& text) {
    if (path.empty() || path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorClass::Io, "cannot write '" + path + "'");
    out << text;
    if (!out) throw Error(ErrorClass::Io, "failed writing '" + path + "'");
}

void emit_json(const std::string& path, const json& doc) {
    if (path.empty() || path == "-")
        std::cout << doc.dump(2) << "\n";
    else
        write_json_file(path, doc);
}

/// Resolution-scaled defaults, then the --config file, then the global seed.
PipelineConfig base_config(double resolution) {
    PipelineConfig cfg = default_pipeline_config(resolution);
    if (!g.config_path.empty()) cfg = apply_config_json(cfg, read_json_file(g.config_path));
    if (g.seed_given) cfg.ransac.seed = g.seed;
    return cfg;
}

std::uint64_t effective_seed(const PipelineConfig& cfg) { return g.seed_given ? g.seed : cfg.ransac.seed; }

SimilarityTransform read_initial_transform(const std::string& path) {
    const json doc = read_json_file(path);
    if (doc.is_object() && doc.contains("transform")) return transform_from_json(doc["transform"]);
    return transform_from_json(doc);
}

/// "synth:room" -> the room seen from camera 0 (one capture, camera frame).
PointCloud scene_cloud(const std::string& scene, std::uint64_t seed) {
    if (scene.rfind("synth:", 0) == 0) {
        if (scene != "synth:room") usage("unknown synthetic scene '" + scene + "'; valid values: synth:room");
        RoomOptions opts;
        opts.noise_sigma = 0.0;
        return synthesize_views(room_scene(seed, opts), ViewSpec{}).front().cloud;
    }
    return load(scene);
}

std::vector<PosedView> synthetic_circuit(std::uint64_t seed, double noise, int count) {
    RoomOptions opts;
    opts.noise_sigma = noise;
    ViewSpec vs;
    vs.count = count;
    std::vector<PosedView> views;
    for (auto& v : synthesize_views(room_scene(seed, opts), vs)) views.push_back({std::move(v.cloud), v.pose});
    return views;
}

json views_document(const std::vector<std::string>& files, const std::vector<SimilarityTransform>& poses,
                    std::uint64_t seed) {
    json doc = {{"schema", "regbench.views"}, {"version", kSchemaVersion}, {"seed", seed}};
    json list = json::array();
    for (std::size_t i = 0; i < files.size(); ++i) list.push_back({{"file", files[i]}, {"pose", transform_json(poses[i])}});
    doc["views"] = std::move(list);
    return doc;
}

std::vector<PosedView> load_posed_views(const std::string& poses_path, const std::vector<std::string>& override_files) {
    const json doc = read_json_file(poses_path);
    if (!doc.is_object() || doc.value("schema", "") != "regbench.views")
        throw Error(ErrorClass::Parse, "'" + poses_path + "' is not a regbench.views document");
    const fs::path dir = fs::path(poses_path).parent_path();
    const auto& list = doc.at("views");
    if (!override_files.empty() && override_files.size() != list.size())
        usage("got " + std::to_string(override_files.size()) + " view files but the pose file lists " +
              std::to_string(list.size()));
    std::vector<PosedView> views;
    for (std::size_t i = 0; i < list.size(); ++i) {
        std::string file = override_files.empty() ? list[i].at("file").get<std::string>() : override_files[i];
        if (override_files.empty() && fs::path(file).is_relative()) file = (dir / file).string();
        views.push_back({load(file), transform_from_json(list[i].at("pose"))});
    }
    return views;
}

struct FeatureFlags {
    std::string detector;
    std::string descriptor;
    double radius = 0.0;
};

void add_feature_flags(CLI::App* cmd, FeatureFlags& f, bool with_descriptor) {
    cmd->add_option("--detector", f.detector, "harris3d | sift3d | iss3d | susan");
    if (with_descriptor) {
        cmd->add_option("--descriptor", f.descriptor, "shot | fpfh");
        cmd->add_option("--radius", f.radius, "descriptor support radius, m");
    }
}

void apply_feature_flags(PipelineConfig& cfg, const FeatureFlags& f, double resolution) {
    if (!f.detector.empty()) cfg.detector = default_detector_config(detector_or_usage(f.detector), resolution);
    if (!f.descriptor.empty()) cfg.descriptor = descriptor_or_usage(f.descriptor);
    if (f.radius > 0.0) cfg.descriptor_radius = f.radius;
}

// ---------------------------------------------------------------- commands

struct DetectArgs {
    std::string input, out;
    FeatureFlags features;
};

void run_detect(const DetectArgs& a) {
    const PointCloud cloud = load(a.input);
    const double res = compute_resolution(cloud);
    PipelineConfig cfg = base_config(res);
    apply_feature_flags(cfg, a.features, res);
    validate(cfg);
    const PointCloud with_normals = estimate_normals(cloud, cfg.normal_radius, cfg.viewpoint);
    emit_json(a.out, keypoints_to_json(detect(with_normals, cfg.detector), effective_seed(cfg)));
}

struct DescribeArgs {
    std::string input, keypoints, out;
    FeatureFlags features;
};

void run_describe(const DescribeArgs& a) {
    const PointCloud cloud = load(a.input);
    const double res = compute_resolution(cloud);
    PipelineConfig cfg = base_config(res);
    apply_feature_flags(cfg, a.features, res);
    validate(cfg);
    const KeypointSet kp = keypoints_from_json(read_json_file(a.keypoints));
    for (const auto i : kp.indices)
        if (i >= cloud.size())
            throw Error(ErrorClass::InvalidInput, "keypoint index " + std::to_string(i) + " outside a cloud of " +
                                                      std::to_string(cloud.size()) + " points");
    const PointCloud with_normals = estimate_normals(cloud, cfg.normal_radius, cfg.viewpoint);
    emit_json(a.out, descriptors_to_json(describe(cfg.descriptor, with_normals, kp, cfg.descriptor_radius),
                                         effective_seed(cfg)));
}

struct MatchArgs {
    std::string source, target, out;
    bool one_way = false;
};

void run_match(const MatchArgs& a) {
    const DescriptorSet s = descriptors_from_json(read_json_file(a.source));
    const DescriptorSet t = descriptors_from_json(read_json_file(a.target));
    emit_json(a.out, correspondences_to_json(match_descriptors(s, t, !a.one_way), g.seed));
}

struct CoarseArgs {
    std::string source, target, out, aligned;
    FeatureFlags features;
    int trials = 0;
};

void run_coarse(const CoarseArgs& a) {
    const PointCloud source = load(a.source);
    const PointCloud target = load(a.target);
    const double res = compute_resolution(target);
    PipelineConfig cfg = base_config(res);
    apply_feature_flags(cfg, a.features, res);
    if (a.trials > 0) cfg.ransac.trials = a.trials;
    validate(cfg);
    const CoarseAlignment c = coarse_align(source, target, coarse_params(cfg));
    emit_json(a.out, coarse_to_json(c, effective_seed(cfg)));
    if (!a.aligned.empty()) write_cloud(apply_transform(source, c.transform), a.aligned);
}

struct RefineArgs {
    std::string source, target, init, out, aligned, variant;
    int max_iterations = 0;
    double max_distance = 0.0;
};

void run_refine(const RefineArgs& a) {
    const PointCloud source = load(a.source);
    const PointCloud target_raw = load(a.target);
    const double res = compute_resolution(target_raw);
    PipelineConfig cfg = base_config(res);
    if (!a.variant.empty()) cfg.icp.variant = variant_or_usage(a.variant);
    if (a.max_iterations > 0) cfg.icp.max_iterations = a.max_iterations;
    if (a.max_distance > 0.0) cfg.icp.max_correspondence_distance = a.max_distance;
    validate(cfg);
    const SimilarityTransform init = a.init.empty() ? SimilarityTransform::identity() : read_initial_transform(a.init);
    const PointCloud target = cfg.icp.variant == IcpVariant::PointToPlane && !target_raw.has_normals()
                                  ? estimate_normals(target_raw, cfg.normal_radius, cfg.viewpoint)
                                  : target_raw;
    const IcpResult r = icp(source, target, init, cfg.icp);
    emit_json(a.out, icp_result_to_json(r, effective_seed(cfg)));
    if (!a.aligned.empty()) write_cloud(apply_transform(source, r.transform), a.aligned);
}

struct EvaluateArgs {
    std::string matrix = "full";
    std::string scene = "synth:room";
    std::string out;
    double radius_step = 0.005;
    double noise = 0.002;
};

void run_evaluate(const EvaluateArgs& a) {
    MatrixConfig mc;
    mc.seed = g.seed;
    mc.noise_sigma = a.noise;
    if (a.radius_step <= 0.0) usage("--radius-step must be positive");
    if (a.matrix == "full") {
        mc.detectors = all_detectors();
        mc.descriptors = all_descriptors();
        mc.batteries = {BatteryKind::RotationSmall, BatteryKind::RotationLarge, BatteryKind::Translation,
                        BatteryKind::Scaling};
        mc.radii = radius_sweep(a.radius_step);
        mc.misalignment_radii = {0.04};
    } else if (a.matrix == "quick") {
        mc.detectors = {DetectorKind::Iss3D, DetectorKind::Sift3D};
        mc.descriptors = all_descriptors();
        mc.batteries = {BatteryKind::RotationSmall, BatteryKind::Translation};
        mc.radii = {0.04};
        mc.misalignment_radii = {0.04};
        mc.ransac_trials = 200;
    } else {
        usage("unknown matrix '" + a.matrix + "'; valid values: full, quick");
    }
    const PointCloud scene = scene_cloud(a.scene, g.seed);
    write_text(a.out, report_curves_csv(run_matrix(scene, mc)));
}

struct BatteryArgs {
    std::string kind = "rotation-small";
    std::string out, apply, out_dir;
};

void run_battery(const BatteryArgs& a) {
    const TransformBattery battery = make_battery(battery_or_usage(a.kind), g.seed);
    emit_json(a.out, battery_to_json(battery));
    if (a.apply.empty()) return;
    if (a.out_dir.empty()) usage("--apply needs --out-dir");
    const PointCloud cloud = load(a.apply);
    fs::create_directories(a.out_dir);
    for (const auto& c : battery.cases)
        write_cloud(apply_transform(cloud, c.transform), (fs::path(a.out_dir) / (c.name + ".pcd")).string());
}

struct SynthArgs {
    std::string scene = "room";
    std::string out_dir;
    int views = 8;
    double noise = 0.002;
    std::string format = "pcd";
};

void run_synth(const SynthArgs& a) {
    if (a.scene != "room") usage("unknown scene '" + a.scene + "'; valid values: room");
    if (a.format != "pcd" && a.format != "ply") usage("unknown format '" + a.format + "'; valid values: pcd, ply");
    if (a.views < 0) usage("--views must be >= 0");
    RoomOptions opts;
    opts.noise_sigma = a.noise;
    const SceneSpec spec = room_scene(g.seed, opts);
    fs::create_directories(a.out_dir);
    const fs::path dir(a.out_dir);
    write_cloud(synthesize_scene(spec), (dir / ("scene." + a.format)).string());
    if (a.views == 0) return;
    ViewSpec vs;
    vs.count = a.views;
    const auto views = synthesize_views(spec, vs);
    std::vector<std::string> files;
    std::vector<SimilarityTransform> poses;
    for (std::size_t k = 0; k < views.size(); ++k) {
        char name[32];
        std::snprintf(name, sizeof name, "view_%02zu.%s", k, a.format.c_str());
        write_cloud(views[k].cloud, (dir / name).string());
        files.emplace_back(name);
        poses.push_back(views[k].pose);
    }
    write_json_file((dir / "poses.json").string(), views_document(files, poses, g.seed));
}

struct ReconstructArgs {
    std::vector<std::string> views;
    std::string poses, scene, out, poses_out, coarse = "on", variant;
    FeatureFlags features;
    double noise = 0.002;
    int count = 8;
};

void run_reconstruct(const ReconstructArgs& a) {
    std::vector<PosedView> views;
    if (!a.scene.empty()) {
        if (a.scene != "synth:room") usage("unknown synthetic scene '" + a.scene + "'; valid values: synth:room");
        if (!a.poses.empty() || !a.views.empty()) usage("--scene cannot be combined with view files or --poses");
        views = synthetic_circuit(g.seed, a.noise, a.count);
    } else {
        if (a.poses.empty()) usage("reconstruct needs --poses (ground-truth view poses) or --scene synth:room");
        views = load_posed_views(a.poses, a.views);
    }
    if (views.empty()) usage("no views to reconstruct");
    const double res = compute_resolution(views.front().cloud);
    PipelineConfig cfg = base_config(res);
    apply_feature_flags(cfg, a.features, res);
    cfg.coarse_enabled = on_off(a.coarse, "coarse");
    if (!a.variant.empty()) cfg.icp.variant = variant_or_usage(a.variant);
    validate(cfg);
    const CumulativeTrace trace = cumulative_error(views, cfg);
    write_text(a.out, trace_csv(trace, effective_seed(cfg)));
    if (!a.poses_out.empty()) {
        json doc = {{"schema", "regbench.reconstruction"}, {"version", kSchemaVersion},
                    {"seed", effective_seed(cfg)}, {"truncated", trace.truncated}};
        if (trace.truncated) doc["failure"] = {{"view", trace.failed_view}, {"message", trace.failure}};
        json list = json::array();
        for (std::size_t i = 0; i < trace.view_index.size(); ++i)
            list.push_back({{"view", trace.view_index[i]}, {"error_m", trace.error[i]},
                            {"pose", transform_json(trace.estimated_pose[i])}});
        doc["views"] = std::move(list);
        write_json_file(a.poses_out, doc);
    }
}

int fail(std::string_view cls, const std::string& message, int code) {
    std::cerr << json{{"error", cls}, {"message", message}}.dump() << "\n";
    return code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"regbench: point-cloud keypoints, descriptors and registration"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--config", g.config_path, "pipeline configuration JSON");
    app.add_option("--seed", g.seed, "base seed for every randomized step")->each([](const std::string&) {
        g.seed_given = true;
    });
    app.add_option("--threads", g.threads, "worker threads (0 = OpenMP default)");
    app.add_flag("--strict", g.strict, "keep unrecognized cloud fields instead of dropping them");

    DetectArgs detect_args;
    auto* detect_cmd = app.add_subcommand("detect", "detect keypoints in a cloud");
    detect_cmd->add_option("input", detect_args.input, "cloud (.pcd / .ply)")->required();
    detect_cmd->add_option("--out,-o", detect_args.out, "keypoint JSON (stdout when omitted)");
    add_feature_flags(detect_cmd, detect_args.features, false);

    DescribeArgs describe_args;
    auto* describe_cmd = app.add_subcommand("describe", "compute descriptors at keypoints");
    describe_cmd->add_option("input", describe_args.input, "cloud")->required();
    describe_cmd->add_option("--keypoints", describe_args.keypoints, "keypoint JSON")->required();
    describe_cmd->add_option("--out,-o", describe_args.out, "descriptor JSON");
    add_feature_flags(describe_cmd, describe_args.features, true);

    MatchArgs match_args;
    auto* match_cmd = app.add_subcommand("match", "nearest-neighbor descriptor matching");
    match_cmd->add_option("source", match_args.source, "source descriptor JSON")->required();
    match_cmd->add_option("target", match_args.target, "target descriptor JSON")->required();
    match_cmd->add_option("--out,-o", match_args.out, "correspondence JSON");
    match_cmd->add_flag("--one-way", match_args.one_way, "keep non-reciprocal matches");

    CoarseArgs coarse_args;
    auto* coarse_cmd = app.add_subcommand("coarse", "feature-based coarse alignment (source onto target)");
    coarse_cmd->add_option("source", coarse_args.source, "source cloud")->required();
    coarse_cmd->add_option("target", coarse_args.target, "target cloud")->required();
    coarse_cmd->add_option("--out,-o", coarse_args.out, "coarse alignment JSON");
    coarse_cmd->add_option("--aligned", coarse_args.aligned, "write the transformed source here");
    coarse_cmd->add_option("--trials", coarse_args.trials, "sample consensus trials");
    add_feature_flags(coarse_cmd, coarse_args.features, true);

    RefineArgs refine_args;
    auto* refine_cmd = app.add_subcommand("refine", "ICP refinement (source onto target)");
    refine_cmd->add_option("source", refine_args.source, "source cloud")->required();
    refine_cmd->add_option("target", refine_args.target, "target cloud")->required();
    refine_cmd->add_option("--init", refine_args.init, "initial transform (coarse / refinement JSON)");
    refine_cmd->add_option("--icp", refine_args.variant, "point-to-point | point-to-plane");
    refine_cmd->add_option("--max-iterations", refine_args.max_iterations, "ICP iteration cap");
    refine_cmd->add_option("--max-distance", refine_args.max_distance, "correspondence gate, m");
    refine_cmd->add_option("--out,-o", refine_args.out, "refinement JSON");
    refine_cmd->add_option("--aligned", refine_args.aligned, "write the transformed source here");

    EvaluateArgs evaluate_args;
    auto* evaluate_cmd = app.add_subcommand("evaluate", "detector / descriptor evaluation matrix");
    evaluate_cmd->add_option("--matrix", evaluate_args.matrix, "full | quick");
    evaluate_cmd->add_option("--scene", evaluate_args.scene, "synth:room or a cloud file");
    evaluate_cmd->add_option("--radius-step", evaluate_args.radius_step, "descriptor radius sweep step, m");
    evaluate_cmd->add_option("--noise", evaluate_args.noise, "target noise along normals, m");
    evaluate_cmd->add_option("--out,-o", evaluate_args.out, "curve CSV");

    BatteryArgs battery_args;
    auto* battery_cmd = app.add_subcommand("battery", "emit a transform battery");
    battery_cmd->add_option("--kind", battery_args.kind,
                            "identity | rotation-small | rotation-large | translation | scaling");
    battery_cmd->add_option("--out,-o", battery_args.out, "battery JSON");
    battery_cmd->add_option("--apply", battery_args.apply, "cloud to transform by every case");
    battery_cmd->add_option("--out-dir", battery_args.out_dir, "directory for the transformed clouds");

    SynthArgs synth_args;
    auto* synth_cmd = app.add_subcommand("synth", "synthesize a scene and its view circuit");
    synth_cmd->add_option("--scene", synth_args.scene, "room");
    synth_cmd->add_option("--out-dir", synth_args.out_dir)->required();
    synth_cmd->add_option("--views", synth_args.views, "number of views on the circuit");
    synth_cmd->add_option("--noise", synth_args.noise, "Gaussian position noise, m");
    synth_cmd->add_option("--format", synth_args.format, "pcd | ply");

    ReconstructArgs rec_args;
    auto* rec_cmd = app.add_subcommand("reconstruct", "chain registrations over an ordered view list");
    rec_cmd->add_option("views", rec_args.views, "view clouds in order (default: files named in --poses)");
    rec_cmd->add_option("--poses", rec_args.poses, "regbench.views JSON with ground-truth poses");
    rec_cmd->add_option("--scene", rec_args.scene, "synth:room to generate the circuit in memory");
    rec_cmd->add_option("--view-count", rec_args.count, "views on the generated circuit");
    rec_cmd->add_option("--noise", rec_args.noise, "noise of the generated circuit, m");
    rec_cmd->add_option("--coarse", rec_args.coarse, "on | off");
    rec_cmd->add_option("--icp", rec_args.variant, "point-to-point | point-to-plane");
    rec_cmd->add_option("--out,-o", rec_args.out, "cumulative error CSV");
    rec_cmd->add_option("--poses-out", rec_args.poses_out, "estimated poses JSON");
    add_feature_flags(rec_cmd, rec_args.features, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        return fail(error_class_name(ErrorClass::Usage), e.what(), 2);
    }

    try {
        set_thread_count(g.threads);
        if (*detect_cmd) run_detect(detect_args);
        else if (*describe_cmd) run_describe(describe_args);
        else if (*match_cmd) run_match(match_args);
        else if (*coarse_cmd) run_coarse(coarse_args);
        else if (*refine_cmd) run_refine(refine_args);
        else if (*evaluate_cmd) run_evaluate(evaluate_args);
        else if (*battery_cmd) run_battery(battery_args);
        else if (*synth_cmd) run_synth(synth_args);
        else if (*rec_cmd) run_reconstruct(rec_args);
    } catch (const Error& e) {
        return fail(error_class_name(e.error_class()), e.what(), e.error_class() == ErrorClass::Usage ? 2 : 1);
    } catch (const nlohmann::json::exception& e) {
        return fail(error_class_name(ErrorClass::Parse), e.what(), 1);
    } catch (const fs::filesystem_error& e) {
        return fail(error_class_name(ErrorClass::Io), e.what(), 1);
    } catch (const std::exception& e) {
        return fail("internal", e.what(), 1);
    }
    return 0;
}
