// Acceptance run: one PASS/FAIL line per criterion, with the measured numbers
// behind each verdict. Exits non-zero when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../unit/oracles.h"
#include "../unit/test_support.h"
#include "regbench/descriptors.h"
#include "regbench/detectors.h"
#include "regbench/error.h"
#include "regbench/evaluation.h"
#include "regbench/geometry.h"
#include "regbench/icp.h"
#include "regbench/kdtree.h"
#include "regbench/parallel.h"
#include "regbench/pipeline_config.h"
#include "regbench/synthetic.h"
#include "regbench/transform.h"

using namespace regbench;
namespace fs = std::filesystem;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

std::string fmt(double v, int precision = 4) {
    std::ostringstream os;
    os.precision(precision);
    os << v;
    return os.str();
}

// Camera-0 view of the seeded room, the scene every matrix-style check runs on.
PointCloud room_view(std::uint64_t seed, double noise) {
    RoomOptions opts;
    opts.noise_sigma = noise;
    return synthesize_views(room_scene(seed, opts), ViewSpec{}).front().cloud;
}

std::vector<std::size_t> brute_knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t i = 0; i < pts.size(); ++i) all.emplace_back((pts[i] - q).squaredNorm(), i);
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < std::min(k, all.size()); ++i) out.push_back(all[i].second);
    return out;
}

std::vector<std::size_t> brute_radius(const std::vector<Vec3>& pts, const Vec3& q, double r) {
    std::vector<std::pair<double, std::size_t>> in;
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const double d2 = (pts[i] - q).squaredNorm();
        if (d2 <= r * r) in.emplace_back(d2, i);
    }
    std::sort(in.begin(), in.end());
    std::vector<std::size_t> out;
    for (const auto& e : in) out.push_back(e.second);
    return out;
}

Verdict kdtree_oracle() {
    std::mt19937_64 rng(1001);
    std::uniform_int_distribution<int> size(20, 600), kd(1, 16), leaf(1, 24);
    std::uniform_real_distribution<double> rad(0.0, 0.5);
    long mismatches = 0, queries = 0;
    for (int c = 0; c < 1000; ++c) {
        PointCloud cloud = fixtures::random_cloud(rng, static_cast<std::size_t>(size(rng)));
        // Some clouds carry exact duplicates so that ties are exercised.
        if (c % 10 == 0)
            for (std::size_t i = 0; i < cloud.size(); i += 7) cloud.points[i] = cloud.points[0];
        const KdTree tree(cloud, static_cast<std::size_t>(leaf(rng)));
        for (int q = 0; q < 100; ++q) {
            const Vec3 query = q % 3 == 0 ? cloud.points[static_cast<std::size_t>(q) % cloud.size()]
                                          : fixtures::random_cloud(rng, 1, 1.2).points[0];
            const std::size_t k = static_cast<std::size_t>(kd(rng));
            const double r = rad(rng);
            if (tree.knn(query, k).indices != brute_knn(cloud.points, query, k)) ++mismatches;
            if (tree.radius_search(query, r).indices != brute_radius(cloud.points, query, r)) ++mismatches;
            queries += 2;
        }
    }
    return {mismatches == 0, std::to_string(mismatches) + " mismatches in " + std::to_string(queries) + " queries"};
}

Verdict exact_copy_repeatability() {
    const PointCloud raw = room_view(1, 0.002);
    const double res = compute_resolution(raw);
    const Vec3 vp = Vec3::Zero();
    const PointCloud source = estimate_normals(raw, 4.0 * res, vp);
    double worst = 1.0;
    std::string worst_case = "every case";
    for (auto d : all_detectors()) {
        const auto cfg = default_detector_config(d, res);
        const auto skp = detect(source, cfg);
        const auto spos = skp.positions(source);
        for (auto bk : {BatteryKind::RotationSmall, BatteryKind::RotationLarge, BatteryKind::Translation,
                        BatteryKind::Scaling}) {
            for (const auto& bc : make_battery(bk, 2).cases) {
                const double s = bc.transform.scale;
                PointCloud moved = apply_transform(raw, bc.transform);
                moved = estimate_normals(moved, 4.0 * res * s, bc.transform.apply(vp));
                const auto tkp = detect(moved, scaled(cfg, s));
                const double rep = skp.empty() ? 0.0 : repeatability(spos, tkp.positions(moved), bc.transform, 1e-6);
                if (rep < worst) {
                    worst = rep;
                    worst_case = std::string(to_string(d)) + "/" + bc.name + " (" + std::to_string(skp.size()) +
                                 " vs " + std::to_string(tkp.size()) + " keypoints)";
                }
            }
        }
    }
    return {worst == 1.0, "minimum repeatability " + fmt(worst, 6) + " at " + worst_case};
}

// Repeatability thresholds every 0.5 mm, so that 0.5 cm is a grid point.
std::vector<double> fine_thresholds() {
    std::vector<double> t;
    for (int i = 0; i <= 60; ++i) t.push_back(i / 2000.0);
    return t;
}

Verdict noisy_repeatability_ordering() {
    int held = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        MatrixConfig mc;
        mc.detectors = {DetectorKind::Iss3D, DetectorKind::Sift3D, DetectorKind::Susan};
        mc.batteries = {BatteryKind::RotationSmall, BatteryKind::RotationLarge};
        mc.thresholds = fine_thresholds();
        mc.noise_sigma = 0.002;
        mc.seed = seed;
        const auto rep = run_matrix(room_view(seed, 0.0), mc);
        const double iss = rep.mean_repeatability_area(DetectorKind::Iss3D, BatteryKind::RotationLarge);
        const double sift = rep.mean_repeatability_area(DetectorKind::Sift3D, BatteryKind::RotationLarge);
        const double susan = rep.mean_repeatability_area(DetectorKind::Susan, BatteryKind::RotationLarge);
        const double at5mm = rep.mean_repeatability_at(DetectorKind::Iss3D, BatteryKind::RotationSmall, 0.005);
        const bool ok = iss >= sift && sift >= susan && at5mm >= 0.95;
        held += ok;
        detail += " seed " + std::to_string(seed) + ": area iss " + fmt(iss) + " sift " + fmt(sift) + " susan " +
                  fmt(susan) + ", iss@0.5cm " + fmt(at5mm) + (ok ? " ok;" : " no;");
    }
    return {held >= 4, std::to_string(held) + "/5 seeds hold;" + detail};
}

Verdict descriptor_invariance() {
    const PointCloud raw = room_view(1, 0.002);
    const double res = compute_resolution(raw);
    const PointCloud cloud = estimate_normals(raw, 4.0 * res, Vec3::Zero());
    const auto kp = detect(cloud, default_detector_config(DetectorKind::Iss3D, res));
    std::mt19937_64 rng(404);
    double worst = 0.0;
    std::size_t compared = 0, validity_flips = 0;
    std::array<DescriptorSet, 2> base = {describe(DescriptorKind::Shot, cloud, kp, 0.04),
                                         describe(DescriptorKind::Fpfh, cloud, kp, 0.04)};
    for (int i = 0; i < 100; ++i) {
        const auto t = fixtures::random_rigid(rng, M_PI, 3.0);
        const PointCloud moved = estimate_normals(apply_transform(raw, t), 4.0 * res, t.apply(Vec3::Zero()));
        for (std::size_t e = 0; e < 2; ++e) {
            const auto got = describe(base[e].kind, moved, kp, 0.04);
            for (std::size_t k = 0; k < kp.size(); ++k) {
                if (got.valid[k] != base[e].valid[k]) ++validity_flips;
                if (!got.valid[k] || !base[e].valid[k]) continue;
                worst = std::max(worst, (got.vectors[k] - base[e].vectors[k]).norm());
                ++compared;
            }
        }
    }

    // Naive transcriptions of SPFH / FPFH on a random oriented cloud.
    std::mt19937_64 orng(405);
    PointCloud c = fixtures::random_cloud(orng, 400, 0.05);
    std::vector<Vec3> normals;
    for (std::size_t i = 0; i < c.size(); ++i) normals.push_back(fixtures::random_unit(orng));
    c.set_normals(normals);
    const KdTree tree(c);
    double oracle_worst = 0.0;
    std::vector<std::size_t> probe;
    for (std::size_t i = 0; i < c.size(); i += 8) probe.push_back(i);
    for (std::size_t i : probe)
        oracle_worst = std::max(oracle_worst, (compute_spfh(c, tree, i, 0.03) - fixtures::naive_spfh(c, i, 0.03))
                                                  .cwiseAbs()
                                                  .maxCoeff());
    const auto fpfh = compute_fpfh(c, std::span<const std::size_t>(probe), 0.03);
    for (std::size_t k = 0; k < probe.size(); ++k)
        if (fpfh.valid[k])
            oracle_worst = std::max(
                oracle_worst, (fpfh.vectors[k] - fixtures::naive_fpfh(c, probe[k], 0.03)).cwiseAbs().maxCoeff());

    const bool ok = compared > 0 && worst <= 1e-6 && validity_flips == 0 && oracle_worst <= 1e-9;
    return {ok, "max L2 " + fmt(worst, 3) + " over " + std::to_string(compared) + " vectors, " +
                    std::to_string(validity_flips) + " validity flips, oracle max bin diff " + fmt(oracle_worst, 3)};
}

Verdict matching_dominance() {
    int held = 0;
    std::string detail;
    const std::vector<BatteryKind> batteries = {BatteryKind::RotationSmall, BatteryKind::RotationLarge,
                                                BatteryKind::Translation};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        MatrixConfig mc;
        mc.detectors = {DetectorKind::Iss3D, DetectorKind::Sift3D};
        mc.descriptors = all_descriptors();
        mc.batteries = batteries;
        mc.radii = {0.04};
        mc.noise_sigma = 0.002;
        mc.seed = seed;
        const auto rep = run_matrix(room_view(seed, 0.0), mc);
        auto mean = [&](DetectorKind d, DescriptorKind e) {
            double sum = 0.0;
            for (auto b : batteries) sum += rep.mean_success(d, e, b, 0.04);
            return sum / static_cast<double>(batteries.size());
        };
        const double iss_shot = mean(DetectorKind::Iss3D, DescriptorKind::Shot);
        const double iss_fpfh = mean(DetectorKind::Iss3D, DescriptorKind::Fpfh);
        const double sift_shot = mean(DetectorKind::Sift3D, DescriptorKind::Shot);
        const double translation =
            rep.mean_success(DetectorKind::Iss3D, DescriptorKind::Shot, BatteryKind::Translation, 0.04);
        const bool ok = iss_shot > sift_shot && iss_fpfh > sift_shot && translation >= 0.9;
        held += ok;
        detail += " seed " + std::to_string(seed) + ": iss-shot " + fmt(iss_shot) + " iss-fpfh " + fmt(iss_fpfh) +
                  " sift-shot " + fmt(sift_shot) + ", iss-shot translation " + fmt(translation) +
                  (ok ? " ok;" : " no;");
    }
    return {held >= 4, std::to_string(held) + "/5 seeds hold;" + detail};
}

Verdict rigid_fit_exactness() {
    std::mt19937_64 rng(606);
    std::uniform_int_distribution<int> count(3, 40);
    double worst_rot = 0.0, worst_trans = 0.0, worst_det = 0.0;
    long failures = 0;
    for (int i = 0; i < 1000; ++i) {
        const auto gt = fixtures::random_rigid(rng);
        const auto src = fixtures::random_cloud(rng, static_cast<std::size_t>(count(rng))).points;
        std::vector<Vec3> tgt;
        for (const auto& p : src) tgt.push_back(gt.apply(p));
        try {
            const auto t = estimate_rigid_transform(src, tgt);
            worst_rot = std::max(worst_rot, rotation_angle_between(t.rotation, gt.rotation));
            worst_trans = std::max(worst_trans, (t.translation - gt.translation).norm());
        } catch (const Error&) {
            ++failures;
        }
    }
    for (int i = 0; i < 1000; ++i) {
        const auto src = fixtures::random_cloud(rng, static_cast<std::size_t>(count(rng))).points;
        const Vec3 axis = fixtures::random_unit(rng);
        const Mat3 mirror = Mat3::Identity() - 2.0 * axis * axis.transpose();
        std::vector<Vec3> tgt;
        for (const auto& p : src) tgt.push_back(mirror * p);
        try {
            const auto t = estimate_rigid_transform(src, tgt);
            worst_det = std::max(worst_det, std::abs(t.rotation.determinant() - 1.0));
        } catch (const Error&) {
            ++failures;
        }
    }
    const bool ok = failures == 0 && worst_rot < 1e-9 && worst_trans < 1e-12 && worst_det < 1e-12;
    return {ok, "max rotation error " + fmt(worst_rot, 3) + " rad, max translation error " + fmt(worst_trans, 3) +
                    " m, max |det - 1| on reflections " + fmt(worst_det, 3) + ", " + std::to_string(failures) +
                    " throws"};
}

Verdict icp_correctness() {
    const PointCloud raw = synthesize_scene(fixtures::small_scene());
    const PointCloud target = estimate_normals(raw, 4.0 * compute_resolution(raw), Vec3(0, 0, 1));

    std::mt19937_64 rng(707);
    int monotone_violations = 0;
    for (int run = 0; run < 100; ++run) {
        const auto offset = fixtures::random_rigid(rng, 0.35, 0.08);
        IcpParams p;
        p.max_iterations = 30;
        const auto r = icp(apply_transform(target, offset), target, SimilarityTransform::identity(), p);
        for (std::size_t k = 1; k < r.per_iteration_mse.size(); ++k)
            if (r.per_iteration_mse[k] > r.per_iteration_mse[k - 1]) {
                ++monotone_violations;
                break;
            }
    }

    SimilarityTransform offset = SimilarityTransform::from_axis_angle(Vec3(1, 1, 1), 10.0 * M_PI / 180.0);
    offset.translation = Vec3(0.1, 0.0, 0.0);
    const PointCloud source = apply_transform(target, invert(offset));
    double worst_recovery = 0.0;
    for (auto v : {IcpVariant::PointToPoint, IcpVariant::PointToPlane}) {
        IcpParams p;
        p.variant = v;
        p.max_iterations = 200;
        const auto r = icp(source, target, SimilarityTransform::identity(), p);
        worst_recovery = std::max(worst_recovery, misalignment(source, r.transform, offset).rms);
    }

    const PointCloud planes = fixtures::three_planes();
    const Vec3 shift(0.03, -0.02, 0.04);
    PointCloud shifted = apply_transform(planes, SimilarityTransform::from_translation(shift));
    shifted.normals.clear();
    shifted.normal_valid.clear();
    IcpParams pp;
    pp.variant = IcpVariant::PointToPlane;
    const auto planar = icp(shifted, planes, SimilarityTransform::identity(), pp);
    const double planar_err = (planar.transform.translation + shift).norm() +
                              fixtures::max_abs_diff(planar.transform.rotation, Mat3::Identity());

    const bool ok = monotone_violations == 0 && worst_recovery < 1e-3 && planar.iterations_run <= 2 &&
                    planar_err < 1e-12;
    return {ok, std::to_string(monotone_violations) + "/100 non-monotone runs, 10deg/10cm recovery rms " +
                    fmt(worst_recovery, 3) + " m, planar case " + std::to_string(planar.iterations_run) +
                    " iterations with error " + fmt(planar_err, 3)};
}

double final_error(const CumulativeTrace& t) {
    if (t.truncated || t.error.empty()) return std::numeric_limits<double>::infinity();
    return t.error.back();
}

Verdict pipeline_ordering() {
    int held = 0;
    std::string detail;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto circuit = [&](double noise) {
            RoomOptions opts;
            opts.noise_sigma = noise;
            std::vector<PosedView> views;
            for (auto& v : synthesize_views(room_scene(seed, opts), ViewSpec{}))
                views.push_back({std::move(v.cloud), v.pose});
            return views;
        };
        auto run = [&](const std::vector<PosedView>& views, bool coarse, IcpVariant variant) {
            PipelineConfig cfg = default_pipeline_config(compute_resolution(views.front().cloud));
            cfg.coarse_enabled = coarse;
            cfg.ransac.seed = seed;
            cfg.icp.variant = variant;
            return final_error(cumulative_error(views, cfg));
        };
        const auto noisy = circuit(0.002);
        const double c_l = run(noisy, true, IcpVariant::PointToPlane);
        const double c_p = run(noisy, true, IcpVariant::PointToPoint);
        const double n_l = run(noisy, false, IcpVariant::PointToPlane);
        const double n_p = run(noisy, false, IcpVariant::PointToPoint);
        const double clean = run(circuit(0.0), true, IcpVariant::PointToPlane);
        const bool ok = c_l < c_p && c_p < n_l && c_p < n_p && clean < 0.05;
        held += ok;
        detail += " seed " + std::to_string(seed) + ": coarse+p2l " + fmt(c_l) + " coarse+p2p " + fmt(c_p) +
                  " p2l " + fmt(n_l) + " p2p " + fmt(n_p) + " noiseless coarse+p2l " + fmt(clean) +
                  (ok ? " ok;" : " no;");
    }
    return {held >= 4, std::to_string(held) + "/5 seeds hold (m, inf = truncated trace);" + detail};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Runs one CLI invocation in `dir`; stdout goes to `stdout.txt` there.
int cli(const fs::path& dir, const std::string& args) {
    const std::string cmd = "cd '" + dir.string() + "' && '" + std::string(REGBENCH_CLI) + "' " + args +
                            " > stdout.txt 2> stderr.txt";
    return std::system(cmd.c_str());
}

// Every file in the directory, path -> bytes.
std::vector<std::pair<std::string, std::string>> snapshot(const fs::path& dir) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& e : fs::recursive_directory_iterator(dir))
        if (e.is_regular_file()) out.emplace_back(fs::relative(e.path(), dir).string(), slurp(e.path()));
    std::sort(out.begin(), out.end());
    return out;
}

Verdict cli_determinism() {
    const fs::path root = fs::temp_directory_path() / "regbench_acceptance_cli";
    fs::remove_all(root);
    const std::string synth = "synth --views 3 --out-dir room";
    const std::string detect0 = "detect room/view_00.pcd -o k0.json";
    const std::string detect1 = "detect room/view_01.pcd -o k1.json";
    const std::string describe0 = "describe room/view_00.pcd --keypoints k0.json -o d0.json";
    const std::string describe1 = "describe room/view_01.pcd --keypoints k1.json -o d1.json";
    const std::string battery = "battery --kind rotation-large -o b.json --apply room/view_00.pcd --out-dir battery";
    struct Case {
        std::string name;
        std::vector<std::string> setup;
        std::string command;
    };
    const std::vector<Case> cases = {
        {"synth", {}, synth},
        {"detect", {synth}, detect0},
        {"describe", {synth, detect0}, describe0},
        {"match", {synth, detect0, detect1, describe0, describe1}, "match d0.json d1.json -o m.json"},
        {"coarse", {synth, battery}, "coarse room/view_00.pcd battery/rot40-z.pcd --trials 200 -o c.json"},
        {"refine", {synth}, "refine room/view_01.pcd room/view_00.pcd --max-iterations 10 -o r.json"},
        {"evaluate", {}, "evaluate --matrix quick -o eval.csv"},
        {"battery", {synth}, battery},
        {"reconstruct", {}, "reconstruct --scene synth:room --view-count 3 -o trace.csv --poses-out poses.json"},
    };
    std::string detail;
    int identical = 0;
    for (const auto& c : cases) {
        std::array<std::vector<std::pair<std::string, std::string>>, 2> outputs;
        std::array<int, 2> status{};
        bool setup_ok = true;
        for (int i = 0; i < 2; ++i) {
            const fs::path dir = root / (c.name + (i == 0 ? "_t1" : "_t8"));
            fs::create_directories(dir);
            for (const auto& step : c.setup) setup_ok = setup_ok && cli(dir, "--seed 7 " + step) == 0;
            status[i] = cli(dir, std::string("--seed 7 --threads ") + (i == 0 ? "1 " : "8 ") + c.command);
            outputs[i] = snapshot(dir);
        }
        const bool same = setup_ok && status[0] == 0 && status[1] == 0 && outputs[0] == outputs[1];
        identical += same;
        detail += " " + c.name +
                  (same ? " identical;" : !setup_ok || status[0] || status[1] ? " command failed;" : " differs;");
    }
    fs::remove_all(root);
    const int total = static_cast<int>(cases.size());
    return {identical == total, std::to_string(identical) + "/" + std::to_string(total) + " commands;" + detail};
}

}  // namespace

int main() {
    struct Criterion {
        int id;
        double budget_s;
        std::function<Verdict()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, 30, kdtree_oracle},           {2, 60, exact_copy_repeatability},   {3, 300, noisy_repeatability_ordering},
        {4, 60, descriptor_invariance},   {5, 300, matching_dominance},                   {6, 10, rigid_fit_exactness},
        {7, 120, icp_correctness},        {8, 600, pipeline_ordering},         {9, 300, cli_determinism},
    };
    int failed = 0;
    for (const auto& c : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("threw: ") + e.what()};
        }
        const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_time = elapsed < c.budget_s;
        const bool pass = v.pass && in_time;
        failed += !pass;
        std::cout << (pass ? "PASS" : "FAIL") << " criterion " << c.id << " (" << fmt(elapsed, 3) << " s of "
                  << c.budget_s << " s" << (in_time ? "" : ", over budget") << "): " << v.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
