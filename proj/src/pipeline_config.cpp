#include "regbench/pipeline_config.h"

#include <fstream>
#include <initializer_list>
#include <sstream>

#include "regbench/error.h"

namespace regbench {

namespace {

using nlohmann::json;

void expect_object(const json& j, const std::string& where) {
    if (!j.is_object()) throw Error(ErrorClass::Parse, "config: '" + where + "' must be an object");
}

void check_keys(const json& j, const std::string& where, std::initializer_list<const char*> allowed) {
    expect_object(j, where);
    for (const auto& [key, value] : j.items()) {
        bool known = false;
        for (const char* a : allowed) known = known || key == a;
        if (!known) throw Error(ErrorClass::Usage, "config: unknown key '" + where + "." + key + "'");
    }
}

template <typename T>
void read(const json& j, const char* key, T& out, const std::string& where) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorClass::Parse, "config: '" + where + "." + key + "' has the wrong type");
    }
}

Vec3 read_vec3(const json& j, const std::string& where) {
    if (!j.is_array() || j.size() != 3)
        throw Error(ErrorClass::Parse, "config: '" + where + "' must be an array of 3 numbers");
    Vec3 v;
    for (int i = 0; i < 3; ++i) {
        if (!j[i].is_number())
            throw Error(ErrorClass::Parse, "config: '" + where + "' must be an array of 3 numbers");
        v[i] = j[i].get<double>();
    }
    return v;
}

std::string valid_detector_names() {
    std::string s;
    for (auto k : all_detectors()) s += (s.empty() ? "" : ", ") + std::string(to_string(k));
    return s;
}

std::string valid_descriptor_names() {
    std::string s;
    for (auto k : all_descriptors()) s += (s.empty() ? "" : ", ") + std::string(to_string(k));
    return s;
}

void apply_detector_params(DetectorConfig& d, const json& p) {
    const std::string where = "detector.params";
    switch (d.kind) {
        case DetectorKind::Harris3D:
            check_keys(p, where, {"radius", "k", "nms_radius", "threshold"});
            read(p, "radius", d.harris.radius, where);
            read(p, "k", d.harris.k, where);
            read(p, "nms_radius", d.harris.nms_radius, where);
            read(p, "threshold", d.harris.threshold, where);
            break;
        case DetectorKind::Sift3D:
            check_keys(p, where, {"min_scale", "octaves", "scales_per_octave", "scale_factor", "min_contrast"});
            read(p, "min_scale", d.sift.min_scale, where);
            read(p, "octaves", d.sift.octaves, where);
            read(p, "scales_per_octave", d.sift.scales_per_octave, where);
            read(p, "scale_factor", d.sift.scale_factor, where);
            read(p, "min_contrast", d.sift.min_contrast, where);
            break;
        case DetectorKind::Iss3D:
            check_keys(p, where, {"salient_radius", "nms_radius", "gamma21", "gamma32", "min_neighbors"});
            read(p, "salient_radius", d.iss.salient_radius, where);
            read(p, "nms_radius", d.iss.nms_radius, where);
            read(p, "gamma21", d.iss.gamma21, where);
            read(p, "gamma32", d.iss.gamma32, where);
            read(p, "min_neighbors", d.iss.min_neighbors, where);
            break;
        case DetectorKind::Susan:
            check_keys(p, where, {"radius", "angular_threshold", "distance_threshold",
                                  "intensity_threshold", "geometric_threshold"});
            read(p, "radius", d.susan.radius, where);
            read(p, "angular_threshold", d.susan.angular_threshold, where);
            read(p, "distance_threshold", d.susan.distance_threshold, where);
            read(p, "intensity_threshold", d.susan.intensity_threshold, where);
            read(p, "geometric_threshold", d.susan.geometric_threshold, where);
            break;
    }
}

json detector_params_json(const DetectorConfig& d) {
    switch (d.kind) {
        case DetectorKind::Harris3D:
            return {{"radius", d.harris.radius}, {"k", d.harris.k},
                    {"nms_radius", d.harris.nms_radius}, {"threshold", d.harris.threshold}};
        case DetectorKind::Sift3D:
            return {{"min_scale", d.sift.min_scale}, {"octaves", d.sift.octaves},
                    {"scales_per_octave", d.sift.scales_per_octave},
                    {"scale_factor", d.sift.scale_factor}, {"min_contrast", d.sift.min_contrast}};
        case DetectorKind::Iss3D:
            return {{"salient_radius", d.iss.salient_radius}, {"nms_radius", d.iss.nms_radius},
                    {"gamma21", d.iss.gamma21}, {"gamma32", d.iss.gamma32},
                    {"min_neighbors", d.iss.min_neighbors}};
        case DetectorKind::Susan:
            return {{"radius", d.susan.radius}, {"angular_threshold", d.susan.angular_threshold},
                    {"distance_threshold", d.susan.distance_threshold},
                    {"intensity_threshold", d.susan.intensity_threshold},
                    {"geometric_threshold", d.susan.geometric_threshold}};
    }
    return json::object();
}

}  // namespace

PipelineConfig default_pipeline_config(double resolution) {
    if (!(resolution > 0.0)) throw_invalid("resolution must be positive");
    PipelineConfig c;
    c.detector = default_detector_config(DetectorKind::Iss3D, resolution);
    c.descriptor = DescriptorKind::Shot;
    c.descriptor_radius = 0.04;
    c.normal_radius = 4.0 * resolution;
    c.ransac.inlier_threshold = 3.0 * resolution;
    c.icp = default_icp_params(IcpVariant::PointToPlane, resolution);
    return c;
}

PipelineConfig apply_config_json(const PipelineConfig& base, const json& doc) {
    PipelineConfig c = base;
    check_keys(doc, "config", {"detector", "descriptor", "normals", "coarse", "icp", "io"});
    if (doc.contains("detector")) {
        const auto& d = doc["detector"];
        check_keys(d, "detector", {"name", "params"});
        if (d.contains("name")) {
            std::string name;
            read(d, "name", name, "detector");
            const auto kind = parse_detector(name);
            if (!kind)
                throw Error(ErrorClass::Usage, "unknown detector '" + name + "'; valid values: " +
                                                   valid_detector_names());
            c.detector.kind = *kind;
        }
        if (d.contains("params")) apply_detector_params(c.detector, d["params"]);
    }
    if (doc.contains("descriptor")) {
        const auto& d = doc["descriptor"];
        check_keys(d, "descriptor", {"name", "radius"});
        if (d.contains("name")) {
            std::string name;
            read(d, "name", name, "descriptor");
            const auto kind = parse_descriptor(name);
            if (!kind)
                throw Error(ErrorClass::Usage, "unknown descriptor '" + name + "'; valid values: " +
                                                   valid_descriptor_names());
            c.descriptor = *kind;
        }
        read(d, "radius", c.descriptor_radius, "descriptor");
    }
    if (doc.contains("normals")) {
        const auto& n = doc["normals"];
        check_keys(n, "normals", {"radius", "viewpoint"});
        read(n, "radius", c.normal_radius, "normals");
        if (n.contains("viewpoint")) c.viewpoint = read_vec3(n["viewpoint"], "normals.viewpoint");
    }
    if (doc.contains("coarse")) {
        const auto& k = doc["coarse"];
        check_keys(k, "coarse", {"enabled", "seed", "trials", "inlier_threshold", "min_inliers"});
        read(k, "enabled", c.coarse_enabled, "coarse");
        read(k, "seed", c.ransac.seed, "coarse");
        read(k, "trials", c.ransac.trials, "coarse");
        read(k, "inlier_threshold", c.ransac.inlier_threshold, "coarse");
        read(k, "min_inliers", c.ransac.min_inliers, "coarse");
    }
    if (doc.contains("icp")) {
        const auto& i = doc["icp"];
        check_keys(i, "icp", {"variant", "max_iterations", "max_correspondence_distance",
                              "transform_epsilon", "mse_epsilon"});
        if (i.contains("variant")) {
            std::string name;
            read(i, "variant", name, "icp");
            const auto v = parse_icp_variant(name);
            if (!v)
                throw Error(ErrorClass::Usage, "unknown ICP variant '" + name +
                                                   "'; valid values: point-to-point, point-to-plane");
            c.icp.variant = *v;
        }
        read(i, "max_iterations", c.icp.max_iterations, "icp");
        read(i, "max_correspondence_distance", c.icp.max_correspondence_distance, "icp");
        read(i, "transform_epsilon", c.icp.transform_epsilon, "icp");
        read(i, "mse_epsilon", c.icp.mse_epsilon, "icp");
    }
    if (doc.contains("io")) {
        const auto& io = doc["io"];
        check_keys(io, "io", {"source", "target", "output"});
        read(io, "source", c.source_path, "io");
        read(io, "target", c.target_path, "io");
        read(io, "output", c.output_path, "io");
    }
    return c;
}

json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorClass::Io, "cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::parse_error& e) {
        throw Error(ErrorClass::Parse, "'" + path + "': " + e.what());
    }
}

json to_json(const PipelineConfig& c) {
    json io = {{"source", c.source_path}, {"target", c.target_path}, {"output", c.output_path}};
    return {
        {"detector", {{"name", std::string(to_string(c.detector.kind))}, {"params", detector_params_json(c.detector)}}},
        {"descriptor", {{"name", std::string(to_string(c.descriptor))}, {"radius", c.descriptor_radius}}},
        {"normals", {{"radius", c.normal_radius}, {"viewpoint", {c.viewpoint.x(), c.viewpoint.y(), c.viewpoint.z()}}}},
        {"coarse", {{"enabled", c.coarse_enabled}, {"seed", c.ransac.seed}, {"trials", c.ransac.trials},
                    {"inlier_threshold", c.ransac.inlier_threshold}, {"min_inliers", c.ransac.min_inliers}}},
        {"icp", {{"variant", std::string(to_string(c.icp.variant))}, {"max_iterations", c.icp.max_iterations},
                 {"max_correspondence_distance", c.icp.max_correspondence_distance},
                 {"transform_epsilon", c.icp.transform_epsilon}, {"mse_epsilon", c.icp.mse_epsilon}}},
        {"io", io},
    };
}

void validate(const PipelineConfig& c) {
    auto positive = [](double v, const char* what) {
        if (!(v > 0.0)) throw_invalid(std::string("config: ") + what + " must be positive");
    };
    positive(c.descriptor_radius, "descriptor radius");
    positive(c.normal_radius, "normal radius");
    positive(c.ransac.inlier_threshold, "inlier threshold");
    positive(c.icp.max_correspondence_distance, "ICP correspondence distance");
    if (c.ransac.trials < 1) throw_invalid("config: coarse trials must be >= 1");
    if (c.icp.max_iterations < 1) throw_invalid("config: ICP max_iterations must be >= 1");
    switch (c.detector.kind) {
        case DetectorKind::Harris3D:
            positive(c.detector.harris.radius, "Harris radius");
            positive(c.detector.harris.nms_radius, "Harris NMS radius");
            break;
        case DetectorKind::Sift3D:
            positive(c.detector.sift.min_scale, "SIFT minimum scale");
            break;
        case DetectorKind::Iss3D:
            positive(c.detector.iss.salient_radius, "ISS salient radius");
            positive(c.detector.iss.nms_radius, "ISS NMS radius");
            break;
        case DetectorKind::Susan:
            positive(c.detector.susan.radius, "SUSAN radius");
            break;
    }
}

FeatureParams feature_params(const PipelineConfig& c) {
    FeatureParams f;
    f.detector = c.detector;
    f.descriptor = c.descriptor;
    f.descriptor_radius = c.descriptor_radius;
    f.normal_radius = c.normal_radius;
    f.viewpoint = c.viewpoint;
    return f;
}

CoarseParams coarse_params(const PipelineConfig& c) {
    return {feature_params(c), c.ransac};
}

}  // namespace regbench
