#include "regbench/serialization.h"

#include <fstream>

#include "regbench/error.h"

namespace regbench {

namespace {

using nlohmann::json;

json header(const char* kind, std::uint64_t seed) {
    return {{"schema", std::string("regbench.") + kind}, {"version", kSchemaVersion}, {"seed", seed}};
}

void expect_schema(const json& doc, const char* kind) {
    const std::string want = std::string("regbench.") + kind;
    if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != want)
        throw Error(ErrorClass::Parse, "expected a '" + want + "' document");
    if (!doc.contains("version") || doc["version"] != kSchemaVersion)
        throw Error(ErrorClass::Parse, "unsupported '" + want + "' version");
}

template <typename F>
auto guarded(const char* what, F&& f) {
    try {
        return f();
    } catch (const json::exception& e) {
        throw Error(ErrorClass::Parse, std::string("malformed ") + what + ": " + e.what());
    }
}

}  // namespace

json keypoints_to_json(const KeypointSet& keypoints, std::uint64_t seed) {
    json doc = header("keypoints", seed);
    doc["detector"] = std::string(to_string(keypoints.detector));
    json list = json::array();
    for (std::size_t i = 0; i < keypoints.size(); ++i)
        list.push_back({{"index", keypoints.indices[i]}, {"response", keypoints.responses[i]}});
    doc["keypoints"] = std::move(list);
    return doc;
}

KeypointSet keypoints_from_json(const json& doc) {
    expect_schema(doc, "keypoints");
    return guarded("keypoints", [&] {
        KeypointSet k;
        const auto det = parse_detector(doc.at("detector").get<std::string>());
        if (!det) throw Error(ErrorClass::Parse, "keypoints: unknown detector");
        k.detector = *det;
        for (const auto& e : doc.at("keypoints")) {
            k.indices.push_back(e.at("index").get<std::size_t>());
            k.responses.push_back(e.at("response").get<double>());
        }
        return k;
    });
}

json descriptors_to_json(const DescriptorSet& d, std::uint64_t seed) {
    json doc = header("descriptors", seed);
    doc["kind"] = std::string(to_string(d.kind));
    doc["radius"] = d.radius;
    json list = json::array();
    for (std::size_t i = 0; i < d.size(); ++i) {
        json values = json::array();
        for (Eigen::Index k = 0; k < d.vectors[i].size(); ++k) values.push_back(d.vectors[i][k]);
        list.push_back({{"keypoint_index", d.keypoint_indices[i]}, {"valid", d.valid[i] != 0}, {"values", values}});
    }
    doc["descriptors"] = std::move(list);
    return doc;
}

DescriptorSet descriptors_from_json(const json& doc) {
    expect_schema(doc, "descriptors");
    return guarded("descriptors", [&] {
        DescriptorSet d;
        const auto kind = parse_descriptor(doc.at("kind").get<std::string>());
        if (!kind) throw Error(ErrorClass::Parse, "descriptors: unknown kind");
        d.kind = *kind;
        d.radius = doc.at("radius").get<double>();
        const auto len = static_cast<Eigen::Index>(descriptor_length(d.kind));
        for (const auto& e : doc.at("descriptors")) {
            const auto& values = e.at("values");
            if (static_cast<Eigen::Index>(values.size()) != len)
                throw Error(ErrorClass::Parse, "descriptors: vector length " + std::to_string(values.size()) +
                                                   ", expected " + std::to_string(len));
            Eigen::VectorXd v(len);
            for (Eigen::Index k = 0; k < len; ++k) v[k] = values[static_cast<std::size_t>(k)].get<double>();
            d.keypoint_indices.push_back(e.at("keypoint_index").get<std::size_t>());
            d.valid.push_back(e.at("valid").get<bool>() ? 1 : 0);
            d.vectors.push_back(std::move(v));
        }
        return d;
    });
}

json correspondences_to_json(const CorrespondenceSet& c, std::uint64_t seed) {
    json doc = header("correspondences", seed);
    json list = json::array();
    for (const auto& e : c) list.push_back({{"source", e.source}, {"target", e.target}, {"distance", e.distance}});
    doc["correspondences"] = std::move(list);
    return doc;
}

CorrespondenceSet correspondences_from_json(const json& doc) {
    expect_schema(doc, "correspondences");
    return guarded("correspondences", [&] {
        CorrespondenceSet c;
        for (const auto& e : doc.at("correspondences"))
            c.push_back({e.at("source").get<std::size_t>(), e.at("target").get<std::size_t>(),
                         e.at("distance").get<double>()});
        return c;
    });
}

json transform_json(const SimilarityTransform& t) {
    json rot = json::array();
    for (int r = 0; r < 3; ++r) rot.push_back({t.rotation(r, 0), t.rotation(r, 1), t.rotation(r, 2)});
    return {{"scale", t.scale},
            {"rotation", rot},
            {"translation", {t.translation.x(), t.translation.y(), t.translation.z()}}};
}

SimilarityTransform transform_from_json(const json& j) {
    return guarded("transform", [&] {
        SimilarityTransform t;
        t.scale = j.contains("scale") ? j.at("scale").get<double>() : 1.0;
        const auto& rot = j.at("rotation");
        if (rot.size() != 3) throw Error(ErrorClass::Parse, "transform: rotation must have 3 rows");
        for (int r = 0; r < 3; ++r) {
            if (rot[r].size() != 3) throw Error(ErrorClass::Parse, "transform: rotation rows need 3 entries");
            for (int c = 0; c < 3; ++c) t.rotation(r, c) = rot[r][c].get<double>();
        }
        const auto& tr = j.at("translation");
        if (tr.size() != 3) throw Error(ErrorClass::Parse, "transform: translation needs 3 entries");
        for (int k = 0; k < 3; ++k) t.translation[k] = tr[k].get<double>();
        t.validate(1e-6);
        return t;
    });
}

json battery_to_json(const TransformBattery& battery) {
    json doc = header("battery", battery.seed);
    doc["kind"] = std::string(to_string(battery.kind));
    json cases = json::array();
    for (const auto& c : battery.cases) cases.push_back({{"name", c.name}, {"transform", transform_json(c.transform)}});
    doc["cases"] = std::move(cases);
    return doc;
}

json icp_result_to_json(const IcpResult& r, std::uint64_t seed) {
    json doc = header("refinement", seed);
    doc["transform"] = transform_json(r.transform);
    doc["iterations_run"] = r.iterations_run;
    doc["final_mse"] = r.final_mse;
    doc["converged"] = r.converged;
    doc["per_iteration_mse"] = r.per_iteration_mse;
    return doc;
}

json coarse_to_json(const CoarseAlignment& c, std::uint64_t seed) {
    json doc = header("coarse", seed);
    doc["transform"] = transform_json(c.transform);
    doc["correspondences"] = c.correspondences.size();
    doc["inliers"] = correspondences_to_json(c.inliers, seed)["correspondences"];
    doc["rms_residual"] = c.rms_residual;
    return doc;
}

void write_json_file(const std::string& path, const json& doc) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorClass::Io, "cannot write '" + path + "'");
    out << doc.dump(2) << "\n";
    if (!out) throw Error(ErrorClass::Io, "failed writing '" + path + "'");
}

}  // namespace regbench
