#include <gtest/gtest.h>

#include "regbench/error.h"
#include "regbench/pipeline_config.h"

using namespace regbench;
using nlohmann::json;

namespace {

ErrorClass class_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.error_class();
    }
    ADD_FAILURE() << "no error thrown";
    return ErrorClass::InvalidInput;
}

}  // namespace

TEST(Config, DefaultsScaleWithResolution) {
    const auto c = default_pipeline_config(0.01);
    EXPECT_EQ(c.detector.kind, DetectorKind::Iss3D);
    EXPECT_EQ(c.descriptor, DescriptorKind::Shot);
    EXPECT_DOUBLE_EQ(c.normal_radius, 0.04);
    EXPECT_DOUBLE_EQ(c.ransac.inlier_threshold, 0.03);
    EXPECT_EQ(c.icp.variant, IcpVariant::PointToPlane);
    EXPECT_DOUBLE_EQ(c.icp.max_correspondence_distance, 0.1);
    EXPECT_NO_THROW(validate(c));
}

TEST(Config, JsonRoundTrip) {
    PipelineConfig c = default_pipeline_config(0.01);
    c.detector.kind = DetectorKind::Susan;
    c.detector.susan.radius = 0.07;
    c.descriptor = DescriptorKind::Fpfh;
    c.descriptor_radius = 0.035;
    c.viewpoint = Vec3(1, 2, 3);
    c.coarse_enabled = false;
    c.ransac.seed = 99;
    c.icp.variant = IcpVariant::PointToPoint;
    c.icp.max_iterations = 17;
    c.source_path = "a.pcd";
    const auto back = apply_config_json(default_pipeline_config(0.02), to_json(c));
    EXPECT_EQ(to_json(back), to_json(c));
}

TEST(Config, PartialDocumentOverridesOnlyGivenKeys) {
    const auto base = default_pipeline_config(0.01);
    const auto c = apply_config_json(base, json::parse(R"({"icp": {"variant": "point-to-point"}})"));
    EXPECT_EQ(c.icp.variant, IcpVariant::PointToPoint);
    EXPECT_EQ(c.icp.max_iterations, base.icp.max_iterations);
    EXPECT_EQ(c.descriptor, base.descriptor);
}

TEST(Config, Errors) {
    const auto base = default_pipeline_config(0.01);
    EXPECT_EQ(class_of([&] { apply_config_json(base, json::parse(R"({"detectr": {}})")); }), ErrorClass::Usage);
    EXPECT_EQ(class_of([&] { apply_config_json(base, json::parse(R"({"icp": {"variant": 3}})")); }),
              ErrorClass::Parse);
    try {
        apply_config_json(base, json::parse(R"({"detector": {"name": "orb"}})"));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::Usage);
        EXPECT_NE(std::string(e.what()).find("iss3d"), std::string::npos);
    }
    PipelineConfig bad = base;
    bad.descriptor_radius = 0.0;
    EXPECT_EQ(class_of([&] { validate(bad); }), ErrorClass::InvalidInput);
    EXPECT_EQ(class_of([] { read_json_file("/nonexistent.json"); }), ErrorClass::Io);
}
