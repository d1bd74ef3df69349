#include <gtest/gtest.h>

#include <iomanip>

#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "regbench/cloud_io.h"
#include "regbench/error.h"
#include "test_support.h"

using namespace regbench;

namespace {

PointCloud colored_cloud(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PointCloud c = fixtures::random_cloud(rng, n, 3.0);
    std::uniform_int_distribution<int> byte(0, 255);
    std::vector<Vec3> normals;
    for (std::size_t i = 0; i < n; ++i) {
        c.colors.push_back({static_cast<std::uint8_t>(byte(rng)), static_cast<std::uint8_t>(byte(rng)),
                            static_cast<std::uint8_t>(byte(rng))});
        normals.push_back(fixtures::random_unit(rng));
    }
    c.set_normals(normals);
    c.normal_valid[3] = 0;
    return c;
}

void expect_bitwise_equal(const PointCloud& a, const PointCloud& b) {
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(std::memcmp(a.points[i].data(), b.points[i].data(), 3 * sizeof(double)), 0);
        EXPECT_EQ(a.colors[i], b.colors[i]);
        EXPECT_EQ(a.normal_ok(i), b.normal_ok(i));
        if (a.normal_ok(i)) EXPECT_EQ(a.normals[i], b.normals[i]);
    }
}

PointCloud read_pcd_text(const std::string& text, ReadReport* report = nullptr, bool strict = false) {
    std::istringstream in(text);
    return read_pcd(in, ReadOptions{strict}, report);
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / ("regbench_io_" + name)).string();
}

}  // namespace

TEST(CloudIo, BinaryPcdRoundTripIsBitExact) {
    const PointCloud c = colored_cloud(100, 71);
    std::stringstream s;
    write_pcd(c, s, true);
    expect_bitwise_equal(c, read_pcd(s));
}

TEST(CloudIo, AsciiPcdRoundTripIsBitExact) {
    const PointCloud c = colored_cloud(100, 72);
    std::stringstream s;
    write_pcd(c, s, false);
    expect_bitwise_equal(c, read_pcd(s));
}

TEST(CloudIo, PlyRoundTripIsBitExact) {
    const PointCloud c = colored_cloud(100, 73);
    std::stringstream s;
    write_ply(c, s);
    expect_bitwise_equal(c, read_ply(s));
}

TEST(CloudIo, FileDispatchByExtension) {
    const PointCloud c = colored_cloud(20, 74);
    for (const char* name : {"a.pcd", "b.ply"}) {
        const auto path = temp_path(name);
        write_cloud(c, path);
        expect_bitwise_equal(c, read_cloud(path));
        std::filesystem::remove(path);
    }
}

TEST(CloudIo, EmptyCloudHeader) {
    const PointCloud c = read_pcd_text(
        "VERSION 0.7\nFIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 0\nHEIGHT 1\n"
        "VIEWPOINT 0 0 0 1 0 0 0\nPOINTS 0\nDATA ascii\n");
    EXPECT_TRUE(c.empty());
}

TEST(CloudIo, PackedRgbFloatDecodes) {
    // 0x00FF8000 as a float bit pattern: r = 255, g = 128, b = 0.
    std::uint32_t bits = 0x00FF8000u;
    float f;
    std::memcpy(&f, &bits, 4);
    std::ostringstream text;
    text.precision(10);
    text << "FIELDS x y z rgb\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 1\nHEIGHT 1\nPOINTS 1\n"
            "DATA ascii\n1 2 3 " << std::scientific << std::setprecision(9) << f << "\n";
    const PointCloud c = read_pcd_text(text.str());
    ASSERT_EQ(c.size(), 1u);
    EXPECT_EQ(c.colors[0], (Rgb{255, 128, 0}));
}

TEST(CloudIo, TruncatedBinaryPayloadNamesByteCounts) {
    std::string text = "FIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 4\nHEIGHT 1\nPOINTS 4\nDATA binary\n";
    text += std::string(30, '\0');
    try {
        read_pcd_text(text);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::Parse);
        const std::string msg = e.what();
        EXPECT_NE(msg.find("48"), std::string::npos) << msg;
        EXPECT_NE(msg.find("30"), std::string::npos) << msg;
    }
}

TEST(CloudIo, MalformedHeaderReportsLine) {
    try {
        read_pcd_text("VERSION 0.7\nFIELDS x y z\nSIZE 4 4\nTYPE F F F\nCOUNT 1 1 1\nPOINTS 0\nDATA ascii\n");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::Parse);
        EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
    }
}

TEST(CloudIo, NanPointsAreDroppedAndCounted) {
    ReadReport report;
    const PointCloud c = read_pcd_text(
        "FIELDS x y z\nSIZE 4 4 4\nTYPE F F F\nCOUNT 1 1 1\nWIDTH 3\nHEIGHT 1\nPOINTS 3\nDATA ascii\n"
        "1 2 3\nnan 0 0\n4 5 6\n",
        &report);
    EXPECT_EQ(c.size(), 2u);
    EXPECT_EQ(report.nan_points_dropped, 1u);
    EXPECT_EQ(c.points[1], Vec3(4, 5, 6));
}

TEST(CloudIo, UnknownFieldsFollowStrictFlag) {
    const std::string text =
        "FIELDS x y z curvature\nSIZE 4 4 4 4\nTYPE F F F F\nCOUNT 1 1 1 1\nWIDTH 2\nHEIGHT 1\nPOINTS 2\n"
        "DATA ascii\n1 2 3 0.5\n4 5 6 0.25\n";
    ReadReport lax;
    const PointCloud dropped = read_pcd_text(text, &lax, false);
    EXPECT_TRUE(dropped.extra_fields.empty());
    ASSERT_FALSE(lax.warnings.empty());
    EXPECT_NE(lax.warnings[0].find("curvature"), std::string::npos);

    const PointCloud kept = read_pcd_text(text, nullptr, true);
    ASSERT_EQ(kept.extra_fields.size(), 1u);
    std::stringstream s;
    write_pcd(kept, s, true);
    const PointCloud again = read_pcd(s, ReadOptions{true});
    ASSERT_EQ(again.extra_fields.size(), 1u);
    EXPECT_EQ(again.extra_fields[0].name, "curvature");
    EXPECT_EQ(again.extra_fields[0].values, (std::vector<double>{0.5, 0.25}));
}

TEST(CloudIo, MissingFileIsIoError) {
    try {
        read_cloud("/nonexistent/cloud.pcd");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.error_class(), ErrorClass::Io);
    }
}

TEST(CloudIo, PlySkipsOtherElements) {
    std::istringstream in(
        "ply\nformat ascii 1.0\nelement vertex 2\nproperty float x\nproperty float y\nproperty float z\n"
        "property uchar red\nproperty uchar green\nproperty uchar blue\nelement face 1\n"
        "property list uchar int vertex_indices\nend_header\n0 0 0 255 0 0\n1 1 1 0 255 0\n3 0 1 1\n");
    const PointCloud c = read_ply(in);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.colors[1], (Rgb{0, 255, 0}));
}
