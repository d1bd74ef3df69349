#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "regbench/point_cloud.h"

namespace regbench {

enum class CloudFormat { PcdAscii, PcdBinary, PlyAscii };

struct ReadOptions {
    /// Keep fields the toolkit does not interpret (as ExtraField) so that a
    /// later write reproduces them. Otherwise they are dropped with a warning.
    bool strict = false;
};

struct ReadReport {
    std::size_t nan_points_dropped = 0;
    std::vector<std::string> warnings;
};

/// PCD (DATA ascii or binary, little-endian) or ASCII PLY, chosen by
/// extension. Recognized fields: x y z, rgb / rgba (packed PCD convention),
/// normal_x normal_y normal_z (nx ny nz in PLY), red green blue (PLY),
/// intensity. Points with a non-finite coordinate are dropped and counted;
/// a non-finite normal marks that normal invalid. Errors: Io when the file
/// cannot be opened, Parse for a malformed header (message carries the line
/// number) or a short payload (expected vs actual bytes).
PointCloud read_cloud(const std::string& path, const ReadOptions& options = {},
                      ReadReport* report = nullptr);
PointCloud read_pcd(std::istream& in, const ReadOptions& options = {}, ReadReport* report = nullptr);
PointCloud read_ply(std::istream& in, const ReadOptions& options = {}, ReadReport* report = nullptr);

/// Coordinates and normals are written as 8-byte floats (so a write/read
/// round trip is bit exact), colors as the packed rgb float, invalid normals
/// as NaN. The format defaults from the extension: .ply -> PlyAscii,
/// anything else -> PcdBinary.
void write_cloud(const PointCloud& cloud, const std::string& path);
void write_cloud(const PointCloud& cloud, const std::string& path, CloudFormat format);
void write_pcd(const PointCloud& cloud, std::ostream& out, bool binary);
void write_ply(const PointCloud& cloud, std::ostream& out);

}  // namespace regbench
