#pragma once

#include "mpereg/geometry.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>

namespace mpereg {

enum class CloudFormat { kPlyAscii, kXyz };

/// ".ply" -> PLY; ".xyz", ".txt", ".pts", ".asc" -> XYZ. Throws InvalidArgument otherwise.
CloudFormat format_from_path(const std::filesystem::path& path);

/// ASCII PLY: the vertex element's x, y, z properties are read, other
/// properties and elements are skipped. The declared vertex count must match
/// the rows present.
PointCloud read_ply(std::istream& in, const std::string& source = "<stream>");

/// One point per line: three numeric fields separated by whitespace; further
/// numeric fields are ignored. Blank lines and '#' comments are skipped.
PointCloud read_xyz(std::istream& in, const std::string& source = "<stream>");

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format);
PointCloud read_cloud(const std::filesystem::path& path);

/// Coordinates are written in shortest round-trip form (exact on re-read).
void write_ply(std::ostream& out, const PointCloud& cloud);
void write_xyz(std::ostream& out, const PointCloud& cloud);

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);
void write_cloud(const PointCloud& cloud, const std::filesystem::path& path);

/// Shortest decimal string that reads back as exactly `v`.
std::string format_double(double v);

}  // namespace mpereg
