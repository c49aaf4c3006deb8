#include "mpereg/io.hpp"

#include "mpereg/error.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <string_view>
#include <vector>

namespace mpereg {

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    const std::size_t start = i;
    while (i < line.size() && !std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool parse_double(std::string_view token, double& out) {
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), out);
  return ec == std::errc() && ptr == token.data() + token.size();
}

double parse_coordinate(std::string_view token, const std::string& source, std::size_t line_no) {
  double v = 0.0;
  if (!parse_double(token, v)) throw ParseError(source, line_no, "non-numeric token '" + std::string(token) + "'");
  if (!std::isfinite(v)) throw ParseError(source, line_no, "non-finite coordinate");
  return v;
}

std::string strip_cr(std::string line) {
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<std::string> properties;
};

}  // namespace

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ptr);
}

CloudFormat format_from_path(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".ply") return CloudFormat::kPlyAscii;
  if (ext == ".xyz" || ext == ".txt" || ext == ".pts" || ext == ".asc") return CloudFormat::kXyz;
  throw InvalidArgument(path.string() + ": unrecognized point-cloud extension '" + ext + "'");
}

PointCloud read_ply(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t line_no = 0;
  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    line = strip_cr(line);
    ++line_no;
    return true;
  };

  if (!next_line() || line != "ply") throw ParseError(source, 1, "missing 'ply' magic");

  std::vector<PlyElement> elements;
  bool saw_format = false;
  for (;;) {
    if (!next_line()) throw ParseError(source, line_no, "header not terminated by end_header");
    const auto tok = split_ws(line);
    if (tok.empty() || tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "format") {
      if (tok.size() < 2 || tok[1] != "ascii") {
        throw ParseError(source, line_no, "only ASCII PLY is supported");
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw ParseError(source, line_no, "malformed element line");
      std::size_t count = 0;
      const auto [p, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (ec != std::errc() || p != tok[2].data() + tok[2].size()) {
        throw ParseError(source, line_no, "malformed element count '" + std::string(tok[2]) + "'");
      }
      elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw ParseError(source, line_no, "property before any element");
      if (tok.size() < 3) throw ParseError(source, line_no, "malformed property line");
      elements.back().properties.emplace_back(tok.back());
    } else {
      throw ParseError(source, line_no, "unknown header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!saw_format) throw ParseError(source, line_no, "missing format line");

  const auto vertex = std::find_if(elements.begin(), elements.end(), [](const auto& e) { return e.name == "vertex"; });
  if (vertex == elements.end()) throw ParseError(source, line_no, "no vertex element");
  std::array<std::size_t, 3> col{};
  for (int a = 0; a < 3; ++a) {
    const std::string name(1, "xyz"[a]);
    const auto it = std::find(vertex->properties.begin(), vertex->properties.end(), name);
    if (it == vertex->properties.end()) throw ParseError(source, line_no, "vertex element lacks property " + name);
    col[a] = static_cast<std::size_t>(it - vertex->properties.begin());
  }

  // Skip rows of elements declared before the vertices.
  for (auto e = elements.begin(); e != vertex; ++e) {
    for (std::size_t k = 0; k < e->count; ++k) {
      if (!next_line()) throw ParseError(source, line_no, "unexpected end of file in element " + e->name);
    }
  }

  std::vector<Point3> pts;
  pts.reserve(vertex->count);
  while (pts.size() < vertex->count) {
    if (!next_line()) {
      throw ParseError(source, line_no, "declared " + std::to_string(vertex->count) + " vertices, found " +
                                            std::to_string(pts.size()));
    }
    const auto tok = split_ws(line);
    if (tok.size() != vertex->properties.size()) {
      throw ParseError(source, line_no, "expected " + std::to_string(vertex->properties.size()) +
                                            " vertex fields, found " + std::to_string(tok.size()));
    }
    pts.emplace_back(parse_coordinate(tok[col[0]], source, line_no), parse_coordinate(tok[col[1]], source, line_no),
                     parse_coordinate(tok[col[2]], source, line_no));
  }

  // With nothing declared after the vertices, any further data row means the
  // declared count was wrong.
  if (vertex + 1 == elements.end()) {
    while (next_line()) {
      if (!split_ws(line).empty()) {
        throw ParseError(source, line_no, "more vertex rows than the declared " + std::to_string(vertex->count));
      }
    }
  }
  if (pts.empty()) throw ParseError(source, line_no, "no vertices");
  return PointCloud(std::move(pts));
}

PointCloud read_xyz(std::istream& in, const std::string& source) {
  std::vector<Point3> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
    const auto tok = split_ws(view);
    if (tok.empty()) continue;
    if (tok.size() < 3) throw ParseError(source, line_no, "expected 3 coordinates, found " + std::to_string(tok.size()));
    for (std::size_t k = 3; k < tok.size(); ++k) parse_coordinate(tok[k], source, line_no);
    pts.emplace_back(parse_coordinate(tok[0], source, line_no), parse_coordinate(tok[1], source, line_no),
                     parse_coordinate(tok[2], source, line_no));
  }
  if (pts.empty()) throw ParseError(source, line_no, "no points");
  return PointCloud(std::move(pts));
}

PointCloud read_cloud(const std::filesystem::path& path, CloudFormat format) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw IoError(path.string(), "no such file");
  std::ifstream in(path);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  return format == CloudFormat::kPlyAscii ? read_ply(in, path.string()) : read_xyz(in, path.string());
}

PointCloud read_cloud(const std::filesystem::path& path) { return read_cloud(path, format_from_path(path)); }

void write_ply(std::ostream& out, const PointCloud& cloud) {
  out << "ply\nformat ascii 1.0\nelement vertex " << cloud.size()
      << "\nproperty double x\nproperty double y\nproperty double z\nend_header\n";
  for (const auto& p : cloud.points()) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
}

void write_xyz(std::ostream& out, const PointCloud& cloud) {
  for (const auto& p : cloud.points()) {
    out << format_double(p.x()) << ' ' << format_double(p.y()) << ' ' << format_double(p.z()) << '\n';
  }
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  std::ofstream out(path);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  if (format == CloudFormat::kPlyAscii) {
    write_ply(out, cloud);
  } else {
    write_xyz(out, cloud);
  }
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

void write_cloud(const PointCloud& cloud, const std::filesystem::path& path) {
  write_cloud(cloud, path, format_from_path(path));
}

}  // namespace mpereg
