// Copyright 2026 The calibkit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// PLY point cloud I/O (ascii and binary_little_endian).
//
// Recognized vertex properties: x, y, z (required), intensity, nx/ny/nz and
// planarity. Other properties and elements are skipped. The writer stores
// every property as double and records the frame id and site index as
// "comment frame_id <id>" / "comment site <n>".

#ifndef CALIBKIT_IO_PLY_HPP
#define CALIBKIT_IO_PLY_HPP

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "calibkit/core/types.hpp"

namespace calibkit::io {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

namespace detail {

enum class PlyType { kInt8, kUint8, kInt16, kUint16, kInt32, kUint32, kFloat32, kFloat64 };

inline std::optional<PlyType> ply_type(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::kInt8;
  if (name == "uchar" || name == "uint8") return PlyType::kUint8;
  if (name == "short" || name == "int16") return PlyType::kInt16;
  if (name == "ushort" || name == "uint16") return PlyType::kUint16;
  if (name == "int" || name == "int32") return PlyType::kInt32;
  if (name == "uint" || name == "uint32") return PlyType::kUint32;
  if (name == "float" || name == "float32") return PlyType::kFloat32;
  if (name == "double" || name == "float64") return PlyType::kFloat64;
  return std::nullopt;
}

inline std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::kInt8:
    case PlyType::kUint8: return 1;
    case PlyType::kInt16:
    case PlyType::kUint16: return 2;
    case PlyType::kInt32:
    case PlyType::kUint32:
    case PlyType::kFloat32: return 4;
    case PlyType::kFloat64: return 8;
  }
  return 0;
}

struct PlyProperty {
  std::string name;
  PlyType type = PlyType::kFloat64;
  bool is_list = false;
  PlyType count_type = PlyType::kUint8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

static_assert(std::endian::native == std::endian::little,
              "binary PLY support assumes a little-endian host");

template <typename T>
T load_le(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

inline double decode(PlyType t, const char* p) {
  switch (t) {
    case PlyType::kInt8: return load_le<std::int8_t>(p);
    case PlyType::kUint8: return load_le<std::uint8_t>(p);
    case PlyType::kInt16: return load_le<std::int16_t>(p);
    case PlyType::kUint16: return load_le<std::uint16_t>(p);
    case PlyType::kInt32: return load_le<std::int32_t>(p);
    case PlyType::kUint32: return load_le<std::uint32_t>(p);
    case PlyType::kFloat32: return load_le<float>(p);
    case PlyType::kFloat64: return load_le<double>(p);
  }
  return 0.0;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

inline std::optional<double> parse_double(std::string_view s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    return std::nullopt;
  }
  return v;
}

inline std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Indices of the recognized vertex properties, -1 when absent.
struct VertexLayout {
  int x = -1, y = -1, z = -1, intensity = -1, nx = -1, ny = -1, nz = -1, planarity = -1;

  explicit VertexLayout(const PlyElement& e) {
    for (std::size_t i = 0; i < e.properties.size(); ++i) {
      const std::string& n = e.properties[i].name;
      const int k = static_cast<int>(i);
      if (e.properties[i].is_list) continue;
      if (n == "x") x = k;
      else if (n == "y") y = k;
      else if (n == "z") z = k;
      else if (n == "intensity") intensity = k;
      else if (n == "nx") nx = k;
      else if (n == "ny") ny = k;
      else if (n == "nz") nz = k;
      else if (n == "planarity") planarity = k;
    }
  }

  bool has_normal() const { return nx >= 0 && ny >= 0 && nz >= 0; }
};

}  // namespace detail

/// Parses PLY bytes. `source` names the input in error messages, which give
/// a line number (header, ascii body) or a byte offset (binary body).
inline PointCloud parse_ply(std::string_view data, const std::string& source = "<memory>") {
  using detail::PlyElement;
  using detail::PlyProperty;
  auto fail = [&](const std::string& where, const std::string& what) -> CalibError {
    return CalibError(ErrorCode::kParse, source + ":" + where + ": " + what);
  };

  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    if (pos >= data.size()) return std::nullopt;
    std::size_t end = data.find('\n', pos);
    if (end == std::string_view::npos) end = data.size();
    std::string_view line = data.substr(pos, end - pos);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos = std::min(end + 1, data.size());
    ++line_no;
    return line;
  };
  auto at_line = [&]() { return "line " + std::to_string(line_no); };

  auto magic = next_line();
  if (!magic || *magic != "ply") {
    throw fail("line 1", "missing 'ply' magic");
  }
  std::optional<PlyFormat> format;
  std::vector<PlyElement> elements;
  PointCloud cloud;
  bool header_done = false;
  while (auto line = next_line()) {
    const auto tok = detail::split_ws(*line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") {
      header_done = true;
      break;
    }
    if (tok[0] == "format") {
      if (tok.size() != 3) throw fail(at_line(), "malformed format line");
      if (tok[1] == "ascii") format = PlyFormat::kAscii;
      else if (tok[1] == "binary_little_endian") format = PlyFormat::kBinaryLittleEndian;
      else throw fail(at_line(), "unsupported format '" + std::string(tok[1]) + "'");
    } else if (tok[0] == "comment") {
      if (tok.size() >= 3 && tok[1] == "frame_id") {
        cloud.frame_id = std::string(tok[2]);
      } else if (tok.size() >= 3 && tok[1] == "site") {
        std::size_t site = 0;
        const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), site);
        if (r.ec != std::errc()) throw fail(at_line(), "malformed site comment");
        cloud.acquired_at_site = site;
      }
    } else if (tok[0] == "obj_info") {
      continue;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw fail(at_line(), "malformed element line");
      PlyElement e;
      e.name = std::string(tok[1]);
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), e.count);
      if (r.ec != std::errc()) throw fail(at_line(), "malformed element count");
      elements.push_back(std::move(e));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw fail(at_line(), "property before any element");
      PlyProperty p;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = detail::ply_type(tok[2]);
        const auto it = detail::ply_type(tok[3]);
        if (!ct || !it) throw fail(at_line(), "unknown list property type");
        p.is_list = true;
        p.count_type = *ct;
        p.type = *it;
        p.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        const auto t = detail::ply_type(tok[1]);
        if (!t) throw fail(at_line(), "unknown property type '" + std::string(tok[1]) + "'");
        p.type = *t;
        p.name = std::string(tok[2]);
      } else {
        throw fail(at_line(), "malformed property line");
      }
      elements.back().properties.push_back(std::move(p));
    } else {
      throw fail(at_line(), "unexpected header keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!header_done) throw fail(at_line(), "missing end_header");
  if (!format) throw fail("header", "missing format line");

  const PlyElement* vertex = nullptr;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) throw fail("header", "no vertex element");
  const detail::VertexLayout layout(*vertex);
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    throw fail("header", "vertex element lacks x, y or z");
  }
  if ((layout.nx >= 0 || layout.ny >= 0 || layout.nz >= 0) && !layout.has_normal()) {
    throw fail("header", "incomplete normal (need nx, ny and nz)");
  }

  std::vector<double> values;
  auto make_point = [&](const std::string& where) {
    Point p;
    p.position = {values[static_cast<std::size_t>(layout.x)],
                  values[static_cast<std::size_t>(layout.y)],
                  values[static_cast<std::size_t>(layout.z)]};
    if (layout.intensity >= 0) p.intensity = values[static_cast<std::size_t>(layout.intensity)];
    if (layout.has_normal()) {
      const Vec3 n(values[static_cast<std::size_t>(layout.nx)],
                   values[static_cast<std::size_t>(layout.ny)],
                   values[static_cast<std::size_t>(layout.nz)]);
      const double len = n.norm();
      if (!(len > 0.0) || !std::isfinite(len)) throw fail(where, "zero or invalid normal");
      p.normal = n / len;
    }
    if (layout.planarity >= 0) {
      const double pl = values[static_cast<std::size_t>(layout.planarity)];
      if (!(pl >= 0.0 && pl <= 1.0)) throw fail(where, "planarity outside [0,1]");
      p.planarity = pl;
    }
    cloud.points.push_back(p);
  };

  if (*format == PlyFormat::kAscii) {
    for (const auto& e : elements) {
      const bool is_vertex = &e == vertex;
      if (is_vertex) cloud.points.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        auto line = next_line();
        if (!line) throw fail(at_line(), "unexpected end of file in element '" + e.name + "'");
        if (!is_vertex) continue;
        const auto tok = detail::split_ws(*line);
        if (tok.size() < e.properties.size()) throw fail(at_line(), "too few values");
        values.assign(e.properties.size(), 0.0);
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          if (e.properties[k].is_list) continue;
          const auto v = detail::parse_double(tok[k]);
          if (!v) throw fail(at_line(), "malformed number '" + std::string(tok[k]) + "'");
          values[k] = *v;
        }
        make_point(at_line());
      }
    }
  } else {
    std::size_t off = pos;
    auto need = [&](std::size_t n) {
      if (off + n > data.size()) {
        throw fail("byte " + std::to_string(off), "unexpected end of binary data");
      }
    };
    for (const auto& e : elements) {
      const bool is_vertex = &e == vertex;
      if (is_vertex) cloud.points.reserve(e.count);
      for (std::size_t i = 0; i < e.count; ++i) {
        const std::size_t start = off;
        values.assign(e.properties.size(), 0.0);
        for (std::size_t k = 0; k < e.properties.size(); ++k) {
          const PlyProperty& p = e.properties[k];
          if (p.is_list) {
            need(detail::type_size(p.count_type));
            const double cnt = detail::decode(p.count_type, data.data() + off);
            off += detail::type_size(p.count_type);
            if (!(cnt >= 0.0)) throw fail("byte " + std::to_string(off), "negative list count");
            const std::size_t bytes = static_cast<std::size_t>(cnt) * detail::type_size(p.type);
            need(bytes);
            off += bytes;
          } else {
            need(detail::type_size(p.type));
            values[k] = detail::decode(p.type, data.data() + off);
            off += detail::type_size(p.type);
          }
        }
        if (is_vertex) make_point("byte " + std::to_string(start));
      }
    }
  }
  return cloud;
}

inline PointCloud read_ply(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CalibError(ErrorCode::kIo, "cannot open '" + path.string() + "'");
  }
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  PointCloud cloud = parse_ply(data, path.string());
  if (cloud.frame_id.empty()) {
    cloud.frame_id = path.stem().string();
  }
  return cloud;
}

inline std::string format_ply(const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  const PointSchema schema = cloud.schema();
  std::vector<std::string> props = {"x", "y", "z"};
  if (schema.intensity) props.push_back("intensity");
  if (schema.normal) {
    props.insert(props.end(), {"nx", "ny", "nz"});
  }
  if (schema.planarity) props.push_back("planarity");

  std::string out = "ply\n";
  out += format == PlyFormat::kAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  if (!cloud.frame_id.empty()) out += "comment frame_id " + cloud.frame_id + "\n";
  if (cloud.acquired_at_site) out += "comment site " + std::to_string(*cloud.acquired_at_site) + "\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  for (const auto& p : props) out += "property double " + p + "\n";
  out += "end_header\n";

  std::vector<double> row;
  for (const Point& p : cloud.points) {
    row.assign({p.position.x(), p.position.y(), p.position.z()});
    if (schema.intensity) row.push_back(*p.intensity);
    if (schema.normal) row.insert(row.end(), {p.normal->x(), p.normal->y(), p.normal->z()});
    if (schema.planarity) row.push_back(*p.planarity);
    if (format == PlyFormat::kAscii) {
      for (std::size_t k = 0; k < row.size(); ++k) {
        if (k) out += ' ';
        out += detail::format_double(row[k]);
      }
      out += '\n';
    } else {
      const std::size_t at = out.size();
      out.resize(at + row.size() * sizeof(double));
      std::memcpy(out.data() + at, row.data(), row.size() * sizeof(double));
    }
  }
  return out;
}

inline void write_ply(const std::filesystem::path& path, const PointCloud& cloud,
                      PlyFormat format = PlyFormat::kBinaryLittleEndian) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw CalibError(ErrorCode::kIo, "cannot write '" + path.string() + "'");
  }
  const std::string bytes = format_ply(cloud, format);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    throw CalibError(ErrorCode::kIo, "write failed for '" + path.string() + "'");
  }
}

}  // namespace calibkit::io

#endif  // CALIBKIT_IO_PLY_HPP
