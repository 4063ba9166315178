#include "ndp/io.hpp"

#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace ndp::io {

namespace {

std::string lower_ext(const std::filesystem::path& p) {
  std::string e = p.extension().string();
  for (auto& c : e) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return e;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::vector<std::string> split_ws(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream ss(line);
  std::string tok;
  while (ss >> tok) out.push_back(tok);
  return out;
}

bool parse_double_token(const std::string& tok, double& out) {
  const char* b = tok.data();
  const char* e = tok.data() + tok.size();
  if (b != e && *b == '+') ++b;
  auto [ptr, ec] = std::from_chars(b, e, out);
  return ec == std::errc() && ptr == e;
}

bool parse_index_token(const std::string& tok, std::size_t& out) {
  unsigned long long v = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) return false;
  out = static_cast<std::size_t>(v);
  return true;
}

std::string strip_comment(std::string line) {
  if (const auto h = line.find('#'); h != std::string::npos) line.erase(h);
  return line;
}

// ---------------------------------------------------------------- PLY

struct PlyProperty {
  std::string name;
  PlyScalar type = PlyScalar::Float32;
  bool is_list = false;
  PlyScalar count_type = PlyScalar::UInt8;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> props;
};

std::optional<PlyScalar> scalar_from_name(const std::string& s) {
  if (s == "char" || s == "int8") return PlyScalar::Int8;
  if (s == "uchar" || s == "uint8") return PlyScalar::UInt8;
  if (s == "short" || s == "int16") return PlyScalar::Int16;
  if (s == "ushort" || s == "uint16") return PlyScalar::UInt16;
  if (s == "int" || s == "int32") return PlyScalar::Int32;
  if (s == "uint" || s == "uint32") return PlyScalar::UInt32;
  if (s == "float" || s == "float32") return PlyScalar::Float32;
  if (s == "double" || s == "float64") return PlyScalar::Float64;
  return std::nullopt;
}

const char* scalar_name(PlyScalar t) {
  switch (t) {
    case PlyScalar::Int8: return "char";
    case PlyScalar::UInt8: return "uchar";
    case PlyScalar::Int16: return "short";
    case PlyScalar::UInt16: return "ushort";
    case PlyScalar::Int32: return "int";
    case PlyScalar::UInt32: return "uint";
    case PlyScalar::Float32: return "float";
    case PlyScalar::Float64: return "double";
  }
  return "?";
}

std::size_t scalar_size(PlyScalar t) {
  switch (t) {
    case PlyScalar::Int8:
    case PlyScalar::UInt8: return 1;
    case PlyScalar::Int16:
    case PlyScalar::UInt16: return 2;
    case PlyScalar::Int32:
    case PlyScalar::UInt32:
    case PlyScalar::Float32: return 4;
    case PlyScalar::Float64: return 8;
  }
  return 0;
}

template <typename T>
T load_le(const char* p) {
  std::array<char, sizeof(T)> bytes{};
  std::memcpy(bytes.data(), p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

double load_scalar(PlyScalar t, const char* p) {
  switch (t) {
    case PlyScalar::Int8: return load_le<std::int8_t>(p);
    case PlyScalar::UInt8: return load_le<std::uint8_t>(p);
    case PlyScalar::Int16: return load_le<std::int16_t>(p);
    case PlyScalar::UInt16: return load_le<std::uint16_t>(p);
    case PlyScalar::Int32: return load_le<std::int32_t>(p);
    case PlyScalar::UInt32: return load_le<std::uint32_t>(p);
    case PlyScalar::Float32: return load_le<float>(p);
    case PlyScalar::Float64: return load_le<double>(p);
  }
  return 0.0;
}

template <typename T>
void store_le(std::string& out, T v) {
  auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  out.append(bytes.data(), sizeof(T));
}

void store_scalar(std::string& out, PlyScalar t, double v) {
  switch (t) {
    case PlyScalar::Int8: store_le(out, static_cast<std::int8_t>(v)); break;
    case PlyScalar::UInt8: store_le(out, static_cast<std::uint8_t>(v)); break;
    case PlyScalar::Int16: store_le(out, static_cast<std::int16_t>(v)); break;
    case PlyScalar::UInt16: store_le(out, static_cast<std::uint16_t>(v)); break;
    case PlyScalar::Int32: store_le(out, static_cast<std::int32_t>(v)); break;
    case PlyScalar::UInt32: store_le(out, static_cast<std::uint32_t>(v)); break;
    case PlyScalar::Float32: store_le(out, static_cast<float>(v)); break;
    case PlyScalar::Float64: store_le(out, v); break;
  }
}

std::string format_value(PlyScalar t, double v, int float_digits) {
  std::ostringstream os;
  switch (t) {
    case PlyScalar::Float32:
    case PlyScalar::Float64:
      os.precision(float_digits);
      os << v;
      break;
    default: os << static_cast<long long>(v); break;
  }
  return os.str();
}

enum class PlyEncoding { Ascii, BinaryLE };

struct PlyHeader {
  PlyEncoding encoding = PlyEncoding::Ascii;
  std::vector<PlyElement> elements;
  std::size_t data_offset = 0;
};

PlyHeader parse_ply_header(const std::string& bytes, const std::string& origin) {
  PlyHeader header;
  std::size_t pos = 0;
  int lineno = 0;
  bool saw_format = false;
  auto next_line = [&](std::string& line) {
    if (pos >= bytes.size()) return false;
    auto nl = bytes.find('\n', pos);
    if (nl == std::string::npos) nl = bytes.size();
    line = bytes.substr(pos, nl - pos);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    pos = nl + 1;
    ++lineno;
    return true;
  };
  auto fail = [&](const std::string& msg) -> MalformedHeader {
    return MalformedHeader(origin + ": PLY header line " + std::to_string(lineno) + ": " + msg);
  };

  std::string line;
  if (!next_line(line) || line != "ply") throw MalformedHeader(origin + ": missing 'ply' magic");
  for (;;) {
    if (!next_line(line)) throw fail("missing end_header");
    const auto tok = split_ws(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 3) throw fail("incomplete format line");
      if (tok[1] == "ascii") {
        header.encoding = PlyEncoding::Ascii;
      } else if (tok[1] == "binary_little_endian") {
        header.encoding = PlyEncoding::BinaryLE;
      } else if (tok[1] == "binary_big_endian") {
        throw UnsupportedFormat(origin + ": big-endian binary PLY is not supported");
      } else {
        throw fail("unknown format '" + tok[1] + "'");
      }
      saw_format = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw fail("expected 'element <name> <count>'");
      std::size_t count = 0;
      if (!parse_index_token(tok[2], count)) throw fail("invalid element count '" + tok[2] + "'");
      header.elements.push_back({tok[1], count, {}});
    } else if (tok[0] == "property") {
      if (header.elements.empty()) throw fail("property before any element");
      PlyProperty prop;
      if (tok.size() == 5 && tok[1] == "list") {
        const auto ct = scalar_from_name(tok[2]);
        const auto it = scalar_from_name(tok[3]);
        if (!ct || !it) throw fail("unknown list property type");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *it;
        prop.name = tok[4];
      } else if (tok.size() == 3) {
        const auto t = scalar_from_name(tok[1]);
        if (!t) throw fail("unknown property type '" + tok[1] + "'");
        prop.type = *t;
        prop.name = tok[2];
      } else {
        throw fail("malformed property line");
      }
      header.elements.back().props.push_back(prop);
    } else {
      throw fail("unexpected keyword '" + tok[0] + "'");
    }
  }
  if (!saw_format) throw MalformedHeader(origin + ": PLY header has no format line");
  header.data_offset = pos;
  return header;
}

struct VertexLayout {
  int x = -1, y = -1, z = -1;
  std::vector<int> attribute_props;  // scalar props other than x/y/z
};

VertexLayout vertex_layout(const PlyElement& vertex, const std::string& origin) {
  VertexLayout layout;
  for (std::size_t i = 0; i < vertex.props.size(); ++i) {
    const auto& p = vertex.props[i];
    const int idx = static_cast<int>(i);
    if (p.name == "x" || p.name == "y" || p.name == "z") {
      if (p.is_list || (p.type != PlyScalar::Float32 && p.type != PlyScalar::Float64)) {
        throw UnsupportedFormat(origin + ": vertex property '" + p.name + "' must be float or double");
      }
      (p.name == "x" ? layout.x : p.name == "y" ? layout.y : layout.z) = idx;
    } else if (!p.is_list) {
      layout.attribute_props.push_back(idx);
    }
  }
  if (layout.x < 0 || layout.y < 0 || layout.z < 0) {
    throw MalformedHeader(origin + ": vertex element lacks x, y or z");
  }
  return layout;
}

PointCloud init_cloud(const PlyElement& vertex, const VertexLayout& layout) {
  PointCloud cloud;
  cloud.points.reserve(vertex.count);
  for (int idx : layout.attribute_props) {
    const auto& p = vertex.props[static_cast<std::size_t>(idx)];
    cloud.attributes.push_back({p.name, p.type, {}});
  }
  return cloud;
}

void check_point(const Vec3& p, std::size_t i, const std::string& origin) {
  if (!p.allFinite()) throw IoError(origin + ": vertex " + std::to_string(i) + " has a non-finite coordinate");
}

PointCloud parse_ply_ascii(const std::string& bytes, const PlyHeader& header, const std::string& origin) {
  std::istringstream in(bytes.substr(header.data_offset));
  std::string tok;
  auto next = [&](double& v) {
    if (!(in >> tok)) return false;
    if (!parse_double_token(tok, v)) {
      if (tok == "nan" || tok == "-nan" || tok == "inf" || tok == "-inf") {
        v = std::numeric_limits<double>::quiet_NaN();
        return true;
      }
      throw IoError(origin + ": invalid number '" + tok + "' in PLY body");
    }
    return true;
  };

  PointCloud cloud;
  bool have_vertex = false;
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex" && !have_vertex;
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(el, origin);
      cloud = init_cloud(el, layout);
      have_vertex = true;
    }
    std::vector<double> row(el.props.size());
    for (std::size_t r = 0; r < el.count; ++r) {
      for (std::size_t pi = 0; pi < el.props.size(); ++pi) {
        const auto& p = el.props[pi];
        double v = 0.0;
        bool ok = next(v);
        if (ok && p.is_list) {
          const auto n = static_cast<std::size_t>(v);
          for (std::size_t j = 0; j < n && ok; ++j) {
            double item = 0.0;
            ok = next(item);
          }
        }
        if (!ok) {
          if (is_vertex) {
            throw TruncatedData(origin + ": truncated PLY data: expected " + std::to_string(el.count) +
                                " vertices, found " + std::to_string(r));
          }
          throw TruncatedData(origin + ": truncated PLY data in element '" + el.name + "'");
        }
        row[pi] = v;
      }
      if (is_vertex) {
        const Vec3 p(row[static_cast<std::size_t>(layout.x)], row[static_cast<std::size_t>(layout.y)],
                     row[static_cast<std::size_t>(layout.z)]);
        check_point(p, r, origin);
        cloud.points.push_back(p);
        for (std::size_t a = 0; a < layout.attribute_props.size(); ++a) {
          cloud.attributes[a].values.push_back(row[static_cast<std::size_t>(layout.attribute_props[a])]);
        }
      }
    }
    if (is_vertex) break;
  }
  if (!have_vertex) throw MalformedHeader(origin + ": PLY file has no vertex element");
  return cloud;
}

PointCloud parse_ply_binary(const std::string& bytes, const PlyHeader& header, const std::string& origin) {
  std::size_t pos = header.data_offset;
  PointCloud cloud;
  bool have_vertex = false;
  for (const auto& el : header.elements) {
    const bool is_vertex = el.name == "vertex" && !have_vertex;
    VertexLayout layout;
    if (is_vertex) {
      layout = vertex_layout(el, origin);
      cloud = init_cloud(el, layout);
      have_vertex = true;
    }
    std::vector<double> row(el.props.size());
    for (std::size_t r = 0; r < el.count; ++r) {
      bool ok = true;
      for (std::size_t pi = 0; pi < el.props.size() && ok; ++pi) {
        const auto& p = el.props[pi];
        if (p.is_list) {
          const auto cs = scalar_size(p.count_type);
          if (pos + cs > bytes.size()) {
            ok = false;
            break;
          }
          const auto n = static_cast<std::size_t>(load_scalar(p.count_type, bytes.data() + pos));
          pos += cs;
          const auto skip = n * scalar_size(p.type);
          if (pos + skip > bytes.size()) {
            ok = false;
            break;
          }
          pos += skip;
        } else {
          const auto s = scalar_size(p.type);
          if (pos + s > bytes.size()) {
            ok = false;
            break;
          }
          row[pi] = load_scalar(p.type, bytes.data() + pos);
          pos += s;
        }
      }
      if (!ok) {
        if (is_vertex) {
          throw TruncatedData(origin + ": truncated PLY data: expected " + std::to_string(el.count) +
                              " vertices, found " + std::to_string(r));
        }
        throw TruncatedData(origin + ": truncated PLY data in element '" + el.name + "'");
      }
      if (is_vertex) {
        const Vec3 p(row[static_cast<std::size_t>(layout.x)], row[static_cast<std::size_t>(layout.y)],
                     row[static_cast<std::size_t>(layout.z)]);
        check_point(p, r, origin);
        cloud.points.push_back(p);
        for (std::size_t a = 0; a < layout.attribute_props.size(); ++a) {
          cloud.attributes[a].values.push_back(row[static_cast<std::size_t>(layout.attribute_props[a])]);
        }
      }
    }
    if (is_vertex) break;
  }
  if (!have_vertex) throw MalformedHeader(origin + ": PLY file has no vertex element");
  return cloud;
}

}  // namespace

PointCloud parse_ply(const std::string& bytes, const std::string& origin) {
  const PlyHeader header = parse_ply_header(bytes, origin);
  return header.encoding == PlyEncoding::Ascii ? parse_ply_ascii(bytes, header, origin)
                                               : parse_ply_binary(bytes, header, origin);
}

PointCloud parse_xyz(const std::string& text, const std::string& origin) {
  PointCloud cloud;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    if (tok.size() < 3) throw IoError(origin + ":" + std::to_string(lineno) + ": expected at least 3 coordinates");
    Vec3 p;
    for (int d = 0; d < 3; ++d) {
      if (!parse_double_token(tok[static_cast<std::size_t>(d)], p[d])) {
        throw IoError(origin + ":" + std::to_string(lineno) + ": invalid number '" + tok[static_cast<std::size_t>(d)] + "'");
      }
    }
    if (!p.allFinite()) throw IoError(origin + ":" + std::to_string(lineno) + ": non-finite coordinate");
    cloud.points.push_back(p);
  }
  return cloud;
}

PointCloud read_point_cloud(const std::filesystem::path& path) {
  const std::string bytes = slurp(path);
  if (lower_ext(path) == ".ply") return parse_ply(bytes, path.string());
  return parse_xyz(bytes, path.string());
}

std::string format_ply(const PointCloud& cloud, CloudFormat format) {
  cloud.validate();
  std::string out = "ply\n";
  out += format == CloudFormat::PlyAscii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n";
  out += "element vertex " + std::to_string(cloud.size()) + "\n";
  out += "property double x\nproperty double y\nproperty double z\n";
  for (const auto& a : cloud.attributes) out += std::string("property ") + scalar_name(a.type) + " " + a.name + "\n";
  out += "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (format == CloudFormat::PlyAscii) {
      out += format_value(PlyScalar::Float64, p.x(), 9) + " " + format_value(PlyScalar::Float64, p.y(), 9) + " " +
             format_value(PlyScalar::Float64, p.z(), 9);
      for (const auto& a : cloud.attributes) out += " " + format_value(a.type, a.values[i], 9);
      out += "\n";
    } else {
      store_le(out, p.x());
      store_le(out, p.y());
      store_le(out, p.z());
      for (const auto& a : cloud.attributes) store_scalar(out, a.type, a.values[i]);
    }
  }
  return out;
}

void write_point_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format) {
  if (format == CloudFormat::Xyz) {
    cloud.validate();
    std::ostringstream os;
    os.precision(17);
    for (const auto& p : cloud.points) os << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
    write_text(path, os.str());
    return;
  }
  write_text(path, format_ply(cloud, format));
}

CorrespondenceSet parse_correspondences(const std::string& text, double threshold, const std::string& origin) {
  CorrespondenceSet set;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (tok.size() != 2 && tok.size() != 3) throw IoError(where + "expected 'u v [confidence]'");
    Correspondence c;
    if (!parse_index_token(tok[0], c.u) || !parse_index_token(tok[1], c.v)) {
      throw IoError(where + "indices must be non-negative integers");
    }
    if (tok.size() == 3) {
      if (!parse_double_token(tok[2], c.confidence) || !std::isfinite(c.confidence) || c.confidence < 0.0 ||
          c.confidence > 1.0) {
        throw IoError(where + "confidence must be a number in [0, 1]");
      }
    }
    if (c.confidence < threshold) continue;
    set.pairs.push_back(c);
  }
  return set;
}

CorrespondenceSet read_correspondences(const std::filesystem::path& path, double threshold) {
  return parse_correspondences(slurp(path), threshold, path.string());
}

void write_correspondences(const CorrespondenceSet& set, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& c : set.pairs) os << c.u << ' ' << c.v << ' ' << c.confidence << '\n';
  write_text(path, os.str());
}

std::vector<Vec3> parse_warp(const std::string& text, const std::string& origin) {
  std::vector<Vec3> out;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto tok = split_ws(strip_comment(line));
    if (tok.empty()) continue;
    const std::string where = origin + ":" + std::to_string(lineno) + ": ";
    if (tok.size() != 3) throw IoError(where + "expected 'dx dy dz'");
    Vec3 v;
    for (int d = 0; d < 3; ++d) {
      if (!parse_double_token(tok[static_cast<std::size_t>(d)], v[d])) throw IoError(where + "invalid number");
    }
    if (!v.allFinite()) throw IoError(where + "non-finite value");
    out.push_back(v);
  }
  return out;
}

std::vector<Vec3> read_warp(const std::filesystem::path& path) { return parse_warp(slurp(path), path.string()); }

void write_warp(const std::vector<Vec3>& warp, const std::filesystem::path& path) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& v : warp) os << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  write_text(path, os.str());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) { return slurp(path); }

// ---------------------------------------------------------------- report

namespace {

using nlohmann::json;

json metrics_json(const FlowMetrics& m) {
  return {{"epe", m.epe}, {"acc_s", m.acc_s}, {"acc_r", m.acc_r}, {"outlier", m.outlier}, {"count", m.count}};
}

FlowMetrics metrics_from(const json& j) {
  FlowMetrics m;
  m.epe = j.at("epe").get<double>();
  m.acc_s = j.at("acc_s").get<double>();
  m.acc_r = j.at("acc_r").get<double>();
  m.outlier = j.at("outlier").get<double>();
  m.count = j.at("count").get<std::size_t>();
  return m;
}

void check_metrics(const json& j, const std::string& where, std::vector<std::string>& errors) {
  if (!j.is_object()) {
    errors.push_back(where + " must be an object");
    return;
  }
  for (const char* k : {"epe", "acc_s", "acc_r", "outlier"}) {
    if (!j.contains(k) || !j[k].is_number()) errors.push_back(where + "." + k + " must be a number");
  }
  if (!j.contains("count") || !j["count"].is_number_unsigned()) errors.push_back(where + ".count must be a non-negative integer");
  if (!errors.empty()) return;
  for (const char* k : {"acc_s", "acc_r", "outlier"}) {
    const double v = j[k].get<double>();
    if (v < 0.0 || v > 100.0) errors.push_back(where + "." + k + " must be in [0, 100]");
  }
  if (j["acc_s"].get<double>() > j["acc_r"].get<double>()) errors.push_back(where + ": acc_s exceeds acc_r");
}

}  // namespace

std::string report_to_json(const RunReport& report) {
  json cfg = json::object();
  for (const auto& key : config_keys()) cfg[key] = get_config_value(report.config, key);
  json levels = json::array();
  for (const auto& l : report.levels) {
    json jl = {{"level", l.level},
               {"iterations", l.iterations},
               {"stop_reason", to_string(l.stop_reason)},
               {"final_cost", l.final_cost},
               {"mean_alpha", l.mean_alpha}};
    if (l.metrics) jl["metrics"] = metrics_json(*l.metrics);
    levels.push_back(std::move(jl));
  }
  json doc = {{"schema", RunReport::kSchema},
              {"config", std::move(cfg)},
              {"inputs",
               {{"source_points", report.source_points},
                {"target_points", report.target_points},
                {"correspondences", report.correspondences}}},
              {"levels", std::move(levels)},
              {"totals", {{"iterations", report.total_iterations}, {"wall_seconds", report.wall_seconds}}}};
  if (report.metrics) doc["metrics"] = metrics_json(*report.metrics);
  return doc.dump(2) + "\n";
}

std::vector<std::string> validate_report_json(const std::string& text) {
  std::vector<std::string> errors;
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    return {std::string("not valid JSON: ") + e.what()};
  }
  if (!doc.is_object()) return {"document must be an object"};
  if (!doc.contains("schema") || doc["schema"] != RunReport::kSchema) {
    errors.push_back(std::string("schema must be \"") + RunReport::kSchema + "\"");
  }
  if (!doc.contains("config") || !doc["config"].is_object()) {
    errors.push_back("config must be an object");
  } else {
    PyramidConfig probe;
    for (const auto& key : config_keys()) {
      const auto& cfg = doc["config"];
      if (!cfg.contains(key) || !cfg[key].is_string()) {
        errors.push_back("config." + key + " must be a string");
        continue;
      }
      try {
        set_config_value(probe, key, cfg[key].get<std::string>());
      } catch (const Error& e) {
        errors.push_back("config." + key + ": " + e.what());
      }
    }
    for (const auto& [key, _] : doc["config"].items()) {
      if (std::find(config_keys().begin(), config_keys().end(), key) == config_keys().end()) {
        errors.push_back("config." + key + " is not a known key");
      }
    }
  }
  if (!doc.contains("inputs") || !doc["inputs"].is_object()) {
    errors.push_back("inputs must be an object");
  } else {
    for (const char* k : {"source_points", "target_points", "correspondences"}) {
      if (!doc["inputs"].contains(k) || !doc["inputs"][k].is_number_unsigned()) {
        errors.push_back(std::string("inputs.") + k + " must be a non-negative integer");
      }
    }
  }
  if (!doc.contains("levels") || !doc["levels"].is_array()) {
    errors.push_back("levels must be an array");
  } else {
    std::size_t i = 0;
    for (const auto& l : doc["levels"]) {
      const std::string where = "levels[" + std::to_string(i++) + "]";
      if (!l.is_object()) {
        errors.push_back(where + " must be an object");
        continue;
      }
      if (!l.contains("level") || !l["level"].is_number_integer() || l["level"].get<int>() < 1) {
        errors.push_back(where + ".level must be an integer >= 1");
      }
      if (!l.contains("iterations") || !l["iterations"].is_number_integer() || l["iterations"].get<int>() < 1) {
        errors.push_back(where + ".iterations must be an integer >= 1");
      }
      if (!l.contains("stop_reason") || !l["stop_reason"].is_string()) {
        errors.push_back(where + ".stop_reason must be a string");
      } else {
        try {
          parse_stop_reason(l["stop_reason"].get<std::string>());
        } catch (const Error&) {
          errors.push_back(where + ".stop_reason is not one of max_iter, cost_threshold, stalled");
        }
      }
      for (const char* k : {"final_cost", "mean_alpha"}) {
        if (!l.contains(k) || !l[k].is_number()) errors.push_back(where + "." + k + " must be a number");
      }
      if (l.contains("metrics")) check_metrics(l["metrics"], where + ".metrics", errors);
    }
  }
  if (!doc.contains("totals") || !doc["totals"].is_object()) {
    errors.push_back("totals must be an object");
  } else {
    if (!doc["totals"].contains("iterations") || !doc["totals"]["iterations"].is_number_integer()) {
      errors.push_back("totals.iterations must be an integer");
    }
    if (!doc["totals"].contains("wall_seconds") || !doc["totals"]["wall_seconds"].is_number()) {
      errors.push_back("totals.wall_seconds must be a number");
    }
  }
  if (doc.contains("metrics")) check_metrics(doc["metrics"], "metrics", errors);
  return errors;
}

RunReport report_from_json(const std::string& text) {
  const auto errors = validate_report_json(text);
  if (!errors.empty()) throw IoError("invalid run report: " + errors.front());
  const json doc = json::parse(text);
  RunReport r;
  for (const auto& key : config_keys()) set_config_value(r.config, key, doc["config"][key].get<std::string>());
  r.source_points = doc["inputs"]["source_points"].get<std::size_t>();
  r.target_points = doc["inputs"]["target_points"].get<std::size_t>();
  r.correspondences = doc["inputs"]["correspondences"].get<std::size_t>();
  for (const auto& l : doc["levels"]) {
    LevelSummary s;
    s.level = l["level"].get<int>();
    s.iterations = l["iterations"].get<int>();
    s.stop_reason = parse_stop_reason(l["stop_reason"].get<std::string>());
    s.final_cost = l["final_cost"].get<double>();
    s.mean_alpha = l["mean_alpha"].get<double>();
    if (l.contains("metrics")) s.metrics = metrics_from(l["metrics"]);
    r.levels.push_back(s);
  }
  r.total_iterations = doc["totals"]["iterations"].get<int>();
  r.wall_seconds = doc["totals"]["wall_seconds"].get<double>();
  if (doc.contains("metrics")) r.metrics = metrics_from(doc["metrics"]);
  return r;
}

std::string eval_report_to_json(const EvalReport& report) {
  const json doc = {{"schema", EvalReport::kSchema}, {"points", report.points}, {"metrics", metrics_json(report.metrics)}};
  return doc.dump(2) + "\n";
}

EvalReport eval_report_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw IoError(std::string("invalid eval report: ") + e.what());
  }
  std::vector<std::string> errors;
  if (!doc.is_object() || !doc.contains("schema") || doc["schema"] != EvalReport::kSchema) {
    throw IoError(std::string("invalid eval report: schema must be \"") + EvalReport::kSchema + "\"");
  }
  if (!doc.contains("points") || !doc["points"].is_number_unsigned()) errors.push_back("points must be a non-negative integer");
  if (!doc.contains("metrics")) {
    errors.push_back("metrics missing");
  } else {
    check_metrics(doc["metrics"], "metrics", errors);
  }
  if (!errors.empty()) throw IoError("invalid eval report: " + errors.front());
  return {doc["points"].get<std::size_t>(), metrics_from(doc["metrics"])};
}

}  // namespace ndp::io
