#include "ndp/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace ndp {

const PyramidConfig& validate_config(const PyramidConfig& cfg) {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (cfg.m < 1) fail("m must be >= 1");
  if (cfg.mlp_width < 1) fail("mlp_width must be >= 1");
  if (cfg.mlp_depth < 1) fail("mlp_depth must be >= 1");
  if (cfg.max_iter < 1) fail("max_iter must be >= 1");
  if (cfg.stall_window < 1) fail("stall_window must be >= 1");
  if (!(cfg.stall_rel_tol >= 0.0) || !std::isfinite(cfg.stall_rel_tol)) fail("stall_rel_tol must be finite and >= 0");
  if (!(cfg.lambda_cd >= 0.0) || !std::isfinite(cfg.lambda_cd)) fail("lambda_cd must be finite and >= 0");
  if (!(cfg.lambda_cor >= 0.0) || !std::isfinite(cfg.lambda_cor)) fail("lambda_cor must be finite and >= 0");
  if (!(cfg.lambda_reg >= 0.0) || !std::isfinite(cfg.lambda_reg)) fail("lambda_reg must be finite and >= 0");
  if (!(cfg.learning_rate > 0.0) || !std::isfinite(cfg.learning_rate)) fail("learning_rate must be finite and > 0");
  if (!(cfg.cost_threshold >= 0.0) || !std::isfinite(cfg.cost_threshold)) fail("cost_threshold must be finite and >= 0");
  if (!(cfg.output_scale > 0.0) || !std::isfinite(cfg.output_scale)) fail("output_scale must be finite and > 0");
  if (!(cfg.corr_conf_threshold >= 0.0 && cfg.corr_conf_threshold <= 1.0)) {
    fail("corr_conf_threshold must be in [0, 1]");
  }
  if (cfg.subsample_points < 1) fail("subsample_points must be >= 1");
  return cfg;
}

namespace {

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  T out{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, out);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("invalid value '" + text + "' for key '" + key + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "on" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "off" || text == "no") return false;
  throw ConfigError("invalid boolean '" + text + "' for key '" + key + "'");
}

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

struct FieldAccess {
  std::function<void(PyramidConfig&, const std::string&, const std::string&)> set;
  std::function<std::string(const PyramidConfig&)> get;
};

template <typename T>
FieldAccess int_field(T PyramidConfig::*member) {
  return {[member](PyramidConfig& c, const std::string& k, const std::string& v) { c.*member = parse_number<T>(k, v); },
          [member](const PyramidConfig& c) { return std::to_string(c.*member); }};
}

FieldAccess double_field(double PyramidConfig::*member) {
  return {[member](PyramidConfig& c, const std::string& k, const std::string& v) {
            c.*member = parse_number<double>(k, v);
          },
          [member](const PyramidConfig& c) { return format_double(c.*member); }};
}

FieldAccess bool_field(bool PyramidConfig::*member) {
  return {[member](PyramidConfig& c, const std::string& k, const std::string& v) { c.*member = parse_bool(k, v); },
          [member](const PyramidConfig& c) { return std::string(c.*member ? "true" : "false"); }};
}

template <typename E>
FieldAccess enum_field(E PyramidConfig::*member, E (*parse)(const std::string&)) {
  return {[member, parse](PyramidConfig& c, const std::string&, const std::string& v) { c.*member = parse(v); },
          [member](const PyramidConfig& c) { return to_string(c.*member); }};
}

const std::vector<std::pair<std::string, FieldAccess>>& field_table() {
  static const std::vector<std::pair<std::string, FieldAccess>> table = {
      {"m", int_field(&PyramidConfig::m)},
      {"k0", int_field(&PyramidConfig::k0)},
      {"mlp_width", int_field(&PyramidConfig::mlp_width)},
      {"mlp_depth", int_field(&PyramidConfig::mlp_depth)},
      {"warp_type", enum_field(&PyramidConfig::warp_type, &parse_warp_type)},
      {"rot_repr", enum_field(&PyramidConfig::rot_repr, &parse_rotation_repr)},
      {"norm", enum_field(&PyramidConfig::norm, &parse_norm_kind)},
      {"lambda_cd", double_field(&PyramidConfig::lambda_cd)},
      {"lambda_cor", double_field(&PyramidConfig::lambda_cor)},
      {"lambda_reg", double_field(&PyramidConfig::lambda_reg)},
      {"max_iter", int_field(&PyramidConfig::max_iter)},
      {"cost_threshold", double_field(&PyramidConfig::cost_threshold)},
      {"stall_window", int_field(&PyramidConfig::stall_window)},
      {"stall_rel_tol", double_field(&PyramidConfig::stall_rel_tol)},
      {"optimizer", enum_field(&PyramidConfig::optimizer, &parse_optimizer)},
      {"learning_rate", double_field(&PyramidConfig::learning_rate)},
      {"rng_seed", int_field(&PyramidConfig::rng_seed)},
      {"output_scale", double_field(&PyramidConfig::output_scale)},
      {"corr_conf_threshold", double_field(&PyramidConfig::corr_conf_threshold)},
      {"init", enum_field(&PyramidConfig::init, &parse_init_scheme)},
      {"activation", enum_field(&PyramidConfig::activation, &parse_activation)},
      {"normalize", bool_field(&PyramidConfig::normalize)},
      {"subsample", bool_field(&PyramidConfig::subsample)},
      {"subsample_points", int_field(&PyramidConfig::subsample_points)},
  };
  return table;
}

const FieldAccess& find_field(const std::string& key) {
  for (const auto& [name, access] : field_table()) {
    if (name == key) return access;
  }
  throw ConfigError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = [] {
    std::vector<std::string> out;
    for (const auto& [name, _] : field_table()) out.push_back(name);
    return out;
  }();
  return keys;
}

void set_config_value(PyramidConfig& cfg, const std::string& key, const std::string& value) {
  find_field(key).set(cfg, key, trim(value));
}

std::string get_config_value(const PyramidConfig& cfg, const std::string& key) { return find_field(key).get(cfg); }

PyramidConfig parse_config_text(const std::string& text, PyramidConfig base) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    try {
      set_config_value(base, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return base;
}

PyramidConfig load_config_file(const std::filesystem::path& path, PyramidConfig base) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_config_text(buf.str(), std::move(base));
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
}

std::string format_config(const PyramidConfig& cfg) {
  std::string out;
  for (const auto& [name, access] : field_table()) {
    out += name + " = " + access.get(cfg) + "\n";
  }
  return out;
}

}  // namespace ndp
