#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "ndp/types.hpp"

namespace ndp {

/// All hyperparameters of a pyramid registration. Every field has a stable
/// key (see `config_keys()`) used by config files, CLI overrides and reports.
struct PyramidConfig {
  int m = 9;    ///< number of pyramid levels
  int k0 = -8;  ///< level k encodes with frequency 2^(k + k0)
  int mlp_width = 128;
  int mlp_depth = 3;
  WarpFieldType warp_type = WarpFieldType::Rigid;
  RotationRepr rot_repr = RotationRepr::AxisAngle;
  NormKind norm = NormKind::L1;
  double lambda_cd = 1.0;
  double lambda_cor = 1.0;  ///< only used when correspondences are supplied
  double lambda_reg = 0.0;
  int max_iter = 500;
  double cost_threshold = 1e-4;
  int stall_window = 15;
  double stall_rel_tol = 1e-4;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 0.001;
  std::uint64_t rng_seed = 0;
  double output_scale = 1e-4;
  double corr_conf_threshold = 0.3;
  InitScheme init = InitScheme::XavierUniform;
  Activation activation = Activation::ReLU;
  bool normalize = true;
  bool subsample = false;
  int subsample_points = 2048;
};

/// Returns `cfg` unchanged when every invariant holds; otherwise throws
/// ConfigError naming the first violated constraint.
const PyramidConfig& validate_config(const PyramidConfig& cfg);

/// Stable key names, in declaration order.
const std::vector<std::string>& config_keys();

/// Sets one field from its textual value. Throws ConfigError on unknown key
/// or unparsable value.
void set_config_value(PyramidConfig& cfg, const std::string& key, const std::string& value);

/// Textual value of one field, parseable by `set_config_value`.
std::string get_config_value(const PyramidConfig& cfg, const std::string& key);

/// Applies `key = value` lines (blank lines and `#` comments ignored) on top
/// of `base`. Errors carry the line number.
PyramidConfig parse_config_text(const std::string& text, PyramidConfig base = {});

PyramidConfig load_config_file(const std::filesystem::path& path, PyramidConfig base = {});

/// Serializes every key in `key = value` form.
std::string format_config(const PyramidConfig& cfg);

}  // namespace ndp
