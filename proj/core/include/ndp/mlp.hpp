#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ndp/autodiff.hpp"
#include "ndp/types.hpp"

namespace ndp {

/// Fully connected layer, y = x W + b with W (in x out) and b (1 x out).
struct DenseLayer {
  ad::Matrix weight;
  ad::Matrix bias;
};

struct MlpShape {
  int input_dim = 6;
  int width = 128;
  int depth = 3;  ///< number of hidden trunk layers
  int xi_dim = 6;

  friend bool operator==(const MlpShape&, const MlpShape&) = default;
};

/// Network of one pyramid level: a shared trunk with two linear heads, one
/// for the motion increment and one (through a sigmoid) for deformability.
class MlpLevel {
public:
  struct Output {
    ad::Tensor xi;     ///< n x xi_dim
    ad::Tensor alpha;  ///< n x 1, strictly inside (0, 1)
  };

  MlpLevel() = default;

  /// Weights drawn from a generator seeded with `seed`; biases are zero.
  /// The motion head weights are multiplied by `output_scale`, so a fresh
  /// level starts near the identity warp while training at full step size.
  static MlpLevel init(const MlpShape& shape, std::uint64_t seed, InitScheme scheme, double output_scale,
                       Activation activation = Activation::ReLU);

  /// Places every parameter on `tape`, as variables when `trainable`,
  /// otherwise as constants. Order matches `parameters()`.
  [[nodiscard]] std::vector<ad::Tensor> bind(ad::Tape& tape, bool trainable) const;

  /// `encoded` is n x input_dim; `params` comes from `bind`.
  [[nodiscard]] Output forward(const std::vector<ad::Tensor>& params, ad::Tensor encoded) const;

  /// Trunk layers, then motion head, then deformability head; weight before bias.
  [[nodiscard]] std::vector<ad::Matrix*> parameters();
  [[nodiscard]] std::vector<const ad::Matrix*> parameters() const;
  [[nodiscard]] std::size_t parameter_count() const;

  [[nodiscard]] const MlpShape& shape() const { return shape_; }
  [[nodiscard]] Activation activation() const { return activation_; }
  [[nodiscard]] const std::vector<DenseLayer>& trunk() const { return trunk_; }
  [[nodiscard]] const DenseLayer& xi_head() const { return xi_head_; }
  [[nodiscard]] const DenseLayer& alpha_head() const { return alpha_head_; }

  /// Binary dump: "NDPW", u32 version, i32 level, shape, activation, then
  /// every parameter as (u32 rows, u32 cols, rows*cols f64). Little-endian.
  void save(std::ostream& out, int level) const;
  static MlpLevel load(std::istream& in, int* level = nullptr);
  void save(const std::filesystem::path& path, int level) const;
  static MlpLevel load(const std::filesystem::path& path, int* level = nullptr);

private:
  MlpShape shape_;
  Activation activation_ = Activation::ReLU;
  std::vector<DenseLayer> trunk_;
  DenseLayer xi_head_;
  DenseLayer alpha_head_;
};

/// Uniform bound of the Glorot scheme: sqrt(6 / (fan_in + fan_out)).
double xavier_bound(int fan_in, int fan_out);
/// Uniform bound of the He scheme for ReLU: sqrt(6 / fan_in).
double kaiming_bound(int fan_in);

}  // namespace ndp
