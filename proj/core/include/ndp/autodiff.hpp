#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "ndp/types.hpp"

/// Reverse-mode automatic differentiation over dense row-major matrices.
///
/// A Tape is rebuilt for every evaluation (define-by-run). Leaves are created
/// with `variable` (gradient wanted) or `constant`; every other node is
/// produced by an op below. Ops whose inputs are all constant produce
/// constants and record no backward rule.
///
/// Only scalar-with-tensor broadcasting exists. Column vectors (n x 1) are the
/// unit of per-point arithmetic: callers slice columns, combine them
/// elementwise, and concatenate.
namespace ndp::ad {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// True when no entry is NaN or infinite. x * 0 is NaN exactly for those
/// entries, and a NaN survives the sum; several times faster than allFinite().
inline bool all_finite(const Matrix& m) { return m.size() == 0 || !std::isnan((m.array() * 0.0).sum()); }

class Tape;

/// Handle to a node on a tape. Cheap to copy; valid while the tape lives.
class Tensor {
public:
  Tensor() = default;

  [[nodiscard]] std::size_t rows() const;
  [[nodiscard]] std::size_t cols() const;
  [[nodiscard]] std::array<std::size_t, 2> shape() const { return {rows(), cols()}; }
  [[nodiscard]] const Matrix& value() const;
  /// Value of a 1x1 tensor.
  [[nodiscard]] double item() const;
  [[nodiscard]] bool requires_grad() const;
  [[nodiscard]] std::size_t id() const { return id_; }
  [[nodiscard]] Tape* tape() const { return tape_; }
  [[nodiscard]] bool valid() const { return tape_ != nullptr; }

private:
  friend class Tape;
  Tensor(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

using InputValues = std::span<const Matrix* const>;
/// Recomputes an op's output from its input values.
using ForwardFn = std::function<Matrix(InputValues inputs)>;
/// Returns one gradient per input (same shape as the input). An empty (0x0)
/// matrix means "no contribution".
using BackwardFn = std::function<std::vector<Matrix>(InputValues inputs, const Matrix& output, const Matrix& grad_out)>;

struct Node {
  std::string op;
  Matrix value;
  std::vector<std::size_t> inputs;
  ForwardFn forward;
  BackwardFn backward;
  bool requires_grad = false;
  bool is_leaf = false;
};

class Tape {
public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Tensor variable(Matrix value);
  Tensor constant(Matrix value);

  /// Evaluates `forward` on the input values and records the node. Throws
  /// NumericalError when the result contains NaN/Inf.
  Tensor record(std::string op, std::vector<Tensor> inputs, ForwardFn forward, BackwardFn backward);

  /// Accumulates d(loss)/d(node) for every node that requires a gradient.
  /// `loss` must be 1x1. Leaves not reachable from `loss` get zero gradient.
  void backward(Tensor loss);

  /// Gradient of the last `backward` call; zero-filled for unreachable nodes.
  [[nodiscard]] const Matrix& grad(Tensor t) const;

  /// When enabled, piecewise ops (relu, abs, clamp, gather_rows) fold the
  /// branch each entry took into `branch_signature`, so two evaluations of
  /// the same function can tell whether they crossed a kink. Off by default.
  void set_track_branches(bool on) { track_branches_ = on; }
  [[nodiscard]] bool tracks_branches() const { return track_branches_; }
  void note_branch(std::uint64_t tag);
  [[nodiscard]] std::uint64_t branch_signature() const { return branch_signature_; }

  [[nodiscard]] std::size_t size() const { return nodes_.size(); }
  [[nodiscard]] const Node& node(std::size_t id) const { return nodes_.at(id); }
  [[nodiscard]] const Node& node(Tensor t) const;

private:
  friend class Tensor;
  std::vector<Node> nodes_;
  std::vector<Matrix> grads_;
  std::uint64_t branch_signature_ = 0;
  bool track_branches_ = false;
};

// Elementwise binary ops; operands must have identical shapes.
Tensor add(Tensor a, Tensor b);
Tensor sub(Tensor a, Tensor b);
Tensor mul(Tensor a, Tensor b);
Tensor div(Tensor a, Tensor b);

// Scalar-with-tensor.
Tensor add(Tensor a, double s);
Tensor mul(Tensor a, double s);
Tensor neg(Tensor a);

/// (r x k) * (k x c).
Tensor matmul(Tensor a, Tensor b);
/// Adds a 1 x c row to every row of an r x c tensor (the bias of a dense layer).
Tensor add_row_bias(Tensor x, Tensor bias);
/// x W + b as one node: (r x k) * (k x c) plus a 1 x c bias row.
Tensor affine(Tensor x, Tensor weight, Tensor bias);

Tensor sin(Tensor a);
Tensor cos(Tensor a);
Tensor exp(Tensor a);
Tensor log(Tensor a);
Tensor sqrt(Tensor a);
/// Subgradient 0 at 0.
Tensor abs(Tensor a);
Tensor square(Tensor a);
Tensor sigmoid(Tensor a);
Tensor relu(Tensor a);
/// Gradient passes where lo <= x <= hi, zero elsewhere.
Tensor clamp(Tensor a, double lo, double hi);

/// Sum of all entries, 1x1.
Tensor sum(Tensor a);
/// Mean of all entries, 1x1.
Tensor mean(Tensor a);
/// r x c -> r x 1.
Tensor row_sum(Tensor a);
/// Euclidean norm of each row, r x c -> r x 1; subgradient 0 for a zero row.
Tensor row_norm(Tensor a);

/// Horizontal concatenation; all parts share the row count.
Tensor concat_cols(const std::vector<Tensor>& parts);
Tensor slice_cols(Tensor a, std::size_t begin, std::size_t count);
/// Row `i` of the result is row `indices[i]` of `a`; backward scatter-adds.
Tensor gather_rows(Tensor a, std::vector<std::size_t> indices);

/// sin(sqrt(s)) / sqrt(s) of a squared angle s >= 0 (Rodrigues coefficient A).
Tensor so3_coeff_a(Tensor squared_angle);
/// (1 - cos(sqrt(s))) / s of a squared angle s >= 0 (Rodrigues coefficient B).
Tensor so3_coeff_b(Tensor squared_angle);

inline Tensor operator+(Tensor a, Tensor b) { return add(a, b); }
inline Tensor operator-(Tensor a, Tensor b) { return sub(a, b); }
inline Tensor operator*(Tensor a, Tensor b) { return mul(a, b); }
inline Tensor operator/(Tensor a, Tensor b) { return div(a, b); }
inline Tensor operator+(Tensor a, double s) { return add(a, s); }
inline Tensor operator+(double s, Tensor a) { return add(a, s); }
inline Tensor operator-(Tensor a, double s) { return add(a, -s); }
inline Tensor operator-(double s, Tensor a) { return add(neg(a), s); }
inline Tensor operator*(Tensor a, double s) { return mul(a, s); }
inline Tensor operator*(double s, Tensor a) { return mul(a, s); }
inline Tensor operator-(Tensor a) { return neg(a); }

// Scalar helpers for the Rodrigues coefficients, shared with the plain
// (non-tape) geometry code.
double so3_coeff_a_value(double squared_angle);
double so3_coeff_b_value(double squared_angle);
double so3_coeff_a_derivative(double squared_angle);
double so3_coeff_b_derivative(double squared_angle);

}  // namespace ndp::ad
