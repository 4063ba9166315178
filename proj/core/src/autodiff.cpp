#include "ndp/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <utility>

namespace ndp::ad {

std::size_t Tensor::rows() const { return static_cast<std::size_t>(value().rows()); }
std::size_t Tensor::cols() const { return static_cast<std::size_t>(value().cols()); }
const Matrix& Tensor::value() const { return tape_->nodes_[id_].value; }
bool Tensor::requires_grad() const { return tape_->nodes_[id_].requires_grad; }

double Tensor::item() const {
  const Matrix& v = value();
  if (v.size() != 1) throw InvalidArgument("item() called on a tensor with " + std::to_string(v.size()) + " entries");
  return v(0, 0);
}

namespace {

std::string shape_str(const Matrix& m) { return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")"; }

void check_finite(const std::string& op, const Matrix& m) {
  if (!all_finite(m)) throw NumericalError("non-finite result in op '" + op + "' " + shape_str(m));
}

Tape& same_tape(std::initializer_list<Tensor> ts) {
  Tape* tape = nullptr;
  for (const auto& t : ts) {
    if (!t.valid()) throw InvalidArgument("tensor is not attached to a tape");
    if (tape == nullptr) tape = t.tape();
    if (t.tape() != tape) throw InvalidArgument("tensors live on different tapes");
  }
  return *tape;
}

void require_same_shape(const char* op, Tensor a, Tensor b) {
  if (a.shape() != b.shape()) {
    throw InvalidArgument(std::string("shape mismatch in '") + op + "': " + shape_str(a.value()) + " vs " +
                          shape_str(b.value()));
  }
}

// Elementwise op with derivative expressed from (input, output).
template <typename F, typename DF>
Tensor unary(const char* op, Tensor a, F f, DF df) {
  Tape& tape = same_tape({a});
  return tape.record(
      op, {a}, [f](InputValues in) -> Matrix { return in[0]->unaryExpr(f); },
      [df](InputValues in, const Matrix& out, const Matrix& g) {
        Matrix d = in[0]->binaryExpr(out, df);
        return std::vector<Matrix>{g.cwiseProduct(d)};
      });
}

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

// Hash of the branch index (0..3) taken by every entry.
template <typename Branch>
std::uint64_t branch_hash(const Matrix& x, Branch branch) {
  std::uint64_t h = 0;
  std::uint64_t word = 0;
  int filled = 0;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    word = (word << 2) | static_cast<std::uint64_t>(branch(x.data()[i]));
    if (++filled == 32) {
      h = mix64(h ^ word);
      word = 0;
      filled = 0;
    }
  }
  return mix64(h ^ word ^ static_cast<std::uint64_t>(x.size()));
}

}  // namespace

void Tape::note_branch(std::uint64_t tag) { branch_signature_ = mix64(branch_signature_ + tag + 0x9E3779B97F4A7C15ull); }

Tensor Tape::variable(Matrix value) {
  check_finite("variable", value);
  Node n;
  n.op = "variable";
  n.value = std::move(value);
  n.requires_grad = true;
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::constant(Matrix value) {
  check_finite("constant", value);
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  n.is_leaf = true;
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

Tensor Tape::record(std::string op, std::vector<Tensor> inputs, ForwardFn forward, BackwardFn backward) {
  std::vector<const Matrix*> values;
  values.reserve(inputs.size());
  bool needs_grad = false;
  Node n;
  n.inputs.reserve(inputs.size());
  for (const auto& t : inputs) {
    if (t.tape() != this) throw InvalidArgument("op '" + op + "' received a tensor from another tape");
    values.push_back(&nodes_[t.id()].value);
    n.inputs.push_back(t.id());
    needs_grad = needs_grad || nodes_[t.id()].requires_grad;
  }
  n.value = forward(values);
  check_finite(op, n.value);
  n.op = std::move(op);
  n.requires_grad = needs_grad;
  if (needs_grad) {
    n.forward = std::move(forward);
    n.backward = std::move(backward);
  }
  nodes_.push_back(std::move(n));
  return Tensor(this, nodes_.size() - 1);
}

void Tape::backward(Tensor loss) {
  if (loss.tape() != this) throw InvalidArgument("loss tensor belongs to another tape");
  const Node& root = nodes_[loss.id()];
  if (root.value.size() != 1) throw InvalidArgument("backward requires a scalar loss, got " + shape_str(root.value));

  grads_.assign(nodes_.size(), Matrix());
  grads_[loss.id()] = Matrix::Ones(1, 1);

  std::vector<const Matrix*> values;
  for (std::size_t id = loss.id() + 1; id-- > 0;) {
    Node& n = nodes_[id];
    if (!n.requires_grad || n.is_leaf || grads_[id].size() == 0) continue;
    values.clear();
    for (auto in : n.inputs) values.push_back(&nodes_[in].value);
    std::vector<Matrix> parts = n.backward(values, n.value, grads_[id]);
    for (std::size_t i = 0; i < n.inputs.size() && i < parts.size(); ++i) {
      const std::size_t in = n.inputs[i];
      if (!nodes_[in].requires_grad || parts[i].size() == 0) continue;
      if (grads_[in].size() == 0) {
        grads_[in] = std::move(parts[i]);
      } else {
        grads_[in] += parts[i];
      }
    }
  }
  for (std::size_t id = 0; id < nodes_.size(); ++id) {
    if (grads_[id].size() == 0) grads_[id] = Matrix::Zero(nodes_[id].value.rows(), nodes_[id].value.cols());
  }
}

const Matrix& Tape::grad(Tensor t) const {
  if (t.tape() != this) throw InvalidArgument("tensor belongs to another tape");
  if (t.id() >= grads_.size()) throw InvalidArgument("no gradient available; call backward first");
  return grads_[t.id()];
}

const Node& Tape::node(Tensor t) const { return nodes_.at(t.id()); }

Tensor add(Tensor a, Tensor b) {
  Tape& tape = same_tape({a, b});
  require_same_shape("add", a, b);
  return tape.record(
      "add", {a, b}, [](InputValues in) -> Matrix { return *in[0] + *in[1]; },
      [](InputValues, const Matrix&, const Matrix& g) { return std::vector<Matrix>{g, g}; });
}

Tensor sub(Tensor a, Tensor b) {
  Tape& tape = same_tape({a, b});
  require_same_shape("sub", a, b);
  return tape.record(
      "sub", {a, b}, [](InputValues in) -> Matrix { return *in[0] - *in[1]; },
      [](InputValues, const Matrix&, const Matrix& g) { return std::vector<Matrix>{g, -g}; });
}

Tensor mul(Tensor a, Tensor b) {
  Tape& tape = same_tape({a, b});
  require_same_shape("mul", a, b);
  return tape.record(
      "mul", {a, b}, [](InputValues in) -> Matrix { return in[0]->cwiseProduct(*in[1]); },
      [](InputValues in, const Matrix&, const Matrix& g) {
        return std::vector<Matrix>{g.cwiseProduct(*in[1]), g.cwiseProduct(*in[0])};
      });
}

Tensor div(Tensor a, Tensor b) {
  Tape& tape = same_tape({a, b});
  require_same_shape("div", a, b);
  return tape.record(
      "div", {a, b}, [](InputValues in) -> Matrix { return in[0]->cwiseQuotient(*in[1]); },
      [](InputValues in, const Matrix& out, const Matrix& g) {
        Matrix ga = g.cwiseQuotient(*in[1]);
        Matrix gb = -ga.cwiseProduct(out);
        return std::vector<Matrix>{std::move(ga), std::move(gb)};
      });
}

Tensor add(Tensor a, double s) {
  Tape& tape = same_tape({a});
  return tape.record(
      "add_scalar", {a}, [s](InputValues in) -> Matrix { return in[0]->array() + s; },
      [](InputValues, const Matrix&, const Matrix& g) { return std::vector<Matrix>{g}; });
}

Tensor mul(Tensor a, double s) {
  Tape& tape = same_tape({a});
  return tape.record(
      "mul_scalar", {a}, [s](InputValues in) -> Matrix { return *in[0] * s; },
      [s](InputValues, const Matrix&, const Matrix& g) { return std::vector<Matrix>{g * s}; });
}

Tensor neg(Tensor a) {
  Tape& tape = same_tape({a});
  return tape.record(
      "neg", {a}, [](InputValues in) -> Matrix { return -*in[0]; },
      [](InputValues, const Matrix&, const Matrix& g) { return std::vector<Matrix>{-g}; });
}

Tensor matmul(Tensor a, Tensor b) {
  Tape& tape = same_tape({a, b});
  if (a.cols() != b.rows()) {
    throw InvalidArgument("shape mismatch in 'matmul': " + shape_str(a.value()) + " * " + shape_str(b.value()));
  }
  return tape.record(
      "matmul", {a, b},
      [](InputValues in) -> Matrix {
        Matrix out(in[0]->rows(), in[1]->cols());
        out.noalias() = *in[0] * *in[1];
        return out;
      },
      [](InputValues in, const Matrix&, const Matrix& g) {
        Matrix ga(in[0]->rows(), in[0]->cols());
        ga.noalias() = g * in[1]->transpose();
        Matrix gb(in[1]->rows(), in[1]->cols());
        gb.noalias() = in[0]->transpose() * g;
        return std::vector<Matrix>{std::move(ga), std::move(gb)};
      });
}

Tensor affine(Tensor x, Tensor weight, Tensor bias) {
  Tape& tape = same_tape({x, weight, bias});
  if (x.cols() != weight.rows() || bias.rows() != 1 || bias.cols() != weight.cols()) {
    throw InvalidArgument("shape mismatch in 'affine': " + shape_str(x.value()) + " * " + shape_str(weight.value()) +
                          " + " + shape_str(bias.value()));
  }
  return tape.record(
      "affine", {x, weight, bias},
      [](InputValues in) -> Matrix {
        Matrix out(in[0]->rows(), in[1]->cols());
        out.noalias() = *in[0] * *in[1];
        out.rowwise() += in[2]->row(0);
        return out;
      },
      [](InputValues in, const Matrix&, const Matrix& g) {
        Matrix gx(in[0]->rows(), in[0]->cols());
        gx.noalias() = g * in[1]->transpose();
        Matrix gw(in[1]->rows(), in[1]->cols());
        gw.noalias() = in[0]->transpose() * g;
        Matrix gb = g.colwise().sum();
        return std::vector<Matrix>{std::move(gx), std::move(gw), std::move(gb)};
      });
}

Tensor add_row_bias(Tensor x, Tensor bias) {
  Tape& tape = same_tape({x, bias});
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw InvalidArgument("shape mismatch in 'add_row_bias': " + shape_str(x.value()) + " + " +
                          shape_str(bias.value()));
  }
  return tape.record(
      "add_row_bias", {x, bias},
      [](InputValues in) -> Matrix { return in[0]->rowwise() + in[1]->row(0); },
      [](InputValues, const Matrix&, const Matrix& g) {
        Matrix gb = g.colwise().sum();
        return std::vector<Matrix>{g, std::move(gb)};
      });
}

Tensor sin(Tensor a) {
  return unary("sin", a, [](double x) { return std::sin(x); }, [](double x, double) { return std::cos(x); });
}

Tensor cos(Tensor a) {
  return unary("cos", a, [](double x) { return std::cos(x); }, [](double x, double) { return -std::sin(x); });
}

Tensor exp(Tensor a) {
  return unary("exp", a, [](double x) { return std::exp(x); }, [](double, double y) { return y; });
}

Tensor log(Tensor a) {
  return unary("log", a, [](double x) { return std::log(x); }, [](double x, double) { return 1.0 / x; });
}

Tensor sqrt(Tensor a) {
  return unary("sqrt", a, [](double x) { return std::sqrt(x); }, [](double, double y) { return 0.5 / y; });
}

Tensor abs(Tensor a) {
  if (Tape& t = same_tape({a}); t.tracks_branches()) t.note_branch(branch_hash(a.value(), [](double x) { return x > 0.0 ? 1 : (x < 0.0 ? 2 : 0); }));
  return unary(
      "abs", a, [](double x) { return std::abs(x); },
      [](double x, double) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); });
}

Tensor square(Tensor a) {
  return unary("square", a, [](double x) { return x * x; }, [](double x, double) { return 2.0 * x; });
}

Tensor sigmoid(Tensor a) {
  return unary(
      "sigmoid", a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor relu(Tensor a) {
  if (Tape& t = same_tape({a}); t.tracks_branches()) t.note_branch(branch_hash(a.value(), [](double x) { return x > 0.0 ? 1 : 0; }));
  return unary(
      "relu", a, [](double x) { return x > 0.0 ? x : 0.0; }, [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor clamp(Tensor a, double lo, double hi) {
  if (!(lo <= hi)) throw InvalidArgument("clamp requires lo <= hi");
  if (Tape& t = same_tape({a}); t.tracks_branches()) t.note_branch(branch_hash(a.value(), [lo, hi](double x) { return x < lo ? 1 : (x > hi ? 2 : 0); }));
  return unary(
      "clamp", a, [lo, hi](double x) { return x < lo ? lo : (x > hi ? hi : x); },
      [lo, hi](double x, double) { return (x >= lo && x <= hi) ? 1.0 : 0.0; });
}

Tensor sum(Tensor a) {
  Tape& tape = same_tape({a});
  return tape.record(
      "sum", {a}, [](InputValues in) -> Matrix { return Matrix::Constant(1, 1, in[0]->sum()); },
      [](InputValues in, const Matrix&, const Matrix& g) {
        return std::vector<Matrix>{Matrix::Constant(in[0]->rows(), in[0]->cols(), g(0, 0))};
      });
}

Tensor mean(Tensor a) {
  Tape& tape = same_tape({a});
  if (a.value().size() == 0) throw InvalidArgument("mean of an empty tensor");
  return tape.record(
      "mean", {a},
      [](InputValues in) -> Matrix { return Matrix::Constant(1, 1, in[0]->sum() / static_cast<double>(in[0]->size())); },
      [](InputValues in, const Matrix&, const Matrix& g) {
        const double v = g(0, 0) / static_cast<double>(in[0]->size());
        return std::vector<Matrix>{Matrix::Constant(in[0]->rows(), in[0]->cols(), v)};
      });
}

Tensor row_sum(Tensor a) {
  Tape& tape = same_tape({a});
  return tape.record(
      "row_sum", {a}, [](InputValues in) -> Matrix { return in[0]->rowwise().sum(); },
      [](InputValues in, const Matrix&, const Matrix& g) {
        Matrix out = g.replicate(1, in[0]->cols());
        return std::vector<Matrix>{std::move(out)};
      });
}

Tensor row_norm(Tensor a) {
  Tape& tape = same_tape({a});
  return tape.record(
      "row_norm", {a}, [](InputValues in) -> Matrix { return in[0]->rowwise().norm(); },
      [](InputValues in, const Matrix& out, const Matrix& g) {
        const Matrix& x = *in[0];
        Matrix d(x.rows(), x.cols());
        for (Eigen::Index r = 0; r < x.rows(); ++r) {
          const double n = out(r, 0);
          if (n > 0.0) {
            d.row(r) = x.row(r) * (g(r, 0) / n);
          } else {
            d.row(r).setZero();
          }
        }
        return std::vector<Matrix>{std::move(d)};
      });
}

Tensor concat_cols(const std::vector<Tensor>& parts) {
  if (parts.empty()) throw InvalidArgument("concat_cols of zero tensors");
  Tape& tape = same_tape({parts.front()});
  const std::size_t rows = parts.front().rows();
  std::vector<Eigen::Index> widths;
  for (const auto& p : parts) {
    if (p.tape() != &tape) throw InvalidArgument("tensors live on different tapes");
    if (p.rows() != rows) throw InvalidArgument("shape mismatch in 'concat_cols': row counts differ");
    widths.push_back(static_cast<Eigen::Index>(p.cols()));
  }
  return tape.record(
      "concat_cols", parts,
      [widths](InputValues in) -> Matrix {
        Eigen::Index total = 0;
        for (auto w : widths) total += w;
        Matrix out(in[0]->rows(), total);
        Eigen::Index c = 0;
        for (std::size_t i = 0; i < in.size(); ++i) {
          out.middleCols(c, widths[i]) = *in[i];
          c += widths[i];
        }
        return out;
      },
      [widths](InputValues, const Matrix&, const Matrix& g) {
        std::vector<Matrix> out;
        Eigen::Index c = 0;
        for (auto w : widths) {
          out.emplace_back(g.middleCols(c, w));
          c += w;
        }
        return out;
      });
}

Tensor slice_cols(Tensor a, std::size_t begin, std::size_t count) {
  Tape& tape = same_tape({a});
  if (begin + count > a.cols()) {
    throw InvalidArgument("slice_cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                          ") out of range for " + shape_str(a.value()));
  }
  const auto b = static_cast<Eigen::Index>(begin);
  const auto n = static_cast<Eigen::Index>(count);
  return tape.record(
      "slice_cols", {a}, [b, n](InputValues in) -> Matrix { return in[0]->middleCols(b, n); },
      [b, n](InputValues in, const Matrix&, const Matrix& g) {
        Matrix out = Matrix::Zero(in[0]->rows(), in[0]->cols());
        out.middleCols(b, n) = g;
        return std::vector<Matrix>{std::move(out)};
      });
}

Tensor gather_rows(Tensor a, std::vector<std::size_t> indices) {
  Tape& tape = same_tape({a});
  for (auto i : indices) {
    if (i >= a.rows()) {
      throw InvalidArgument("gather_rows index " + std::to_string(i) + " out of range for " + shape_str(a.value()));
    }
  }
  if (tape.tracks_branches()) {
    std::uint64_t h = indices.size();
    for (auto i : indices) h = mix64(h ^ i);
    tape.note_branch(h);
  }
  auto shared = std::make_shared<const std::vector<std::size_t>>(std::move(indices));
  return tape.record(
      "gather_rows", {a},
      [shared](InputValues in) -> Matrix {
        const auto& idx = *shared;
        Matrix out(static_cast<Eigen::Index>(idx.size()), in[0]->cols());
        for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = in[0]->row(static_cast<Eigen::Index>(idx[r]));
        return out;
      },
      [shared](InputValues in, const Matrix&, const Matrix& g) {
        const auto& idx = *shared;
        Matrix out = Matrix::Zero(in[0]->rows(), in[0]->cols());
        for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(idx[r])) += g.row(static_cast<Eigen::Index>(r));
        return std::vector<Matrix>{std::move(out)};
      });
}

// Below 1e-8 rad the closed forms lose all precision; the Taylor series is
// exact to double precision there. Derivatives switch earlier (1e-2 rad)
// because their closed forms cancel at third order.
namespace {
constexpr double kValueSwitch = 1e-8;
constexpr double kDerivSwitch = 1e-2;
}  // namespace

double so3_coeff_a_value(double s) {
  s = std::max(s, 0.0);
  const double theta = std::sqrt(s);
  if (theta < kValueSwitch) return 1.0 - s / 6.0 + s * s / 120.0;
  return std::sin(theta) / theta;
}

double so3_coeff_b_value(double s) {
  s = std::max(s, 0.0);
  const double theta = std::sqrt(s);
  if (theta < kValueSwitch) return 0.5 - s / 24.0 + s * s / 720.0;
  const double h = std::sin(0.5 * theta);
  return 2.0 * h * h / s;
}

double so3_coeff_a_derivative(double s) {
  s = std::max(s, 0.0);
  const double theta = std::sqrt(s);
  if (theta < kDerivSwitch) return -1.0 / 6.0 + s / 60.0 - s * s / 1680.0 + s * s * s / 90720.0;
  return (theta * std::cos(theta) - std::sin(theta)) / (2.0 * theta * s);
}

double so3_coeff_b_derivative(double s) {
  s = std::max(s, 0.0);
  const double theta = std::sqrt(s);
  if (theta < kDerivSwitch) return -1.0 / 24.0 + s / 360.0 - s * s / 13440.0 + s * s * s / 907200.0;
  const double h = std::sin(0.5 * theta);
  return (theta * std::sin(theta) - 4.0 * h * h) / (2.0 * s * s);
}

Tensor so3_coeff_a(Tensor squared_angle) {
  return unary(
      "so3_coeff_a", squared_angle, [](double s) { return so3_coeff_a_value(s); },
      [](double s, double) { return so3_coeff_a_derivative(s); });
}

Tensor so3_coeff_b(Tensor squared_angle) {
  return unary(
      "so3_coeff_b", squared_angle, [](double s) { return so3_coeff_b_value(s); },
      [](double s, double) { return so3_coeff_b_derivative(s); });
}

}  // namespace ndp::ad
