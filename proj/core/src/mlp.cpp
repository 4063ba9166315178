#include "ndp/mlp.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>

namespace ndp {

double xavier_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)); }
double kaiming_bound(int fan_in) { return std::sqrt(6.0 / static_cast<double>(fan_in)); }

namespace {

DenseLayer make_layer(int in, int out, InitScheme scheme, std::mt19937_64& rng) {
  DenseLayer layer;
  layer.weight = ad::Matrix::Zero(in, out);
  layer.bias = ad::Matrix::Zero(1, out);
  double bound = 0.0;
  switch (scheme) {
    case InitScheme::XavierUniform: bound = xavier_bound(in, out); break;
    case InitScheme::KaimingUniform: bound = kaiming_bound(in); break;
    case InitScheme::Zeros: return layer;
  }
  std::uniform_real_distribution<double> dist(-bound, bound);
  for (Eigen::Index i = 0; i < layer.weight.size(); ++i) layer.weight.data()[i] = dist(rng);
  return layer;
}

ad::Tensor dense(const ad::Tensor& x, const ad::Tensor& w, const ad::Tensor& b) {
  return ad::affine(x, w, b);
}

constexpr char kMagic[4] = {'N', 'D', 'P', 'W'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ostream& out, T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    out.write(bytes.data(), sizeof(T));
  } else {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
  }
}

template <typename T>
T get(std::istream& in) {
  std::array<char, sizeof(T)> bytes{};
  if (!in.read(bytes.data(), sizeof(T))) throw IoError("weight dump truncated");
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes.begin(), bytes.end());
  return std::bit_cast<T>(bytes);
}

}  // namespace

MlpLevel MlpLevel::init(const MlpShape& shape, std::uint64_t seed, InitScheme scheme, double output_scale,
                        Activation activation) {
  if (shape.input_dim < 1 || shape.width < 1 || shape.depth < 1 || shape.xi_dim < 1) {
    throw InvalidArgument("MLP shape dimensions must be positive");
  }
  MlpLevel net;
  net.shape_ = shape;
  net.activation_ = activation;
  if (!std::isfinite(output_scale) || output_scale <= 0.0) throw InvalidArgument("output_scale must be positive");
  std::mt19937_64 rng(seed);
  int in = shape.input_dim;
  for (int l = 0; l < shape.depth; ++l) {
    net.trunk_.push_back(make_layer(in, shape.width, scheme, rng));
    in = shape.width;
  }
  net.xi_head_ = make_layer(shape.width, shape.xi_dim, scheme, rng);
  net.alpha_head_ = make_layer(shape.width, 1, scheme, rng);
  net.xi_head_.weight *= output_scale;
  return net;
}

std::vector<ad::Tensor> MlpLevel::bind(ad::Tape& tape, bool trainable) const {
  std::vector<ad::Tensor> out;
  for (const ad::Matrix* p : parameters()) out.push_back(trainable ? tape.variable(*p) : tape.constant(*p));
  return out;
}

MlpLevel::Output MlpLevel::forward(const std::vector<ad::Tensor>& params, ad::Tensor encoded) const {
  if (params.size() != parameter_count()) throw InvalidArgument("MLP forward: wrong number of bound parameters");
  if (encoded.cols() != static_cast<std::size_t>(shape_.input_dim)) {
    throw InvalidArgument("MLP forward: expected input width " + std::to_string(shape_.input_dim) + ", got " +
                          std::to_string(encoded.cols()));
  }
  ad::Tensor h = encoded;
  std::size_t p = 0;
  for (std::size_t l = 0; l < trunk_.size(); ++l, p += 2) {
    h = dense(h, params[p], params[p + 1]);
    h = activation_ == Activation::ReLU ? ad::relu(h) : ad::sigmoid(h);
  }
  Output out;
  out.xi = dense(h, params[p], params[p + 1]);
  out.alpha = ad::sigmoid(dense(h, params[p + 2], params[p + 3]));
  return out;
}

std::vector<ad::Matrix*> MlpLevel::parameters() {
  std::vector<ad::Matrix*> out;
  for (auto& layer : trunk_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&xi_head_.weight);
  out.push_back(&xi_head_.bias);
  out.push_back(&alpha_head_.weight);
  out.push_back(&alpha_head_.bias);
  return out;
}

std::vector<const ad::Matrix*> MlpLevel::parameters() const {
  std::vector<const ad::Matrix*> out;
  for (const auto& layer : trunk_) {
    out.push_back(&layer.weight);
    out.push_back(&layer.bias);
  }
  out.push_back(&xi_head_.weight);
  out.push_back(&xi_head_.bias);
  out.push_back(&alpha_head_.weight);
  out.push_back(&alpha_head_.bias);
  return out;
}

std::size_t MlpLevel::parameter_count() const { return 2 * trunk_.size() + 4; }

void MlpLevel::save(std::ostream& out, int level) const {
  out.write(kMagic, 4);
  put<std::uint32_t>(out, kVersion);
  put<std::int32_t>(out, level);
  put<std::int32_t>(out, shape_.input_dim);
  put<std::int32_t>(out, shape_.width);
  put<std::int32_t>(out, shape_.depth);
  put<std::int32_t>(out, shape_.xi_dim);
  put<std::uint8_t>(out, static_cast<std::uint8_t>(activation_));
  const auto params = parameters();
  put<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  for (const ad::Matrix* p : params) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->rows()));
    put<std::uint32_t>(out, static_cast<std::uint32_t>(p->cols()));
    for (Eigen::Index i = 0; i < p->size(); ++i) put<double>(out, p->data()[i]);
  }
  if (!out) throw IoError("failed writing weight dump");
}

MlpLevel MlpLevel::load(std::istream& in, int* level) {
  char magic[4];
  if (!in.read(magic, 4) || std::memcmp(magic, kMagic, 4) != 0) throw IoError("weight dump: bad magic");
  if (const auto v = get<std::uint32_t>(in); v != kVersion) {
    throw IoError("weight dump: unsupported version " + std::to_string(v));
  }
  const auto lvl = get<std::int32_t>(in);
  if (level != nullptr) *level = lvl;
  MlpLevel net;
  net.shape_.input_dim = get<std::int32_t>(in);
  net.shape_.width = get<std::int32_t>(in);
  net.shape_.depth = get<std::int32_t>(in);
  net.shape_.xi_dim = get<std::int32_t>(in);
  const auto act = get<std::uint8_t>(in);
  if (act > static_cast<std::uint8_t>(Activation::Sigmoid)) throw IoError("weight dump: unknown activation");
  net.activation_ = static_cast<Activation>(act);
  if (net.shape_.depth < 1 || net.shape_.depth > 1024) throw IoError("weight dump: implausible depth");
  net.trunk_.resize(static_cast<std::size_t>(net.shape_.depth));
  const auto count = get<std::uint32_t>(in);
  auto params = net.parameters();
  if (count != params.size()) throw IoError("weight dump: parameter count does not match shape");
  for (ad::Matrix* p : params) {
    const auto rows = get<std::uint32_t>(in);
    const auto cols = get<std::uint32_t>(in);
    if (rows > (1u << 16) || cols > (1u << 16)) throw IoError("weight dump: implausible matrix size");
    p->resize(rows, cols);
    for (Eigen::Index i = 0; i < p->size(); ++i) p->data()[i] = get<double>(in);
  }
  return net;
}

void MlpLevel::save(const std::filesystem::path& path, int level) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  save(out, level);
}

MlpLevel MlpLevel::load(const std::filesystem::path& path, int* level) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  return load(in, level);
}

}  // namespace ndp
