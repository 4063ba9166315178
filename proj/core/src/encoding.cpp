#include "ndp/encoding.hpp"

#include <cmath>
#include <string>

namespace ndp {

double level_frequency(int level, int k0) {
  if (level < 1) throw InvalidArgument("pyramid level must be >= 1, got " + std::to_string(level));
  return std::ldexp(1.0, level + k0);
}

EncodedCoord positional_encode(const Vec3& x, int level, int k0) {
  if (!x.allFinite()) throw NumericalError("positional_encode: non-finite coordinate");
  const double f = level_frequency(level, k0);
  EncodedCoord out{};
  for (int d = 0; d < 3; ++d) {
    out[static_cast<std::size_t>(d)] = std::sin(f * x[d]);
    out[static_cast<std::size_t>(d + 3)] = std::cos(f * x[d]);
  }
  return out;
}

ad::Tensor positional_encode(ad::Tensor points, int level, int k0) {
  if (points.cols() != 3) throw InvalidArgument("positional_encode expects (n x 3) points");
  const ad::Tensor scaled = ad::mul(points, level_frequency(level, k0));
  return ad::concat_cols({ad::sin(scaled), ad::cos(scaled)});
}

}  // namespace ndp
