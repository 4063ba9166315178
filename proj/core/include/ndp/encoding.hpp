#pragma once

#include <array>

#include "ndp/autodiff.hpp"
#include "ndp/types.hpp"

namespace ndp {

/// (sin(f x), sin(f y), sin(f z), cos(f x), cos(f y), cos(f z)) with f = 2^(k + k0).
using EncodedCoord = std::array<double, 6>;

/// Frequency of pyramid level `level` (1-based): 2^(level + k0).
double level_frequency(int level, int k0);

/// Single-band sinusoidal encoding of one point. Throws NumericalError on a
/// non-finite coordinate and InvalidArgument for level < 1.
EncodedCoord positional_encode(const Vec3& x, int level, int k0);

/// Batched encoding on the tape: (n x 3) -> (n x 6), same column layout.
ad::Tensor positional_encode(ad::Tensor points, int level, int k0);

}  // namespace ndp
