#pragma once

#include <vector>

#include "ndp/autodiff.hpp"
#include "ndp/config.hpp"
#include "ndp/nn_index.hpp"
#include "ndp/types.hpp"

namespace ndp {

/// Target cloud prepared once per registration: an (n2 x 3) matrix for the
/// tape plus a nearest-neighbor index.
class TargetCloud {
public:
  explicit TargetCloud(const std::vector<Vec3>& points);

  [[nodiscard]] const ad::Matrix& matrix() const { return matrix_; }
  [[nodiscard]] const NnIndex& index() const { return index_; }
  [[nodiscard]] std::size_t size() const { return index_.size(); }

private:
  ad::Matrix matrix_;
  NnIndex index_;
};

struct CostBreakdown {
  double e_cd = 0.0;
  double e_cor = 0.0;
  double e_reg = 0.0;
  double e_total = 0.0;
  double lambda_cd = 0.0;
  double lambda_cor = 0.0;
  double lambda_reg = 0.0;
};

struct CostTerms {
  ad::Tensor total;
  CostBreakdown breakdown;
};

/// Per-row distance rho: sum of absolute components (L1) or Euclidean norm (L2).
ad::Tensor row_distance(ad::Tensor diff, NormKind norm);

/// Mean over source of rho(x - nn_T(x)) plus mean over target of
/// rho(nn_S(y) - y). Assignments are recomputed from the current values and
/// held constant for differentiation.
ad::Tensor chamfer_cost(ad::Tensor warped_source, const TargetCloud& target, NormKind norm);

/// Mean over matches of rho(x_u - y_v). Throws InvalidArgument on an empty
/// set or an out-of-range index.
ad::Tensor correspondence_cost(ad::Tensor warped_source, const TargetCloud& target, const CorrespondenceSet& matches,
                               NormKind norm);

/// Mean of -log(1 - clamp(alpha, 0, 1 - 1e-6)).
ad::Tensor deformability_reg(ad::Tensor alpha);

/// Weighted sum of the three terms. Without matches the correspondence term
/// is zero and its weight is ignored.
CostTerms total_cost(ad::Tensor warped_source, const TargetCloud& target, ad::Tensor alpha,
                     const CorrespondenceSet* matches, const PyramidConfig& cfg);

/// Symmetric chamfer distance between two plain clouds (same definition as
/// `chamfer_cost`).
double chamfer_cost(const std::vector<Vec3>& source, const std::vector<Vec3>& target, NormKind norm);

/// rho of one vector.
double point_distance(const Vec3& v, NormKind norm);

ad::Matrix to_matrix(const std::vector<Vec3>& points);
std::vector<Vec3> to_points(const ad::Matrix& m);

}  // namespace ndp
