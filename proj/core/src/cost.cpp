#include "ndp/cost.hpp"

#include <cmath>

namespace ndp {

ad::Matrix to_matrix(const std::vector<Vec3>& points) {
  ad::Matrix m(static_cast<Eigen::Index>(points.size()), 3);
  for (std::size_t i = 0; i < points.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = points[i].transpose();
  return m;
}

std::vector<Vec3> to_points(const ad::Matrix& m) {
  if (m.cols() != 3) throw InvalidArgument("expected an (n x 3) matrix");
  std::vector<Vec3> out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) out[static_cast<std::size_t>(i)] = m.row(i).transpose();
  return out;
}

TargetCloud::TargetCloud(const std::vector<Vec3>& points) : matrix_(to_matrix(points)), index_(points) {}

double point_distance(const Vec3& v, NormKind norm) {
  return norm == NormKind::L1 ? v.cwiseAbs().sum() : v.norm();
}

ad::Tensor row_distance(ad::Tensor diff, NormKind norm) {
  return norm == NormKind::L1 ? ad::row_sum(ad::abs(diff)) : ad::row_norm(diff);
}

namespace {

ad::Matrix gather(const ad::Matrix& m, const std::vector<std::size_t>& idx) {
  ad::Matrix out(static_cast<Eigen::Index>(idx.size()), m.cols());
  for (std::size_t r = 0; r < idx.size(); ++r) out.row(static_cast<Eigen::Index>(r)) = m.row(static_cast<Eigen::Index>(idx[r]));
  return out;
}

}  // namespace

ad::Tensor chamfer_cost(ad::Tensor warped_source, const TargetCloud& target, NormKind norm) {
  if (warped_source.cols() != 3) throw InvalidArgument("chamfer_cost expects (n x 3) points");
  if (warped_source.rows() == 0) throw InvalidArgument("chamfer_cost: empty source");
  ad::Tape& tape = *warped_source.tape();

  std::vector<Vec3> src = to_points(warped_source.value());
  const NnResult s2t = nearest_neighbors(src, target.index());
  const NnIndex source_index(std::move(src));
  const std::vector<Vec3>& tgt = target.index().points();
  const NnResult t2s = nearest_neighbors(tgt, source_index);

  const ad::Tensor matched_targets = tape.constant(gather(target.matrix(), s2t.indices));
  const ad::Tensor forward = ad::mean(row_distance(warped_source - matched_targets, norm));
  const ad::Tensor matched_sources = ad::gather_rows(warped_source, t2s.indices);
  const ad::Tensor backward = ad::mean(row_distance(matched_sources - tape.constant(target.matrix()), norm));
  return forward + backward;
}

ad::Tensor correspondence_cost(ad::Tensor warped_source, const TargetCloud& target, const CorrespondenceSet& matches,
                               NormKind norm) {
  if (matches.empty()) throw InvalidArgument("correspondence_cost: empty correspondence set");
  matches.validate(warped_source.rows(), target.size());
  std::vector<std::size_t> us;
  std::vector<std::size_t> vs;
  us.reserve(matches.size());
  vs.reserve(matches.size());
  for (const auto& c : matches.pairs) {
    us.push_back(c.u);
    vs.push_back(c.v);
  }
  ad::Tape& tape = *warped_source.tape();
  const ad::Tensor xs = ad::gather_rows(warped_source, std::move(us));
  const ad::Tensor ys = tape.constant(gather(target.matrix(), vs));
  return ad::mean(row_distance(xs - ys, norm));
}

ad::Tensor deformability_reg(ad::Tensor alpha) {
  const ad::Tensor a = ad::clamp(alpha, 0.0, 1.0 - 1e-6);
  return ad::mean(-ad::log(1.0 - a));
}

CostTerms total_cost(ad::Tensor warped_source, const TargetCloud& target, ad::Tensor alpha,
                     const CorrespondenceSet* matches, const PyramidConfig& cfg) {
  CostTerms out;
  auto& b = out.breakdown;
  b.lambda_cd = cfg.lambda_cd;
  b.lambda_reg = cfg.lambda_reg;

  const ad::Tensor e_cd = chamfer_cost(warped_source, target, cfg.norm);
  const ad::Tensor e_reg = deformability_reg(alpha);
  ad::Tensor total = e_cd * cfg.lambda_cd + e_reg * cfg.lambda_reg;
  b.e_cd = e_cd.item();
  b.e_reg = e_reg.item();
  if (matches != nullptr && !matches->empty()) {
    const ad::Tensor e_cor = correspondence_cost(warped_source, target, *matches, cfg.norm);
    total = total + e_cor * cfg.lambda_cor;
    b.e_cor = e_cor.item();
    b.lambda_cor = cfg.lambda_cor;
  }
  b.e_total = total.item();
  out.total = total;
  return out;
}

double chamfer_cost(const std::vector<Vec3>& source, const std::vector<Vec3>& target, NormKind norm) {
  if (source.empty() || target.empty()) throw InvalidArgument("chamfer_cost: empty cloud");
  const NnIndex ti(target);
  const NnIndex si(source);
  double a = 0.0;
  for (const auto& p : source) {
    const auto hit = ti.nearest(p);
    a += point_distance(p - target[hit.index], norm);
  }
  double b = 0.0;
  for (const auto& q : target) {
    const auto hit = si.nearest(q);
    b += point_distance(source[hit.index] - q, norm);
  }
  return a / static_cast<double>(source.size()) + b / static_cast<double>(target.size());
}

}  // namespace ndp
