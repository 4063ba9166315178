#include "doctest.h"

#include <cmath>
#include <random>

#include "ndp/cost.hpp"
#include "ndp/gradient_check.hpp"
#include "ndp/nn_index.hpp"

using namespace ndp;
using ad::Matrix;

namespace {

std::vector<Vec3> random_points(std::size_t n, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = Vec3(u(rng), u(rng), u(rng));
  return pts;
}

std::size_t brute_nearest(const std::vector<Vec3>& pts, const Vec3& q) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double d = squared_distance(pts[i], q);
    if (d < best_d) {
      best_d = d;
      best = i;
    }
  }
  return best;
}

double rho(const Vec3& v, NormKind norm) { return norm == NormKind::L1 ? v.cwiseAbs().sum() : v.norm(); }

double chamfer_oracle(const std::vector<Vec3>& s, const std::vector<Vec3>& t, NormKind norm) {
  double a = 0.0;
  for (const auto& p : s) a += rho(p - t[brute_nearest(t, p)], norm);
  double b = 0.0;
  for (const auto& q : t) b += rho(s[brute_nearest(s, q)] - q, norm);
  return a / static_cast<double>(s.size()) + b / static_cast<double>(t.size());
}

}  // namespace

TEST_CASE("nearest neighbor examples") {
  NnIndex two({Vec3(0, 0, 0), Vec3(2, 0, 0)});
  const auto hit = two.nearest(Vec3(0.9, 0, 0));
  CHECK(hit.index == 0);
  CHECK(hit.distance == doctest::Approx(0.9).epsilon(1e-15));
  const auto exact = two.nearest(Vec3(2, 0, 0));
  CHECK(exact.index == 1);
  CHECK(exact.distance == 0.0);
  CHECK_THROWS_AS(NnIndex(std::vector<Vec3>{}), InvalidArgument);
}

TEST_CASE("kd-tree agrees with a brute-force scan") {
  std::mt19937_64 rng(17);
  const auto pts = random_points(512, rng);
  NnIndex index(pts);
  CHECK(index.uses_tree());
  const auto queries = random_points(512, rng, 1.3);
  const auto res = nearest_neighbors(queries, index);
  for (std::size_t i = 0; i < queries.size(); ++i) {
    const auto b = brute_nearest(pts, queries[i]);
    CHECK(res.indices[i] == b);
    CHECK(res.distances[i] == std::sqrt(squared_distance(pts[b], queries[i])));
  }
}

TEST_CASE("ties break toward the lowest index on both routes") {
  std::vector<Vec3> grid;
  for (int x = 0; x < 6; ++x)
    for (int y = 0; y < 6; ++y)
      for (int z = 0; z < 6; ++z) grid.emplace_back(x, y, z);
  grid.insert(grid.end(), grid.begin(), grid.begin() + 50);  // duplicates
  NnIndex tree(grid, 1);
  NnIndex scan(grid, grid.size() + 1);
  REQUIRE(tree.uses_tree());
  REQUIRE_FALSE(scan.uses_tree());
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> coord(0, 10);
  for (int i = 0; i < 500; ++i) {
    const Vec3 q(coord(rng) * 0.5, coord(rng) * 0.5, coord(rng) * 0.5);
    CHECK(tree.nearest(q).index == scan.nearest(q).index);
    CHECK(tree.nearest(q).index == brute_nearest(grid, q));
  }
}

TEST_CASE("chamfer examples") {
  const std::vector<Vec3> s{Vec3(0, 0, 0)};
  CHECK(chamfer_cost(s, s, NormKind::L1) == 0.0);
  CHECK(chamfer_cost(s, {Vec3(1, 0, 0)}, NormKind::L2) == 2.0);
  CHECK(chamfer_cost(s, {Vec3(1, 1, 0)}, NormKind::L1) == 4.0);
  CHECK(chamfer_cost(s, {Vec3(1, 1, 0)}, NormKind::L2) == doctest::Approx(2.0 * std::sqrt(2.0)).epsilon(1e-15));
}

TEST_CASE("chamfer matches a brute-force recomputation") {
  std::mt19937_64 rng(23);
  for (auto norm : {NormKind::L1, NormKind::L2}) {
    const auto s = random_points(300, rng);
    const auto t = random_points(200, rng);
    CHECK(chamfer_cost(s, t, norm) == doctest::Approx(chamfer_oracle(s, t, norm)).epsilon(1e-13));
    ad::Tape tape;
    const TargetCloud target(t);
    const double taped = chamfer_cost(tape.constant(to_matrix(s)), target, norm).item();
    CHECK(taped == doctest::Approx(chamfer_oracle(s, t, norm)).epsilon(1e-13));
  }
}

TEST_CASE("correspondence cost examples") {
  const TargetCloud target({Vec3(0, 3, 4), Vec3(1, 0, 0), Vec3(0, 0, 3)});
  ad::Tape tape;
  const auto src = tape.constant(to_matrix({Vec3(0, 0, 0), Vec3(0, 0, 0)}));
  CorrespondenceSet one{{{0, 0, 1.0}}};
  CHECK(correspondence_cost(src, target, one, NormKind::L2).item() == 5.0);
  CorrespondenceSet two{{{0, 1, 1.0}, {1, 2, 1.0}}};
  CHECK(correspondence_cost(src, target, two, NormKind::L2).item() == 2.0);
  const auto aligned = tape.constant(to_matrix({Vec3(0, 3, 4)}));
  CHECK(correspondence_cost(aligned, target, one, NormKind::L1).item() == 0.0);
  CHECK_THROWS_AS(correspondence_cost(src, target, CorrespondenceSet{}, NormKind::L2), InvalidArgument);
  CorrespondenceSet bad{{{0, 7, 1.0}}};
  CHECK_THROWS_AS(correspondence_cost(src, target, bad, NormKind::L2), InvalidArgument);
}

TEST_CASE("deformability regularizer") {
  ad::Tape tape;
  CHECK(deformability_reg(tape.constant(Matrix::Zero(4, 1))).item() == 0.0);
  // ln 2 and -ln(1e-6), evaluated offline
  CHECK(deformability_reg(tape.constant(Matrix::Constant(4, 1, 0.5))).item() ==
        doctest::Approx(0.693147180559945309).epsilon(1e-15));
  CHECK(deformability_reg(tape.constant(Matrix::Constant(3, 1, 1.0))).item() ==
        doctest::Approx(13.8155105579642741).epsilon(1e-9));
}

TEST_CASE("total cost composition") {
  const std::vector<Vec3> pts{Vec3(0, 0, 0), Vec3(1, 0, 0), Vec3(0, 1, 0)};
  const TargetCloud target(pts);
  PyramidConfig cfg;
  cfg.lambda_reg = 0.1;
  ad::Tape tape;
  const auto alpha = tape.constant(Matrix::Constant(3, 1, 0.5));
  const auto terms = total_cost(tape.constant(to_matrix(pts)), target, alpha, nullptr, cfg);
  CHECK(terms.breakdown.e_total == doctest::Approx(0.0693147180559945309).epsilon(1e-14));
  CHECK(terms.breakdown.e_cor == 0.0);

  cfg.lambda_cd = cfg.lambda_cor = cfg.lambda_reg = 0.0;
  CHECK(total_cost(tape.constant(to_matrix(pts)), target, alpha, nullptr, cfg).breakdown.e_total == 0.0);
}

TEST_CASE("total cost equals an independent recomputation of its terms") {
  std::mt19937_64 rng(31);
  const auto s = random_points(128, rng);
  const auto t = random_points(128, rng);
  std::uniform_real_distribution<double> u(0.01, 0.99);
  Matrix alpha(128, 1);
  for (Eigen::Index i = 0; i < 128; ++i) alpha(i, 0) = u(rng);
  CorrespondenceSet matches;
  for (std::size_t i = 0; i < 40; ++i) matches.pairs.push_back({i * 3, (i * 7) % 128, 1.0});
  PyramidConfig cfg;
  cfg.lambda_cd = 1.3;
  cfg.lambda_cor = 0.7;
  cfg.lambda_reg = 0.2;
  cfg.norm = NormKind::L2;

  double cor = 0.0;
  for (const auto& m : matches.pairs) cor += (s[m.u] - t[m.v]).norm();
  cor /= static_cast<double>(matches.size());
  double reg = 0.0;
  for (Eigen::Index i = 0; i < 128; ++i) reg -= std::log(1.0 - alpha(i, 0));
  reg /= 128.0;
  const double expect = 1.3 * chamfer_oracle(s, t, NormKind::L2) + 0.7 * cor + 0.2 * reg;

  ad::Tape tape;
  const TargetCloud target(t);
  const auto terms = total_cost(tape.constant(to_matrix(s)), target, tape.constant(alpha), &matches, cfg);
  CHECK(terms.breakdown.e_total == doctest::Approx(expect).epsilon(1e-12));
  CHECK(terms.total.item() == terms.breakdown.e_total);
  CHECK(terms.breakdown.e_cor == doctest::Approx(cor).epsilon(1e-12));
}

TEST_CASE("chamfer gradients hold the assignment fixed") {
  std::mt19937_64 rng(41);
  const auto t = random_points(40, rng);
  const TargetCloud target(t);
  for (auto norm : {NormKind::L1, NormKind::L2}) {
    const Matrix s = to_matrix(random_points(30, rng));
    auto fn = [&](ad::Tape&, std::span<const ad::Tensor> p) { return chamfer_cost(p[0], target, norm); };
    const auto report = ad::gradient_check(fn, {s});
    CHECK_MESSAGE(report.passed, report.message);
  }
}
