#include "doctest.h"

#include <cmath>

#include "ndp/optimizer.hpp"

using namespace ndp;
using ad::Matrix;

namespace {

void step_once(Optimizer& opt, Matrix& w, const Matrix& g) {
  ad::Matrix* params[] = {&w};
  const Matrix grads[] = {g};
  opt.step(params, grads);
}

}  // namespace

TEST_CASE("plain descent step") {
  Optimizer opt(OptimizerKind::GradientDescent, 0.1);
  Matrix w = Matrix::Constant(1, 1, 1.0);
  step_once(opt, w, 2.0 * w);
  CHECK(w(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(opt.steps() == 1);
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  for (auto kind : {OptimizerKind::GradientDescent, OptimizerKind::Adam}) {
    Optimizer opt(kind, 0.5);
    Matrix w(2, 2);
    w << 1, -2, 3, -4;
    const Matrix before = w;
    step_once(opt, w, Matrix::Zero(2, 2));
    CHECK(w == before);
  }
}

TEST_CASE("first Adam step moves every entry by the learning rate") {
  Optimizer opt(OptimizerKind::Adam, 0.01);
  Matrix w(1, 3);
  w << 1.0, -1.0, 5.0;
  Matrix g(1, 3);
  g << 3.0, -0.001, 1e4;
  step_once(opt, w, g);
  // bias-corrected moments make m / sqrt(v) = sign(g) on step one
  CHECK(w(0, 0) == doctest::Approx(0.99).epsilon(1e-9));
  CHECK(w(0, 1) == doctest::Approx(-0.99).epsilon(1e-6));
  CHECK(w(0, 2) == doctest::Approx(4.99).epsilon(1e-9));
}

TEST_CASE("Adam converges on a quadratic bowl") {
  Optimizer opt(OptimizerKind::Adam, 0.01);
  Matrix w(1, 2);
  w << 1.0, -0.5;
  for (int i = 0; i < 2000; ++i) step_once(opt, w, 2.0 * w);
  CHECK(w.cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("non-finite gradients are rejected without touching parameters") {
  Optimizer opt(OptimizerKind::Adam, 0.01);
  Matrix w = Matrix::Ones(2, 2);
  Matrix g = Matrix::Ones(2, 2);
  g(1, 0) = NAN;
  CHECK_THROWS_AS(step_once(opt, w, g), NumericalError);
  CHECK(w == Matrix::Ones(2, 2));
  CHECK_THROWS_AS(step_once(opt, w, Matrix::Ones(3, 2)), InvalidArgument);
}

TEST_CASE("convergence rules") {
  PyramidConfig cfg;
  std::vector<double> h{1.0};
  CHECK_FALSE(check_convergence(h, 1, cfg).has_value());
  CHECK(check_convergence(h, 500, cfg) == StopReason::MaxIter);
  h.push_back(5e-5);
  CHECK(check_convergence(h, 2, cfg) == StopReason::CostThreshold);
  // cost threshold wins over the iteration cap
  CHECK(check_convergence(h, 500, cfg) == StopReason::CostThreshold);

  std::vector<double> slow{1.0};
  for (int i = 0; i < 14; ++i) slow.push_back(slow.back() * (1.0 - 5e-6));
  CHECK_FALSE(check_convergence(slow, 15, cfg).has_value());
  slow.push_back(slow.back() * (1.0 - 5e-6));
  CHECK(check_convergence(slow, 16, cfg) == StopReason::Stalled);

  // small steps that add up past the tolerance move the best-so-far anchor
  std::vector<double> creeping{1.0};
  for (int i = 0; i < 15; ++i) creeping.push_back(creeping.back() * (1.0 - 5e-5));
  CHECK_FALSE(check_convergence(creeping, 16, cfg).has_value());

  std::vector<double> improving{1.0};
  for (int i = 0; i < 40; ++i) improving.push_back(improving.back() * 0.99);
  CHECK_FALSE(check_convergence(improving, 41, cfg).has_value());
  CHECK_THROWS_AS(check_convergence(std::vector<double>{}, 1, cfg), InvalidArgument);
}

TEST_CASE("stop reason names") {
  for (auto r : {StopReason::MaxIter, StopReason::CostThreshold, StopReason::Stalled}) {
    CHECK(parse_stop_reason(to_string(r)) == r);
  }
  CHECK_THROWS_AS(parse_stop_reason("tired"), InvalidArgument);
}
