#include "selfdual/inverse.hpp"

#include <doctest.h>

using namespace selfdual;

namespace {
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

InverseProblem synthetic(const Vec& truth, const Vec& lower, const Vec& upper) {
  InverseProblem ip;
  ip.mesh = Mesh1D{1.0, 15};
  ip.lambda = 1.0;
  ip.g = ip.mesh.sample([](double x) { return 8.0 * std::sin(M_PI * x); });
  ip.family = ParamClass::cubic(lower, upper);
  EllipticProblem P;
  P.T = ip.family.build(truth);
  P.lambda = ip.lambda;
  P.g = ip.g;
  P.mesh = ip.mesh;
  ip.observed = solve_elliptic(P).u;
  return ip;
}
}  // namespace

TEST_CASE("cubic parameter class") {
  const ParamClass C = ParamClass::cubic(v2(0.0, 0.0), v2(2.0, 1.0));
  CHECK(C.admissible(v2(1.0, 0.5)));
  CHECK_FALSE(C.admissible(v2(3.0, 0.5)));
  CHECK_FALSE(C.admissible(v2(0.0, 0.0)));
  const auto y = C.build(v2(1.0, 2.0)).apply(Vec::Constant(1, 2.0));
  REQUIRE(y);
  CHECK((*y)[0] == doctest::Approx(2.0 + 16.0));
  CHECK_THROWS_AS(ParamClass::cubic(v2(1.0, 0.0), v2(0.0, 1.0)), Error);
}

TEST_CASE("epsilon schedule must decrease") {
  InverseProblem ip = synthetic(v2(1.0, 0.5), v2(0.0, 0.0), v2(2.0, 2.0));
  ip.eps_schedule = {1e-2, 1e-1};
  CHECK_THROWS_AS(ip.validate(), Error);
}

TEST_CASE("one free parameter is recovered") {
  const InverseProblem ip = synthetic(v2(1.3, 0.5), v2(0.0, 0.5), v2(2.0, 0.5));
  const InverseReport r = fit_operator(ip);
  CHECK(r.theta[0] == doctest::Approx(1.3).epsilon(1e-3));
  CHECK(r.theta[1] == 0.5);
  CHECK(r.penalty_monotone);
}

TEST_CASE("a single-point class is a forward solve") {
  const InverseProblem ip = synthetic(v2(1.0, 0.5), v2(1.0, 0.5), v2(1.0, 0.5));
  const InverseReport r = fit_operator(ip);
  REQUIRE(r.stages.size() == 1);
  CHECK(r.stages[0].misfit < 1e-12);
}

TEST_CASE("data from outside the class leaves a positive misfit") {
  // Observed with θ₂ = 1 but the class pins θ₂ = 0.
  InverseProblem ip = synthetic(v2(1.0, 1.0), v2(0.5, 0.0), v2(2.0, 0.0));
  ip.eps_schedule = {1e-1, 1e-2};
  const InverseReport r = fit_operator(ip);
  CHECK(r.stages.back().misfit > 1e-8);
}
