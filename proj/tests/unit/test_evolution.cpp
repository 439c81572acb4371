#include "selfdual/evolution.hpp"

#include <doctest.h>

using namespace selfdual;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
MonotoneOperator identity() { return MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(1)); }
}  // namespace

TEST_CASE("time grid") {
  const TimeGrid g{2.0, 8};
  CHECK(g.dt() == doctest::Approx(0.25));
  CHECK(g.midpoint(0) == doctest::Approx(0.125));
  CHECK_THROWS_AS((TimeGrid{1.0, 1}).validate(), Error);
}

TEST_CASE("path functional on the constant and exact paths") {
  const auto Tt = TimeDependentOperator::stationary(identity());
  const auto B = BoundaryOp::initial_value(v1(1.0));
  const TimeGrid g{1.0, 64};
  const Path one{g, std::vector<Vec>(65, v1(1.0))};
  // ∫ ½ dt plus ½ − 2 + 1 + ½ at the ends.
  CHECK(path_functional(Tt, B, one) == doctest::Approx(0.5));
  Path ex{g, {}};
  for (int k = 0; k <= 64; ++k) ex.u.push_back(v1(std::exp(-g.node(k))));
  CHECK(path_functional(Tt, B, ex) < 1e-4);
}

TEST_CASE("initial value problem for the zero operator") {
  const auto Z = MonotoneOperator::grad_convex(ConvexFunction::zero(1));
  const EvolutionResult r =
      solve_evolution(TimeDependentOperator::stationary(Z), BoundaryOp::initial_value(v1(2.0)), TimeGrid{1.0, 16});
  for (const Vec& u : r.u.u) CHECK(u[0] == doctest::Approx(2.0).epsilon(1e-9));
}

TEST_CASE("rotation flow keeps the norm") {
  Mat G(2, 2);
  G << 0.0, -1.0, 1.0, 0.0;
  Vec x0(2);
  x0 << 1.0, 0.0;
  const EvolutionResult r = solve_evolution(TimeDependentOperator::stationary(MonotoneOperator::linear_positive(G)),
                                            BoundaryOp::initial_value(x0), TimeGrid{1.0, 64});
  // u' = −Gu: (cos t, −sin t)
  const double err = r.u.sup_distance([](double t) {
    Vec v(2);
    v << std::cos(t), -std::sin(t);
    return v;
  });
  CHECK(err < 1e-4);
  CHECK(r.cert.value <= r.cert.tolerance);
}

TEST_CASE("shifted semigroup") {
  // −u' − u = u gives e^{−2t}.
  const Vec u = semigroup_flow(identity(), 1.0, v1(1.0), 1.0, 64);
  CHECK(u[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-3));
}

TEST_CASE("implicit Euler") {
  const Path p = implicit_euler(identity(), v1(1.0), TimeGrid{1.0, 4});
  CHECK(p.u.back()[0] == doctest::Approx(std::pow(1.0 / 1.25, 4)).epsilon(1e-8));
}

TEST_CASE("boundary operator gap") {
  const BoundaryOp B = BoundaryOp::initial_value(v1(1.0));
  CHECK(B.gap(v1(1.0), v1(0.3)) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(B.gap(v1(0.5), v1(0.3)) > 0.0);
}

TEST_CASE("omega requires an initial value") {
  const auto Tt = TimeDependentOperator::stationary(identity(), 1.0);
  CHECK_THROWS(solve_evolution(Tt, BoundaryOp::from_operator(identity()), TimeGrid{1.0, 8}));
}
