#include "selfdual/affine_sum.hpp"
#include "selfdual/minimize.hpp"

#include <doctest.h>

using namespace selfdual;

TEST_CASE("newton minimizes a strictly convex quadratic in one step") {
  Mat Q(2, 2);
  Q << 3.0, 1.0, 1.0, 2.0;
  const Vec b = Vec::Constant(2, 1.0);
  SmoothObjective obj;
  obj.dim = 2;
  obj.value = [&](const Vec& x) { return 0.5 * x.dot(Q * x) - b.dot(x); };
  obj.derivatives = [&](const Vec& x, Vec& g, HessianBuilder& H) {
    g = Q * x - b;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) H.add(i, j, Q(i, j));
  };
  const MinimizeResult r = newton_minimize(obj, Vec::Zero(2));
  CHECK(r.converged);
  CHECK((r.x - Q.ldlt().solve(b)).norm() < 1e-12);
}

TEST_CASE("Brent on an interval") {
  const MinimizeResult r = minimize_scalar_on([](double x) { return (x - 0.3) * (x - 0.3); }, -1.0, 2.0);
  CHECK(r.x[0] == doctest::Approx(0.3).epsilon(1e-8));
}

TEST_CASE("direct search on a nonsmooth function") {
  const auto f = [](const Vec& x) { return std::abs(x[0] - 1.0) + std::abs(x[1] + 2.0); };
  const MinimizeResult r = minimize_direct(f, Vec::Zero(2), 1.0);
  CHECK(r.value < 1e-7);
}

TEST_CASE("finite-difference gradient check") {
  const auto f = [](const Vec& x) { return x.squaredNorm() + x[0] * x[1]; };
  Vec x(2);
  x << 0.5, -1.0;
  Vec g(2);
  g << 2 * x[0] + x[1], 2 * x[1] + x[0];
  CHECK(gradient_check(f, g, x) < 1e-7);
}

TEST_CASE("affine sum with an abs term goes through the QP path") {
  // |x − 1| + ½x² is minimized at x = 1 with value ½.
  AffineSum S(1);
  S.add(ConvexFunction::abs_value(1.0, 1), shift(var_block(0, 1), Vec::Constant(1, -1.0)));
  S.add(ConvexFunction::half_squared_norm(1), var_block(0, 1));
  CHECK(S.qp_representable());
  const auto m = S.minimize();
  CHECK(m.converged);
  // Argmin at a kink is only as sharp as the interior-point gap.
  CHECK(m.v[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(m.value == doctest::Approx(0.5).epsilon(1e-8));
}

TEST_CASE("null space of a constraint system") {
  Mat A(1, 3);
  A << 1.0, 1.0, 1.0;
  const AffineSubspace s = affine_solution_set(A, Vec::Constant(1, 3.0));
  CHECK(s.basis.cols() == 2);
  CHECK((A * s.particular)[0] == doctest::Approx(3.0));
  CHECK((A * s.basis).norm() < 1e-12);
}
