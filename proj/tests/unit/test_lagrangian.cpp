#include "selfdual/lagrangian.hpp"

#include <doctest.h>

#include <random>

using namespace selfdual;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
}  // namespace

TEST_CASE("sum form of the identity") {
  const Lagrangian L = Lagrangian::sum_form(ConvexFunction::half_squared_norm(1));
  CHECK(L.value(v1(1.0), v1(2.0)) == doctest::Approx(2.5));
  CHECK(lag_gap(L, v1(2.0), v1(2.0)) == doctest::Approx(0.0));
  // L*(p, x) = L(x, p) for a selfdual L.
  CHECK(lag_conjugate_value(L, v1(2.0), v1(1.0)) == doctest::Approx(2.5));
}

TEST_CASE("skew sum form field") {
  Mat G(2, 2);
  G << 0.0, -1.0, 1.0, 0.0;
  const Lagrangian L = Lagrangian::sum_form(ConvexFunction::half_squared_norm(2), G);
  const FieldValue f = sd_field(L, v2(1.0, 0.0));
  REQUIRE_FALSE(f.empty());
  CHECK((f.representatives.front() - v2(1.0, 1.0)).norm() < 1e-7);
}

TEST_CASE("potential of a linear positive operator") {
  Mat B(2, 2);
  B << 1.0, -1.0, 1.0, 1.0;
  const Lagrangian L = potential_for(MonotoneOperator::linear_positive(B));
  const Vec x = v2(0.5, -2.0);
  const FieldValue f = sd_field(L, x);
  REQUIRE_FALSE(f.empty());
  CHECK((f.representatives.front() - B * x).norm() < 1e-7);
  CHECK(selfdual_residual(L, -2.0, 2.0, 9).residual < 1e-8);
}

TEST_CASE("field of abs at the kink is the whole interval") {
  const Lagrangian L = potential_for(MonotoneOperator::grad_convex(ConvexFunction::abs_value(1.0, 1)));
  const FieldValue f = sd_field(L, v1(0.0));
  REQUIRE(f.representatives.size() >= 2);
  double lo = kInf, hi = -kInf;
  for (const Vec& r : f.representatives) lo = std::min(lo, r[0]), hi = std::max(hi, r[0]);
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("graph validation names non-monotone samples") {
  MonotoneGraph g;
  g.add(v1(0.0), v1(1.0));
  g.add(v1(1.0), v1(0.0));
  CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("Fitzpatrick function of the identity graph") {
  const MonotoneGraph g = MonotoneGraph::sample_1d([](double y) { return y; }, -2.0, 2.0, 41);
  const Lagrangian F = fitzpatrick(g);
  // On the graph F(x, x) = x²; off the graph F exceeds the pairing.
  CHECK(F.value(v1(1.0), v1(1.0)) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(F.value(v1(1.0), v1(0.0)) > 0.0 + 1e-3);
}

TEST_CASE("proximal average sits between L and its transposed conjugate") {
  const MonotoneGraph g = MonotoneGraph::sample_1d([](double y) { return 2.0 * y; }, -2.0, 2.0, 41);
  const Lagrangian F = fitzpatrick(g);
  const Lagrangian N = proximal_average(F);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  for (int k = 0; k < 10; ++k) {
    const Vec x = v1(U(rng)), p = v1(U(rng));
    const double n = N.value(x, p);
    CHECK(n >= F.value(x, p) - 1e-8);
    CHECK(n <= lag_conjugate_value(F, p, x) + 1e-8);
    CHECK(n >= x.dot(p) - 1e-8);
  }
}

TEST_CASE("symmetric and skew parts") {
  Mat B(2, 2);
  B << 1.0, 2.0, 0.0, 3.0;
  CHECK((sym_part(B) + skew_part(B) - B).norm() < 1e-15);
  CHECK(is_skew(skew_part(B)));
}
