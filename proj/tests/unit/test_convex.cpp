#include "selfdual/convex_function.hpp"

#include <doctest.h>

#include <random>

using namespace selfdual;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
}  // namespace

TEST_CASE("quadratic value, gradient and conjugate") {
  const ConvexFunction f = ConvexFunction::quadratic(Mat::Constant(1, 1, 2.0), v1(1.0), 0.5);
  CHECK(f.value(v1(3.0)) == doctest::Approx(9.0 + 3.0 + 0.5));
  CHECK(f.gradient(v1(3.0))[0] == doctest::Approx(7.0));
  // (x² + x + ½)* at p: sup px − x² − x − ½ = (p − 1)²/4 − ½
  CHECK(f.conjugate().value(v1(5.0)) == doctest::Approx(4.0 - 0.5));
}

TEST_CASE("quadratic rejects an indefinite matrix") {
  Mat Q(2, 2);
  Q << 1.0, 0.0, 0.0, -1.0;
  CHECK_THROWS_AS(ConvexFunction::quadratic(Q, Vec::Zero(2)), Error);
}

TEST_CASE("power norm and its conjugate") {
  const ConvexFunction f = ConvexFunction::power_norm(4.0, 1.0, 1);
  CHECK(f.value(v1(2.0)) == doctest::Approx(4.0));
  // (|x|⁴/4)* = ¾|p|^{4/3}
  CHECK(f.conjugate().value(v1(8.0)) == doctest::Approx(12.0));
}

TEST_CASE("abs value conjugates to the box indicator") {
  const ConvexFunction f = ConvexFunction::abs_value(1.5, 1);
  const ConvexFunction fc = f.conjugate();
  CHECK(fc.value(v1(1.0)) == 0.0);
  CHECK(is_inf(fc.value(v1(2.0))));
}

TEST_CASE("prox of abs is soft thresholding, prox of a box is clipping") {
  const ConvexFunction a = ConvexFunction::abs_value(1.0, 1);
  CHECK(a.prox(0.5, v1(2.0))[0] == doctest::Approx(1.5));
  CHECK(a.prox(0.5, v1(0.3))[0] == doctest::Approx(0.0));
  const ConvexFunction box = ConvexFunction::indicator_box(v1(-1.0), v1(1.0));
  CHECK(box.prox(3.0, v1(4.0))[0] == doctest::Approx(1.0));
}

TEST_CASE("Fenchel-Young on random pairs") {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  const std::vector<ConvexFunction> fs{ConvexFunction::power_norm(3.0, 2.0, 1), ConvexFunction::abs_value(1.0, 1),
                                       ConvexFunction::half_squared_norm(1)};
  for (const auto& f : fs) {
    const ConvexFunction fc = f.conjugate();
    for (int k = 0; k < 50; ++k) {
      const Vec x = v1(U(rng)), p = v1(U(rng));
      CHECK(ext::add(f.value(x), fc.value(p)) >= x.dot(p) - ConvexTolerances::fenchel_young_analytic);
    }
  }
}

TEST_CASE("inf-convolution of two half squares") {
  const ConvexFunction h = ConvexFunction::half_squared_norm(1);
  // ½x² □ ½x² = ¼x²
  CHECK(inf_convolve(h, h).value(v1(2.0)) == doctest::Approx(1.0).epsilon(1e-8));
}

TEST_CASE("grid conjugate converges with the spacing") {
  const ConvexFunction h = ConvexFunction::half_squared_norm(1);
  const ConvexFunction g = conjugate_on_grid(h, v1(-5.0), v1(5.0), {201});
  CHECK(std::abs(g.value(v1(1.0)) - 0.5) <= ConvexTolerances::grid(10.0 / 200));
}

TEST_CASE("hull LP is the conjugate of max-affine") {
  Mat A(2, 1);
  A << -1.0, 1.0;
  const Vec c = Vec::Zero(2);
  const ConvexFunction m = ConvexFunction::max_affine(A, c);  // |x|
  CHECK(m.value(v1(-2.0)) == doctest::Approx(2.0));
  const ConvexFunction h = ConvexFunction::hull_lp(A.transpose(), c);
  CHECK(h.value(v1(0.5)) == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(is_inf(h.value(v1(1.5))));
}

TEST_CASE("extended arithmetic rejects 0 * inf") {
  CHECK_THROWS_AS(ext::scale(0.0, kInf), Error);
  CHECK(ext::add(1.0, kInf) == kInf);
}
