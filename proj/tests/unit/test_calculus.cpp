#include "selfdual/calculus.hpp"

#include <doctest.h>

using namespace selfdual;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}
Lagrangian identity(int d = 1) { return Lagrangian::sum_form(ConvexFunction::half_squared_norm(d)); }
Vec field(const Lagrangian& L, const Vec& x) {
  const FieldValue f = sd_field(L, x, 1e-8);
  REQUIRE_FALSE(f.empty());
  return f.representatives.front();
}
}  // namespace

TEST_CASE("scale leaves the identity potential unchanged") {
  const Lagrangian L = transform(identity(), TransformSpec::scale(2.0));
  for (double x : {-1.0, 0.3, 2.0})
    for (double p : {-0.5, 1.0}) CHECK(L.value(v1(x), v1(p)) == doctest::Approx(0.5 * x * x + 0.5 * p * p));
}

TEST_CASE("add skew to the identity") {
  Mat G(2, 2);
  G << 0.0, -1.0, 1.0, 0.0;
  const Lagrangian L = transform(identity(2), TransformSpec::add_skew(G));
  CHECK((field(L, v2(1.0, 0.0)) - v2(1.0, 1.0)).norm() < 1e-7);
}

TEST_CASE("translate range") {
  const Lagrangian L = transform(identity(), TransformSpec::translate_range(v1(1.0)));
  CHECK(field(L, v1(2.0))[0] == doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("inverse of a scaled identity") {
  const Lagrangian L = transform(transform(identity(), TransformSpec::scale_range(2.0)), TransformSpec::inverse());
  CHECK(field(L, v1(3.0))[0] == doctest::Approx(1.5).epsilon(1e-7));
}

TEST_CASE("operator sum and parallel sum of identities") {
  CHECK(field(combine({identity(), identity()}, CombineSpec::op_sum()), v1(1.0))[0] == doctest::Approx(2.0));
  CHECK(field(combine({identity(), identity()}, CombineSpec::op_convolve()), v1(2.0))[0] ==
        doctest::Approx(1.0).epsilon(1e-7));
}

TEST_CASE("direct sum and cross coupling") {
  CHECK((field(combine({identity(), identity()}, CombineSpec::direct_sum()), v2(0.4, -1.0)) - v2(0.4, -1.0)).norm() <
        1e-7);
  const Lagrangian C = combine({identity(), identity()}, CombineSpec::cross_coupling(Mat::Identity(1, 1)));
  CHECK((field(C, v2(1.0, 0.0)) - v2(1.0, 1.0)).norm() < 1e-7);
}

TEST_CASE("block superposition identity") {
  Mat A(1, 1), G(1, 1);
  A << 0.0;
  G << 1.0;
  const auto [defect, cond] = block_identity_check({{A, G}});
  CHECK(defect < 1e-12);
  CHECK(cond == doctest::Approx(1.0));
}

TEST_CASE("transform descriptions") {
  CHECK(TransformSpec::scale(2.0).describe().dump().find("2") != std::string::npos);
  CHECK_FALSE(CombineSpec::op_sum().describe().is_null());
}
