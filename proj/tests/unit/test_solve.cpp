#include "selfdual/solve.hpp"

#include <doctest.h>

using namespace selfdual;

namespace {
Vec v1(double a) { return Vec::Constant(1, a); }
Lagrangian identity() { return Lagrangian::sum_form(ConvexFunction::half_squared_norm(1)); }
}  // namespace

TEST_CASE("static solve of the identity") {
  const SolveResult r = solve_static(identity(), v1(3.0));
  CHECK(r.cert.converged);
  CHECK(r.x[0] == doctest::Approx(3.0));
}

TEST_CASE("regularized solve returns a witness equal to x") {
  const RegularizedResult r = solve_regularized(identity(), v1(4.0));
  CHECK(r.cert.converged);
  // x + x = 4
  CHECK(r.x[0] == doctest::Approx(2.0).epsilon(1e-8));
  CHECK((r.x - r.r).norm() < 1e-6);
}

TEST_CASE("resolvent of a scaled identity") {
  const MonotoneOperator T = MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(1));
  // (I + 3I)⁻¹ 8 = 2
  CHECK(resolvent(T, 3.0, v1(8.0))[0] == doctest::Approx(2.0).epsilon(1e-8));
}

TEST_CASE("superposed single block reproduces the static solve") {
  BlockSystem sys;
  sys.dim = 1;
  sys.blocks.push_back({identity(), Mat::Zero(1, 1), v1(3.0), Mat::Identity(1, 1), 1.0});
  const BlockReport rep = sys.validate();
  CHECK(rep.gamma_condition == doctest::Approx(1.0));
  const SolveResult r = superposed_solve(sys);
  CHECK(r.x[0] == doctest::Approx(solve_static(identity(), v1(3.0)).x[0]).epsilon(1e-8));
}

TEST_CASE("co-Hamiltonian of the identity potential") {
  // sup_y yp − ½y² − ½q² = ½p² − ½q²
  CHECK(cohamiltonian(identity(), v1(2.0), v1(1.0)) == doctest::Approx(1.5));
}
