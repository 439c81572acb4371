#include "selfdual/pde.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

using namespace selfdual;

namespace {
MonotoneOperator identity() { return MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(1)); }
}  // namespace

TEST_CASE("mesh operators") {
  const Mesh1D m{2.0, 9};
  CHECK(m.h() == doctest::Approx(0.2));
  CHECK(m.x(0) == doctest::Approx(0.2));
  const Mat D = m.gradient();
  CHECK(D.rows() == 10);
  CHECK((D.transpose() * D - m.laplacian()).norm() < 1e-12);
  Eigen::SelfAdjointEigenSolver<Mat> es(m.laplacian());
  CHECK(m.poincare() == doctest::Approx(es.eigenvalues().minCoeff()).epsilon(1e-10));
}

TEST_CASE("pairing identity holds for any u") {
  EllipticProblem P;
  P.T = identity();
  P.lambda = 0.7;
  P.mesh = Mesh1D{1.0, 15};
  P.g = P.mesh.sample([](double x) { return 1.0 + x * x; });
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  Vec u(15);
  for (int i = 0; i < 15; ++i) u[i] = N(rng);
  CHECK(std::abs(pairing_identity_defect(P, u)) < 1e-10);
}

TEST_CASE("Poisson with a constant source") {
  EllipticProblem P;
  P.T = identity();
  P.mesh = Mesh1D{1.0, 15};
  P.g = Vec::Constant(15, 2.0);
  // −u'' = 2 has u = x(1 − x), exact for second differences.
  const EllipticResult r = solve_elliptic(P);
  const Vec ex = P.mesh.sample([](double x) { return x * (1.0 - x); });
  CHECK((r.u - ex).lpNorm<Eigen::Infinity>() < 1e-9);
  CHECK(r.flux_residual < 1e-8);
}

TEST_CASE("negative lambda is not supported") {
  EllipticProblem P;
  P.T = identity();
  P.lambda = -1.0;
  P.mesh = Mesh1D{1.0, 7};
  P.g = Vec::Zero(7);
  CHECK_THROWS_AS(solve_elliptic(P), Error);
}

TEST_CASE("damped Newton matches the linear solve") {
  const Mesh1D m{1.0, 15};
  const Vec g = Vec::Constant(15, 2.0);
  const Vec u = solve_elliptic_newton([](double y) { return y; }, 0.0, g, m);
  const Vec ex = m.sample([](double x) { return x * (1.0 - x); });
  CHECK((u - ex).lpNorm<Eigen::Infinity>() < 1e-9);
}

TEST_CASE("parabolic initial data is attained") {
  EllipticProblem H;
  H.T = identity();
  H.mesh = Mesh1D{1.0, 7};
  H.g = Vec::Zero(7);
  const Vec u0 = H.mesh.sample([](double x) { return std::sin(M_PI * x); });
  const ParabolicResult r = solve_parabolic(H, BoundaryOp::initial_value(u0), TimeGrid{0.25, 8});
  CHECK(r.initial_error < 1e-6);
  CHECK(r.u.back().norm() < r.u.front().norm());
}

TEST_CASE("pde tolerance floor") {
  CHECK(tol_pde(1e-6) == doctest::Approx(1e-6));
  CHECK(tol_pde(0.1) == doctest::Approx(0.05));
}
