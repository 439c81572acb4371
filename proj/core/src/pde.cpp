#include "selfdual/pde.hpp"

#include "selfdual/calculus.hpp"
#include "selfdual/io.hpp"

#include <cmath>
#include <sstream>

namespace selfdual {

Vec Mesh1D::nodes() const {
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = this->x(i);
  return x;
}

Vec Mesh1D::sample(const std::function<double(double)>& f) const {
  Vec v(n);
  for (int i = 0; i < n; ++i) v[i] = f(x(i));
  return v;
}

void Mesh1D::validate() const {
  if (!(length > 0.0) || !std::isfinite(length)) fail(ErrorKind::InvalidArgument, "mesh length must be positive");
  if (n < 3) fail(ErrorKind::InvalidArgument, "mesh needs at least three interior nodes");
}

Mat Mesh1D::gradient() const {
  Mat D = Mat::Zero(n + 1, n);
  const double ih = 1.0 / h();
  for (int e = 0; e <= n; ++e) {
    if (e < n) D(e, e) = ih;
    if (e > 0) D(e, e - 1) = -ih;
  }
  return D;
}

Mat Mesh1D::laplacian() const {
  const Mat D = gradient();
  return D.transpose() * D;
}

double Mesh1D::poincare() const {
  const double s = std::sin(M_PI * h() / (2.0 * length));
  return 4.0 * s * s / (h() * h());
}

Lagrangian EllipticProblem::flux_potential(bool validate) const {
  if (potential) return *potential;
  return potential_for(T, validate);
}

void EllipticProblem::validate() const {
  mesh.validate();
  require_dim(g.size(), mesh.n, "source term");
  if (!g.allFinite()) fail(ErrorKind::InvalidArgument, "source term has non-finite entries");
  const int d = potential ? potential->dim() : T.dim();
  if (d != 1) fail(ErrorKind::DimensionMismatch, "flux operator must act on R^1");
  if (!std::isfinite(lambda)) fail(ErrorKind::InvalidArgument, "lambda must be finite");
}

double tol_pde(double h, double scale) { return std::max(1e-6, 5.0 * h * h * scale); }

double growth_constant(const Lagrangian& LT) {
  double C = 0.0;
  for (double y : {0.5, 1.0, 2.0, 4.0, 8.0})
    for (double s : {-1.0, 1.0}) {
      const double v = LT.value(Vec::Zero(1), Vec::Constant(1, s * y));
      if (!std::isfinite(v)) return kInf;
      C = std::max(C, v / (1.0 + y * y));
    }
  return C;
}

namespace {

/// D·K with K = (DᵀD)⁻¹.
Mat flux_map(const Mesh1D& mesh) {
  const Mat D = mesh.gradient();
  const Mat K = mesh.laplacian().ldlt().solve(Mat::Identity(mesh.n, mesh.n));
  return D * K;
}

LinMap row_apply(const Mat& A, int r, const LinMap& x) { return mat_apply(Mat(A.row(r)), x); }

void check_coercive(const EllipticProblem& prob, const Lagrangian& LT, double lambda, std::vector<std::string>& warnings) {
  if (lambda < 0.0)
    fail(ErrorKind::NotSupported, "negative lambda: the λ|u|² term is not a convex summand");
  const double C = growth_constant(LT);
  if (!std::isfinite(C)) {
    if (lambda == 0.0) warnings.push_back("L_T(0, y) is not finite on all growth probes; coercivity not established");
  } else if (!(lambda > -prob.mesh.poincare() / std::max(C, 1e-300))) {
    fail(ErrorKind::NotCoercive, "lambda at or below -lambda_1/C");
  }
}

AffineSum::Minimum run(const AffineSum& S, const Vec& start, bool trace) {
  AffineSum::Options mo;
  mo.record_trace = trace;
  const auto m = S.minimize(start, mo);
  if (m.unbounded) fail(ErrorKind::NotCoercive, "discrete functional is unbounded below");
  if (m.v.size() && m.v.lpNorm<Eigen::Infinity>() > 1e8)
    fail(ErrorKind::NotCoercive, "minimizing sequence escapes to infinity");
  return m;
}

}  // namespace

AffineSum elliptic_functional(const EllipticProblem& prob, const Lagrangian& LT) {
  prob.validate();
  if (prob.lambda < 0.0) fail(ErrorKind::NotSupported, "negative lambda");
  const Mesh1D& mesh = prob.mesh;
  const int n = mesh.n;
  const double h = mesh.h(), lam = prob.lambda;
  const Mat D = mesh.gradient(), DK = flux_map(mesh);
  const Vec a0 = DK * prob.g;
  const Mat Au = -lam * DK;
  AffineSum S(n, 1);
  const LinMap U = var_block(0, n), C = var_block(n, 1);
  for (int e = 0; e <= n; ++e) {
    const LinMap b = row_apply(D, e, U);
    const LinMap a = shift(lincomb(1.0, row_apply(Au, e, U), 1.0, C), Vec::Constant(1, a0[e]));
    S.embed(LT.body(), concat(b, a), h);
  }
  if (lam > 0.0) S.add(ConvexFunction::quadratic(2.0 * lam * h * Mat::Identity(n, n), Vec::Zero(n)), U);
  S.add_linear(dot(-h * prob.g, U));
  return S;
}

nlohmann::json EllipticResult::to_json() const {
  return {{"cert", certificate_json(cert)},
          {"flux_residual", flux_residual},
          {"flux_constant", flux_constant},
          {"edge_gaps", edge_gaps},
          {"warnings", warnings}};
}

EllipticResult solve_elliptic(const EllipticProblem& prob, const PdeOptions& opts) {
  prob.validate();
  const Mesh1D& mesh = prob.mesh;
  const int n = mesh.n;
  const double h = mesh.h(), lam = prob.lambda;
  const Lagrangian LT = prob.flux_potential(opts.validate);
  EllipticResult out;
  check_coercive(prob, LT, lam, out.warnings);

  const Mat D = mesh.gradient(), DK = flux_map(mesh);
  const AffineSum S = elliptic_functional(prob, LT);
  const auto m = run(S, Vec::Zero(S.num_vars()), opts.record_trace);
  out.u = m.v.head(n);
  out.flux_constant = m.v[n];
  out.flux = DK * (prob.g - lam * out.u) + Vec::Constant(n + 1, out.flux_constant);
  const Vec grad = D * out.u;
  for (int e = 0; e <= n; ++e) {
    const double gap = LT.value(grad.segment(e, 1), out.flux.segment(e, 1)) - grad[e] * out.flux[e];
    out.edge_gaps.push_back(gap);
    out.flux_residual = std::max(out.flux_residual, gap);
  }
  out.cert = make_certificate(m, tol_pde(h, opts.scale));
  out.cert.point = out.u;
  if (!m.converged && !(m.value <= out.cert.tolerance))
    fail(ErrorKind::NoConvergence, "elliptic functional: " + out.cert.diagnostics);
  return out;
}

BlockSystem elliptic_block_system(const EllipticProblem& prob) {
  prob.validate();
  if (prob.lambda < 0.0) fail(ErrorKind::NotSupported, "negative lambda");
  const Mesh1D& mesh = prob.mesh;
  const Mat D = mesh.gradient(), DK = flux_map(mesh);
  const Vec a0 = DK * prob.g;
  const Mat Au = -prob.lambda * DK;
  // ∇u ∈ ∂̄L(flux) with L the potential of T⁻¹
  const Lagrangian Linv = transform(prob.flux_potential(false), TransformSpec::inverse());
  BlockSystem sys;
  sys.dim = mesh.n;
  for (int e = 0; e <= mesh.n; ++e)
    sys.blocks.push_back(Block{Linv, Mat(Au.row(e)), Vec::Constant(1, a0[e]), Mat(D.row(e)), mesh.h()});
  return sys;
}

double pairing_identity_defect(const EllipticProblem& prob, const Vec& u) {
  prob.validate();
  require_dim(u.size(), prob.mesh.n, "grid values");
  const double h = prob.mesh.h();
  const Vec a = flux_map(prob.mesh) * (prob.g - prob.lambda * u);
  const Vec b = prob.mesh.gradient() * u;
  return h * a.dot(b) + prob.lambda * h * u.squaredNorm() - h * prob.g.dot(u);
}

Vec solve_elliptic_newton(const std::function<double(double)>& T, double lambda, const Vec& g, const Mesh1D& mesh,
                          double tol, int max_iter) {
  mesh.validate();
  require_dim(g.size(), mesh.n, "source term");
  const int n = mesh.n;
  const Mat D = mesh.gradient(), Dt = D.transpose();
  auto residual = [&](const Vec& u) {
    const Vec b = D * u;
    Vec Tb(b.size());
    for (int e = 0; e < b.size(); ++e) Tb[e] = T(b[e]);
    return Vec(Dt * Tb + lambda * u - g);
  };
  const double target = tol * std::max(1.0, g.lpNorm<Eigen::Infinity>());
  Vec u = Vec::Zero(n);
  Vec F = residual(u);
  for (int it = 0; it < max_iter && F.lpNorm<Eigen::Infinity>() > target; ++it) {
    const Vec b = D * u;
    Vec slope(b.size());
    for (int e = 0; e < b.size(); ++e) {
      const double s = 1e-6 * std::max(1.0, std::abs(b[e]));
      slope[e] = (T(b[e] + s) - T(b[e] - s)) / (2.0 * s);
    }
    const Mat J = Dt * slope.asDiagonal() * D + lambda * Mat::Identity(n, n);
    const Vec du = J.partialPivLu().solve(-F);
    double t = 1.0;
    Vec trial = u + du, Ft = residual(trial);
    while (Ft.norm() > (1.0 - 1e-4 * t) * F.norm() && t > 1e-10) {
      t *= 0.5;
      trial = u + t * du;
      Ft = residual(trial);
    }
    u = trial;
    F = Ft;
  }
  if (!(F.lpNorm<Eigen::Infinity>() <= target))
    fail(ErrorKind::NoConvergence, "damped Newton residual " + std::to_string(F.lpNorm<Eigen::Infinity>()));
  return u;
}

nlohmann::json ParabolicResult::to_json() const {
  return {{"cert", certificate_json(cert)},
          {"boundary_gap", boundary_gap},
          {"initial_error", initial_error},
          {"flux_residual", flux_residual},
          {"warnings", warnings}};
}

ParabolicResult solve_parabolic(const EllipticProblem& prob, const BoundaryOp& B, const TimeGrid& grid,
                                const PdeOptions& opts) {
  prob.validate();
  grid.validate();
  const Mesh1D& mesh = prob.mesh;
  const int n = mesh.n, M = grid.steps;
  require_dim(B.dim(), n, "time-boundary operator");
  const double h = mesh.h(), dt = grid.dt();
  const Lagrangian LT = prob.flux_potential(opts.validate);
  ParabolicResult out;
  out.mesh = mesh;
  out.grid = grid;
  check_coercive(prob, LT, 0.0, out.warnings);

  const Mat D = mesh.gradient(), DK = flux_map(mesh);
  const Vec a0 = DK * prob.g;
  const int nu = (M + 1) * n;
  AffineSum S(nu + M);
  auto node = [&](int k) { return var_block(k * n, n); };
  for (int k = 0; k < M; ++k) {
    const LinMap m = lincomb(0.5, node(k), 0.5, node(k + 1));
    const LinMap r = lincomb(1.0 / dt, node(k + 1), -1.0 / dt, node(k));
    const LinMap C = var_block(nu + k, 1);
    const LinMap Dm = mat_apply(D, m), Ar = mat_apply(-DK, r);
    for (int e = 0; e <= n; ++e) {
      const LinMap a = shift(lincomb(1.0, LinMap{Ar[e]}, 1.0, C), Vec::Constant(1, a0[e]));
      S.embed(LT.body(), concat(LinMap{Dm[e]}, a), dt * h);
    }
    S.add_linear(dot(-dt * h * prob.g, m));
  }
  const LinMap U0 = node(0), UM = node(M);
  S.embed(B.L.body(), concat(lincomb(1.0, U0, -1.0, UM), lincomb(-0.5, U0, -0.5, UM)), h);

  Vec start = Vec::Zero(S.num_vars());
  if (B.x0)
    for (int k = 0; k <= M; ++k) start.segment(k * n, n) = *B.x0;
  const auto mres = run(S, start, opts.record_trace);
  for (int k = 0; k <= M; ++k) out.u.push_back(mres.v.segment(k * n, n));

  for (int k = 0; k < M; ++k) {
    const Vec m = 0.5 * (out.u[k] + out.u[k + 1]), r = (out.u[k + 1] - out.u[k]) / dt;
    const Vec b = D * m, a = DK * (prob.g - r) + Vec::Constant(n + 1, mres.v[nu + k]);
    for (int e = 0; e <= n; ++e)
      out.flux_residual = std::max(out.flux_residual, LT.value(b.segment(e, 1), a.segment(e, 1)) - b[e] * a[e]);
  }
  out.boundary_gap = B.gap(out.u.front(), out.u.back());
  if (B.x0) out.initial_error = (out.u.front() - *B.x0).lpNorm<Eigen::Infinity>();
  out.cert = make_certificate(mres, tol_pde(h, opts.scale));
  out.cert.point = out.u.back();
  if (!mres.converged && !(mres.value <= out.cert.tolerance))
    fail(ErrorKind::NoConvergence, "parabolic functional: " + out.cert.diagnostics);
  return out;
}

}  // namespace selfdual
