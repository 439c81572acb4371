#include "selfdual/solve.hpp"

#include "selfdual/calculus.hpp"

#include <random>
#include <sstream>

namespace selfdual {

Certificate make_certificate(const AffineSum::Minimum& m, double tol) {
  Certificate c;
  c.value = m.value;
  c.point = m.v;
  c.iterations = m.iterations;
  c.tolerance = tol;
  c.converged = m.converged && m.value <= tol;
  std::ostringstream os;
  os << "method=" << m.method << " solver_converged=" << (m.converged ? "yes" : "no");
  if (!c.converged && m.converged) os << " gap " << m.value << " exceeds " << tol;
  c.diagnostics = os.str();
  return c;
}

std::vector<Vec> flat_rays(const std::function<double(const Vec&)>& f, int dim, double radius) {
  std::vector<Vec> dirs;
  for (int i : {0, dim - 1}) {
    Vec e = Vec::Zero(dim);
    e[i] = 1.0;
    dirs.push_back(e);
    dirs.push_back(-e);
  }
  std::mt19937_64 rng(kDefaultSeed);
  std::normal_distribution<double> N(0.0, 1.0);
  while (dirs.size() < 8) {
    Vec v(dim);
    for (int i = 0; i < dim; ++i) v[i] = N(rng);
    dirs.push_back(v.normalized());
  }
  std::vector<Vec> flat;
  double f0;
  try {
    f0 = f(Vec::Zero(dim));
  } catch (const Error&) {
    return flat;
  }
  if (!std::isfinite(f0)) return flat;
  for (const Vec& d : dirs) {
    try {
      const double v = f(radius * d);
      if (std::isfinite(v) && v <= f0) flat.push_back(d);
    } catch (const Error&) {
    }
  }
  return flat;
}

namespace {

void check_growth(const SolveResult& r, const AffineSum::Minimum& m) {
  if (m.unbounded) fail(ErrorKind::NotCoercive, "gap functional is unbounded below");
  if (m.v.size() && m.v.lpNorm<Eigen::Infinity>() > 1e6)
    fail(ErrorKind::NotCoercive, "minimizing sequence escapes to infinity");
  (void)r;
}

}  // namespace

SolveResult solve_static(const Lagrangian& L, const Vec& p, const SolveOptions& opts) {
  const int d = L.dim();
  require_dim(p.size(), d, "solve_static p");
  const LinMap X = var_block(0, d);
  AffineSum G = L.body().substitute(concat(X, const_block(p)), d);
  G.add_linear(dot(-p, X));

  SolveResult out;
  auto gap = [&](const Vec& x) { return lag_gap(L, x, p); };
  if (!flat_rays(gap, d).empty()) out.warnings.push_back("gap does not grow along every probe ray");

  AffineSum::Options mo;
  mo.max_iter = std::min(opts.max_iter, 500);
  mo.record_trace = opts.record_trace;
  const auto m = G.minimize(Vec::Zero(G.num_vars()), mo);
  check_growth(out, m);
  out.x = m.v.head(d);
  out.cert = make_certificate(m, opts.tol_gap);
  out.cert.point = out.x;
  out.trace = m.trace;
  return out;
}

RegularizedResult solve_regularized(const Lagrangian& L, const Vec& p, const SolveOptions& opts) {
  const int d = L.dim();
  require_dim(p.size(), d, "solve_regularized p");
  AffineSum S(2 * d);
  const LinMap X = var_block(0, d), R = var_block(d, d);
  S.embed(L.body(), concat(X, shift(lincomb(-1.0, R, 0.0, R), p)));
  S.add(ConvexFunction::half_squared_norm(2 * d), var_block(0, 2 * d));
  S.add_linear(dot(-p, X));

  AffineSum::Options mo;
  mo.max_iter = std::min(opts.max_iter, 500);
  const auto m = S.minimize(Vec::Zero(S.num_vars()), mo);
  if (m.unbounded) fail(ErrorKind::NoConvergence, "regularized functional unbounded below");
  RegularizedResult out;
  out.x = m.v.head(d);
  out.r = m.v.segment(d, d);
  out.cert = make_certificate(m, opts.tol_gap);
  out.cert.point = out.x;
  out.witness_gap = 0.5 * (out.x - out.r).squaredNorm();
  out.field_gap = lag_gap(L, out.x, p - out.r);
  if (!m.converged) fail(ErrorKind::NoConvergence, "regularized solve: " + out.cert.diagnostics);
  return out;
}

Vec resolvent(const Lagrangian& L, double lambda, const Vec& y) {
  if (!(lambda > 0.0)) fail(ErrorKind::InvalidArgument, "resolvent step must be positive");
  const Lagrangian scaled = lambda == 1.0 ? L : transform(L, TransformSpec::scale_range(lambda));
  return solve_regularized(scaled, y).x;
}

Vec resolvent(const MonotoneOperator& T, double lambda, const Vec& y) {
  return resolvent(potential_for(T, false), lambda, y);
}

BlockReport BlockSystem::validate() const {
  if (blocks.empty()) fail(ErrorKind::InvalidArgument, "block system without blocks");
  int rows = 0;
  for (const Block& b : blocks) {
    const int d = b.L.dim();
    require_dim(b.A.rows(), d, "block A rows");
    require_dim(b.A.cols(), dim, "block A columns");
    require_dim(b.Gamma.rows(), d, "block Γ rows");
    require_dim(b.Gamma.cols(), dim, "block Γ columns");
    if (b.offset.size()) require_dim(b.offset.size(), d, "block offset");
    if (!(b.weight > 0.0)) fail(ErrorKind::InvalidArgument, "block weight must be positive");
    rows += d;
  }
  Mat G(rows, dim), M = Mat::Zero(dim, dim);
  int r = 0;
  for (const Block& b : blocks) {
    G.middleRows(r, b.Gamma.rows()) = b.Gamma;
    r += static_cast<int>(b.Gamma.rows());
    M -= b.weight * b.A.transpose() * b.Gamma;
  }
  BlockReport rep;
  Eigen::JacobiSVD<Mat> svd(G);
  const auto sv = svd.singularValues();
  const double smin = sv.size() ? sv[sv.size() - 1] : 0.0;
  if (rows < dim || !(smin > 1e-12 * std::max(1.0, sv[0])))
    fail(ErrorKind::InvalidArgument, "stacked Γ is not injective");
  rep.gamma_condition = sv[0] / smin;
  Eigen::SelfAdjointEigenSolver<Mat> es(sym_part(M));
  rep.diagonal_curvature = es.eigenvalues().minCoeff();
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  if (rep.diagonal_curvature < -1e-9 * scale)
    fail(ErrorKind::NotCoercive, "z ↦ Σ⟨A_i z, Γ_i z⟩ is not concave (eigenvalue " +
                                     std::to_string(-rep.diagonal_curvature) + ")");
  return rep;
}

AffineSum BlockSystem::functional() const {
  validate();
  AffineSum S(dim);
  const LinMap Z = var_block(0, dim);
  Mat M = Mat::Zero(dim, dim);
  Vec lin = Vec::Zero(dim);
  for (const Block& b : blocks) {
    const Vec a = b.offset.size() ? b.offset : Vec(Vec::Zero(b.L.dim()));
    S.embed(b.L.body(), concat(shift(mat_apply(b.A, Z), a), mat_apply(b.Gamma, Z)), b.weight);
    M -= b.weight * (b.A.transpose() * b.Gamma + b.Gamma.transpose() * b.A);
    lin -= b.weight * b.Gamma.transpose() * a;
  }
  // drop the roundoff-level negative curvature left by the exact cancellation
  Eigen::SelfAdjointEigenSolver<Mat> es(sym_part(M));
  const Vec ev = es.eigenvalues().cwiseMax(0.0);
  if (ev.maxCoeff() > 0.0) {
    const Mat Mp = es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
    S.add(ConvexFunction::quadratic(sym_part(Mp), Vec::Zero(dim), 0.0), Z);
  }
  S.add_linear(dot(lin, Z));
  return S;
}

SolveResult superposed_solve(const BlockSystem& sys, const SolveOptions& opts) {
  const AffineSum S = sys.functional();
  SolveResult out;
  if (S.num_aux() == 0 && !flat_rays([&](const Vec& z) { return S.eval(z); }, sys.dim).empty())
    out.warnings.push_back("functional does not grow along every probe ray");
  AffineSum::Options mo;
  mo.max_iter = std::min(opts.max_iter, 500);
  mo.record_trace = opts.record_trace;
  const auto m = S.minimize(Vec::Zero(S.num_vars()), mo);
  check_growth(out, m);
  out.x = m.v.head(sys.dim);
  out.cert = make_certificate(m, opts.tol_gap);
  out.cert.point = out.x;
  out.trace = m.trace;
  return out;
}

double cohamiltonian(const Lagrangian& L, const Vec& p, const Vec& q, bool* unbounded) {
  const int d = L.dim();
  require_dim(p.size(), d, "cohamiltonian p");
  require_dim(q.size(), d, "cohamiltonian q");
  if (unbounded) *unbounded = false;
  const LinMap Y = var_block(0, d);
  AffineSum S = L.body().substitute(concat(Y, const_block(q)), d);
  S.add_linear(dot(-p, Y));
  const auto m = S.minimize();
  if (m.unbounded) {
    if (unbounded) *unbounded = true;
    return kInf;
  }
  if (!m.converged) {
    if (is_inf(m.value)) return -kInf;
    fail(ErrorKind::InnerNoConvergence, "co-Hamiltonian sup via " + m.method);
  }
  return -m.value;
}

}  // namespace selfdual
