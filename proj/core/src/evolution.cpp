#include "selfdual/evolution.hpp"

#include "selfdual/calculus.hpp"
#include "selfdual/io.hpp"

#include <cmath>
#include <sstream>

namespace selfdual {

void TimeGrid::validate() const {
  if (!(t_end > 0.0) || !std::isfinite(t_end)) fail(ErrorKind::InvalidArgument, "time horizon must be positive");
  if (steps < 2) fail(ErrorKind::InvalidArgument, "time grid needs at least two intervals");
}

double Path::sup_distance(const std::function<Vec(double)>& f) const {
  double e = 0.0;
  for (int k = 0; k <= steps(); ++k) e = std::max(e, (u[k] - f(grid.node(k))).norm());
  return e;
}

void Path::validate() const {
  grid.validate();
  if (static_cast<int>(u.size()) != grid.steps + 1)
    fail(ErrorKind::DimensionMismatch, "path length differs from the number of time nodes");
  for (const Vec& x : u) {
    require_dim(x.size(), dim(), "path value");
    if (!x.allFinite()) fail(ErrorKind::InvalidArgument, "non-finite path value");
  }
}

BoundaryOp BoundaryOp::initial_value(const Vec& x0) {
  const int d = static_cast<int>(x0.size());
  const ConvexFunction phi = ConvexFunction::quadratic(0.5 * Mat::Identity(d, d), -x0, 0.0);
  BoundaryOp b;
  b.name = "initial_value";
  b.S = MonotoneOperator::grad_convex(phi);
  b.L = potential_for(b.S);
  b.x0 = x0;
  return b;
}

BoundaryOp BoundaryOp::from_operator(const MonotoneOperator& S) {
  BoundaryOp b;
  b.S = S;
  b.L = potential_for(S);
  return b;
}

double BoundaryOp::value(const Vec& u0, const Vec& uM) const { return L.value(u0 - uM, -0.5 * (u0 + uM)); }

double BoundaryOp::gap(const Vec& u0, const Vec& uM) const {
  return value(u0, uM) + 0.5 * (u0.squaredNorm() - uM.squaredNorm());
}

TimeDependentOperator TimeDependentOperator::stationary(const MonotoneOperator& T, double omega) {
  TimeDependentOperator t;
  t.ops = {T};
  t.omega = omega;
  return t;
}

TimeDependentOperator TimeDependentOperator::from_lagrangian(const Lagrangian& L, double omega) {
  TimeDependentOperator t;
  t.potentials = {L};
  t.omega = omega;
  return t;
}

int TimeDependentOperator::dim() const {
  if (!potentials.empty()) return potentials.front().dim();
  if (!ops.empty()) return ops.front().dim();
  return 0;
}

std::vector<Lagrangian> TimeDependentOperator::interval_potentials(const TimeGrid& grid, bool validate) const {
  std::vector<Lagrangian> base = potentials;
  if (base.empty()) {
    if (ops.empty()) fail(ErrorKind::InvalidArgument, "time-dependent operator without entries");
    const int d = ops.front().dim();
    for (const auto& T : ops) require_dim(T.dim(), d, "time-dependent operator entry");
    if (ops.size() == 1) {
      base = {potential_for(ops.front(), validate)};
    } else {
      for (int k = 0; k < std::min<int>(grid.steps, static_cast<int>(ops.size())); ++k)
        base.push_back(potential_for(ops[k], validate));
    }
  }
  for (const auto& L : base) require_dim(L.dim(), base.front().dim(), "time-dependent potential");
  if (base.size() == 1) return std::vector<Lagrangian>(grid.steps, base.front());
  if (static_cast<int>(base.size()) < grid.steps)
    fail(ErrorKind::DimensionMismatch, "per-node operators must cover every interval of the grid");
  base.resize(grid.steps);
  return base;
}

double tol_evol(double dt, double scale) { return std::max(1e-6, 5.0 * dt * dt * scale); }

namespace {

/// Interval potentials with the e^{ωt} rescaling folded in.
std::vector<Lagrangian> weighted_potentials(const TimeDependentOperator& Tt, const TimeGrid& g, bool validate) {
  std::vector<Lagrangian> Lk = Tt.interval_potentials(g, validate);
  if (Tt.omega != 0.0)
    for (int k = 0; k < g.steps; ++k)
      Lk[k] = transform(Lk[k], TransformSpec::scale(std::exp(Tt.omega * g.midpoint(k))));
  return Lk;
}

LinMap node(int k, int d) { return var_block(k * d, d); }

LinMap mid(const LinMap& a, const LinMap& b) { return lincomb(0.5, a, 0.5, b); }

/// (a − b)/Δt
LinMap diff(const LinMap& a, const LinMap& b, double dt) { return lincomb(1.0 / dt, a, -1.0 / dt, b); }

std::vector<Vec> unpack(const Vec& v, int first, int count, int d) {
  std::vector<Vec> out;
  for (int k = 0; k < count; ++k) out.push_back(v.segment(first + k * d, d));
  return out;
}

AffineSum::Minimum run(const AffineSum& S, const Vec& start, bool trace, std::vector<std::string>& warnings) {
  if (S.num_aux() == 0 && !flat_rays([&](const Vec& z) { return S.eval(z); }, S.num_external()).empty())
    warnings.push_back("path functional does not grow along every probe ray");
  AffineSum::Options mo;
  mo.record_trace = trace;
  const auto m = S.minimize(start, mo);
  if (m.unbounded) fail(ErrorKind::NotCoercive, "path functional is unbounded below");
  if (m.v.size() && m.v.lpNorm<Eigen::Infinity>() > 1e6)
    fail(ErrorKind::NotCoercive, "minimizing path escapes to infinity");
  return m;
}

void require_converged(const AffineSum::Minimum& m, const Certificate& c) {
  if (!m.converged && !(m.value <= c.tolerance))
    fail(ErrorKind::NoConvergence, "path minimization: " + c.diagnostics);
}

}  // namespace

double path_functional(const TimeDependentOperator& Tt, const BoundaryOp& B, const Path& u) {
  u.validate();
  require_dim(u.dim(), Tt.dim(), "path dimension");
  require_dim(B.dim(), Tt.dim(), "boundary dimension");
  const TimeGrid& g = u.grid;
  const std::vector<Lagrangian> Lk = weighted_potentials(Tt, g, false);
  std::vector<Vec> w = u.u;
  for (int k = 0; k <= g.steps; ++k) w[k] *= std::exp(Tt.omega * g.node(k));
  const double dt = g.dt();
  double total = 0.0;
  for (int k = 0; k < g.steps; ++k)
    total = ext::add(total, ext::scale(dt, Lk[k].value(0.5 * (w[k] + w[k + 1]), (w[k] - w[k + 1]) / dt)));
  return ext::add(total, B.value(w.front(), w.back()));
}

nlohmann::json EvolutionResult::to_json() const {
  return {{"cert", certificate_json(cert)},
          {"boundary_gap", boundary_gap},
          {"initial_error", initial_error},
          {"interval_gaps", interval_gaps},
          {"warnings", warnings}};
}

EvolutionResult solve_evolution(const TimeDependentOperator& Tt, const BoundaryOp& B, const TimeGrid& grid,
                                const EvolutionOptions& opts) {
  grid.validate();
  const int d = Tt.dim(), M = grid.steps;
  require_dim(B.dim(), d, "boundary dimension");
  if (Tt.omega != 0.0 && !B.x0)
    fail(ErrorKind::InvalidArgument, "exponential weighting needs an initial-value boundary");
  const double dt = grid.dt();
  const std::vector<Lagrangian> Lk = weighted_potentials(Tt, grid, opts.validate);

  AffineSum S((M + 1) * d);
  for (int k = 0; k < M; ++k)
    S.embed(Lk[k].body(), concat(mid(node(k, d), node(k + 1, d)), diff(node(k, d), node(k + 1, d), dt)), dt);
  const LinMap U0 = node(0, d), UM = node(M, d);
  S.embed(B.L.body(), concat(lincomb(1.0, U0, -1.0, UM), lincomb(-0.5, U0, -0.5, UM)));

  EvolutionResult out;
  Vec start = Vec::Zero(S.num_vars());
  if (B.x0)
    for (int k = 0; k <= M; ++k) start.segment(k * d, d) = *B.x0;
  const auto m = run(S, start, opts.record_trace, out.warnings);

  const std::vector<Vec> w = unpack(m.v, 0, M + 1, d);
  out.u.grid = grid;
  for (int k = 0; k <= M; ++k) out.u.u.push_back(std::exp(-Tt.omega * grid.node(k)) * w[k]);
  for (int k = 0; k < M; ++k) {
    const Vec c = 0.5 * (w[k] + w[k + 1]), r = (w[k + 1] - w[k]) / dt;
    const double lam2 = std::exp(2.0 * Tt.omega * grid.midpoint(k));
    out.interval_gaps.push_back((Lk[k].value(c, -r) + c.dot(r)) / lam2);
  }
  out.boundary_gap = B.gap(w.front(), w.back());
  if (B.x0) out.initial_error = (w.front() - *B.x0).norm();

  out.cert = make_certificate(m, tol_evol(dt, opts.scale));
  out.cert.point = out.u.u.back();
  require_converged(m, out.cert);
  return out;
}

Vec semigroup_flow(const Lagrangian& LT, double omega, const Vec& x0, double t, int steps, Certificate* cert) {
  require_dim(x0.size(), LT.dim(), "semigroup initial point");
  const TimeGrid g{t, steps};
  EvolutionOptions opts;
  opts.validate = false;
  const auto r = solve_evolution(TimeDependentOperator::from_lagrangian(LT, omega), BoundaryOp::initial_value(x0), g,
                                 opts);
  if (cert) *cert = r.cert;
  return r.u.u.back();
}

Vec semigroup_flow(const MonotoneOperator& T, double omega, const Vec& x0, double t, int steps, Certificate* cert) {
  return semigroup_flow(potential_for(T), omega, x0, t, steps, cert);
}

Path implicit_euler(const MonotoneOperator& T, const Vec& x0, const TimeGrid& grid) {
  grid.validate();
  require_dim(x0.size(), T.dim(), "initial point");
  const Lagrangian L = potential_for(T, false);
  Path p;
  p.grid = grid;
  p.u.push_back(x0);
  for (int k = 0; k < grid.steps; ++k) p.u.push_back(resolvent(L, grid.dt(), p.u.back()));
  return p;
}

nlohmann::json ConnectResult::to_json() const {
  return {{"cert", certificate_json(cert)},
          {"start_gap", start_gap},
          {"end_gap", end_gap},
          {"interval_gaps", interval_gaps},
          {"warnings", warnings}};
}

ConnectResult connect_graphs(const TimeDependentOperator& Tt, const MonotoneOperator& S1, const MonotoneOperator& S2,
                             const TimeGrid& grid, const EvolutionOptions& opts) {
  grid.validate();
  if (Tt.dim() % 2 != 0) fail(ErrorKind::DimensionMismatch, "coupling operator must act on pairs (u, v)");
  if (Tt.omega != 0.0) fail(ErrorKind::NotSupported, "exponential weighting of the two-graph problem");
  const int d = Tt.dim() / 2, M = grid.steps, n = (M + 1) * d;
  require_dim(S1.dim(), d, "first boundary operator");
  require_dim(S2.dim(), d, "second boundary operator");
  const double dt = grid.dt();
  const std::vector<Lagrangian> Lk = Tt.interval_potentials(grid, opts.validate);
  const Lagrangian L1 = potential_for(S1, opts.validate), L2 = potential_for(S2, opts.validate);

  auto U = [&](int k) { return var_block(k * d, d); };
  auto V = [&](int k) { return var_block(n + k * d, d); };
  AffineSum S(2 * n);
  for (int k = 0; k < M; ++k) {
    const LinMap x = concat(mid(U(k), U(k + 1)), mid(V(k), V(k + 1)));
    const LinMap p = concat(diff(V(k + 1), V(k), dt), diff(U(k + 1), U(k), dt));
    S.embed(Lk[k].body(), concat(x, p), dt);
  }
  S.embed(L1.body(), concat(V(0), U(0)));
  S.embed(L2.body(), concat(V(M), lincomb(-1.0, U(M), 0.0, U(M))));

  ConnectResult out;
  const auto m = run(S, Vec::Zero(S.num_vars()), opts.record_trace, out.warnings);
  out.u.grid = out.v.grid = grid;
  out.u.u = unpack(m.v, 0, M + 1, d);
  out.v.u = unpack(m.v, n, M + 1, d);
  for (int k = 0; k < M; ++k) {
    const Vec x = stack(out.u.mid(k), out.v.mid(k)), p = stack(out.v.rate(k), out.u.rate(k));
    out.interval_gaps.push_back(Lk[k].value(x, p) - x.dot(p));
  }
  const Vec &u0 = out.u.u.front(), &v0 = out.v.u.front(), &uM = out.u.u.back(), &vM = out.v.u.back();
  out.start_gap = L1.value(v0, u0) - v0.dot(u0);
  out.end_gap = L2.value(vM, -uM) + vM.dot(uM);
  out.cert = make_certificate(m, tol_evol(dt, opts.scale));
  out.cert.point = stack(uM, vM);
  require_converged(m, out.cert);
  return out;
}

}  // namespace selfdual
