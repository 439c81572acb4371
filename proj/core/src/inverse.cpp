#include "selfdual/inverse.hpp"

#include "selfdual/io.hpp"

#include <cmath>
#include <sstream>

namespace selfdual {

ParamClass ParamClass::cubic(const Vec& lower, const Vec& upper, double min_sum) {
  ParamClass c;
  c.lower = lower;
  c.upper = upper;
  c.min_sum = min_sum;
  c.name = "cubic";
  c.build = [](const Vec& t) {
    if (t.size() != 2) fail(ErrorKind::DimensionMismatch, "cubic family takes two parameters");
    if (t[0] < 0.0 || t[1] < 0.0) fail(ErrorKind::InvalidArgument, "cubic family needs non-negative parameters");
    const ConvexFunction quad = ConvexFunction::quadratic(Mat::Constant(1, 1, t[0]), Vec::Zero(1));
    if (t[1] == 0.0) return MonotoneOperator::grad_convex(quad);
    const ConvexFunction quart = ConvexFunction::power_norm(4.0, t[1], 1);
    if (t[0] == 0.0) return MonotoneOperator::grad_convex(quart);
    return MonotoneOperator::grad_convex(ConvexFunction::sum(quad, quart));
  };
  c.validate();
  return c;
}

bool ParamClass::admissible(const Vec& theta) const {
  if (theta.size() != lower.size()) return false;
  for (int i = 0; i < dim(); ++i)
    if (!(theta[i] >= lower[i] && theta[i] <= upper[i])) return false;
  return theta.sum() >= min_sum;
}

void ParamClass::validate() const {
  if (dim() < 1 || dim() > 4) fail(ErrorKind::InvalidArgument, "parameter box must have 1 to 4 coordinates");
  require_dim(upper.size(), dim(), "parameter box upper corner");
  if (!build) fail(ErrorKind::InvalidArgument, "parameter class without a builder");
  for (int i = 0; i < dim(); ++i)
    if (!(lower[i] <= upper[i]) || !std::isfinite(lower[i]) || !std::isfinite(upper[i]))
      fail(ErrorKind::InvalidArgument, "parameter box corners out of order");
  if (upper.sum() < min_sum) fail(ErrorKind::ClassInfeasible, "no parameter in the box meets the minimum sum");

  const int m = dim();
  int count = 1;
  for (int i = 0; i < m; ++i) count *= 3;
  std::vector<double> probes;
  for (int k = -6; k <= 6; ++k) probes.push_back(0.5 * k);
  for (int idx = 0; idx < count; ++idx) {
    Vec theta(m);
    for (int i = 0, r = idx; i < m; ++i, r /= 3) theta[i] = lower[i] + 0.5 * (r % 3) * (upper[i] - lower[i]);
    if (theta.sum() < min_sum) continue;
    const MonotoneOperator T = build(theta);
    if (T.dim() != 1) fail(ErrorKind::DimensionMismatch, "parameter class must build flux maps on R^1");
    double prev = -kInf;
    for (double y : probes) {
      const auto v = T.apply(Vec::Constant(1, y));
      if (!v) break;
      if (!std::isfinite((*v)[0])) fail(ErrorKind::InvalidArgument, "flux map is not finite on the probes");
      if ((*v)[0] < prev - 1e-10) {
        std::ostringstream os;
        os << "flux map decreases near y = " << y << " for theta = " << theta.transpose();
        fail(ErrorKind::NotMonotone, os.str());
      }
      prev = (*v)[0];
    }
  }
}

void InverseProblem::validate() const {
  mesh.validate();
  require_dim(observed.size(), mesh.n, "observed solution");
  require_dim(g.size(), mesh.n, "source term");
  if (eps_schedule.empty()) fail(ErrorKind::InvalidArgument, "empty epsilon schedule");
  for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
    if (!(eps_schedule[i] > 0.0)) fail(ErrorKind::InvalidArgument, "epsilon entries must be positive");
    if (i && !(eps_schedule[i] < eps_schedule[i - 1]))
      fail(ErrorKind::InvalidArgument, "epsilon schedule must decrease");
  }
  family.validate();
  if (theta_start.size() && !family.admissible(theta_start))
    fail(ErrorKind::InvalidArgument, "starting parameter outside the class");
}

namespace {

EllipticProblem forward(const InverseProblem& prob, const Vec& theta) {
  EllipticProblem P;
  P.T = prob.family.build(theta);
  P.lambda = prob.lambda;
  P.g = prob.g;
  P.mesh = prob.mesh;
  return P;
}

double penalty(const InverseProblem& prob, const Vec& theta, const Vec& u) {
  const EllipticProblem P = forward(prob, theta);
  return elliptic_functional(P, P.flux_potential(false)).value(u);
}

double misfit(const InverseProblem& prob, const Vec& u) { return prob.mesh.h() * (u - prob.observed).squaredNorm(); }

struct UStep {
  Vec u;
  double objective = kInf;
};

/// argmin_u h|u − u₀|² + J_θ(u)/ε from a warm start.
/// A probe accepts a stalled minimization, whose value still bounds the reduced objective from above.
UStep u_step(const InverseProblem& prob, const Vec& theta, double eps, const Vec& start, bool probe = false) {
  const EllipticProblem P = forward(prob, theta);
  const int n = prob.mesh.n;
  const double h = prob.mesh.h();
  AffineSum S(n);
  const LinMap U = var_block(0, n);
  S.embed(elliptic_functional(P, P.flux_potential(false)), U, 1.0 / eps);
  S.add(ConvexFunction::quadratic(2.0 * h * Mat::Identity(n, n), -2.0 * h * prob.observed,
                                  h * prob.observed.squaredNorm()),
        U);
  Vec v = Vec::Zero(S.num_vars());
  v.head(n) = start;
  const auto m = S.minimize(v);
  if (m.unbounded) fail(ErrorKind::NotCoercive, "penalized functional unbounded below");
  if (!m.converged && !probe) {
    std::ostringstream os;
    os << "u-step at theta = " << theta.transpose() << ", eps = " << eps << ": " << m.method << " stopped at "
       << m.value << " after " << m.iterations << " iterations";
    fail(ErrorKind::NoConvergence, os.str());
  }
  return {m.v.head(n), m.value};
}

/// Golden-section search of f over [a, b].
double golden(const std::function<double(double)>& f, double a, double b, double tol) {
  const double r = 0.5 * (std::sqrt(5.0) - 1.0);
  double c = b - r * (b - a), d = a + r * (b - a);
  double fc = f(c), fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - r * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + r * (b - a);
      fd = f(d);
    }
  }
  return 0.5 * (a + b);
}

/// Largest s with lo ≤ t + s·d ≤ hi, for s of the given sign.
double reach(const ParamClass& C, const Vec& t, const Vec& d, double sign) {
  double s = kInf;
  for (int i = 0; i < C.dim(); ++i) {
    const double di = sign * d[i];
    if (di > 0.0) s = std::min(s, (C.upper[i] - t[i]) / di);
    if (di < 0.0) s = std::min(s, (C.lower[i] - t[i]) / di);
  }
  return std::max(0.0, s);
}

/// Golden-section line search of the reduced objective θ ↦ min_u 𝒫_ε(θ, u) along d from t.
/// The bracket starts at ±radius and widens while the minimizer sits on an interior bracket edge.
Vec line_search(const InverseProblem& prob, const Vec& t, const Vec& d, double eps, const Vec& u, double& radius,
                double& f_t) {
  const ParamClass& C = prob.family;
  const double norm = d.lpNorm<Eigen::Infinity>();
  if (norm == 0.0) return t;
  const Vec dir = d / norm;
  auto f = [&](double s) {
    const Vec trial = t + s * dir;
    if (!C.admissible(trial)) return kInf;
    return u_step(prob, trial, eps, u, true).objective;
  };
  const double lo = -reach(C, t, dir, -1.0), hi = reach(C, t, dir, 1.0);
  const double tol = 0.1 * prob.tol_theta;
  double s = 0.0;
  for (;;) {
    const double a = std::max(lo, -radius), b = std::min(hi, radius);
    if (b - a <= tol) break;
    s = golden(f, a, b, tol);
    const bool at_edge = (s - a < 2.0 * tol && a > lo) || (b - s < 2.0 * tol && b < hi);
    if (!at_edge) break;
    radius *= 4.0;
  }
  const double fs = f(s);
  if (!(fs <= f_t)) return t;
  radius = std::max(4.0 * std::abs(s), 10.0 * tol);
  f_t = fs;
  return t + s * dir;
}

/// One round of Powell's conjugate-direction method on the reduced objective: a line search
/// along each stored direction, then one along the net displacement, which replaces the
/// direction of largest decrease.
Vec powell_round(const InverseProblem& prob, const Vec& theta, double eps, Vec& u, std::vector<Vec>& dirs,
                 std::vector<double>& radius) {
  Vec t = theta;
  double f = u_step(prob, t, eps, u, true).objective;
  const double f0 = f;
  int best = -1;
  double best_drop = 0.0;
  for (std::size_t k = 0; k < dirs.size(); ++k) {
    const double before = f;
    t = line_search(prob, t, dirs[k], eps, u, radius[k], f);
    if (before - f > best_drop) {
      best_drop = before - f;
      best = static_cast<int>(k);
    }
  }
  const Vec net = t - theta;
  if (best >= 0 && net.lpNorm<Eigen::Infinity>() > 0.0 && f < f0) {
    double r = std::max(2.0 * net.lpNorm<Eigen::Infinity>(), 10.0 * prob.tol_theta);
    t = line_search(prob, t, net, eps, u, r, f);
    dirs.erase(dirs.begin() + best);
    radius.erase(radius.begin() + best);
    dirs.push_back(net);
    radius.push_back(r);
  }
  u = u_step(prob, t, eps, u).u;
  return t;
}

}  // namespace

double inverse_objective(const InverseProblem& prob, const Vec& theta, const Vec& u, double eps) {
  return misfit(prob, u) + penalty(prob, theta, u) / eps;
}

nlohmann::json InverseReport::to_json() const {
  nlohmann::json st = nlohmann::json::array();
  for (const auto& s : stages)
    st.push_back({{"eps", s.eps},
                  {"theta", vec_json(s.theta)},
                  {"misfit", s.misfit},
                  {"penalty", s.penalty},
                  {"objective", s.objective},
                  {"rounds", s.rounds},
                  {"converged", s.converged}});
  return {{"theta", vec_json(theta)}, {"stages", st}, {"penalty_monotone", penalty_monotone}, {"warnings", warnings}};
}

InverseReport fit_operator(const InverseProblem& prob) {
  prob.validate();
  const ParamClass& C = prob.family;
  InverseReport rep;
  Vec theta = prob.theta_start.size() ? prob.theta_start : Vec(0.5 * (C.lower + C.upper));
  if (!C.admissible(theta)) fail(ErrorKind::ClassInfeasible, "centre of the parameter box is not admissible");

  if ((C.upper - C.lower).maxCoeff() <= 0.0) {
    rep.theta = theta;
    rep.u = solve_elliptic(forward(prob, theta), {1.0, false, false}).u;
    InverseStage s;
    s.theta = theta;
    s.misfit = misfit(prob, rep.u);
    s.penalty = penalty(prob, theta, rep.u);
    s.eps = prob.eps_schedule.back();
    s.objective = s.misfit + s.penalty / s.eps;
    s.converged = true;
    rep.stages.push_back(s);
    return rep;
  }

  Vec u = prob.observed;
  std::vector<Vec> dirs;
  std::vector<double> radius;
  for (int i = 0; i < C.dim(); ++i) {
    if (C.upper[i] <= C.lower[i]) continue;
    dirs.push_back(Vec::Unit(C.dim(), i));
    radius.push_back(0.25 * (C.upper[i] - C.lower[i]));
  }
  for (double eps : prob.eps_schedule) {
    InverseStage s;
    s.eps = eps;
    u = u_step(prob, theta, eps, u).u;
    for (s.rounds = 0; s.rounds < prob.max_rounds;) {
      const Vec next = powell_round(prob, theta, eps, u, dirs, radius);
      ++s.rounds;
      const double move = (next - theta).lpNorm<Eigen::Infinity>();
      theta = next;
      if (move <= prob.tol_theta) {
        s.converged = true;
        break;
      }
    }
    s.theta = theta;
    s.misfit = misfit(prob, u);
    s.penalty = penalty(prob, theta, u);
    s.objective = s.misfit + s.penalty / eps;
    if (!rep.stages.empty() && s.penalty > rep.stages.back().penalty + 1e-12) rep.penalty_monotone = false;
    if (!s.converged) {
      std::ostringstream os;
      os << "epsilon " << eps << ": parameter search stopped after " << s.rounds << " rounds";
      rep.warnings.push_back(os.str());
    }
    rep.stages.push_back(s);
  }
  rep.theta = theta;
  rep.u = u;
  const double last = rep.stages.back().penalty;
  if (!(last <= prob.tol_penalty)) {
    std::ostringstream os;
    os << "penalty " << last << " at epsilon " << prob.eps_schedule.back() << " exceeds " << prob.tol_penalty;
    fail(ErrorKind::ClassInfeasible, os.str());
  }
  return rep;
}

}  // namespace selfdual
