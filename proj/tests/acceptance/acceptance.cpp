// Acceptance suite: one PASS/FAIL line per criterion.
//   selfdual_acceptance            run all criteria
//   selfdual_acceptance 3 5        run criteria 3 and 5
#include "selfdual/calculus.hpp"
#include "selfdual/inverse.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace selfdual;

namespace {

struct Check {
  bool pass = true;
  std::ostringstream detail;

  /// Records `what = value` against an upper bound.
  void at_most(const std::string& what, double value, double bound) {
    const bool ok = value <= bound;
    pass = pass && ok;
    detail << what << '=' << value << (ok ? " <= " : " > ") << bound << "; ";
  }
  void at_least(const std::string& what, double value, double bound) {
    const bool ok = value >= bound;
    pass = pass && ok;
    detail << what << '=' << value << (ok ? " >= " : " < ") << bound << "; ";
  }
  void holds(const std::string& what, bool ok) {
    pass = pass && ok;
    detail << what << (ok ? " ok" : " FAILED") << "; ";
  }
};

// Every certificate produced during the run, for the non-negativity check.
std::vector<std::pair<std::string, double>> g_certs;
void record(const std::string& name, const Certificate& c) { g_certs.emplace_back(name, c.value); }

Vec v1(double a) { return Vec::Constant(1, a); }
Vec v2(double a, double b) {
  Vec v(2);
  v << a, b;
  return v;
}

Mat skew_rotation() {
  Mat G(2, 2);
  G << 0.0, -1.0, 1.0, 0.0;
  return G;
}

Mat positive_b() {
  Mat B(2, 2);
  B << 1.0, -1.0, 1.0, 1.0;
  return B;
}

struct Catalog {
  std::string name;
  Lagrangian L;
};

std::vector<Catalog> catalog() {
  return {{"quadratic identity", Lagrangian::sum_form(ConvexFunction::half_squared_norm(1))},
          {"quartic", Lagrangian::sum_form(ConvexFunction::power_norm(4.0, 1.0, 1))},
          {"skew sum form", Lagrangian::sum_form(ConvexFunction::half_squared_norm(2), skew_rotation())},
          {"linear positive", potential_for(MonotoneOperator::linear_positive(positive_b()))}};
}

MonotoneOperator identity_op(int d = 1) { return MonotoneOperator::grad_convex(ConvexFunction::half_squared_norm(d)); }

MonotoneOperator cubic_flux() {
  return MonotoneOperator::grad_convex(
      ConvexFunction::sum(ConvexFunction::half_squared_norm(1), ConvexFunction::power_norm(4.0, 1.0, 1)));
}

// ---------------------------------------------------------------- 1

Check selfduality_suite() {
  Check c;
  for (const auto& [name, L] : catalog()) {
    const SelfdualReport r = selfdual_residual(L, -3.0, 3.0, 65);
    c.at_most(name + " residual", r.residual, 1e-6);
    c.at_most(name + " fenchel", r.fenchel_violation, 1e-8);
  }
  return c;
}

// ---------------------------------------------------------------- 2

Check pipeline() {
  Check c;
  const MonotoneGraph G = MonotoneGraph::sample_1d([](double y) { return y; }, -2.0, 2.0, 81);
  const Lagrangian F = fitzpatrick(G);
  const Lagrangian N = proximal_average(F);
  c.at_most("residual", selfdual_residual(N, -2.0, 2.0, 65).residual, 2e-2);
  const FieldValue f = sd_field(N, v1(1.0), LagrangianTolerances::gap_pipeline);
  c.holds("field at 1 nonempty", !f.empty());
  if (!f.empty()) c.at_most("|field(1) - 1|", std::abs(f.representatives.front()[0] - 1.0), 5e-2);
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  double slack = kInf;
  for (int k = 0; k < 100; ++k) {
    const Vec x = v1(U(rng)), p = v1(U(rng));
    const double lo = lag_value(F, x, p), mid = lag_value(N, x, p), hi = lag_conjugate_value(F, p, x);
    slack = std::min({slack, mid - lo, hi - mid});
  }
  c.at_least("bracket slack", slack, -1e-8);
  return c;
}

// ---------------------------------------------------------------- 3

Check zero_infimum() {
  Check c;
  SolveOptions opts;
  opts.tol_gap = 1e-8;
  {
    const SolveResult r = solve_static(Lagrangian::sum_form(ConvexFunction::half_squared_norm(1)), v1(3.0), opts);
    record("solve identity", r.cert);
    c.at_most("identity cert", r.cert.value, 1e-8);
    c.at_most("identity error", std::abs(r.x[0] - 3.0), 1e-6);
  }
  {
    // x³ = 1 by bisection.
    double a = 0.0, b = 2.0;
    for (int k = 0; k < 200; ++k) {
      const double m = 0.5 * (a + b);
      (m * m * m < 1.0 ? a : b) = m;
    }
    const SolveResult r = solve_static(Lagrangian::sum_form(ConvexFunction::power_norm(4.0, 1.0, 1)), v1(1.0), opts);
    record("solve quartic", r.cert);
    c.at_most("quartic cert", r.cert.value, 1e-8);
    c.at_most("quartic error", std::abs(r.x[0] - 0.5 * (a + b)), 1e-6);
  }
  {
    // (I + Γ)⁻¹p by the 2×2 inverse formula.
    const Mat M = Mat::Identity(2, 2) + skew_rotation();
    const double det = M(0, 0) * M(1, 1) - M(0, 1) * M(1, 0);
    const Vec p = v2(0.0, 1.0);
    const Vec want = v2((M(1, 1) * p[0] - M(0, 1) * p[1]) / det, (-M(1, 0) * p[0] + M(0, 0) * p[1]) / det);
    const SolveResult r =
        solve_static(Lagrangian::sum_form(ConvexFunction::half_squared_norm(2), skew_rotation()), p, opts);
    record("solve skew", r.cert);
    c.at_most("skew cert", r.cert.value, 1e-8);
    c.at_most("skew error", (r.x - want).lpNorm<Eigen::Infinity>(), 1e-6);
  }
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> U(-3.0, 3.0);
  for (const auto& [name, L] : catalog()) {
    double worst = -kInf;
    int failures = 0;
    for (int k = 0; k < 20; ++k) {
      Vec p(L.dim());
      for (int i = 0; i < p.size(); ++i) p[i] = U(rng);
      const RegularizedResult r = solve_regularized(L, p, opts);
      record("regularized " + name, r.cert);
      worst = std::max(worst, r.cert.value);
      if (!(r.cert.value <= 1e-8)) ++failures;
    }
    c.at_most(name + " regularized worst cert", worst, 1e-8);
    c.holds(name + " 20/20 regularized", failures == 0);
  }
  return c;
}

// ---------------------------------------------------------------- 4

double field_error(const Lagrangian& L, const Vec& x, const Vec& want) {
  const FieldValue f = sd_field(L, x, 1e-8);
  if (f.empty()) return kInf;
  return (f.representatives.front() - want).lpNorm<Eigen::Infinity>();
}

Check calculus_suite() {
  Check c;
  const Lagrangian id = Lagrangian::sum_form(ConvexFunction::half_squared_norm(1));
  const Lagrangian quartic = Lagrangian::sum_form(ConvexFunction::power_norm(4.0, 1.0, 1));
  const Lagrangian id2 = Lagrangian::sum_form(ConvexFunction::half_squared_norm(2));
  const Mat G = skew_rotation();
  Mat A(1, 1);
  A << 0.7;

  const double lambda = 2.0, q = 1.0;
  const Lagrangian scaled = transform(quartic, TransformSpec::scale(lambda));
  const Lagrangian shifted = transform(quartic, TransformSpec::translate_range(v1(q)));
  const Lagrangian skewed = transform(id2, TransformSpec::add_skew(G));
  const Lagrangian opsum = combine({quartic, id}, CombineSpec::op_sum());
  const Lagrangian conv = combine({id, id}, CombineSpec::op_convolve());
  const Lagrangian dsum = combine({quartic, id}, CombineSpec::direct_sum());
  const Lagrangian cross = combine({quartic, id}, CombineSpec::cross_coupling(A));

  const std::vector<std::pair<std::string, const Lagrangian*>> outputs{
      {"Scale", &scaled},     {"TranslateRange", &shifted}, {"AddSkew", &skewed},       {"OpSum", &opsum},
      {"OpConvolve", &conv}, {"DirectSum", &dsum},         {"CrossCoupling", &cross}};
  for (const auto& [name, L] : outputs) c.at_most(name + " residual", selfdual_residual(*L, -2.0, 2.0, 21).residual, 1e-5);

  // Field algebra against the operator formulas.
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  auto cube = [](double x) { return x * x * x; };
  double e_scale = 0, e_shift = 0, e_skew = 0, e_sum = 0, e_conv = 0, e_dsum = 0, e_cross = 0;
  for (int k = 0; k < 20; ++k) {
    const double a = U(rng), b = U(rng);
    e_scale = std::max(e_scale, field_error(scaled, v1(a), v1(lambda * cube(a / lambda))));
    e_shift = std::max(e_shift, field_error(shifted, v1(a), v1(cube(a) - q)));
    e_skew = std::max(e_skew, field_error(skewed, v2(a, b), v2(a, b) + G * v2(a, b)));
    e_sum = std::max(e_sum, field_error(opsum, v1(a), v1(cube(a) + a)));
    e_conv = std::max(e_conv, field_error(conv, v1(a), v1(0.5 * a)));
    e_dsum = std::max(e_dsum, field_error(dsum, v2(a, b), v2(cube(a), b)));
    e_cross = std::max(e_cross, field_error(cross, v2(a, b), v2(cube(a) - A(0, 0) * b, b + A(0, 0) * a)));
  }
  c.at_most("Scale field", e_scale, 1e-6);
  c.at_most("TranslateRange field", e_shift, 1e-6);
  c.at_most("AddSkew field", e_skew, 1e-6);
  c.at_most("OpSum field", e_sum, 1e-6);
  c.at_most("OpConvolve field", e_conv, 1e-6);
  c.at_most("DirectSum field", e_dsum, 1e-6);
  c.at_most("CrossCoupling field", e_cross, 1e-6);
  return c;
}

// ---------------------------------------------------------------- 5

Check evolution() {
  Check c;
  const MonotoneOperator T = identity_op();
  const TimeDependentOperator Tt = TimeDependentOperator::stationary(T);
  const BoundaryOp B = BoundaryOp::initial_value(v1(1.0));
  const auto exact = [](double t) { return v1(std::exp(-t)); };
  const TimeGrid g{1.0, 64};
  const EvolutionResult r = solve_evolution(Tt, B, g);
  record("evolution", r.cert);
  const double err = r.u.sup_distance(exact);
  double gap = 0.0;
  for (double x : r.interval_gaps) gap = std::max(gap, std::abs(x));
  c.at_most("sup error", err, 0.05);
  c.at_most("interval gaps", gap, 1e-4);
  c.at_most("|u0 - x0|", std::abs(r.u.u.front()[0] - 1.0), 1e-4);
  const EvolutionResult r2 = solve_evolution(Tt, B, TimeGrid{1.0, 128});
  record("evolution half step", r2.cert);
  c.at_least("halving ratio", err / r2.u.sup_distance(exact), 1.8);
  // x_{k+1} = x_k/(1 + Δt) for T = id.
  double ie = 0.0, x = 1.0;
  for (int k = 0; k <= g.steps; ++k, x /= 1.0 + g.dt()) ie = std::max(ie, std::abs(r.u.u[k][0] - x));
  c.at_most("implicit Euler gap", ie, 2.0 * g.dt());
  return c;
}

// ---------------------------------------------------------------- 6

Check semigroup() {
  Check c;
  const MonotoneOperator T = MonotoneOperator::linear_positive(positive_b());
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  double worst = 0.0;
  for (double omega : {0.0, 1.0})
    for (double t : {0.5, 1.0})
      for (int k = 0; k < 10; ++k) {
        const Vec x = v2(U(rng), U(rng)), y = v2(U(rng), U(rng));
        Certificate cx, cy;
        const Vec sx = semigroup_flow(T, omega, x, t, 64, &cx);
        const Vec sy = semigroup_flow(T, omega, y, t, 64, &cy);
        record("semigroup", cx);
        record("semigroup", cy);
        worst = std::max(worst, (sx - sy).norm() / (std::exp(-omega * t) * (x - y).norm()));
      }
  c.at_most("contraction ratio", worst, 1.0 + 1e-3);
  const MonotoneOperator I = identity_op();
  const Vec half = semigroup_flow(I, 0.0, semigroup_flow(I, 0.0, v1(1.0), 0.5, 32), 0.5, 32);
  const Vec full = semigroup_flow(I, 0.0, v1(1.0), 1.0, 64);
  c.at_most("composition error", (half - full).norm(), 1e-3);
  return c;
}

// ---------------------------------------------------------------- 7

Check connection() {
  Check c;
  const TimeDependentOperator Tt = TimeDependentOperator::stationary(identity_op(2));
  const MonotoneOperator S1 = MonotoneOperator::grad_convex(ConvexFunction::quadratic(Mat::Identity(1, 1), v1(-1.0)));
  const TimeGrid g{1.0, 64};
  const ConnectResult r = connect_graphs(Tt, S1, identity_op(), g);
  record("connect", r.cert);
  const double eu = r.u.sup_distance([](double t) { return v1(-0.5 * std::exp(-t)); });
  const double ev = r.v.sup_distance([](double t) { return v1(0.5 * std::exp(-t)); });
  c.at_most("sup error", std::max(eu, ev), 0.05);
  c.at_most("certificate", r.cert.value, 1e-4);
  const ConnectResult z = connect_graphs(Tt, identity_op(), identity_op(), g);
  record("connect symmetric", z.cert);
  const auto zero = [](double) { return Vec::Zero(1); };
  c.at_most("symmetric sup", std::max(z.u.sup_distance(zero), z.v.sup_distance(zero)), 1e-4);
  return c;
}

// ---------------------------------------------------------------- 8

Check elliptic() {
  Check c;
  const Mesh1D mesh{1.0, 127};
  EllipticProblem P;
  P.T = identity_op();
  P.mesh = mesh;
  P.g = mesh.sample([](double x) { return M_PI * M_PI * std::sin(M_PI * x); });
  const EllipticResult r = solve_elliptic(P);
  record("elliptic sine", r.cert);
  const Vec ex = mesh.sample([](double x) { return std::sin(M_PI * x); });
  c.at_most("sine relative L2", (r.u - ex).norm() / ex.norm(), 1e-3);

  EllipticProblem Q;
  Q.T = cubic_flux();
  Q.lambda = 1.0;
  Q.mesh = mesh;
  Q.g = mesh.sample([](double x) { return 2.0 + 6.0 * (1 - 2 * x) * (1 - 2 * x) + x * (1 - x); });
  const EllipticResult q = solve_elliptic(Q);
  record("elliptic cubic", q.cert);
  const Vec us = mesh.sample([](double x) { return x * (1 - x); });
  c.at_most("cubic sup error", (q.u - us).lpNorm<Eigen::Infinity>(), 1e-3);
  const Vec un = solve_elliptic_newton([](double y) { return y + y * y * y; }, 1.0, Q.g, mesh);
  c.at_most("Newton agreement", (un - q.u).lpNorm<Eigen::Infinity>(), 1e-6);
  const SolveResult sb = superposed_solve(elliptic_block_system(Q));
  record("elliptic blocks", sb.cert);
  c.at_most("block agreement", (sb.x - q.u).lpNorm<Eigen::Infinity>(), 1e-8);
  return c;
}

// ---------------------------------------------------------------- 9

Check parabolic() {
  Check c;
  const Mesh1D m{1.0, 31};
  EllipticProblem H;
  H.T = identity_op();
  H.mesh = m;
  H.g = Vec::Zero(m.n);
  const Vec s0 = m.sample([](double x) { return std::sin(M_PI * x); });
  const TimeGrid g{1.0, 64};
  const ParabolicResult pr = solve_parabolic(H, BoundaryOp::initial_value(s0), g);
  record("heat", pr.cert);
  double worst = 0.0;
  for (int k = 0; k <= g.steps && g.node(k) <= 0.2 + 1e-12; ++k) {
    const Vec e = std::exp(-M_PI * M_PI * g.node(k)) * s0;
    worst = std::max(worst, (pr.u[k] - e).lpNorm<Eigen::Infinity>() / e.lpNorm<Eigen::Infinity>());
  }
  c.at_most("heat sup-relative error", worst, 0.05);
  H.g = M_PI * M_PI * s0;
  const ParabolicResult ps = solve_parabolic(H, BoundaryOp::initial_value(s0), g);
  record("stationary", ps.cert);
  double drift = 0.0;
  for (const Vec& u : ps.u) drift = std::max(drift, (u - s0).lpNorm<Eigen::Infinity>() / s0.lpNorm<Eigen::Infinity>());
  c.at_most("stationary drift", drift, 0.02);
  return c;
}

// ---------------------------------------------------------------- 10

Check inverse() {
  Check c;
  InverseProblem ip;
  ip.mesh = Mesh1D{1.0, 31};
  ip.lambda = 1.0;
  ip.g = ip.mesh.sample([](double x) { return 10.0 * std::sin(M_PI * x) + 5.0 * x; });
  ip.family = ParamClass::cubic(v2(0.0, 0.0), v2(2.0, 2.0));
  const Vec truth = v2(1.0, 0.5);
  EllipticProblem P;
  P.T = ip.family.build(truth);
  P.lambda = ip.lambda;
  P.g = ip.g;
  P.mesh = ip.mesh;
  const EllipticResult fwd = solve_elliptic(P);
  record("inverse forward", fwd.cert);
  ip.observed = fwd.u;
  const InverseReport r = fit_operator(ip);
  c.at_most("|theta - theta*|", (r.theta - truth).lpNorm<Eigen::Infinity>(), 0.05);
  c.holds("penalty non-increasing", r.penalty_monotone);
  c.at_most("final misfit", r.stages.back().misfit, 1e-6);
  c.at_most("final penalty", r.stages.back().penalty, ip.tol_penalty);
  for (const auto& s : r.stages) {
    Certificate pc;
    pc.value = s.penalty;
    record("inverse penalty", pc);
  }
  return c;
}

// ---------------------------------------------------------------- 11

Check numerics() {
  Check c;
  std::mt19937_64 rng(kDefaultSeed);
  std::uniform_real_distribution<double> U(-1.5, 1.5);
  auto random_vec = [&](int d) {
    Vec v(d);
    for (int i = 0; i < d; ++i) v[i] = U(rng);
    return v;
  };
  auto fd_check = [&](const std::function<double(const Vec&)>& f, const std::function<Vec(const Vec&)>& grad, int d) {
    double worst = 0.0;
    for (int k = 0; k < 50; ++k) {
      const Vec x = random_vec(d);
      const Vec g = grad(x);
      for (int i = 0; i < d; ++i) {
        const double h = 1e-5 * std::max(1.0, std::abs(x[i]));
        Vec xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        const double fd = (f(xp) - f(xm)) / (2.0 * h);
        worst = std::max(worst, std::abs(fd - g[i]) / std::max(1.0, std::abs(g[i])));
      }
    }
    return worst;
  };

  Mat Q(3, 3);
  Q << 2.0, 0.5, 0.0, 0.5, 1.0, 0.2, 0.0, 0.2, 3.0;
  const ConvexFunction quart2 = ConvexFunction::power_norm(4.0, 1.0, 2);
  const std::vector<std::pair<std::string, ConvexFunction>> fns{
      {"quadratic", ConvexFunction::quadratic(Q, Vec::Constant(3, 0.3), 1.0)},
      {"power 4", quart2},
      {"power 3", ConvexFunction::power_norm(3.0, 2.0, 3)},
      {"affine", ConvexFunction::affine(quart2, 2.0, 0.5, v2(0.1, -0.2), v2(1.0, 1.0), 0.0)},
      {"sum", ConvexFunction::sum(ConvexFunction::half_squared_norm(2), quart2)},
      {"numeric conjugate", ConvexFunction::numeric_conjugate(ConvexFunction::sum(ConvexFunction::half_squared_norm(2), quart2))}};
  for (const auto& [name, f] : fns)
    c.at_most(name + " gradient", fd_check([&](const Vec& x) { return f.value(x); }, [&](const Vec& x) { return f.gradient(x); }, f.dim()), 1e-5);

  // Gradient of a solver functional: the cubic elliptic gap on a small mesh, aux included.
  EllipticProblem Qp;
  Qp.T = cubic_flux();
  Qp.lambda = 1.0;
  Qp.mesh = Mesh1D{1.0, 7};
  Qp.g = Qp.mesh.sample([](double x) { return 1.0 + x; });
  const AffineSum J = elliptic_functional(Qp, Qp.flux_potential(false));
  c.at_most("elliptic functional gradient",
            fd_check([&](const Vec& v) { return J.eval(v); }, [&](const Vec& v) { return J.gradient(v); }, J.num_vars()),
            1e-5);

  // Certificates from a fresh set of solves plus everything recorded earlier in this run.
  record("static", solve_static(catalog()[1].L, v1(2.0)).cert);
  record("evolution", solve_evolution(TimeDependentOperator::stationary(identity_op()), BoundaryOp::initial_value(v1(1.0)),
                                      TimeGrid{1.0, 32})
                          .cert);
  record("elliptic", solve_elliptic(Qp).cert);
  double lowest = kInf;
  std::string where;
  for (const auto& [name, v] : g_certs)
    if (v < lowest) lowest = v, where = name;
  c.detail << "certificates=" << g_certs.size() << " lowest at " << where << "; ";
  c.at_least("lowest certificate", lowest, -1e-8);
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Check()>>> criteria{
      {"selfduality suite", selfduality_suite},
      {"fitzpatrick pipeline", pipeline},
      {"zero-infimum solving", zero_infimum},
      {"calculus suite", calculus_suite},
      {"evolution", evolution},
      {"semigroup", semigroup},
      {"two-graph connection", connection},
      {"elliptic", elliptic},
      {"parabolic", parabolic},
      {"inverse", inverse},
      {"cross-cutting numerics", numerics}};
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const int id = std::atoi(argv[i]);
    if (id < 1 || id > static_cast<int>(criteria.size())) {
      std::cerr << "unknown criterion " << argv[i] << '\n';
      return 2;
    }
    ids.push_back(id);
  }
  if (ids.empty())
    for (int i = 1; i <= static_cast<int>(criteria.size()); ++i) ids.push_back(i);

  int failed = 0;
  for (int id : ids) {
    const auto& [name, run] = criteria[id - 1];
    const auto t0 = std::chrono::steady_clock::now();
    Check c;
    try {
      c = run();
    } catch (const std::exception& e) {
      c.pass = false;
      c.detail << "threw " << e.what() << "; ";
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %2d %s  %s (%.1fs): %s\n", id, c.pass ? "PASS" : "FAIL", name.c_str(), secs,
                c.detail.str().c_str());
    std::fflush(stdout);
    if (!c.pass) ++failed;
  }
  return failed ? 1 : 0;
}
