#include "selfdual/cli.hpp"

#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

namespace selfdual::cli {

using nlohmann::json;

namespace {

[[noreturn]] void bad(const std::string& at, const std::string& what) { throw ConfigError(at, what); }

const std::string kP = "/problem";

std::string at(const std::string& key) { return kP + "/" + key; }

bool has(const json& j, const std::string& key) { return j.contains(key); }

const json& need(const json& j, const std::string& key) {
  if (!has(j, key)) bad(kP, "missing field '" + key + "'");
  return j.at(key);
}

double number(const json& j, const std::string& key, double def) {
  if (!has(j, key)) return def;
  if (!j.at(key).is_number()) bad(at(key), "expected a number");
  return j.at(key).get<double>();
}

int integer(const json& j, const std::string& key, int def) {
  if (!has(j, key)) return def;
  if (!j.at(key).is_number_integer()) bad(at(key), "expected an integer");
  return j.at(key).get<int>();
}

bool flag(const json& j, const std::string& key, bool def) {
  if (!has(j, key)) return def;
  if (!j.at(key).is_boolean()) bad(at(key), "expected true or false");
  return j.at(key).get<bool>();
}

Vec vec(const json& j, const std::string& key) {
  try {
    return json_vec(need(j, key));
  } catch (const Error& e) {
    bad(at(key), e.what());
  }
}

std::vector<Vec> point_list(const json& j, const std::string& key) {
  std::vector<Vec> out;
  if (!has(j, key)) return out;
  const json& v = j.at(key);
  if (!v.is_array()) bad(at(key), "expected an array of points");
  for (std::size_t k = 0; k < v.size(); ++k) {
    try {
      out.push_back(json_vec(v[k]));
    } catch (const Error& e) {
      bad(at(key) + "/" + std::to_string(k), e.what());
    }
  }
  return out;
}

double tolerance(const ExperimentConfig& cfg, const std::string& key, double def) {
  return cfg.tolerances.contains(key) ? cfg.tolerances.at(key).get<double>() : def;
}

json finite_or_string(double v) { return std::isfinite(v) ? json(v) : json(v > 0 ? "inf" : "-inf"); }

/// Gap certificates may undershoot zero by roundoff only.
bool cert_ok(const Certificate& c, double tol) { return std::isfinite(c.value) && c.value <= tol && c.value >= -1e-8; }

json cert_json(const Certificate& c, double tol) {
  json j = certificate_json(c);
  j["tolerance"] = tol;
  j["met"] = cert_ok(c, tol);
  return j;
}

Lagrangian lagrangian_or_potential(const json& p) {
  if (has(p, "lagrangian")) return build_lagrangian(p.at("lagrangian"), at("lagrangian"));
  if (has(p, "operator")) {
    const MonotoneOperator T = build_operator(p.at("operator"), at("operator"));
    try {
      return potential_for(T);
    } catch (const Error& e) {
      bad(at("operator"), e.what());
    }
  }
  bad(kP, "expected 'lagrangian' or 'operator'");
}

TimeGrid time_grid(const json& p) {
  TimeGrid g;
  if (has(p, "grid")) {
    const json& gj = p.at("grid");
    if (!gj.is_object()) bad(at("grid"), "expected an object");
    if (gj.contains("t_end")) {
      if (!gj["t_end"].is_number()) bad(at("grid") + "/t_end", "expected a number");
      g.t_end = gj["t_end"].get<double>();
    }
    if (gj.contains("steps")) {
      if (!gj["steps"].is_number_integer()) bad(at("grid") + "/steps", "expected an integer");
      g.steps = gj["steps"].get<int>();
    }
  }
  try {
    g.validate();
  } catch (const Error& e) {
    bad(at("grid"), e.what());
  }
  return g;
}

Mesh1D mesh(const json& p) {
  Mesh1D m;
  if (has(p, "mesh")) {
    const json& mj = p.at("mesh");
    if (!mj.is_object()) bad(at("mesh"), "expected an object");
    if (mj.contains("length")) {
      if (!mj["length"].is_number()) bad(at("mesh") + "/length", "expected a number");
      m.length = mj["length"].get<double>();
    }
    if (mj.contains("n")) {
      if (!mj["n"].is_number_integer()) bad(at("mesh") + "/n", "expected an integer");
      m.n = mj["n"].get<int>();
    }
  }
  try {
    m.validate();
  } catch (const Error& e) {
    bad(at("mesh"), e.what());
  }
  return m;
}

Vec mesh_data(const json& p, const std::string& key, const Mesh1D& m) {
  return build_mesh_data(need(p, key), at(key), m);
}

std::vector<std::string> indexed(const std::string& stem, int d) {
  std::vector<std::string> out;
  for (int i = 1; i <= d; ++i) out.push_back(stem + "_" + std::to_string(i));
  return out;
}

std::vector<double> row_of(std::initializer_list<Vec> parts, std::vector<double> head = {}) {
  for (const Vec& v : parts) head.insert(head.end(), v.data(), v.data() + v.size());
  return head;
}

CsvTable path_table(const Path& u, const std::string& stem) {
  CsvTable t;
  t.header = {"t"};
  for (auto& h : indexed(stem, u.dim())) t.header.push_back(h);
  for (int k = 0; k <= u.steps(); ++k) t.rows.push_back(row_of({u.u[k]}, {u.grid.node(k)}));
  return t;
}

// ---------------------------------------------------------------- commands

Outcome check_selfdual(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const Lagrangian L = build_lagrangian(need(p, "lagrangian"), at("lagrangian"));
  const double lo = number(p, "lower", -3.0), hi = number(p, "upper", 3.0);
  const int nodes = integer(p, "nodes", 65);
  const double tol_res = tolerance(cfg, "residual", LagrangianTolerances::gap_analytic);
  const double tol_fen = tolerance(cfg, "fenchel", 1e-8);
  const SelfdualReport r = selfdual_residual(L, lo, hi, nodes);
  Outcome o;
  const bool ok = r.residual <= tol_res && r.fenchel_violation <= tol_fen;
  o.report = {{"lagrangian", L.describe()},
              {"residual", r.residual},
              {"fenchel_violation", r.fenchel_violation},
              {"probes", r.probes},
              {"worst_x", vec_json(r.worst_x)},
              {"worst_p", vec_json(r.worst_p)},
              {"tolerances", {{"residual", tol_res}, {"fenchel", tol_fen}}},
              {"passed", ok}};
  o.csv = CsvTable{{"residual", "fenchel_violation", "probes"},
                   {{r.residual, r.fenchel_violation, static_cast<double>(r.probes)}}};
  o.exit_code = ok ? 0 : 1;
  return o;
}

json field_rows(const Lagrangian& L, const std::vector<Vec>& xs, double tol, CsvTable& table, bool& ok) {
  json out = json::array();
  const int d = L.dim();
  table.header = indexed("x", d);
  for (auto& h : indexed("p", d)) table.header.push_back(h);
  table.header.push_back("gap");
  for (const Vec& x : xs) {
    require_dim(x.size(), d, "field point");
    const FieldValue f = sd_field(L, x, tol);
    const Vec p = f.empty() ? Vec::Constant(d, std::nan("")) : f.representatives.front();
    out.push_back({{"x", vec_json(x)}, {"p", vec_json(p)}, {"gap", finite_or_string(f.gap)}});
    table.rows.push_back(row_of({x, p}, {}));
    table.rows.back().push_back(f.gap);
    ok = ok && !f.empty();
  }
  return out;
}

Outcome fitzpatrick_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  MonotoneGraph g;
  if (has(p, "graph")) {
    const MonotoneOperator T = build_operator(p.at("graph"), at("graph"));
    if (T.kind() != MonotoneOperator::Kind::Sampled) bad(at("graph"), "expected a sampled operator");
    g = T.graph();
  } else {
    const MonotoneOperator T = build_operator(need(p, "operator"), at("operator"));
    std::mt19937_64 rng(cfg.seed);
    g = T.sample_pairs(integer(p, "samples", 81), rng, number(p, "radius", 2.0));
  }
  try {
    g.validate();
  } catch (const Error& e) {
    bad(has(p, "graph") ? at("graph") : at("operator"), e.what());
  }
  const int d = g.dim();
  const double lo = number(p, "lower", -2.0), hi = number(p, "upper", 2.0);
  const int nodes = integer(p, "nodes", 65);
  const int nprobe = integer(p, "bracket_probes", 100);
  const double tol_res = tolerance(cfg, "residual", 2e-2);
  const double tol_br = tolerance(cfg, "bracket", 1e-8);
  const double tol_gap = tolerance(cfg, "field_gap", LagrangianTolerances::gap_pipeline);

  const Lagrangian F = fitzpatrick(g);
  const Lagrangian N = proximal_average(F);
  const SelfdualReport r = selfdual_residual(N, lo, hi, nodes);

  // L ≤ N ≤ L̃ at seeded probes in the box.
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> U(lo, hi);
  double slack = kInf;
  for (int k = 0; k < nprobe; ++k) {
    Vec x(d), q(d);
    for (int i = 0; i < d; ++i) x[i] = U(rng), q[i] = U(rng);
    const double Fv = lag_value(F, x, q), Nv = lag_value(N, x, q), Ft = lag_conjugate_value(F, q, x);
    if (std::isfinite(Fv) && std::isfinite(Nv)) slack = std::min(slack, Nv - Fv);
    if (std::isfinite(Ft) && std::isfinite(Nv)) slack = std::min(slack, Ft - Nv);
  }

  Outcome o;
  CsvTable table;
  bool fields_ok = true;
  const json fields = field_rows(N, point_list(p, "field_points"), tol_gap, table, fields_ok);
  const bool ok = r.residual <= tol_res && slack >= -tol_br && fields_ok;
  o.report = {{"samples", g.size()},
              {"residual", r.residual},
              {"fenchel_violation", r.fenchel_violation},
              {"probes", r.probes},
              {"bracket_slack", finite_or_string(slack)},
              {"field", fields},
              {"tolerances", {{"residual", tol_res}, {"bracket", tol_br}, {"field_gap", tol_gap}}},
              {"seed", cfg.seed},
              {"passed", ok}};
  o.csv = table;
  o.exit_code = ok ? 0 : 1;
  return o;
}

Outcome potential_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const MonotoneOperator T = build_operator(need(p, "operator"), at("operator"));
  Lagrangian L;
  try {
    L = potential_for(T);
  } catch (const Error& e) {
    bad(at("operator"), e.what());
  }
  const double lo = number(p, "lower", -3.0), hi = number(p, "upper", 3.0);
  const int nodes = integer(p, "nodes", 33);
  const double tol_res = tolerance(cfg, "residual", LagrangianTolerances::gap_analytic);
  const double tol_gap = tolerance(cfg, "field_gap", LagrangianTolerances::gap_analytic);
  const SelfdualReport r = selfdual_residual(L, lo, hi, nodes);
  Outcome o;
  CsvTable table;
  bool fields_ok = true;
  const json fields = field_rows(L, point_list(p, "field_points"), tol_gap, table, fields_ok);
  const bool ok = r.residual <= tol_res && fields_ok;
  o.report = {{"lagrangian", L.describe()},
              {"residual", r.residual},
              {"fenchel_violation", r.fenchel_violation},
              {"probes", r.probes},
              {"field", fields},
              {"tolerances", {{"residual", tol_res}, {"field_gap", tol_gap}}},
              {"passed", ok}};
  o.csv = table;
  o.exit_code = ok ? 0 : 1;
  return o;
}

Outcome solve_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const Lagrangian L = lagrangian_or_potential(p);
  const Vec rhs = vec(p, "p");
  if (rhs.size() != L.dim()) bad(at("p"), "expected dimension " + std::to_string(L.dim()));
  SolveOptions opts;
  opts.tol_gap = tolerance(cfg, "certificate", opts.tol_gap);
  Outcome o;
  if (flag(p, "regularized", false)) {
    const RegularizedResult r = solve_regularized(L, rhs, opts);
    const bool ok = cert_ok(r.cert, opts.tol_gap);
    o.report = {{"x", vec_json(r.x)},
                {"witness", vec_json(r.r)},
                {"witness_gap", r.witness_gap},
                {"field_gap", r.field_gap},
                {"certificate", cert_json(r.cert, opts.tol_gap)},
                {"passed", ok}};
    CsvTable t{indexed("x", L.dim()), {row_of({r.x, r.r})}};
    for (auto& h : indexed("r", L.dim())) t.header.push_back(h);
    o.csv = t;
    o.exit_code = ok ? 0 : 1;
    return o;
  }
  const SolveResult r = solve_static(L, rhs, opts);
  const bool ok = cert_ok(r.cert, opts.tol_gap);
  o.report = {{"x", vec_json(r.x)},
              {"certificate", cert_json(r.cert, opts.tol_gap)},
              {"warnings", r.warnings},
              {"passed", ok}};
  o.csv = CsvTable{indexed("x", L.dim()), {row_of({r.x})}};
  o.exit_code = ok ? 0 : 1;
  return o;
}

Outcome resolvent_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const MonotoneOperator T = build_operator(need(p, "operator"), at("operator"));
  const double lambda = number(p, "lambda", 1.0);
  if (!(lambda > 0.0)) bad(at("lambda"), "expected a positive number");
  const Vec y = vec(p, "y");
  if (y.size() != T.dim()) bad(at("y"), "expected dimension " + std::to_string(T.dim()));
  const double tol = tolerance(cfg, "certificate", LagrangianTolerances::gap_analytic);
  const Vec x = resolvent(T, lambda, y);
  // y − x ∈ λT(x) is the zero set of the gap of the potential of λT.
  const Lagrangian L = potential_for(MonotoneOperator::scaled(lambda, T), false);
  Certificate c;
  c.value = lag_gap(L, x, y - x);
  c.point = x;
  c.tolerance = tol;
  c.converged = cert_ok(c, tol);
  Outcome o;
  o.report = {{"x", vec_json(x)}, {"lambda", lambda}, {"certificate", cert_json(c, tol)}, {"passed", c.converged}};
  o.csv = CsvTable{indexed("x", T.dim()), {row_of({x})}};
  o.exit_code = c.converged ? 0 : 1;
  return o;
}

TimeDependentOperator time_operator(const json& p) {
  const double omega = number(p, "omega", 0.0);
  if (has(p, "operators")) {
    const json& ops = p.at("operators");
    if (!ops.is_array() || ops.empty()) bad(at("operators"), "expected a non-empty array");
    TimeDependentOperator Tt;
    Tt.omega = omega;
    for (std::size_t k = 0; k < ops.size(); ++k)
      Tt.ops.push_back(build_operator(ops[k], at("operators") + "/" + std::to_string(k)));
    return Tt;
  }
  if (has(p, "lagrangian"))
    return TimeDependentOperator::from_lagrangian(build_lagrangian(p.at("lagrangian"), at("lagrangian")), omega);
  return TimeDependentOperator::stationary(build_operator(need(p, "operator"), at("operator")), omega);
}

Outcome evolve_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const TimeDependentOperator Tt = time_operator(p);
  const TimeGrid grid = time_grid(p);
  BoundaryOp B;
  if (has(p, "x0")) {
    const Vec x0 = vec(p, "x0");
    if (x0.size() != Tt.dim()) bad(at("x0"), "expected dimension " + std::to_string(Tt.dim()));
    B = BoundaryOp::initial_value(x0);
  } else {
    B = BoundaryOp::from_operator(build_operator(need(p, "boundary"), at("boundary")));
  }
  EvolutionOptions opts;
  opts.scale = number(p, "scale", 1.0);
  const EvolutionResult r = solve_evolution(Tt, B, grid, opts);
  const double tol = tolerance(cfg, "certificate", r.cert.tolerance);
  Outcome o;
  o.report = r.to_json();
  o.report["certificate"] = cert_json(r.cert, tol);
  o.report["passed"] = cert_ok(r.cert, tol);
  o.csv = path_table(r.u, "u");
  o.exit_code = cert_ok(r.cert, tol) ? 0 : 1;
  return o;
}

Outcome semigroup_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const double omega = number(p, "omega", 0.0);
  const Vec x0 = vec(p, "x0");
  const int steps = integer(p, "steps", 64);
  std::vector<double> times{1.0};
  if (has(p, "times")) {
    try {
      const Vec t = json_vec(p.at("times"));
      times.assign(t.data(), t.data() + t.size());
    } catch (const Error& e) {
      bad(at("times"), e.what());
    }
  }
  for (double t : times)
    if (!(t > 0.0)) bad(at("times"), "times must be positive");
  std::optional<MonotoneOperator> T;
  std::optional<Lagrangian> L;
  if (has(p, "lagrangian"))
    L = build_lagrangian(p.at("lagrangian"), at("lagrangian"));
  else
    T = build_operator(need(p, "operator"), at("operator"));
  const int d = T ? T->dim() : L->dim();
  if (x0.size() != d) bad(at("x0"), "expected dimension " + std::to_string(d));

  Outcome o;
  CsvTable table{{"t"}, {row_of({x0}, {0.0})}};
  for (auto& h : indexed("u", d)) table.header.push_back(h);
  json flows = json::array();
  bool ok = true;
  for (double t : times) {
    Certificate c;
    const Vec u = T ? semigroup_flow(*T, omega, x0, t, steps, &c) : semigroup_flow(*L, omega, x0, t, steps, &c);
    const double tol = tolerance(cfg, "certificate", c.tolerance);
    ok = ok && cert_ok(c, tol);
    flows.push_back({{"t", t}, {"u", vec_json(u)}, {"certificate", cert_json(c, tol)}});
    table.rows.push_back(row_of({u}, {t}));
  }
  o.report = {{"omega", omega}, {"x0", vec_json(x0)}, {"steps", steps}, {"flows", flows}, {"passed", ok}};
  o.csv = table;
  o.exit_code = ok ? 0 : 1;
  return o;
}

Outcome connect_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const TimeDependentOperator Tt = time_operator(p);
  const TimeGrid grid = time_grid(p);
  const MonotoneOperator S1 = build_operator(need(p, "start"), at("start"));
  const MonotoneOperator S2 = build_operator(need(p, "end"), at("end"));
  if (Tt.dim() != 2 * S1.dim() || S1.dim() != S2.dim())
    bad(kP, "the operator must act on pairs (u, v) of the boundary dimension");
  EvolutionOptions opts;
  opts.scale = number(p, "scale", 1.0);
  const ConnectResult r = connect_graphs(Tt, S1, S2, grid, opts);
  const double tol = tolerance(cfg, "certificate", r.cert.tolerance);
  Outcome o;
  o.report = r.to_json();
  o.report["certificate"] = cert_json(r.cert, tol);
  o.report["passed"] = cert_ok(r.cert, tol);
  CsvTable t;
  t.header = {"t"};
  for (auto& h : indexed("u", S1.dim())) t.header.push_back(h);
  for (auto& h : indexed("v", S1.dim())) t.header.push_back(h);
  for (int k = 0; k <= grid.steps; ++k) t.rows.push_back(row_of({r.u.u[k], r.v.u[k]}, {grid.node(k)}));
  o.csv = t;
  o.exit_code = cert_ok(r.cert, tol) ? 0 : 1;
  return o;
}

EllipticProblem elliptic_problem(const json& p) {
  EllipticProblem P;
  P.T = build_operator(need(p, "flux"), at("flux"));
  P.lambda = number(p, "lambda", 0.0);
  P.mesh = mesh(p);
  P.g = has(p, "g") ? mesh_data(p, "g", P.mesh) : Vec::Zero(P.mesh.n);
  try {
    P.validate();
  } catch (const Error& e) {
    bad(kP, e.what());
  }
  return P;
}

Outcome elliptic_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const EllipticProblem P = elliptic_problem(p);
  PdeOptions opts;
  opts.scale = number(p, "scale", 1.0);
  const EllipticResult r = solve_elliptic(P, opts);
  const double tol = tolerance(cfg, "certificate", r.cert.tolerance);
  Outcome o;
  o.report = r.to_json();
  o.report["certificate"] = cert_json(r.cert, tol);
  bool ok = cert_ok(r.cert, tol);
  if (has(p, "exact")) {
    const Vec exact = mesh_data(p, "exact", P.mesh);
    const double err = (r.u - exact).lpNorm<Eigen::Infinity>();
    const double tol_err = tolerance(cfg, "error", kInf);
    o.report["sup_error"] = err;
    ok = ok && err <= tol_err;
  }
  o.report["passed"] = ok;
  CsvTable t{{"x", "u"}, {}};
  for (int i = 0; i < P.mesh.n; ++i) t.rows.push_back({P.mesh.x(i), r.u[i]});
  o.csv = t;
  o.exit_code = ok ? 0 : 1;
  return o;
}

Outcome parabolic_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  const EllipticProblem P = elliptic_problem(p);
  const TimeGrid grid = time_grid(p);
  const BoundaryOp B = BoundaryOp::initial_value(mesh_data(p, "initial", P.mesh));
  PdeOptions opts;
  opts.scale = number(p, "scale", 1.0);
  const ParabolicResult r = solve_parabolic(P, B, grid, opts);
  const double tol = tolerance(cfg, "certificate", r.cert.tolerance);
  Outcome o;
  o.report = r.to_json();
  o.report["certificate"] = cert_json(r.cert, tol);
  o.report["passed"] = cert_ok(r.cert, tol);
  CsvTable t{{"t", "x", "u"}, {}};
  for (int k = 0; k <= grid.steps; ++k)
    for (int i = 0; i < P.mesh.n; ++i) t.rows.push_back({grid.node(k), P.mesh.x(i), r.u[k][i]});
  o.csv = t;
  o.exit_code = cert_ok(r.cert, tol) ? 0 : 1;
  return o;
}

Outcome inverse_cmd(const ExperimentConfig& cfg) {
  const json& p = cfg.problem;
  InverseProblem ip;
  ip.mesh = mesh(p);
  ip.lambda = number(p, "lambda", 0.0);
  ip.g = has(p, "g") ? mesh_data(p, "g", ip.mesh) : Vec::Zero(ip.mesh.n);
  const json& fam = need(p, "family");
  const std::string fat = at("family");
  if (!fam.is_object() || fam.value("type", std::string()) != "cubic")
    bad(fat, "only the 'cubic' family {type, lower, upper, min_sum} is built in");
  try {
    ip.family = ParamClass::cubic(json_vec(fam.at("lower")), json_vec(fam.at("upper")), fam.value("min_sum", 1e-3));
  } catch (const json::exception&) {
    bad(fat, "cubic family needs 'lower' and 'upper'");
  } catch (const Error& e) {
    bad(fat, e.what());
  }
  if (has(p, "theta_start")) ip.theta_start = vec(p, "theta_start");
  if (has(p, "eps_schedule")) {
    const Vec e = vec(p, "eps_schedule");
    ip.eps_schedule.assign(e.data(), e.data() + e.size());
  }
  ip.max_rounds = integer(p, "max_rounds", ip.max_rounds);
  ip.tol_theta = tolerance(cfg, "theta", ip.tol_theta);
  ip.tol_penalty = tolerance(cfg, "penalty", ip.tol_penalty);

  // Observed data: nodal values, or a synthetic forward solve at a given parameter.
  const json& obs = need(p, "observed");
  if (obs.is_object() && obs.contains("theta")) {
    EllipticProblem P;
    try {
      P.T = ip.family.build(json_vec(obs.at("theta")));
    } catch (const Error& e) {
      bad(at("observed") + "/theta", e.what());
    }
    P.lambda = ip.lambda;
    P.g = ip.g;
    P.mesh = ip.mesh;
    ip.observed = solve_elliptic(P, {1.0, false, false}).u;
  } else {
    ip.observed = mesh_data(p, "observed", ip.mesh);
  }
  try {
    ip.validate();
  } catch (const Error& e) {
    bad(kP, e.what());
  }

  const InverseReport r = fit_operator(ip);
  const double tol_misfit = tolerance(cfg, "misfit", kInf);
  const InverseStage& last = r.stages.back();
  const bool ok = r.penalty_monotone && last.penalty <= ip.tol_penalty && last.misfit <= tol_misfit;
  Outcome o;
  o.report = r.to_json();
  o.report["misfit"] = last.misfit;
  o.report["penalty"] = last.penalty;
  o.report["tolerances"] = {{"penalty", ip.tol_penalty}, {"misfit", finite_or_string(tol_misfit)}};
  o.report["passed"] = ok;
  CsvTable t{{"x", "u", "observed"}, {}};
  for (int i = 0; i < ip.mesh.n; ++i) t.rows.push_back({ip.mesh.x(i), r.u[i], ip.observed[i]});
  o.csv = t;
  o.exit_code = ok ? 0 : 1;
  return o;
}

bool invalid_input(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidArgument:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::DimensionTooHigh:
    case ErrorKind::GridTooCoarse:
    case ErrorKind::OutOfBox:
    case ErrorKind::NotMonotone:
    case ErrorKind::FieldMismatch:
    case ErrorKind::NotSupported:
    case ErrorKind::SingularLambda:
    case ErrorKind::ExtendedArithmetic:
      return true;
    default:
      return false;
  }
}

}  // namespace

Outcome execute(const ExperimentConfig& cfg) {
  using Cmd = Outcome (*)(const ExperimentConfig&);
  static const std::vector<std::pair<std::string, Cmd>> table{
      {"check-selfdual", check_selfdual}, {"fitzpatrick", fitzpatrick_cmd}, {"potential", potential_cmd},
      {"solve", solve_cmd},               {"resolvent", resolvent_cmd},     {"evolve", evolve_cmd},
      {"semigroup", semigroup_cmd},       {"connect", connect_cmd},         {"elliptic", elliptic_cmd},
      {"parabolic", parabolic_cmd},       {"inverse", inverse_cmd}};
  Cmd cmd = nullptr;
  for (const auto& [name, f] : table)
    if (name == cfg.command) cmd = f;
  if (!cmd) throw ConfigError("/command", "unknown command '" + cfg.command + "'");
  Outcome o;
  try {
    o = cmd(cfg);
  } catch (const ConfigError& e) {
    throw ConfigError(e.pointer(), e.what(), e.line() ? e.line() : line_of(cfg.text, e.pointer()));
  } catch (const Error& e) {
    if (invalid_input(e.kind())) throw ConfigError(kP, e.what(), line_of(cfg.text, kP));
    o.exit_code = 1;
    o.report = {{"error", to_string(e.kind())}, {"message", e.what()}, {"passed", false}};
    o.csv.reset();
  }
  o.report["command"] = cfg.command;
  o.report["seed"] = cfg.seed;
  o.report["exit_code"] = o.exit_code;
  return o;
}

int run(const ExperimentConfig& cfg, std::ostream& out, std::ostream& err) {
  Outcome o;
  try {
    o = execute(cfg);
  } catch (const ConfigError& e) {
    err << e.format(cfg.source) << '\n';
    return 2;
  }
  try {
    if (cfg.report_path.empty())
      out << o.report.dump(2) << '\n';
    else
      write_json_file(cfg.report_path, o.report);
    if (o.csv && !cfg.csv_path.empty()) o.csv->write(cfg.csv_path);
  } catch (const Error& e) {
    err << e.what() << '\n';
    return 2;
  }
  if (o.exit_code != 0) {
    err << cfg.command << ": certificate not met";
    if (o.report.contains("message")) err << ": " << o.report["message"].get<std::string>();
    err << '\n';
  }
  return o.exit_code;
}

}  // namespace selfdual::cli
