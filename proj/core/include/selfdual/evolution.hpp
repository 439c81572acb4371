#pragma once

#include "selfdual/lagrangian.hpp"
#include "selfdual/solve.hpp"

#include <optional>
#include <string>
#include <vector>

namespace selfdual {

/// Uniform mesh of [0, t_end] with `steps` intervals.
struct TimeGrid {
  double t_end = 1.0;
  int steps = 64;

  double dt() const { return t_end / steps; }
  double node(int k) const { return t_end * k / steps; }
  double midpoint(int k) const { return t_end * (k + 0.5) / steps; }
  void validate() const;
};

/// Values u_0..u_M at the nodes of a time grid.
struct Path {
  TimeGrid grid;
  std::vector<Vec> u;

  int dim() const { return u.empty() ? 0 : static_cast<int>(u.front().size()); }
  int steps() const { return static_cast<int>(u.size()) - 1; }
  Vec mid(int k) const { return 0.5 * (u[k] + u[k + 1]); }
  /// (u_{k+1} − u_k)/Δt
  Vec rate(int k) const { return (u[k + 1] - u[k]) / grid.dt(); }
  double sup_distance(const std::function<Vec(double)>& f) const;
  void validate() const;
};

/// Time-boundary operator S and its potential. The boundary term of a path is
/// L_S(u_0 − u_M, −(u_0 + u_M)/2), which is zero-gap exactly when −(u_0 + u_M)/2 ∈ S(u_0 − u_M).
struct BoundaryOp {
  std::string name = "custom";
  MonotoneOperator S;
  Lagrangian L;
  std::optional<Vec> x0;

  /// S = ∂φ with φ(x) = ¼|x|² − ⟨x, x0⟩. Forces u_0 = x0.
  static BoundaryOp initial_value(const Vec& x0);
  static BoundaryOp from_operator(const MonotoneOperator& S);

  int dim() const { return L.dim(); }
  double value(const Vec& u0, const Vec& uM) const;
  /// L_S − ⟨·,·⟩ at the boundary arguments.
  double gap(const Vec& u0, const Vec& uM) const;
};

/// T_t given per node (the interval [t_k, t_{k+1}] uses node k) or as one stationary operator.
struct TimeDependentOperator {
  std::vector<MonotoneOperator> ops;
  /// Potentials supplied directly, in place of ops.
  std::vector<Lagrangian> potentials;
  double omega = 0.0;

  static TimeDependentOperator stationary(const MonotoneOperator& T, double omega = 0.0);
  static TimeDependentOperator from_lagrangian(const Lagrangian& L, double omega = 0.0);

  int dim() const;
  /// Potential used on each interval of the grid, before the ω reweighting.
  std::vector<Lagrangian> interval_potentials(const TimeGrid& grid, bool validate = true) const;
};

double tol_evol(double dt, double scale = 1.0);

/// Σ Δt·L_k(mid_k, −rate_k) plus the boundary term. With ω ≠ 0 it is evaluated at
/// w = e^{ωt}u with integrand e^{2ωt}L(e^{−ωt}w, −e^{−ωt}ẇ) = e^{2ωt}L(u, −ωu − u̇).
double path_functional(const TimeDependentOperator& Tt, const BoundaryOp& B, const Path& u);

struct EvolutionResult {
  Path u;
  Certificate cert;
  std::vector<double> interval_gaps;  // L(mid, −rate) + ⟨mid, rate⟩ per interval
  double boundary_gap = kInf;
  double initial_error = 0.0;         // |u_0 − x0| for initial-value problems
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

struct EvolutionOptions {
  double scale = 1.0;
  bool validate = true;
  bool record_trace = false;
};

EvolutionResult solve_evolution(const TimeDependentOperator& Tt, const BoundaryOp& B, const TimeGrid& grid,
                                const EvolutionOptions& opts = {});

/// S_t x0 for −u̇ − ωu ∈ T(u), by minimizing the weighted path functional on [0, t].
Vec semigroup_flow(const MonotoneOperator& T, double omega, const Vec& x0, double t, int steps,
                   Certificate* cert = nullptr);
Vec semigroup_flow(const Lagrangian& LT, double omega, const Vec& x0, double t, int steps,
                   Certificate* cert = nullptr);

/// x_{k+1} = (I + ΔtT)⁻¹x_k.
Path implicit_euler(const MonotoneOperator& T, const Vec& x0, const TimeGrid& grid);

struct ConnectResult {
  Path u, v;
  Certificate cert;
  std::vector<double> interval_gaps;
  double start_gap = kInf;  // u(0) ∈ S₁(v(0))
  double end_gap = kInf;    // −u(1) ∈ S₂(v(1))
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// Paths with (v̇, u̇) ∈ T_t(u, v), u(0) ∈ S₁(v(0)), −u(1) ∈ S₂(v(1)).
ConnectResult connect_graphs(const TimeDependentOperator& Tt, const MonotoneOperator& S1, const MonotoneOperator& S2,
                             const TimeGrid& grid, const EvolutionOptions& opts = {});

}  // namespace selfdual
