#pragma once

#include "selfdual/pde.hpp"

#include <functional>
#include <string>
#include <vector>

namespace selfdual {

/// Parameter box Θ ⊂ R^m (m ≤ 4) and a builder θ ↦ T_θ of monotone flux maps on R^1.
struct ParamClass {
  Vec lower, upper;
  std::function<MonotoneOperator(const Vec&)> build;
  /// Admissible θ satisfy Σθ_i ≥ min_sum.
  double min_sum = 0.0;
  std::string name = "custom";

  /// T_θ(y) = θ₁y + θ₂y³ on [lo₁, hi₁] × [lo₂, hi₂].
  static ParamClass cubic(const Vec& lower, const Vec& upper, double min_sum = 1e-3);

  int dim() const { return static_cast<int>(lower.size()); }
  bool admissible(const Vec& theta) const;
  /// Builds T_θ on a 3^m grid of Θ and checks monotonicity and continuity of the flux on probes.
  void validate() const;
};

struct InverseProblem {
  Vec observed;  // u₀ on the mesh
  Vec g;
  double lambda = 0.0;
  Mesh1D mesh;
  std::vector<double> eps_schedule{1e-1, 1e-2, 1e-3, 1e-4};
  ParamClass family;
  Vec theta_start;  // centre of the box when empty
  int max_rounds = 30;
  double tol_theta = 1e-5;
  double tol_penalty = 1e-3;

  void validate() const;
};

struct InverseStage {
  double eps = 0.0;
  Vec theta;
  double misfit = kInf;   // h|u − u₀|²
  double penalty = kInf;  // J_θ(u), the selfdual gap of the equation
  double objective = kInf;
  int rounds = 0;
  bool converged = false;
};

struct InverseReport {
  Vec theta;
  Vec u;
  std::vector<InverseStage> stages;
  bool penalty_monotone = true;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// 𝒫_ε(θ, u) = h|u − u₀|² + J_θ(u)/ε.
double inverse_objective(const InverseProblem& prob, const Vec& theta, const Vec& u, double eps);

/// For each ε: Powell rounds over θ with golden-section line searches on θ ↦ min_u 𝒫_ε(θ, u),
/// each probe running the convex u-step from the current u. Stages are warm started.
/// Throws ClassInfeasible when the penalty at the last ε stays above tol_penalty.
InverseReport fit_operator(const InverseProblem& prob);

}  // namespace selfdual
