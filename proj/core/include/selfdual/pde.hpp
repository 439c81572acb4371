#pragma once

#include "selfdual/evolution.hpp"
#include "selfdual/solve.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace selfdual {

/// Interior nodes x_i = i·h, i = 1..n, of (0, length) with homogeneous Dirichlet ends.
struct Mesh1D {
  double length = 1.0;
  int n = 127;

  double h() const { return length / (n + 1); }
  double x(int i) const { return (i + 1) * h(); }
  Vec nodes() const;
  Vec sample(const std::function<double(double)>& f) const;
  void validate() const;

  /// Forward differences (n+1)×n: (Du)_e = (u_e − u_{e−1})/h with zero ends.
  Mat gradient() const;
  /// DᵀD, the Dirichlet second difference.
  Mat laplacian() const;
  /// Smallest eigenvalue of DᵀD.
  double poincare() const;
};

/// −(T(u'))' + λu = g on the mesh, u = 0 at both ends.
struct EllipticProblem {
  MonotoneOperator T;
  /// Used in place of potential_for(T) when set.
  std::optional<Lagrangian> potential;
  double lambda = 0.0;
  Vec g;
  Mesh1D mesh;

  Lagrangian flux_potential(bool validate = true) const;
  void validate() const;
};

double tol_pde(double h, double scale = 1.0);

/// sup over probes y of L_T(0, y)/(1 + y²); +inf when L_T(0, ·) is not finite everywhere.
double growth_constant(const Lagrangian& LT);

struct EllipticResult {
  Vec u;
  Vec flux;                   // DK(−λu + g) + c on the edges
  double flux_constant = 0.0;  // c
  Certificate cert;
  std::vector<double> edge_gaps;  // L_T(∇u, flux) − ∇u·flux per edge
  double flux_residual = 0.0;     // max edge gap
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

struct PdeOptions {
  double scale = 1.0;
  bool validate = true;
  bool record_trace = false;
};

/// J(u) = min_c h Σ_e L_T((Du)_e, (DK(−λu + g))_e + c) + h Σ_i (λu_i² − u_i g_i), with c auxiliary.
AffineSum elliptic_functional(const EllipticProblem& prob, const Lagrangian& LT);

/// Minimizes h Σ_e L_T((Du)_e, (DK(−λu + g))_e + c) + h Σ_i (λu_i² − u_i g_i) over (u, c),
/// with K = (DᵀD)⁻¹. λ must be non-negative.
EllipticResult solve_elliptic(const EllipticProblem& prob, const PdeOptions& opts = {});

/// The same functional with c = 0, written as one block per edge.
BlockSystem elliptic_block_system(const EllipticProblem& prob);

/// hΣ_e (DK(−λu + g))_e (Du)_e + λh|u|² − h⟨g, u⟩, zero for every u up to roundoff.
double pairing_identity_defect(const EllipticProblem& prob, const Vec& u);

/// Damped Newton on Dᵀ T(Du) + λu = g for single-valued T, with T' by central differences.
Vec solve_elliptic_newton(const std::function<double(double)>& T, double lambda, const Vec& g, const Mesh1D& mesh,
                          double tol = 1e-12, int max_iter = 100);

struct ParabolicResult {
  Mesh1D mesh;
  TimeGrid grid;
  std::vector<Vec> u;  // one vector of interior values per time node
  Certificate cert;
  double boundary_gap = kInf;
  double initial_error = 0.0;
  double flux_residual = 0.0;
  std::vector<std::string> warnings;
  nlohmann::json to_json() const;
};

/// u_t − (T(u_x))_x = g with time-boundary operator B on R^n (n = mesh.n), by minimizing
/// Σ_k Δt[h Σ_e L_T(D m_k, DK(g − r_k) + c_k) − h⟨m_k, g⟩] + h·L_B(u_0 − u_M, −(u_0 + u_M)/2).
/// The λ of the problem is ignored.
ParabolicResult solve_parabolic(const EllipticProblem& prob, const BoundaryOp& B, const TimeGrid& grid,
                                const PdeOptions& opts = {});

}  // namespace selfdual
