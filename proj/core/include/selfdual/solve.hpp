#pragma once

#include "selfdual/lagrangian.hpp"

#include <string>
#include <vector>

namespace selfdual {

struct SolveOptions {
  int max_iter = 10000;
  double tol_gap = LagrangianTolerances::gap_analytic;
  bool record_trace = false;
};

struct SolveResult {
  Vec x;
  Certificate cert;
  std::vector<std::string> warnings;
  std::vector<IterationRecord> trace;
};

/// Minimizes x ↦ L(x, p) − ⟨x, p⟩. A zero minimum certifies p ∈ ∂̄L(x).
SolveResult solve_static(const Lagrangian& L, const Vec& p, const SolveOptions& opts = {});

struct RegularizedResult {
  Vec x;
  Vec r;                     // splitting witness, equal to x at a solution
  Certificate cert;
  double witness_gap = kInf;  // ½‖x‖² + ½‖r‖² − ⟨x, r⟩
  double field_gap = kInf;    // L(x, p − r) − ⟨x, p − r⟩
};

/// Solves p ∈ ∂̄L(x) + x by minimizing L(x, p − r) + ½‖x‖² + ½‖r‖² − ⟨x, p⟩ over (x, r).
RegularizedResult solve_regularized(const Lagrangian& L, const Vec& p, const SolveOptions& opts = {});

/// (I + λT)⁻¹y through the regularized solve of the potential of λT.
Vec resolvent(const Lagrangian& L, double lambda, const Vec& y);
Vec resolvent(const MonotoneOperator& T, double lambda, const Vec& y);

/// One block of a superposed system: L(A z + a, Γ z) weighted by w.
struct Block {
  Lagrangian L;
  Mat A;
  Vec offset;
  Mat Gamma;
  double weight = 1.0;
};

struct BlockReport {
  double gamma_condition = kInf;  // ratio of extreme singular values of the stacked Γ
  double diagonal_curvature = 0.0;  // smallest eigenvalue of −Σ w sym(AᵀΓ); must be >= 0
};

/// I(z) = Σ w_i [L_i(A_i z + a_i, Γ_i z) − ⟨A_i z + a_i, Γ_i z⟩] on R^dim.
struct BlockSystem {
  int dim = 0;
  std::vector<Block> blocks;

  /// Checks shapes, injectivity of the stacked Γ, and concavity of the diagonal pairing.
  BlockReport validate() const;
  /// The functional as a sum over z (plus the auxiliaries of the blocks).
  AffineSum functional() const;
};

SolveResult superposed_solve(const BlockSystem& sys, const SolveOptions& opts = {});

/// sup_y ⟨y, p⟩ − L(y, q). Sets *unbounded when the supremum diverges (value +inf).
double cohamiltonian(const Lagrangian& L, const Vec& p, const Vec& q, bool* unbounded = nullptr);

/// Certificate from a minimization whose optimal value is the selfdual gap.
Certificate make_certificate(const AffineSum::Minimum& m, double tol);

/// Directions among ±e_i and seeded random ones along which f fails to grow.
std::vector<Vec> flat_rays(const std::function<double(const Vec&)>& f, int dim, double radius = 100.0);

}  // namespace selfdual
