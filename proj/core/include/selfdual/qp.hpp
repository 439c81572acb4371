#pragma once

#include "selfdual/common.hpp"
#include "selfdual/minimize.hpp"

#include <utility>
#include <vector>

namespace selfdual {

/// Sparse affine expression Σ wᵢ u_{idx i} + offset over QP variables.
struct LinExpr {
  std::vector<std::pair<int, double>> terms;
  double offset = 0.0;

  static LinExpr constant(double c) { return LinExpr{{}, c}; }
  static LinExpr var(int i, double w = 1.0) { return LinExpr{{{i, w}}, 0.0}; }
  LinExpr& add(int i, double w) {
    if (w != 0.0) terms.emplace_back(i, w);
    return *this;
  }
  LinExpr& add(const LinExpr& other, double w = 1.0);
  LinExpr scaled(double w) const;
};

/// Convex quadratic program
///   minimize ½uᵀHu + fᵀu + constant  subject to  A u = b,  C u >= d.
/// Assembled incrementally; H accumulates in triplet form.
class QPBuilder {
 public:
  /// Adds k free variables and returns the index of the first one.
  int add_variables(int k);
  int num_variables() const { return n_; }

  void add_linear(int i, double w) { f_.push_back({i, w}); }
  void add_linear(const LinExpr& e, double w);
  void add_constant(double c) { constant_ += c; }
  /// Adds w·½ eᵀ(B)e-style terms: w · ½ (Σ a_i u_i)(Σ b_j u_j) symmetric accumulation.
  void add_hessian(int i, int j, double v);
  /// Adds w·½(e)² to the objective, including the cross terms with the offset.
  void add_half_square(const LinExpr& e, double w);
  /// Adds ½ Σ_ij Q_ij e_i e_j with the offsets expanded.
  void add_quadratic_form(const std::vector<LinExpr>& e, const Mat& Q, double w);

  void add_eq(const LinExpr& e, double rhs);    // e = rhs
  void add_ge(const LinExpr& e, double rhs);    // e >= rhs
  void add_lower_bound(int i, double lb) { add_ge(LinExpr::var(i), lb); }

  /// Evaluates the objective at u (ignores constraints).
  double objective(const Vec& u) const;

  struct Problem {
    int n = 0;
    SpMat H, A, C;
    Vec f, b, d;
    double constant = 0.0;
  };
  Problem build() const;

 private:
  int n_ = 0;
  std::vector<Eigen::Triplet<double>> h_;
  std::vector<std::pair<int, double>> f_;
  double constant_ = 0.0;
  std::vector<Eigen::Triplet<double>> a_, c_;
  std::vector<double> b_, d_;
  int rows_a_ = 0, rows_c_ = 0;
};

struct QPOptions {
  int max_iter = 200;
  double tol = 1e-11;
};

struct QPResult {
  Vec u;
  Vec y;  // equality multipliers
  Vec z;  // inequality multipliers
  double value = kInf;
  int iterations = 0;
  bool converged = false;
  bool unbounded = false;
  bool infeasible = false;
  double primal_residual = kInf;
  double dual_residual = kInf;
  double mu = kInf;
};

/// Mehrotra predictor-corrector interior-point method on the regularized KKT system,
/// factored with a sparse LDLᵀ. Dependent equality rows are tolerated through the
/// regularization and iterative refinement.
QPResult solve_qp(const QPBuilder::Problem& qp, const QPOptions& opts = {});
inline QPResult solve_qp(const QPBuilder& qp, const QPOptions& opts = {}) { return solve_qp(qp.build(), opts); }

}  // namespace selfdual
