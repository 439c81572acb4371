#pragma once

#include "selfdual/common.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <vector>

namespace selfdual {

using SpMat = Eigen::SparseMatrix<double>;

/// Hessian sink: dense for small problems, triplets for large sparse ones.
class HessianBuilder {
 public:
  HessianBuilder(int n, bool sparse);

  void add(int i, int j, double v);
  /// Adds B into rows/cols listed in idx.
  void add_block(const std::vector<int>& idx, const Mat& B);
  void add_diag(int i, double v) { add(i, i, v); }
  /// Adds Mᵀ B M for a small sparse row map M given as (column index, weight) rows.
  void add_congruence(const std::vector<std::vector<std::pair<int, double>>>& rows, const Mat& B);

  bool sparse() const { return sparse_; }
  int size() const { return n_; }
  Mat dense() const;
  SpMat assemble() const;
  void clear();

 private:
  int n_;
  bool sparse_;
  Mat dense_;
  std::vector<Eigen::Triplet<double>> triplets_;
};

/// Smooth convex objective over R^n, optionally restricted to {A x = b}.
struct SmoothObjective {
  int dim = 0;
  /// May return +inf outside the domain.
  std::function<double(const Vec&)> value;
  /// Fills the gradient and adds the Hessian into the builder.
  std::function<void(const Vec&, Vec&, HessianBuilder&)> derivatives;
  Mat eq_matrix;
  Vec eq_rhs;
  bool sparse_hessian = false;
};

struct IterationRecord {
  int k = 0;
  double objective = 0.0;
  double step = 0.0;
  double residual = 0.0;
};

struct MinimizeOptions {
  int max_iter = 500;
  /// Stop when half the squared Newton decrement drops below this (scaled by 1 + |f|).
  double tol = 1e-15;
  double grad_tol = 1e-11;
  bool record_trace = false;
};

struct MinimizeResult {
  Vec x;
  double value = kInf;
  int iterations = 0;
  bool converged = false;
  double residual = kInf;
  std::vector<IterationRecord> trace;
  std::string message;
};

/// Damped Newton with Levenberg-style regularization and Armijo backtracking.
/// With equality constraints the start is projected onto {A x = b} and steps stay in the
/// null space. Dependent constraint rows are dropped.
MinimizeResult newton_minimize(const SmoothObjective& obj, const Vec& x0, const MinimizeOptions& opts = {});

/// Bracket-then-Brent minimization of a convex scalar function (values may be +inf).
MinimizeResult minimize_scalar(const std::function<double(double)>& f, double x0, double step,
                               const MinimizeOptions& opts = {});

/// Brent on a fixed interval [a, b].
MinimizeResult minimize_scalar_on(const std::function<double(double)>& f, double a, double b,
                                  double tol = 1e-12, int max_iter = 300);

/// Derivative-free minimization of a convex function: Nelder-Mead with restarts followed
/// by a compass-search polish. One-dimensional problems go to minimize_scalar.
MinimizeResult minimize_direct(const std::function<double(const Vec&)>& f, const Vec& x0, double scale,
                               const MinimizeOptions& opts = {});

/// Central finite-difference gradient.
Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h = 1e-6);

/// Largest relative mismatch between an analytic gradient and central differences.
double gradient_check(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x,
                      double h = 1e-6);

/// Orthonormal basis of the null space of A (columns), and a least-squares particular
/// solution of A x = b. Throws InvalidArgument if the system is inconsistent.
struct AffineSubspace {
  Vec particular;
  Mat basis;
};
AffineSubspace affine_solution_set(const Mat& A, const Vec& b, double rank_tol = 1e-10);

}  // namespace selfdual
