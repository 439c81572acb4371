#pragma once

#include "selfdual/common.hpp"
#include "selfdual/convex_function.hpp"
#include "selfdual/minimize.hpp"
#include "selfdual/qp.hpp"

#include <string>
#include <vector>

namespace selfdual {

using LinMap = std::vector<LinExpr>;

/// Coordinates first..first+k-1 as expressions.
LinMap var_block(int first, int k);
LinMap const_block(const Vec& c);
/// A·x for a dense matrix and a vector of expressions.
LinMap mat_apply(const Mat& A, const LinMap& x);
/// a·x + b·y, coordinatewise.
LinMap lincomb(double a, const LinMap& x, double b, const LinMap& y);
LinMap shift(const LinMap& x, const Vec& c);
LinMap concat(const LinMap& x, const LinMap& y);
LinMap slice(const LinMap& x, int first, int k);
/// ⟨c, x⟩ as one expression.
LinExpr dot(const Vec& c, const LinMap& x);
Vec evaluate(const LinMap& x, const Vec& v);

/// One weighted convex term f(arg(v)) of a sum.
struct Term {
  ConvexFunction f;
  double weight = 1.0;
  LinMap arg;
};

/// F(v) = Σ w_k f_k(A_k v + o_k) + ⟨l, v⟩ + c over variables v = (external, auxiliary).
/// value() minimizes out the auxiliary block. Every composite object of the library
/// (Lagrangians, their transforms and combinations, path and PDE functionals) is one
/// of these, so one set of inner solvers serves all of them.
class AffineSum {
 public:
  AffineSum() = default;
  explicit AffineSum(int n_external, int n_aux = 0) : n_ext_(n_external), n_aux_(n_aux) {}

  int num_external() const { return n_ext_; }
  int num_aux() const { return n_aux_; }
  int num_vars() const { return n_ext_ + n_aux_; }
  const std::vector<Term>& terms() const { return terms_; }
  const LinExpr& linear() const { return linear_; }

  /// Appends k auxiliary variables and returns the index of the first one.
  int add_aux(int k);
  void add(const ConvexFunction& f, LinMap arg, double weight = 1.0);
  void add_linear(const LinExpr& e, double weight = 1.0) { linear_.add(e, weight); }
  void add_constant(double c) { linear_.offset += c; }

  /// Adds weight·other, whose external variables are bound to ext_map and whose
  /// auxiliaries become fresh auxiliaries of this sum.
  void embed(const AffineSum& other, const LinMap& ext_map, double weight = 1.0);

  /// Same sum with the external variables replaced by expressions in n_new new external
  /// variables. Auxiliaries are kept.
  AffineSum substitute(const LinMap& ext_map, int n_new) const;
  /// Fixes all external variables; the result has only the auxiliaries, as externals.
  AffineSum bind(const Vec& ext) const;

  /// Value at a full variable vector (external and auxiliary).
  double eval(const Vec& v) const;
  bool smooth() const;
  bool qp_representable() const;
  /// Gradient at a full variable vector. Smooth sums only.
  Vec gradient(const Vec& v) const;
  /// Pulled-back domain constraints of the smooth terms.
  void constraints(Mat& A, Vec& b) const;

  struct Minimum {
    Vec v;
    double value = kInf;
    bool converged = false;
    bool unbounded = false;
    int iterations = 0;
    std::string method;
    std::vector<IterationRecord> trace;
  };
  struct Options {
    int max_iter = 500;
    bool record_trace = false;
    /// Direct search is used only up to this many variables.
    int direct_limit = 12;
  };

  /// Minimizes over all variables: Newton when every term is smooth, an interior-point
  /// QP when every term is polyhedral-quadratic, direct search for small mixed problems.
  Minimum minimize(const Vec& start, const Options& opts) const;
  Minimum minimize(const Vec& start) const { return minimize(start, Options{}); }
  Minimum minimize() const { return minimize(Vec::Zero(num_vars())); }

  /// inf over the auxiliaries at the given externals. Throws Unbounded, InnerNoConvergence.
  double value(const Vec& ext) const;

 private:
  LinExpr remap(const LinExpr& e, const LinMap& ext_map, int aux_base, int other_ext) const;

  int n_ext_ = 0;
  int n_aux_ = 0;
  std::vector<Term> terms_;
  LinExpr linear_;
};

}  // namespace selfdual
