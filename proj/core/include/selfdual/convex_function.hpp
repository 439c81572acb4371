#pragma once

#include "selfdual/common.hpp"
#include "selfdual/grid.hpp"
#include "selfdual/qp.hpp"

#include <memory>
#include <optional>
#include <string>

namespace selfdual {

/// Linear equality constraints `matrix * x = rhs` describing the affine hull of a domain.
struct LinearConstraint {
  Mat matrix;
  Vec rhs;

  bool empty() const { return matrix.rows() == 0; }
};

/// Proper convex lower semi-continuous function on R^d.
///
/// A cheap immutable handle: copies share the underlying node. Closed forms are kept
/// for the catalog (quadratics, powers of the Euclidean norm, boxes, balls, and their
/// affine reparametrizations), and conjugation stays in closed form wherever the
/// catalog is closed under it. Sums and inf-convolutions are evaluated lazily by an
/// inner minimization; grid forms conjugate through the linear-time transform.
class ConvexFunction {
 public:
  struct Node;

  /// ½ xᵀQx + bᵀx + c. Q must be symmetric positive semidefinite.
  static ConvexFunction quadratic(const Mat& Q, const Vec& b, double c = 0.0);
  /// ½ xᵀQx + bᵀx + c restricted to {C x = e}.
  static ConvexFunction constrained_quadratic(const Mat& Q, const Vec& b, double c, const Mat& C,
                                              const Vec& e);
  /// ½‖x‖².
  static ConvexFunction half_squared_norm(int dim);
  /// The constant zero function.
  static ConvexFunction zero(int dim);
  /// Indicator of the single point {a}.
  static ConvexFunction indicator_point(const Vec& a);
  /// scale·‖x‖ʳ / r with r >= 1 (Euclidean norm).
  static ConvexFunction power_norm(double r, double scale, int dim);
  /// scale·‖x‖₁.
  static ConvexFunction abs_value(double scale, int dim);
  static ConvexFunction indicator_box(const Vec& lower, const Vec& upper);
  /// σ(p) = Σ max(lowerᵢ pᵢ, upperᵢ pᵢ), the support function of a box.
  static ConvexFunction support_box(const Vec& lower, const Vec& upper);
  static ConvexFunction indicator_ball(double radius, int dim);
  /// α·g(β(x − shift)) + ⟨slope, x⟩ + c with α > 0 and β ≠ 0.
  static ConvexFunction affine(const ConvexFunction& base, double alpha, double beta, const Vec& shift,
                               const Vec& slope, double c);
  static ConvexFunction tilt(const ConvexFunction& base, const Vec& slope);
  static ConvexFunction shifted(const ConvexFunction& base, const Vec& shift);
  static ConvexFunction scaled(const ConvexFunction& base, double alpha);
  static ConvexFunction sum(const ConvexFunction& f, const ConvexFunction& g);
  /// x ↦ sup_z ⟨x, z⟩ − base(z), evaluated by an inner Newton solve. base must be smooth.
  static ConvexFunction numeric_conjugate(const ConvexFunction& base);
  static ConvexFunction grid(GridFunction g);
  /// max_j ⟨a_j, z⟩ − c_j with the a_j given as the rows of A.
  static ConvexFunction max_affine(const Mat& A, const Vec& c);
  /// min{cᵀλ : Gλ = w, λ in the unit simplex}; +inf outside the convex hull of the columns of G.
  /// This is the conjugate of max_affine(Gᵀ, c).
  static ConvexFunction hull_lp(const Mat& G, const Vec& c);

  int dim() const;
  std::string kind() const;

  double operator()(const Vec& x) const { return value(x); }
  double value(const Vec& x) const;

  /// Twice differentiable on the relative interior of an affine domain.
  bool smooth() const;
  /// Value of the smooth extension (ignores the domain constraint). Smooth forms only.
  double smooth_value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;
  /// Affine hull of the domain for smooth forms; empty for full-space domains.
  LinearConstraint constraint() const;

  ConvexFunction conjugate() const;
  /// argmin_x f(x) + ‖x − y‖² / (2τ).
  Vec prox(double tau, const Vec& y) const;

  const Node& node() const { return *node_; }

  /// True when the epigraph is polyhedral-quadratic, so that w·f(arg) can be added to a QP.
  bool qp_representable() const;
  /// Adds weight · f(arg) to the program. arg holds one affine expression per coordinate.
  void emit_qp(const std::vector<LinExpr>& arg, double weight, QPBuilder& qp) const;

  /// Identifies the forms that act as a neutral element for inf-convolution.
  bool is_indicator_of_origin() const;

 private:
  explicit ConvexFunction(std::shared_ptr<const Node> node) : node_(std::move(node)) {}
  std::shared_ptr<const Node> node_;

  friend ConvexFunction inf_convolve(const ConvexFunction& f, const ConvexFunction& g);
  friend ConvexFunction make_function(std::shared_ptr<const Node> node);
};

/// x ↦ inf_z f(z) + g(x − z). Evaluated lazily; returns f itself when g = ι{0}.
ConvexFunction inf_convolve(const ConvexFunction& f, const ConvexFunction& g);

/// Samples f on a box and conjugates with the discrete linear-time transform.
ConvexFunction conjugate_on_grid(const ConvexFunction& f, const Vec& lower, const Vec& upper,
                                 const std::vector<int>& nodes);

/// Default tolerances of the convex-analysis layer.
struct ConvexTolerances {
  static constexpr double convex_analytic = 1e-9;
  static constexpr double prox = 1e-10;
  static constexpr double fenchel_young_analytic = 1e-8;
  /// Grid tolerance scales with the spacing of the sampled function.
  static double grid(double spacing) { return 5.0 * spacing; }
};

}  // namespace selfdual
