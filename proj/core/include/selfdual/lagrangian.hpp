#pragma once

#include "selfdual/affine_sum.hpp"
#include "selfdual/common.hpp"
#include "selfdual/convex_function.hpp"

#include <json.hpp>

#include <optional>
#include <random>
#include <string>
#include <vector>

namespace selfdual {

/// Finite sample of the graph of a monotone operator: pairs (x_k, p_k) in R^d × R^d.
struct MonotoneGraph {
  std::vector<Vec> x;
  std::vector<Vec> p;

  int dim() const { return x.empty() ? 0 : static_cast<int>(x.front().size()); }
  std::size_t size() const { return x.size(); }
  void add(const Vec& xi, const Vec& pi);

  /// Throws NotMonotone naming the worst pair if ⟨p_i − p_j, x_i − x_j⟩ < −tol.
  void validate(double tol = 1e-10) const;

  /// Samples (y, f(y)) at n uniform nodes of [a, b] (one-dimensional graphs).
  static MonotoneGraph sample_1d(const std::function<double(double)>& f, double a, double b, int n);
};

/// Vector field T: R^d ⇉ R^d in one of the supported structural variants.
class MonotoneOperator {
 public:
  enum class Kind { GradConvex, SkewPlusGrad, LinearPositive, Sampled, Sum, Scaled };

  /// ∂φ.
  static MonotoneOperator grad_convex(const ConvexFunction& phi);
  /// Γ + ∂φ with Γ skew.
  static MonotoneOperator skew_plus_grad(const Mat& gamma, const ConvexFunction& phi);
  /// x ↦ Bx with B + Bᵀ positive semidefinite.
  static MonotoneOperator linear_positive(const Mat& B);
  static MonotoneOperator sampled(MonotoneGraph graph);
  static MonotoneOperator sum(const MonotoneOperator& a, const MonotoneOperator& b);
  /// c·T for c > 0.
  static MonotoneOperator scaled(double c, const MonotoneOperator& t);

  Kind kind() const { return kind_; }
  int dim() const { return dim_; }
  const ConvexFunction& phi() const { return *phi_; }
  const Mat& matrix() const { return matrix_; }
  const MonotoneGraph& graph() const { return graph_; }
  const std::vector<MonotoneOperator>& parts() const { return parts_; }
  double factor() const { return factor_; }

  /// T(x) when T is single-valued and explicitly computable at x.
  std::optional<Vec> apply(const Vec& x) const;
  /// n graph pairs (x, p) with p ∈ T(x). Uses resolvents of ∂φ for nonsmooth φ.
  MonotoneGraph sample_pairs(int n, std::mt19937_64& rng, double radius = 2.0) const;

  nlohmann::json describe() const;

 private:
  Kind kind_ = Kind::GradConvex;
  int dim_ = 0;
  std::optional<ConvexFunction> phi_;
  Mat matrix_;
  MonotoneGraph graph_;
  std::vector<MonotoneOperator> parts_;
  double factor_ = 1.0;
};

/// Convex function L(x, p) on R^d × R^d.
///
/// The body is an AffineSum over (x, p, aux); its value is the infimum over aux.
/// When a closed-form conjugate is known it is kept as a second AffineSum over (q, y, aux)
/// with L*(q, y) = sup ⟨q, x⟩ + ⟨y, p⟩ − L(x, p). Otherwise the conjugate is computed by an
/// outer minimization, optionally restricted to a probe box.
class Lagrangian {
 public:
  Lagrangian() = default;
  Lagrangian(int dim, std::string form, AffineSum body, std::optional<AffineSum> conjugate_body,
             nlohmann::json params = nlohmann::json::object());

  /// φ(x) + φ*(−Γx + p) with Γ skew; Γ may be empty for zero.
  static Lagrangian sum_form(const ConvexFunction& phi, const Mat& gamma = Mat());
  /// Tabulated L on a 2d-dimensional grid (d ≤ 2); conjugated on the grid.
  static Lagrangian grid2d(const GridFunction& g);

  int dim() const { return dim_; }
  const std::string& form() const { return form_; }
  const AffineSum& body() const { return body_; }
  bool has_conjugate() const { return conj_.has_value(); }
  const AffineSum& conjugate_body() const;
  nlohmann::json describe() const;

  /// The sup defining L* runs over this box of (x, p) instead of the whole space.
  Lagrangian with_probe_box(const Vec& lower, const Vec& upper) const;
  bool has_probe_box() const { return box_lower_.size() > 0; }
  const Vec& probe_lower() const { return box_lower_; }
  const Vec& probe_upper() const { return box_upper_; }

  /// (x, p) ↦ L*(q, y) as a Lagrangian with roles swapped: conjugate().value(q, y) = L*(q, y).
  Lagrangian conjugate() const;

  double value(const Vec& x, const Vec& p) const;
  /// L*(q, y). Returns +inf (and sets *unbounded) when the supremum diverges.
  double conjugate_value(const Vec& q, const Vec& y, bool* unbounded = nullptr) const;

 private:
  int dim_ = 0;
  std::string form_;
  AffineSum body_;
  std::optional<AffineSum> conj_;
  nlohmann::json params_;
  Vec box_lower_, box_upper_;
};

/// Tolerances of the Lagrangian layer.
struct LagrangianTolerances {
  static constexpr double gap_analytic = 1e-6;
  static constexpr double gap_pipeline = 1e-3;
  static double field(double gap) { return 10.0 * gap; }
  static double selfdual(double spacing) { return std::max(1e-6, 5.0 * spacing); }
  static constexpr double monotone = 1e-8;
};

double lag_value(const Lagrangian& L, const Vec& x, const Vec& p);
/// L*(p, x), i.e. the transposed conjugate L̃(x, p).
double lag_conjugate_value(const Lagrangian& L, const Vec& p, const Vec& x, bool* unbounded = nullptr);
/// L(x, p) − ⟨x, p⟩.
double lag_gap(const Lagrangian& L, const Vec& x, const Vec& p);

struct SelfdualReport {
  double residual = 0.0;            // max |L*(p, x) − L(x, p)| over finite probes
  double fenchel_violation = 0.0;   // max (⟨x, p⟩ − L(x, p))₊
  std::size_t probes = 0;           // probes with both values finite
  Vec worst_x, worst_p;
};

/// Probes a nodes × nodes grid over [lower, upper]² in every coordinate pair of (x, p),
/// the remaining coordinates held at zero. Throws EmptyProbe if no probe is finite on both sides.
SelfdualReport selfdual_residual(const Lagrangian& L, double lower, double upper, int nodes);

struct FieldValue {
  std::vector<Vec> representatives;  // minimizer first, then extreme points of flat directions
  double gap = kInf;                 // min_p L(x, p) − ⟨x, p⟩
  int iterations = 0;

  bool empty() const { return representatives.empty(); }
};

/// Representatives of {p : L(x, p) = ⟨x, p⟩}; empty when the minimal gap exceeds tol.
FieldValue sd_field(const Lagrangian& L, const Vec& x, double tol = LagrangianTolerances::gap_analytic);

/// sup over the sampled graph of ⟨p, y⟩ + ⟨q, x − y⟩. The conjugate sup is taken over the
/// bounding box of the samples padded by half its extent.
Lagrangian fitzpatrick(const MonotoneGraph& g);

/// inf{½L(z + δ) + ½L̃(z − δ) + ½‖δ‖²}, the midpoint of L and its transposed conjugate.
/// Requires a closed-form conjugate body. Checks L ≤ L̃ and L ≥ ⟨·,·⟩ at the given probes.
Lagrangian proximal_average(const Lagrangian& L, const std::vector<std::pair<Vec, Vec>>& probes = {});

/// Selfdual potential of T, validated on samples (FieldMismatch on failure).
Lagrangian potential_for(const MonotoneOperator& T, bool validate = true);

/// Symmetric and skew parts of a square matrix.
Mat sym_part(const Mat& B);
Mat skew_part(const Mat& B);
bool is_skew(const Mat& G, double tol = 0.0);

}  // namespace selfdual
