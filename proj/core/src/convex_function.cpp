#include "selfdual/convex_function.hpp"

#include "selfdual/minimize.hpp"

#include <Eigen/Eigenvalues>

#include <variant>

namespace selfdual {

namespace {

struct QuadraticForm {
  Mat Q;
  Vec b;
  double c = 0.0;
  Mat C;  // orthonormal rows; zero rows when unconstrained
  Vec e;
};
struct PowerForm {
  double r, scale;
};
struct AbsForm {
  double scale;
};
struct BoxForm {
  Vec lo, hi;
};
struct SupportForm {
  Vec lo, hi;
};
struct BallForm {
  double radius;
};
struct AffineForm {
  ConvexFunction base;
  double alpha, beta;
  Vec shift, slope;
  double c;
};
struct SumForm {
  ConvexFunction f, g;
};
struct NumConjForm {
  ConvexFunction base;
};
struct InfConvForm {
  ConvexFunction f, g;
};
struct GridForm {
  GridFunction grid;
};
struct MaxAffineForm {
  Mat A;  // rows a_j
  Vec c;
};
struct HullForm {
  Mat G;  // columns g_j
  Vec c;
};

using Form = std::variant<QuadraticForm, PowerForm, AbsForm, BoxForm, SupportForm, BallForm, AffineForm,
                          SumForm, NumConjForm, InfConvForm, GridForm, MaxAffineForm, HullForm>;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

constexpr double kConstraintTol = 1e-8;
constexpr double kBoxTol = 1e-12;

/// Canonical form of {C x = e}: orthonormal rows spanning the row space of C.
std::pair<Mat, Vec> canonical_constraint(const Mat& C, const Vec& e, int d) {
  if (C.rows() == 0) return {Mat(0, d), Vec(0)};
  require_dim(C.cols(), d, "constraint matrix");
  require_dim(e.size(), C.rows(), "constraint right-hand side");
  auto sub = affine_solution_set(C, e);
  const int k = d - static_cast<int>(sub.basis.cols());
  if (k == 0) return {Mat(0, d), Vec(0)};
  // Orthonormal complement of the null space.
  Mat P = Mat::Identity(d, d) - sub.basis * sub.basis.transpose();
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  Mat rows = es.eigenvectors().rightCols(k).transpose();
  Vec rhs = rows * sub.particular;
  return {rows, rhs};
}

/// Orthonormal basis of the null space of a matrix with orthonormal rows.
Mat null_basis(const Mat& C, int d) {
  if (C.rows() == 0) return Mat::Identity(d, d);
  Mat P = Mat::Identity(d, d) - C.transpose() * C;
  Eigen::SelfAdjointEigenSolver<Mat> es(P);
  const int k = d - static_cast<int>(C.rows());
  return es.eigenvectors().rightCols(k);
}

bool on_constraint(const QuadraticForm& q, const Vec& x) {
  if (q.C.rows() == 0) return true;
  const double scale = 1.0 + x.lpNorm<Eigen::Infinity>() + q.e.lpNorm<Eigen::Infinity>();
  return (q.C * x - q.e).lpNorm<Eigen::Infinity>() <= kConstraintTol * scale;
}

double quad_raw(const QuadraticForm& q, const Vec& x) { return 0.5 * x.dot(q.Q * x) + q.b.dot(x) + q.c; }

bool inside_box(const Vec& lo, const Vec& hi, const Vec& x) {
  for (int i = 0; i < x.size(); ++i) {
    const double tol = kBoxTol * (1.0 + std::abs(x[i]));
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  }
  return true;
}

double support_value(const Vec& lo, const Vec& hi, const Vec& p) {
  double acc = 0.0;
  for (int i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) acc = ext::add(acc, is_inf(hi[i]) ? kInf : hi[i] * p[i]);
    else if (p[i] < 0.0) acc = ext::add(acc, lo[i] == -kInf ? kInf : lo[i] * p[i]);
  }
  return acc;
}

Vec affine_inner(const AffineForm& a, const Vec& x) { return a.beta * (x - a.shift); }

/// min{cᵀλ : Gλ = w, λ ∈ Δ}; +inf when w is outside the hull.
double hull_value(const Mat& G, const Vec& c, const Vec& w) {
  const int k = static_cast<int>(G.cols());
  const int D = static_cast<int>(G.rows());
  // Distance to the hull first: a feasibility QP that always has a solution.
  QPBuilder feas;
  const int lam = feas.add_variables(k);
  LinExpr one;
  for (int i = 0; i < k; ++i) {
    feas.add_lower_bound(lam + i, 0.0);
    one.add(lam + i, 1.0);
  }
  feas.add_eq(one, 1.0);
  for (int r = 0; r < D; ++r) {
    LinExpr e;
    for (int i = 0; i < k; ++i) e.add(lam + i, G(r, i));
    e.offset = -w[r];
    feas.add_half_square(e, 1.0);
  }
  auto fr = solve_qp(feas);
  const double scale = 1.0 + G.cwiseAbs().maxCoeff() + w.lpNorm<Eigen::Infinity>();
  if (fr.value > 1e-14 * scale * scale) return kInf;
  QPBuilder lp;
  const int l2 = lp.add_variables(k);
  LinExpr one2;
  for (int i = 0; i < k; ++i) {
    lp.add_lower_bound(l2 + i, 0.0);
    lp.add_linear(l2 + i, c[i]);
    one2.add(l2 + i, 1.0);
  }
  lp.add_eq(one2, 1.0);
  for (int r = 0; r < D; ++r) {
    LinExpr e;
    for (int i = 0; i < k; ++i) e.add(l2 + i, G(r, i));
    lp.add_eq(e, w[r]);
  }
  auto lr = solve_qp(lp);
  if (!lr.converged) {
    // Points on the hull boundary can leave the LP barely infeasible; retry with the
    // projection of w onto the hull.
    Vec wp = G * fr.u.segment(lam, k);
    QPBuilder lp2;
    const int l3 = lp2.add_variables(k);
    LinExpr one3;
    for (int i = 0; i < k; ++i) {
      lp2.add_lower_bound(l3 + i, 0.0);
      lp2.add_linear(l3 + i, c[i]);
      one3.add(l3 + i, 1.0);
    }
    lp2.add_eq(one3, 1.0);
    for (int r = 0; r < D; ++r) {
      LinExpr e;
      for (int i = 0; i < k; ++i) e.add(l3 + i, G(r, i));
      lp2.add_eq(e, wp[r]);
    }
    lr = solve_qp(lp2);
    if (!lr.converged) fail(ErrorKind::InnerNoConvergence, "hull LP did not converge");
  }
  return lr.value;
}

}  // namespace

struct ConvexFunction::Node {
  int dim;
  Form form;
};

ConvexFunction make_function(std::shared_ptr<const ConvexFunction::Node> node) {
  return ConvexFunction(std::move(node));
}

namespace {

ConvexFunction make(int d, Form form) {
  return make_function(std::make_shared<const ConvexFunction::Node>(ConvexFunction::Node{d, std::move(form)}));
}

const QuadraticForm* as_quadratic(const ConvexFunction& f) { return std::get_if<QuadraticForm>(&f.node().form); }

ConvexFunction quadratic_from(QuadraticForm q, int d) {
  auto [C, e] = canonical_constraint(q.C, q.e, d);
  q.C = std::move(C);
  q.e = std::move(e);
  return make(d, std::move(q));
}

}  // namespace

// ---------------------------------------------------------------- factories

ConvexFunction ConvexFunction::quadratic(const Mat& Q, const Vec& b, double c) {
  return constrained_quadratic(Q, b, c, Mat(0, Q.cols()), Vec(0));
}

ConvexFunction ConvexFunction::constrained_quadratic(const Mat& Q, const Vec& b, double c, const Mat& C,
                                                     const Vec& e) {
  const int d = static_cast<int>(Q.rows());
  if (d <= 0) fail(ErrorKind::InvalidArgument, "quadratic needs a positive dimension");
  require_dim(Q.cols(), d, "quadratic matrix columns");
  require_dim(b.size(), d, "quadratic linear term");
  if (!std::isfinite(c)) fail(ErrorKind::InvalidArgument, "quadratic constant must be finite");
  const double scale = std::max(1.0, Q.cwiseAbs().maxCoeff());
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-10 * scale)
    fail(ErrorKind::InvalidArgument, "quadratic matrix is not symmetric");
  Mat Qs = 0.5 * (Q + Q.transpose());
  Eigen::SelfAdjointEigenSolver<Mat> es(Qs, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10 * scale)
    fail(ErrorKind::InvalidArgument, "quadratic matrix is not positive semidefinite");
  Mat Cm = C.rows() ? C : Mat(0, d);
  return quadratic_from(QuadraticForm{Qs, b, c, Cm, e}, d);
}

ConvexFunction ConvexFunction::half_squared_norm(int dim) {
  return quadratic(Mat::Identity(dim, dim), Vec::Zero(dim), 0.0);
}

ConvexFunction ConvexFunction::zero(int dim) { return quadratic(Mat::Zero(dim, dim), Vec::Zero(dim), 0.0); }

ConvexFunction ConvexFunction::indicator_point(const Vec& a) {
  const int d = static_cast<int>(a.size());
  return constrained_quadratic(Mat::Zero(d, d), Vec::Zero(d), 0.0, Mat::Identity(d, d), a);
}

ConvexFunction ConvexFunction::power_norm(double r, double scale, int dim) {
  if (!(r >= 1.0) || !std::isfinite(r)) fail(ErrorKind::InvalidArgument, "power exponent must be >= 1");
  if (!(scale > 0.0)) fail(ErrorKind::InvalidArgument, "power scale must be positive");
  if (dim <= 0) fail(ErrorKind::InvalidArgument, "dimension must be positive");
  if (r == 2.0) return quadratic(scale * Mat::Identity(dim, dim), Vec::Zero(dim), 0.0);
  if (r == 1.0 && dim == 1) return abs_value(scale, 1);
  return make(dim, PowerForm{r, scale});
}

ConvexFunction ConvexFunction::abs_value(double scale, int dim) {
  if (!(scale > 0.0)) fail(ErrorKind::InvalidArgument, "abs scale must be positive");
  return make(dim, AbsForm{scale});
}

ConvexFunction ConvexFunction::indicator_box(const Vec& lower, const Vec& upper) {
  require_dim(upper.size(), lower.size(), "box upper bounds");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i])) fail(ErrorKind::InvalidArgument, "box lower bound exceeds upper bound");
  return make(static_cast<int>(lower.size()), BoxForm{lower, upper});
}

ConvexFunction ConvexFunction::support_box(const Vec& lower, const Vec& upper) {
  require_dim(upper.size(), lower.size(), "box upper bounds");
  for (int i = 0; i < lower.size(); ++i)
    if (!(lower[i] <= upper[i])) fail(ErrorKind::InvalidArgument, "box lower bound exceeds upper bound");
  return make(static_cast<int>(lower.size()), SupportForm{lower, upper});
}

ConvexFunction ConvexFunction::indicator_ball(double radius, int dim) {
  if (!(radius >= 0.0)) fail(ErrorKind::InvalidArgument, "ball radius must be non-negative");
  return make(dim, BallForm{radius});
}

ConvexFunction ConvexFunction::affine(const ConvexFunction& base, double alpha, double beta, const Vec& shift,
                                      const Vec& slope, double c) {
  const int d = base.dim();
  require_dim(shift.size(), d, "affine shift");
  require_dim(slope.size(), d, "affine slope");
  if (!(alpha > 0.0)) fail(ErrorKind::InvalidArgument, "affine outer scale must be positive");
  if (beta == 0.0 || !std::isfinite(beta)) fail(ErrorKind::InvalidArgument, "affine inner scale must be nonzero");
  if (alpha == 1.0 && beta == 1.0 && shift.isZero(0.0) && slope.isZero(0.0) && c == 0.0) return base;
  if (const auto* q = as_quadratic(base)) {
    // Stay inside the quadratic family.
    QuadraticForm out;
    out.Q = alpha * beta * beta * q->Q;
    out.b = alpha * (beta * q->b - beta * beta * (q->Q * shift)) + slope;
    out.c = alpha * (0.5 * beta * beta * shift.dot(q->Q * shift) - beta * q->b.dot(shift) + q->c) + c;
    out.C = q->C;
    out.e = q->C.rows() ? Vec(q->e / beta + q->C * shift) : Vec(0);
    return quadratic_from(std::move(out), d);
  }
  if (const auto* a = std::get_if<AffineForm>(&base.node().form)) {
    // α g(β(x − s)) with g = α' h(β'(y − s')) + ⟨a', y⟩ + c'.
    const double alpha2 = alpha * a->alpha;
    const double beta2 = beta * a->beta;
    const Vec shift2 = shift + a->shift / beta;
    const Vec slope2 = slope + alpha * beta * a->slope;
    const double c2 = c + alpha * (a->c - beta * a->slope.dot(shift));
    return make(d, AffineForm{a->base, alpha2, beta2, shift2, slope2, c2});
  }
  return make(d, AffineForm{base, alpha, beta, shift, slope, c});
}

ConvexFunction ConvexFunction::tilt(const ConvexFunction& base, const Vec& slope) {
  return affine(base, 1.0, 1.0, Vec::Zero(base.dim()), slope, 0.0);
}

ConvexFunction ConvexFunction::shifted(const ConvexFunction& base, const Vec& shift) {
  return affine(base, 1.0, 1.0, shift, Vec::Zero(base.dim()), 0.0);
}

ConvexFunction ConvexFunction::scaled(const ConvexFunction& base, double alpha) {
  return affine(base, alpha, 1.0, Vec::Zero(base.dim()), Vec::Zero(base.dim()), 0.0);
}

ConvexFunction ConvexFunction::sum(const ConvexFunction& f, const ConvexFunction& g) {
  require_dim(g.dim(), f.dim(), "sum operand");
  const auto* qf = as_quadratic(f);
  const auto* qg = as_quadratic(g);
  if (qf && qg) {
    QuadraticForm out;
    out.Q = qf->Q + qg->Q;
    out.b = qf->b + qg->b;
    out.c = qf->c + qg->c;
    out.C = Mat(qf->C.rows() + qg->C.rows(), f.dim());
    out.C << qf->C, qg->C;
    out.e = stack(qf->e, qg->e);
    return quadratic_from(std::move(out), f.dim());
  }
  return make(f.dim(), SumForm{f, g});
}

ConvexFunction ConvexFunction::numeric_conjugate(const ConvexFunction& base) {
  if (!base.smooth() || !base.constraint().empty())
    fail(ErrorKind::NotSupported, "numeric conjugate needs a smooth base on the whole space");
  return make(base.dim(), NumConjForm{base});
}

ConvexFunction ConvexFunction::grid(GridFunction g) {
  const int d = g.dim();
  return make(d, GridForm{std::move(g)});
}

ConvexFunction ConvexFunction::max_affine(const Mat& A, const Vec& c) {
  if (A.rows() == 0) fail(ErrorKind::InvalidArgument, "max-affine needs at least one piece");
  require_dim(c.size(), A.rows(), "max-affine constants");
  if (!A.allFinite() || !c.allFinite()) fail(ErrorKind::InvalidArgument, "max-affine data must be finite");
  return make(static_cast<int>(A.cols()), MaxAffineForm{A, c});
}

ConvexFunction ConvexFunction::hull_lp(const Mat& G, const Vec& c) {
  if (G.cols() == 0) fail(ErrorKind::InvalidArgument, "hull needs at least one point");
  require_dim(c.size(), G.cols(), "hull costs");
  if (!G.allFinite() || !c.allFinite()) fail(ErrorKind::InvalidArgument, "hull data must be finite");
  return make(static_cast<int>(G.rows()), HullForm{G, c});
}

ConvexFunction inf_convolve(const ConvexFunction& f, const ConvexFunction& g) {
  require_dim(g.dim(), f.dim(), "inf-convolution operand");
  if (g.is_indicator_of_origin()) return f;
  if (f.is_indicator_of_origin()) return g;
  return make(f.dim(), InfConvForm{f, g});
}

// ---------------------------------------------------------------- queries

int ConvexFunction::dim() const { return node_->dim; }

std::string ConvexFunction::kind() const {
  return std::visit(overloaded{
                        [](const QuadraticForm& q) -> std::string {
                          return q.C.rows() ? "constrained_quadratic" : "quadratic";
                        },
                        [](const PowerForm&) -> std::string { return "power_norm"; },
                        [](const AbsForm&) -> std::string { return "abs_value"; },
                        [](const BoxForm&) -> std::string { return "indicator_box"; },
                        [](const SupportForm&) -> std::string { return "support_box"; },
                        [](const BallForm&) -> std::string { return "indicator_ball"; },
                        [](const AffineForm&) -> std::string { return "affine"; },
                        [](const SumForm&) -> std::string { return "sum"; },
                        [](const NumConjForm&) -> std::string { return "numeric_conjugate"; },
                        [](const InfConvForm&) -> std::string { return "inf_convolution"; },
                        [](const GridForm&) -> std::string { return "grid"; },
                        [](const MaxAffineForm&) -> std::string { return "max_affine"; },
                        [](const HullForm&) -> std::string { return "hull_lp"; },
                    },
                    node_->form);
}

bool ConvexFunction::is_indicator_of_origin() const {
  const int d = dim();
  if (const auto* q = as_quadratic(*this)) {
    return q->C.rows() == d && q->e.lpNorm<Eigen::Infinity>() <= 1e-14 && std::abs(q->c) == 0.0;
  }
  if (const auto* b = std::get_if<BoxForm>(&node_->form)) return b->lo.isZero(0.0) && b->hi.isZero(0.0);
  if (const auto* b = std::get_if<BallForm>(&node_->form)) return b->radius == 0.0;
  return false;
}

double ConvexFunction::value(const Vec& x) const {
  require_dim(x.size(), dim(), "function argument");
  return std::visit(
      overloaded{
          [&](const QuadraticForm& q) { return on_constraint(q, x) ? quad_raw(q, x) : kInf; },
          [&](const PowerForm& p) { return p.scale * std::pow(x.norm(), p.r) / p.r; },
          [&](const AbsForm& a) { return a.scale * x.lpNorm<1>(); },
          [&](const BoxForm& b) { return inside_box(b.lo, b.hi, x) ? 0.0 : kInf; },
          [&](const SupportForm& s) { return support_value(s.lo, s.hi, x); },
          [&](const BallForm& b) { return x.norm() <= b.radius * (1.0 + kBoxTol) + kBoxTol ? 0.0 : kInf; },
          [&](const AffineForm& a) {
            const double inner = a.base.value(affine_inner(a, x));
            return ext::add(ext::scale(a.alpha, inner), a.slope.dot(x) + a.c);
          },
          [&](const SumForm& s) {
            const double fv = s.f.value(x);
            if (is_inf(fv)) return kInf;
            return ext::add(fv, s.g.value(x));
          },
          [&](const NumConjForm& n) -> double {
            const ConvexFunction& base = n.base;
            SmoothObjective obj;
            obj.dim = dim();
            obj.value = [&](const Vec& z) { return base.smooth_value(z) - x.dot(z); };
            obj.derivatives = [&](const Vec& z, Vec& g, HessianBuilder& H) {
              g = base.gradient(z) - x;
              const Mat Hz = base.hessian(z);
              for (int i = 0; i < Hz.rows(); ++i)
                for (int j = 0; j < Hz.cols(); ++j) H.add(i, j, Hz(i, j));
            };
            auto r = newton_minimize(obj, Vec::Zero(dim()));
            if (!r.converged || !std::isfinite(r.value)) {
              if (r.x.norm() > 1e6 || !std::isfinite(r.value)) return kInf;
              fail(ErrorKind::InnerNoConvergence, "numeric conjugate: " + r.message);
            }
            return -r.value;
          },
          [&](const InfConvForm& ic) -> double {
            const ConvexFunction &f = ic.f, &g = ic.g;
            const int d = dim();
            double v = kInf;
            if (f.smooth() && g.smooth() && f.constraint().empty() && g.constraint().empty()) {
              SmoothObjective obj;
              obj.dim = d;
              obj.value = [&](const Vec& z) { return f.smooth_value(z) + g.smooth_value(x - z); };
              obj.derivatives = [&](const Vec& z, Vec& grad, HessianBuilder& H) {
                grad = f.gradient(z) - g.gradient(x - z);
                const Mat Hz = f.hessian(z) + g.hessian(x - z);
                for (int i = 0; i < d; ++i)
                  for (int j = 0; j < d; ++j) H.add(i, j, Hz(i, j));
              };
              auto r = newton_minimize(obj, 0.5 * x);
              if (!r.converged) fail(ErrorKind::InnerNoConvergence, "inf-convolution: " + r.message);
              v = r.value;
            } else if (f.qp_representable() && g.qp_representable()) {
              QPBuilder qp;
              const int z = qp.add_variables(d);
              std::vector<LinExpr> az(d), ar(d);
              for (int i = 0; i < d; ++i) {
                az[i] = LinExpr::var(z + i);
                ar[i] = LinExpr{{{z + i, -1.0}}, x[i]};
              }
              f.emit_qp(az, 1.0, qp);
              g.emit_qp(ar, 1.0, qp);
              auto r = solve_qp(qp);
              if (r.unbounded) fail(ErrorKind::Unbounded, "inf-convolution inner infimum is -inf");
              if (r.infeasible) return kInf;
              if (!r.converged) fail(ErrorKind::InnerNoConvergence, "inf-convolution QP did not converge");
              v = r.value;
            } else {
              auto obj = [&](const Vec& z) { return ext::add(f.value(z), g.value(x - z)); };
              // Start from a point where f is finite if x/2 is not.
              Vec z0 = 0.5 * x;
              if (!std::isfinite(obj(z0))) {
                for (const Vec& cand : {Vec(x), Vec(Vec::Zero(d)), f.prox(1.0, x), Vec(x - g.prox(1.0, x))}) {
                  if (std::isfinite(obj(cand))) {
                    z0 = cand;
                    break;
                  }
                }
              }
              auto r = minimize_direct(obj, z0, std::max(1.0, x.norm()));
              v = r.value;
            }
            if (v < -1e12) fail(ErrorKind::Unbounded, "inf-convolution inner infimum is -inf");
            return v;
          },
          [&](const GridForm& g) { return g.grid.interpolate(x); },
          [&](const MaxAffineForm& m) { return (m.A * x - m.c).maxCoeff(); },
          [&](const HullForm& h) { return hull_value(h.G, h.c, x); },
      },
      node_->form);
}

bool ConvexFunction::smooth() const {
  return std::visit(overloaded{
                        [](const QuadraticForm&) { return true; },
                        [](const PowerForm& p) { return p.r > 1.0; },
                        [](const AbsForm&) { return false; },
                        [](const BoxForm&) { return false; },
                        [](const SupportForm&) { return false; },
                        [](const BallForm&) { return false; },
                        [](const AffineForm& a) { return a.base.smooth(); },
                        [](const SumForm& s) { return s.f.smooth() && s.g.smooth(); },
                        [](const NumConjForm&) { return true; },
                        [](const InfConvForm& ic) {
                          return ic.f.smooth() && ic.g.smooth() && ic.f.constraint().empty() &&
                                 ic.g.constraint().empty();
                        },
                        [](const GridForm&) { return false; },
                        [](const MaxAffineForm&) { return false; },
                        [](const HullForm&) { return false; },
                    },
                    node_->form);
}

double ConvexFunction::smooth_value(const Vec& x) const {
  require_dim(x.size(), dim(), "function argument");
  return std::visit(overloaded{
                        [&](const QuadraticForm& q) { return quad_raw(q, x); },
                        [&](const AffineForm& a) {
                          return a.alpha * a.base.smooth_value(affine_inner(a, x)) + a.slope.dot(x) + a.c;
                        },
                        [&](const SumForm& s) { return s.f.smooth_value(x) + s.g.smooth_value(x); },
                        [&](const auto&) { return value(x); },
                    },
                    node_->form);
}

namespace {

Mat power_hessian(const PowerForm& p, const Vec& x) {
  const int d = static_cast<int>(x.size());
  const double rho = x.norm();
  if (rho == 0.0) {
    if (p.r > 2.0) return Mat::Zero(d, d);
    return p.scale * std::pow(1e-8, p.r - 2.0) * Mat::Identity(d, d);
  }
  const Vec u = x / rho;
  return p.scale * std::pow(rho, p.r - 2.0) * (Mat::Identity(d, d) + (p.r - 2.0) * u * u.transpose());
}

}  // namespace

Vec ConvexFunction::gradient(const Vec& x) const {
  require_dim(x.size(), dim(), "gradient argument");
  return std::visit(
      overloaded{
          [&](const QuadraticForm& q) -> Vec { return q.Q * x + q.b; },
          [&](const PowerForm& p) -> Vec {
            if (p.r <= 1.0) fail(ErrorKind::NotSupported, "gradient of a nonsmooth form");
            const double rho = x.norm();
            if (rho == 0.0) return Vec::Zero(x.size());
            return p.scale * std::pow(rho, p.r - 2.0) * x;
          },
          [&](const AffineForm& a) -> Vec {
            return a.alpha * a.beta * a.base.gradient(affine_inner(a, x)) + a.slope;
          },
          [&](const SumForm& s) -> Vec { return s.f.gradient(x) + s.g.gradient(x); },
          [&](const NumConjForm& n) -> Vec {
            const ConvexFunction& base = n.base;
            SmoothObjective obj;
            obj.dim = dim();
            obj.value = [&](const Vec& z) { return base.smooth_value(z) - x.dot(z); };
            obj.derivatives = [&](const Vec& z, Vec& g, HessianBuilder& H) {
              g = base.gradient(z) - x;
              const Mat Hz = base.hessian(z);
              for (int i = 0; i < Hz.rows(); ++i)
                for (int j = 0; j < Hz.cols(); ++j) H.add(i, j, Hz(i, j));
            };
            auto r = newton_minimize(obj, Vec::Zero(dim()));
            if (!r.converged) fail(ErrorKind::InnerNoConvergence, "numeric conjugate gradient: " + r.message);
            return r.x;
          },
          [&](const InfConvForm& ic) -> Vec {
            if (!smooth()) fail(ErrorKind::NotSupported, "gradient of a nonsmooth inf-convolution");
            const ConvexFunction &f = ic.f, &g = ic.g;
            const int d = dim();
            SmoothObjective obj;
            obj.dim = d;
            obj.value = [&](const Vec& z) { return f.smooth_value(z) + g.smooth_value(x - z); };
            obj.derivatives = [&](const Vec& z, Vec& grad, HessianBuilder& H) {
              grad = f.gradient(z) - g.gradient(x - z);
              const Mat Hz = f.hessian(z) + g.hessian(x - z);
              for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) H.add(i, j, Hz(i, j));
            };
            auto r = newton_minimize(obj, 0.5 * x);
            return f.gradient(r.x);
          },
          [&](const auto&) -> Vec { fail(ErrorKind::NotSupported, "gradient of a nonsmooth " + kind() + " form"); },
      },
      node_->form);
}

Mat ConvexFunction::hessian(const Vec& x) const {
  require_dim(x.size(), dim(), "hessian argument");
  return std::visit(
      overloaded{
          [&](const QuadraticForm& q) -> Mat { return q.Q; },
          [&](const PowerForm& p) -> Mat {
            if (p.r <= 1.0) fail(ErrorKind::NotSupported, "hessian of a nonsmooth form");
            return power_hessian(p, x);
          },
          [&](const AffineForm& a) -> Mat {
            return a.alpha * a.beta * a.beta * a.base.hessian(affine_inner(a, x));
          },
          [&](const SumForm& s) -> Mat { return s.f.hessian(x) + s.g.hessian(x); },
          [&](const NumConjForm& n) -> Mat {
            const Vec z = gradient(x);
            const Mat Hz = n.base.hessian(z);
            Eigen::LDLT<Mat> ldlt(Hz);
            Mat inv = ldlt.solve(Mat::Identity(dim(), dim()));
            if (!inv.allFinite()) fail(ErrorKind::NotSupported, "numeric conjugate hessian is singular");
            return 0.5 * (inv + inv.transpose());
          },
          [&](const InfConvForm& ic) -> Mat {
            if (!smooth()) fail(ErrorKind::NotSupported, "hessian of a nonsmooth inf-convolution");
            const int d = dim();
            const Vec gz = gradient(x);
            // Recover the inner minimizer: ∇f(z) = gz. Re-solve to get z.
            SmoothObjective obj;
            obj.dim = d;
            obj.value = [&](const Vec& z) { return ic.f.smooth_value(z) + ic.g.smooth_value(x - z); };
            obj.derivatives = [&](const Vec& z, Vec& grad, HessianBuilder& H) {
              grad = ic.f.gradient(z) - ic.g.gradient(x - z);
              const Mat Hz = ic.f.hessian(z) + ic.g.hessian(x - z);
              for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) H.add(i, j, Hz(i, j));
            };
            auto r = newton_minimize(obj, 0.5 * x);
            const Mat Hf = ic.f.hessian(r.x), Hg = ic.g.hessian(x - r.x);
            // (Hf⁻¹ + Hg⁻¹)⁻¹ = Hf (Hf + Hg)⁻¹ Hg.
            Mat out = Hf * Eigen::CompleteOrthogonalDecomposition<Mat>(Hf + Hg).solve(Hg);
            (void)gz;
            return 0.5 * (out + out.transpose());
          },
          [&](const auto&) -> Mat { fail(ErrorKind::NotSupported, "hessian of a nonsmooth " + kind() + " form"); },
      },
      node_->form);
}

LinearConstraint ConvexFunction::constraint() const {
  const int d = dim();
  return std::visit(overloaded{
                        [&](const QuadraticForm& q) { return LinearConstraint{q.C, q.e}; },
                        [&](const AffineForm& a) {
                          LinearConstraint inner = a.base.constraint();
                          if (inner.empty()) return LinearConstraint{Mat(0, d), Vec(0)};
                          // C (β(x − s)) = e  ⇔  C x = e/β + C s.
                          return LinearConstraint{inner.matrix, inner.rhs / a.beta + inner.matrix * a.shift};
                        },
                        [&](const SumForm& s) {
                          LinearConstraint cf = s.f.constraint(), cg = s.g.constraint();
                          Mat C(cf.matrix.rows() + cg.matrix.rows(), d);
                          if (cf.matrix.rows()) C.topRows(cf.matrix.rows()) = cf.matrix;
                          if (cg.matrix.rows()) C.bottomRows(cg.matrix.rows()) = cg.matrix;
                          return LinearConstraint{C, stack(cf.rhs, cg.rhs)};
                        },
                        [&](const auto&) { return LinearConstraint{Mat(0, d), Vec(0)}; },
                    },
                    node_->form);
}

// ---------------------------------------------------------------- conjugation

namespace {

ConvexFunction quadratic_conjugate(const QuadraticForm& q, int d) {
  const Mat V = null_basis(q.C, d);
  const Vec x0 = q.C.rows() ? Vec(q.C.transpose() * q.e) : Vec(Vec::Zero(d));
  const double const0 = quad_raw(q, x0);
  const Vec m = q.Q * x0 + q.b;
  const int k = static_cast<int>(V.cols());
  Mat Qc = Mat::Zero(d, d);
  Mat Cc(0, d);
  if (k > 0) {
    const Mat H = V.transpose() * q.Q * V;
    Eigen::SelfAdjointEigenSolver<Mat> es(0.5 * (H + H.transpose()));
    const Vec& lam = es.eigenvalues();
    const Mat& W = es.eigenvectors();
    const double cut = 1e-10 * std::max(1.0, lam.cwiseAbs().maxCoeff());
    Mat Hpinv = Mat::Zero(k, k);
    std::vector<int> flat;
    for (int i = 0; i < k; ++i) {
      if (lam[i] > cut) Hpinv += W.col(i) * W.col(i).transpose() / lam[i];
      else flat.push_back(i);
    }
    Qc = V * Hpinv * V.transpose();
    Cc = Mat(flat.size(), d);
    for (std::size_t j = 0; j < flat.size(); ++j) Cc.row(j) = (V * W.col(flat[j])).transpose();
  }
  QuadraticForm out;
  out.Q = 0.5 * (Qc + Qc.transpose());
  out.b = x0 - Qc * m;
  out.c = 0.5 * m.dot(Qc * m) - const0;
  out.C = Cc;
  out.e = Cc * m;
  return quadratic_from(std::move(out), d);
}

}  // namespace

ConvexFunction ConvexFunction::conjugate() const {
  const int d = dim();
  return std::visit(
      overloaded{
          [&](const QuadraticForm& q) { return quadratic_conjugate(q, d); },
          [&](const PowerForm& p) {
            if (p.r == 1.0) return indicator_ball(p.scale, d);
            const double s = p.r / (p.r - 1.0);
            return power_norm(s, std::pow(p.scale, 1.0 - s), d);
          },
          [&](const AbsForm& a) { return indicator_box(Vec::Constant(d, -a.scale), Vec::Constant(d, a.scale)); },
          [&](const BoxForm& b) { return support_box(b.lo, b.hi); },
          [&](const SupportForm& s) { return indicator_box(s.lo, s.hi); },
          [&](const BallForm& b) {
            if (b.radius == 0.0) return zero(d);
            return power_norm(1.0, b.radius, d);
          },
          [&](const AffineForm& a) {
            return affine(a.base.conjugate(), a.alpha, 1.0 / (a.alpha * a.beta), a.slope, a.shift,
                          -a.slope.dot(a.shift) - a.c);
          },
          [&](const SumForm& s) {
            if (smooth() && constraint().empty()) return numeric_conjugate(*this);
            return inf_convolve(s.f.conjugate(), s.g.conjugate());
          },
          [&](const NumConjForm& n) { return n.base; },
          [&](const InfConvForm& ic) { return sum(ic.f.conjugate(), ic.g.conjugate()); },
          [&](const GridForm& g) { return grid(g.grid.conjugate()); },
          [&](const MaxAffineForm& m) { return hull_lp(m.A.transpose(), m.c); },
          [&](const HullForm& h) { return max_affine(h.G.transpose(), h.c); },
      },
      node_->form);
}

ConvexFunction conjugate_on_grid(const ConvexFunction& f, const Vec& lower, const Vec& upper,
                                 const std::vector<int>& nodes) {
  if (static_cast<int>(nodes.size()) > GridFunction::kMaxDim)
    fail(ErrorKind::DimensionTooHigh, "grid conjugation supports at most 4 dimensions");
  auto g = GridFunction::sample(lower, upper, nodes, [&](const Vec& x) { return f.value(x); });
  return ConvexFunction::grid(g.conjugate());
}

// ---------------------------------------------------------------- prox

namespace {

/// Radius t >= 0 solving t + τ c t^{r-1} = ρ.
double power_radius(double rho, double tau_c, double r) {
  if (rho == 0.0) return 0.0;
  double lo = 0.0, hi = rho;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (mid + tau_c * std::pow(mid, r - 1.0) > rho) hi = mid;
    else lo = mid;
    if (hi - lo <= 1e-16 * rho) break;
  }
  double t = 0.5 * (lo + hi);
  // Newton polish.
  for (int it = 0; it < 3 && t > 0.0; ++it) {
    const double F = t + tau_c * std::pow(t, r - 1.0) - rho;
    const double dF = 1.0 + tau_c * (r - 1.0) * std::pow(t, r - 2.0);
    const double tn = t - F / dF;
    if (tn > 0.0 && tn < rho) t = tn;
  }
  return t;
}

Vec generic_prox(const ConvexFunction& f, double tau, const Vec& y) {
  const int d = f.dim();
  if (f.smooth()) {
    SmoothObjective obj;
    obj.dim = d;
    obj.value = [&](const Vec& x) { return f.smooth_value(x) + (x - y).squaredNorm() / (2.0 * tau); };
    obj.derivatives = [&](const Vec& x, Vec& g, HessianBuilder& H) {
      g = f.gradient(x) + (x - y) / tau;
      const Mat Hx = f.hessian(x);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) H.add(i, j, Hx(i, j) + (i == j ? 1.0 / tau : 0.0));
    };
    LinearConstraint c = f.constraint();
    obj.eq_matrix = c.matrix;
    obj.eq_rhs = c.rhs;
    auto r = newton_minimize(obj, y);
    if (!r.converged)
      fail(ErrorKind::NoConvergence, "prox after " + std::to_string(r.iterations) +
                                         " iterations, residual " + std::to_string(r.residual));
    return r.x;
  }
  if (f.qp_representable()) {
    QPBuilder qp;
    const int x = qp.add_variables(d);
    std::vector<LinExpr> arg(d);
    for (int i = 0; i < d; ++i) {
      arg[i] = LinExpr::var(x + i);
      qp.add_half_square(LinExpr{{{x + i, 1.0}}, -y[i]}, 1.0 / tau);
    }
    f.emit_qp(arg, 1.0, qp);
    auto r = solve_qp(qp);
    if (!r.converged)
      fail(ErrorKind::NoConvergence, "prox QP after " + std::to_string(r.iterations) + " iterations");
    return r.u.segment(x, d);
  }
  auto obj = [&](const Vec& x) { return ext::add(f.value(x), (x - y).squaredNorm() / (2.0 * tau)); };
  Vec x0 = y;
  if (!std::isfinite(f.value(x0))) {
    if (const auto* g = std::get_if<GridForm>(&f.node().form)) {
      // Best node as a start.
      double best = kInf;
      for (std::size_t k = 0; k < g->grid.size(); ++k) {
        const Vec xn = g->grid.node(k);
        const double v = obj(xn);
        if (v < best) {
          best = v;
          x0 = xn;
        }
      }
    } else {
      x0 = Vec::Zero(d);
    }
  }
  auto r = minimize_direct(obj, x0, std::max(1e-2, std::sqrt(tau)));
  if (!std::isfinite(r.value)) fail(ErrorKind::NoConvergence, "prox found no finite point");
  return r.x;
}

}  // namespace

Vec ConvexFunction::prox(double tau, const Vec& y) const {
  if (!(tau > 0.0)) fail(ErrorKind::InvalidArgument, "prox step must be positive");
  require_dim(y.size(), dim(), "prox argument");
  const int d = dim();
  return std::visit(
      overloaded{
          [&](const QuadraticForm& q) -> Vec {
            const Mat V = null_basis(q.C, d);
            const Vec x0 = q.C.rows() ? Vec(q.C.transpose() * q.e) : Vec(Vec::Zero(d));
            if (V.cols() == 0) return x0;
            const Mat A = V.transpose() * q.Q * V + Mat::Identity(V.cols(), V.cols()) / tau;
            const Vec rhs = V.transpose() * ((y - x0) / tau - q.Q * x0 - q.b);
            return x0 + V * A.ldlt().solve(rhs);
          },
          [&](const PowerForm& p) -> Vec {
            const double rho = y.norm();
            if (rho == 0.0) return Vec::Zero(d);
            if (p.r == 1.0) return std::max(0.0, 1.0 - tau * p.scale / rho) * y;
            return power_radius(rho, tau * p.scale, p.r) / rho * y;
          },
          [&](const AbsForm& a) -> Vec {
            const double t = tau * a.scale;
            return y.unaryExpr([t](double v) { return v > t ? v - t : (v < -t ? v + t : 0.0); });
          },
          [&](const BoxForm& b) -> Vec { return y.cwiseMax(b.lo).cwiseMin(b.hi); },
          [&](const SupportForm& s) -> Vec { return y - y.cwiseMax(tau * s.lo).cwiseMin(tau * s.hi); },
          [&](const BallForm& b) -> Vec {
            const double rho = y.norm();
            return rho <= b.radius ? y : Vec(y * (b.radius / rho));
          },
          [&](const AffineForm& a) -> Vec {
            const Vec yy = y - tau * a.slope;
            const Vec z = a.base.prox(a.alpha * tau * a.beta * a.beta, a.beta * (yy - a.shift));
            return a.shift + z / a.beta;
          },
          [&](const NumConjForm& n) -> Vec {
            // Moreau: prox_{τ f*}(y) = y − τ prox_{f/τ}(y/τ).
            return y - tau * n.base.prox(1.0 / tau, y / tau);
          },
          [&](const InfConvForm&) -> Vec {
            const ConvexFunction dual = conjugate();
            return y - tau * dual.prox(1.0 / tau, y / tau);
          },
          [&](const auto&) -> Vec { return generic_prox(*this, tau, y); },
      },
      node_->form);
}

// ---------------------------------------------------------------- QP emission

bool ConvexFunction::qp_representable() const {
  return std::visit(overloaded{
                        [](const QuadraticForm&) { return true; },
                        [](const AbsForm&) { return true; },
                        [](const BoxForm&) { return true; },
                        [](const SupportForm&) { return true; },
                        [](const MaxAffineForm&) { return true; },
                        [](const HullForm&) { return true; },
                        [](const AffineForm& a) { return a.base.qp_representable(); },
                        [](const SumForm& s) { return s.f.qp_representable() && s.g.qp_representable(); },
                        [](const InfConvForm& ic) { return ic.f.qp_representable() && ic.g.qp_representable(); },
                        [](const auto&) { return false; },
                    },
                    node_->form);
}

void ConvexFunction::emit_qp(const std::vector<LinExpr>& arg, double w, QPBuilder& qp) const {
  const int d = dim();
  if (static_cast<int>(arg.size()) != d) fail(ErrorKind::DimensionMismatch, "QP argument size");
  if (!(w > 0.0)) fail(ErrorKind::InvalidArgument, "QP term weight must be positive");
  std::visit(
      overloaded{
          [&](const QuadraticForm& q) {
            qp.add_quadratic_form(arg, q.Q, w);
            for (int i = 0; i < d; ++i) qp.add_linear(arg[i], w * q.b[i]);
            qp.add_constant(w * q.c);
            for (int r = 0; r < q.C.rows(); ++r) {
              LinExpr e;
              for (int i = 0; i < d; ++i) e.add(arg[i], q.C(r, i));
              qp.add_eq(e, q.e[r]);
            }
          },
          [&](const AbsForm& a) {
            const int t = qp.add_variables(d);
            for (int i = 0; i < d; ++i) {
              LinExpr plus = LinExpr::var(t + i), minus = LinExpr::var(t + i);
              plus.add(arg[i], -1.0);
              minus.add(arg[i], 1.0);
              qp.add_ge(plus, 0.0);
              qp.add_ge(minus, 0.0);
              qp.add_linear(t + i, w * a.scale);
            }
          },
          [&](const BoxForm& b) {
            for (int i = 0; i < d; ++i) {
              if (b.lo[i] == b.hi[i]) {
                qp.add_eq(arg[i], b.lo[i]);
                continue;
              }
              if (std::isfinite(b.lo[i])) qp.add_ge(arg[i], b.lo[i]);
              if (std::isfinite(b.hi[i])) qp.add_ge(arg[i].scaled(-1.0), -b.hi[i]);
            }
          },
          [&](const SupportForm& s) {
            for (int i = 0; i < d; ++i) {
              const bool lo_f = std::isfinite(s.lo[i]), hi_f = std::isfinite(s.hi[i]);
              if (!lo_f && !hi_f) {
                qp.add_eq(arg[i], 0.0);
              } else if (!hi_f) {
                qp.add_ge(arg[i].scaled(-1.0), 0.0);  // p <= 0, value lo·p
                qp.add_linear(arg[i], w * s.lo[i]);
              } else if (!lo_f) {
                qp.add_ge(arg[i], 0.0);
                qp.add_linear(arg[i], w * s.hi[i]);
              } else {
                const int t = qp.add_variables(1);
                LinExpr a = LinExpr::var(t), b = LinExpr::var(t);
                a.add(arg[i], -s.lo[i]);
                b.add(arg[i], -s.hi[i]);
                qp.add_ge(a, 0.0);
                qp.add_ge(b, 0.0);
                qp.add_linear(t, w);
              }
            }
          },
          [&](const MaxAffineForm& m) {
            const int t = qp.add_variables(1);
            for (int j = 0; j < m.A.rows(); ++j) {
              LinExpr e = LinExpr::var(t);
              for (int i = 0; i < d; ++i) e.add(arg[i], -m.A(j, i));
              qp.add_ge(e, -m.c[j]);
            }
            qp.add_linear(t, w);
          },
          [&](const HullForm& h) {
            const int k = static_cast<int>(h.G.cols());
            const int lam = qp.add_variables(k);
            LinExpr one;
            for (int j = 0; j < k; ++j) {
              qp.add_lower_bound(lam + j, 0.0);
              qp.add_linear(lam + j, w * h.c[j]);
              one.add(lam + j, 1.0);
            }
            qp.add_eq(one, 1.0);
            for (int i = 0; i < d; ++i) {
              LinExpr e = arg[i].scaled(-1.0);
              for (int j = 0; j < k; ++j) e.add(lam + j, h.G(i, j));
              qp.add_eq(e, 0.0);
            }
          },
          [&](const AffineForm& a) {
            std::vector<LinExpr> inner(d);
            for (int i = 0; i < d; ++i) {
              inner[i] = arg[i].scaled(a.beta);
              inner[i].offset -= a.beta * a.shift[i];
            }
            a.base.emit_qp(inner, w * a.alpha, qp);
            for (int i = 0; i < d; ++i) qp.add_linear(arg[i], w * a.slope[i]);
            qp.add_constant(w * a.c);
          },
          [&](const SumForm& s) {
            s.f.emit_qp(arg, w, qp);
            s.g.emit_qp(arg, w, qp);
          },
          [&](const InfConvForm& ic) {
            const int z = qp.add_variables(d);
            std::vector<LinExpr> az(d), ar(d);
            for (int i = 0; i < d; ++i) {
              az[i] = LinExpr::var(z + i);
              ar[i] = arg[i];
              ar[i].add(z + i, -1.0);
            }
            ic.f.emit_qp(az, w, qp);
            ic.g.emit_qp(ar, w, qp);
          },
          [&](const auto&) { fail(ErrorKind::NotSupported, kind() + " is not QP-representable"); },
      },
      node_->form);
}

}  // namespace selfdual
