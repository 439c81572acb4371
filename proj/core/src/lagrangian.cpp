#include "selfdual/lagrangian.hpp"
#include "selfdual/io.hpp"

#include <algorithm>
#include <cmath>

namespace selfdual {

// ---------------------------------------------------------------- matrices

Mat sym_part(const Mat& B) { return 0.5 * (B + B.transpose()); }
Mat skew_part(const Mat& B) { return 0.5 * (B - B.transpose()); }

bool is_skew(const Mat& G, double tol) {
  if (G.rows() != G.cols()) return false;
  return (G + G.transpose()).lpNorm<Eigen::Infinity>() <= tol;
}


// ---------------------------------------------------------------- graphs

void MonotoneGraph::add(const Vec& xi, const Vec& pi) {
  if (xi.size() != pi.size()) fail(ErrorKind::DimensionMismatch, "graph pair sizes differ");
  if (!x.empty()) require_dim(xi.size(), dim(), "graph pair");
  x.push_back(xi);
  p.push_back(pi);
}

void MonotoneGraph::validate(double tol) const {
  if (x.empty()) fail(ErrorKind::InvalidArgument, "empty graph");
  double worst = 0.0;
  std::size_t wi = 0, wj = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = i + 1; j < x.size(); ++j) {
      const double m = (p[i] - p[j]).dot(x[i] - x[j]);
      if (m < worst) {
        worst = m;
        wi = i;
        wj = j;
      }
    }
  if (worst < -tol)
    fail(ErrorKind::NotMonotone, "pairs " + std::to_string(wi) + " and " + std::to_string(wj) +
                                     " give <p_i - p_j, x_i - x_j> = " + std::to_string(worst));
}

MonotoneGraph MonotoneGraph::sample_1d(const std::function<double(double)>& f, double a, double b, int n) {
  if (n < 2 || !(b > a)) fail(ErrorKind::InvalidArgument, "sample_1d needs n >= 2 and a < b");
  MonotoneGraph g;
  for (int k = 0; k < n; ++k) {
    const double y = a + (b - a) * k / (n - 1);
    g.add(Vec::Constant(1, y), Vec::Constant(1, f(y)));
  }
  return g;
}

// ---------------------------------------------------------------- operators

MonotoneOperator MonotoneOperator::grad_convex(const ConvexFunction& phi) {
  MonotoneOperator t;
  t.kind_ = Kind::GradConvex;
  t.dim_ = phi.dim();
  t.phi_ = phi;
  return t;
}

MonotoneOperator MonotoneOperator::skew_plus_grad(const Mat& gamma, const ConvexFunction& phi) {
  require_dim(gamma.rows(), phi.dim(), "skew part");
  if (!is_skew(gamma)) fail(ErrorKind::InvalidArgument, "skew part must satisfy Γᵀ = −Γ exactly");
  MonotoneOperator t;
  t.kind_ = Kind::SkewPlusGrad;
  t.dim_ = phi.dim();
  t.phi_ = phi;
  t.matrix_ = gamma;
  return t;
}

MonotoneOperator MonotoneOperator::linear_positive(const Mat& B) {
  if (B.rows() != B.cols()) fail(ErrorKind::DimensionMismatch, "linear operator must be square");
  Eigen::SelfAdjointEigenSolver<Mat> es(sym_part(B));
  if (es.eigenvalues().minCoeff() < -1e-10)
    fail(ErrorKind::NotMonotone, "symmetric part has eigenvalue " + std::to_string(es.eigenvalues().minCoeff()));
  MonotoneOperator t;
  t.kind_ = Kind::LinearPositive;
  t.dim_ = static_cast<int>(B.rows());
  t.matrix_ = B;
  return t;
}

MonotoneOperator MonotoneOperator::sampled(MonotoneGraph graph) {
  graph.validate(LagrangianTolerances::monotone);
  MonotoneOperator t;
  t.kind_ = Kind::Sampled;
  t.dim_ = graph.dim();
  t.graph_ = std::move(graph);
  return t;
}

MonotoneOperator MonotoneOperator::sum(const MonotoneOperator& a, const MonotoneOperator& b) {
  require_dim(b.dim(), a.dim(), "operator sum");
  MonotoneOperator t;
  t.kind_ = Kind::Sum;
  t.dim_ = a.dim();
  t.parts_ = {a, b};
  return t;
}

MonotoneOperator MonotoneOperator::scaled(double c, const MonotoneOperator& op) {
  if (!(c > 0.0)) fail(ErrorKind::InvalidArgument, "operator scale must be positive");
  MonotoneOperator t;
  t.kind_ = Kind::Scaled;
  t.dim_ = op.dim();
  t.parts_ = {op};
  t.factor_ = c;
  return t;
}

std::optional<Vec> MonotoneOperator::apply(const Vec& x) const {
  require_dim(x.size(), dim_, "operator argument");
  auto grad = [&](const ConvexFunction& f) -> std::optional<Vec> {
    if (!f.smooth() || !f.constraint().empty()) return std::nullopt;
    if (!std::isfinite(f.value(x))) return std::nullopt;
    return f.gradient(x);
  };
  switch (kind_) {
    case Kind::GradConvex: return grad(*phi_);
    case Kind::SkewPlusGrad: {
      auto g = grad(*phi_);
      if (!g) return std::nullopt;
      return Vec(*g + matrix_ * x);
    }
    case Kind::LinearPositive: return Vec(matrix_ * x);
    case Kind::Sampled:
      for (std::size_t k = 0; k < graph_.size(); ++k)
        if ((graph_.x[k] - x).lpNorm<Eigen::Infinity>() <= 1e-12) return graph_.p[k];
      return std::nullopt;
    case Kind::Sum: {
      auto a = parts_[0].apply(x), b = parts_[1].apply(x);
      if (!a || !b) return std::nullopt;
      return Vec(*a + *b);
    }
    case Kind::Scaled: {
      auto a = parts_[0].apply(x);
      if (!a) return std::nullopt;
      return Vec(factor_ * *a);
    }
  }
  return std::nullopt;
}

MonotoneGraph MonotoneOperator::sample_pairs(int n, std::mt19937_64& rng, double radius) const {
  std::uniform_real_distribution<double> U(-radius, radius);
  MonotoneGraph g;
  if (kind_ == Kind::Sampled) {
    std::uniform_int_distribution<std::size_t> pick(0, graph_.size() - 1);
    for (int k = 0; k < n; ++k) {
      const std::size_t j = pick(rng);
      g.add(graph_.x[j], graph_.p[j]);
    }
    return g;
  }
  for (int k = 0; k < n; ++k) {
    Vec y(dim_);
    for (int i = 0; i < dim_; ++i) y[i] = U(rng);
    if (auto p = apply(y)) {
      g.add(y, *p);
      continue;
    }
    if (kind_ == Kind::GradConvex || kind_ == Kind::SkewPlusGrad) {
      // y − prox(y) is a subgradient at prox(y)
      const Vec x = phi_->prox(1.0, y);
      Vec p = y - x;
      if (kind_ == Kind::SkewPlusGrad) p += matrix_ * x;
      g.add(x, p);
      continue;
    }
    fail(ErrorKind::NotSupported, "cannot sample the graph of this operator");
  }
  return g;
}

nlohmann::json MonotoneOperator::describe() const {
  nlohmann::json j;
  switch (kind_) {
    case Kind::GradConvex:
      j = {{"kind", "grad_convex"}, {"phi", phi_->kind()}};
      break;
    case Kind::SkewPlusGrad:
      j = {{"kind", "skew_plus_grad"}, {"phi", phi_->kind()}, {"gamma", mat_json(matrix_)}};
      break;
    case Kind::LinearPositive:
      j = {{"kind", "linear_positive"}, {"B", mat_json(matrix_)}};
      break;
    case Kind::Sampled:
      j = {{"kind", "sampled"}, {"pairs", graph_.size()}};
      break;
    case Kind::Sum:
      j = {{"kind", "sum"}, {"parts", {parts_[0].describe(), parts_[1].describe()}}};
      break;
    case Kind::Scaled:
      j = {{"kind", "scaled"}, {"factor", factor_}, {"base", parts_[0].describe()}};
      break;
  }
  j["dim"] = dim_;
  return j;
}

// ---------------------------------------------------------------- Lagrangian

Lagrangian::Lagrangian(int dim, std::string form, AffineSum body, std::optional<AffineSum> conjugate_body,
                       nlohmann::json params)
    : dim_(dim), form_(std::move(form)), body_(std::move(body)), conj_(std::move(conjugate_body)),
      params_(std::move(params)) {
  if (body_.num_external() != 2 * dim_) fail(ErrorKind::DimensionMismatch, "Lagrangian body must act on (x, p)");
  if (conj_ && conj_->num_external() != 2 * dim_)
    fail(ErrorKind::DimensionMismatch, "conjugate body must act on (q, y)");
}

Lagrangian Lagrangian::sum_form(const ConvexFunction& phi, const Mat& gamma) {
  const int d = phi.dim();
  const Mat G = gamma.size() ? gamma : Mat(Mat::Zero(d, d));
  require_dim(G.rows(), d, "skew matrix");
  if (!is_skew(G)) fail(ErrorKind::InvalidArgument, "SumForm needs Γᵀ = −Γ exactly");
  const ConvexFunction phis = phi.conjugate();
  const LinMap x = var_block(0, d), p = var_block(d, d);
  AffineSum body(2 * d);
  body.add(phi, x);
  body.add(phis, lincomb(-1.0, mat_apply(G, x), 1.0, p));
  // L*(q, y) = φ(y) + φ*(q + Γᵀy)
  AffineSum conj(2 * d);
  conj.add(phi, p);
  conj.add(phis, lincomb(1.0, x, 1.0, mat_apply(G.transpose(), p)));
  nlohmann::json params = {{"phi", phi.kind()}, {"gamma", mat_json(G)}};
  return Lagrangian(d, "sum", std::move(body), std::move(conj), std::move(params));
}

Lagrangian Lagrangian::grid2d(const GridFunction& g) {
  if (g.dim() % 2 != 0) fail(ErrorKind::DimensionMismatch, "grid Lagrangian needs an even number of axes");
  const int d = g.dim() / 2;
  AffineSum body(2 * d), conj(2 * d);
  body.add(ConvexFunction::grid(g), var_block(0, 2 * d));
  conj.add(ConvexFunction::grid(g.conjugate()), var_block(0, 2 * d));
  nlohmann::json params = {{"lower", vec_json(g.lower())}, {"upper", vec_json(g.upper())},
                           {"nodes", g.nodes()}};
  return Lagrangian(d, "grid2d", std::move(body), std::move(conj), std::move(params));
}

const AffineSum& Lagrangian::conjugate_body() const {
  if (!conj_) fail(ErrorKind::NotSupported, "no closed-form conjugate for form " + form_);
  return *conj_;
}

nlohmann::json Lagrangian::describe() const {
  nlohmann::json j = params_;
  j["form"] = form_;
  j["dim"] = dim_;
  return j;
}

Lagrangian Lagrangian::with_probe_box(const Vec& lower, const Vec& upper) const {
  require_dim(lower.size(), 2 * dim_, "probe box");
  require_dim(upper.size(), 2 * dim_, "probe box");
  Lagrangian out = *this;
  out.box_lower_ = lower;
  out.box_upper_ = upper;
  return out;
}

Lagrangian Lagrangian::conjugate() const {
  if (!conj_) fail(ErrorKind::NotSupported, "no closed-form conjugate for form " + form_);
  return Lagrangian(dim_, "conjugate", *conj_, body_, {{"base", describe()}});
}

double Lagrangian::value(const Vec& x, const Vec& p) const {
  require_dim(x.size(), dim_, "Lagrangian x");
  require_dim(p.size(), dim_, "Lagrangian p");
  if (form_ == "grid2d") {
    const Vec z = stack(x, p);
    const auto lo = params_["lower"].get<std::vector<double>>();
    const auto hi = params_["upper"].get<std::vector<double>>();
    for (int i = 0; i < z.size(); ++i)
      if (z[i] < lo[i] - 1e-12 || z[i] > hi[i] + 1e-12) fail(ErrorKind::OutOfBox, "probe outside the grid box");
  }
  return body_.value(stack(x, p));
}

double Lagrangian::conjugate_value(const Vec& q, const Vec& y, bool* unbounded) const {
  require_dim(q.size(), dim_, "conjugate q");
  require_dim(y.size(), dim_, "conjugate y");
  if (unbounded) *unbounded = false;
  if (conj_ && !has_probe_box()) {
    try {
      return conj_->value(stack(q, y));
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::Unbounded) throw;
      if (unbounded) *unbounded = true;
      return kInf;
    }
  }
  // sup ⟨q, x⟩ + ⟨y, p⟩ − L(x, p) = −min L(x, p) − ⟨q, x⟩ − ⟨y, p⟩
  AffineSum obj = body_;
  const int d = dim_;
  obj.add_linear(dot(-q, var_block(0, d)));
  obj.add_linear(dot(-y, var_block(d, d)));
  if (has_probe_box()) obj.add(ConvexFunction::indicator_box(box_lower_, box_upper_), var_block(0, 2 * d));
  Vec start = Vec::Zero(obj.num_vars());
  if (has_probe_box()) start.head(2 * d) = 0.5 * (box_lower_ + box_upper_);
  const auto m = obj.minimize(start);
  if (m.unbounded) {
    if (unbounded) *unbounded = true;
    return kInf;
  }
  if (!m.converged) {
    if (is_inf(m.value)) return -kInf;
    fail(ErrorKind::InnerNoConvergence, "conjugate sup via " + m.method);
  }
  return -m.value;
}

// ---------------------------------------------------------------- evaluations

double lag_value(const Lagrangian& L, const Vec& x, const Vec& p) { return L.value(x, p); }

double lag_conjugate_value(const Lagrangian& L, const Vec& p, const Vec& x, bool* unbounded) {
  return L.conjugate_value(p, x, unbounded);
}

double lag_gap(const Lagrangian& L, const Vec& x, const Vec& p) { return ext::add(L.value(x, p), -x.dot(p)); }

SelfdualReport selfdual_residual(const Lagrangian& L, double lower, double upper, int nodes) {
  if (nodes < 2 || !(upper > lower)) fail(ErrorKind::InvalidArgument, "probe grid needs nodes >= 2 and lower < upper");
  const int d = L.dim();
  SelfdualReport rep;
  auto probe = [&](const Vec& z) {
    const Vec x = z.head(d), p = z.tail(d);
    const double a = L.value(x, p);
    if (!std::isfinite(a)) return;
    rep.fenchel_violation = std::max(rep.fenchel_violation, x.dot(p) - a);
    const double b = lag_conjugate_value(L, p, x);
    if (!std::isfinite(b)) return;
    ++rep.probes;
    const double r = std::abs(b - a);
    if (r > rep.residual || rep.worst_x.size() == 0) {
      rep.residual = std::max(rep.residual, r);
      rep.worst_x = x;
      rep.worst_p = p;
    }
  };
  const double h = (upper - lower) / (nodes - 1);
  for (int i = 0; i < 2 * d; ++i)
    for (int j = i + 1; j < 2 * d; ++j)
      for (int a = 0; a < nodes; ++a)
        for (int b = 0; b < nodes; ++b) {
          Vec z = Vec::Zero(2 * d);
          z[i] = lower + a * h;
          z[j] = lower + b * h;
          probe(z);
        }
  if (rep.probes == 0) fail(ErrorKind::EmptyProbe, "no probe has both L and its conjugate finite");
  return rep;
}

FieldValue sd_field(const Lagrangian& L, const Vec& x, double tol) {
  const int d = L.dim();
  require_dim(x.size(), d, "field point");
  AffineSum G = L.body().substitute(concat(const_block(x), var_block(0, d)), d);
  G.add_linear(dot(-x, var_block(0, d)));
  const auto m = G.minimize();
  FieldValue out;
  out.iterations = m.iterations;
  if (m.unbounded) fail(ErrorKind::NoConvergence, "field gap is unbounded below; L is not above the pairing");
  if (!m.converged && !is_inf(m.value))
    fail(ErrorKind::NoConvergence, "field gap minimization via " + m.method + " did not converge");
  out.gap = m.value;
  if (!(out.gap <= tol)) return out;
  const Vec p0 = m.v.head(d);
  out.representatives.push_back(p0);

  auto gap = [&](const Vec& p) {
    try {
      return lag_gap(L, x, p);
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::OutOfBox) return kInf;
      throw;
    }
  };
  const double step0 = 1e-2 * std::max(1.0, p0.lpNorm<Eigen::Infinity>());
  for (int i = 0; i < d; ++i)
    for (double s : {-1.0, 1.0}) {
      Vec e = Vec::Zero(d);
      e[i] = s;
      if (!(gap(p0 + step0 * e) <= tol)) continue;
      double good = step0, bad = 2.0 * step0;
      while (bad < 1e4 && gap(p0 + bad * e) <= tol) {
        good = bad;
        bad *= 2.0;
      }
      if (bad >= 1e4) continue;  // unbounded flat direction: no extreme point
      for (int k = 0; k < 60 && bad - good > 1e-12 * (1.0 + bad); ++k) {
        const double mid = 0.5 * (good + bad);
        (gap(p0 + mid * e) <= tol ? good : bad) = mid;
      }
      const Vec rep = p0 + good * e;
      bool fresh = true;
      for (const Vec& r : out.representatives) fresh = fresh && (r - rep).norm() > 1e-6;
      if (fresh) out.representatives.push_back(rep);
    }
  return out;
}

}  // namespace selfdual
