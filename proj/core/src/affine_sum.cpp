#include "selfdual/affine_sum.hpp"

#include <algorithm>
#include <map>

namespace selfdual {

namespace {

LinExpr compress(const LinExpr& e) {
  if (e.terms.size() < 2) return e;
  std::map<int, double> acc;
  for (auto [i, w] : e.terms) acc[i] += w;
  LinExpr out;
  out.offset = e.offset;
  for (auto [i, w] : acc)
    if (w != 0.0) out.terms.emplace_back(i, w);
  return out;
}

double eval_expr(const LinExpr& e, const Vec& v) {
  double s = e.offset;
  for (auto [i, w] : e.terms) s += w * v[i];
  return s;
}

constexpr int kSparseThreshold = 150;

}  // namespace

LinMap var_block(int first, int k) {
  LinMap out(k);
  for (int i = 0; i < k; ++i) out[i] = LinExpr::var(first + i);
  return out;
}

LinMap const_block(const Vec& c) {
  LinMap out(c.size());
  for (int i = 0; i < c.size(); ++i) out[i] = LinExpr::constant(c[i]);
  return out;
}

LinMap mat_apply(const Mat& A, const LinMap& x) {
  require_dim(A.cols(), static_cast<Eigen::Index>(x.size()), "matrix times expressions");
  LinMap out(A.rows());
  for (int r = 0; r < A.rows(); ++r) {
    for (int c = 0; c < A.cols(); ++c)
      if (A(r, c) != 0.0) out[r].add(x[c], A(r, c));
    out[r] = compress(out[r]);
  }
  return out;
}

LinMap lincomb(double a, const LinMap& x, double b, const LinMap& y) {
  if (x.size() != y.size()) fail(ErrorKind::DimensionMismatch, "lincomb sizes differ");
  LinMap out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (a != 0.0) out[i].add(x[i], a);
    if (b != 0.0) out[i].add(y[i], b);
    out[i] = compress(out[i]);
  }
  return out;
}

LinMap shift(const LinMap& x, const Vec& c) {
  require_dim(c.size(), static_cast<Eigen::Index>(x.size()), "shift");
  LinMap out = x;
  for (std::size_t i = 0; i < x.size(); ++i) out[i].offset += c[i];
  return out;
}

LinMap concat(const LinMap& x, const LinMap& y) {
  LinMap out = x;
  out.insert(out.end(), y.begin(), y.end());
  return out;
}

LinMap slice(const LinMap& x, int first, int k) {
  return LinMap(x.begin() + first, x.begin() + first + k);
}

LinExpr dot(const Vec& c, const LinMap& x) {
  require_dim(c.size(), static_cast<Eigen::Index>(x.size()), "dot");
  LinExpr out;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (c[i] != 0.0) out.add(x[i], c[i]);
  return compress(out);
}

Vec evaluate(const LinMap& x, const Vec& v) {
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = eval_expr(x[i], v);
  return out;
}

int AffineSum::add_aux(int k) {
  const int first = n_ext_ + n_aux_;
  n_aux_ += k;
  return first;
}

void AffineSum::add(const ConvexFunction& f, LinMap arg, double weight) {
  if (static_cast<int>(arg.size()) != f.dim()) fail(ErrorKind::DimensionMismatch, "term argument size");
  if (weight < 0.0) fail(ErrorKind::InvalidArgument, "negative term weight");
  if (weight == 0.0) return;
  for (auto& e : arg) {
    e = compress(e);
    for (auto [i, w] : e.terms)
      if (i < 0 || i >= num_vars()) fail(ErrorKind::InvalidArgument, "term refers to an unknown variable");
  }
  terms_.push_back(Term{f, weight, std::move(arg)});
}

LinExpr AffineSum::remap(const LinExpr& e, const LinMap& ext_map, int aux_base, int other_ext) const {
  LinExpr out;
  out.offset = e.offset;
  for (auto [i, w] : e.terms) {
    if (i < other_ext) out.add(ext_map[i], w);
    else out.add(aux_base + (i - other_ext), w);
  }
  return compress(out);
}

void AffineSum::embed(const AffineSum& other, const LinMap& ext_map, double weight) {
  if (static_cast<int>(ext_map.size()) != other.n_ext_) fail(ErrorKind::DimensionMismatch, "embed map size");
  if (weight < 0.0) fail(ErrorKind::InvalidArgument, "negative embed weight");
  const int base = other.n_aux_ ? add_aux(other.n_aux_) : num_vars();
  for (const Term& t : other.terms_) {
    LinMap arg(t.arg.size());
    for (std::size_t k = 0; k < arg.size(); ++k) arg[k] = remap(t.arg[k], ext_map, base, other.n_ext_);
    add(t.f, std::move(arg), weight * t.weight);
  }
  linear_.add(remap(other.linear_, ext_map, base, other.n_ext_), weight);
  linear_ = compress(linear_);
}

AffineSum AffineSum::substitute(const LinMap& ext_map, int n_new) const {
  if (static_cast<int>(ext_map.size()) != n_ext_) fail(ErrorKind::DimensionMismatch, "substitute map size");
  AffineSum out(n_new, 0);
  out.embed(*this, ext_map, 1.0);
  return out;
}

AffineSum AffineSum::bind(const Vec& ext) const {
  require_dim(ext.size(), n_ext_, "bind");
  AffineSum out = substitute(const_block(ext), 0);
  out.n_ext_ = out.n_aux_;
  out.n_aux_ = 0;
  return out;
}

double AffineSum::eval(const Vec& v) const {
  require_dim(v.size(), num_vars(), "AffineSum::eval");
  double s = eval_expr(linear_, v);
  for (const Term& t : terms_) {
    const double fv = t.f.value(evaluate(t.arg, v));
    if (is_inf(fv)) return kInf;
    s += t.weight * fv;
  }
  return s;
}

bool AffineSum::smooth() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.f.smooth(); });
}

bool AffineSum::qp_representable() const {
  return std::all_of(terms_.begin(), terms_.end(), [](const Term& t) { return t.f.qp_representable(); });
}

Vec AffineSum::gradient(const Vec& v) const {
  require_dim(v.size(), num_vars(), "AffineSum::gradient");
  Vec g = Vec::Zero(num_vars());
  for (auto [i, w] : linear_.terms) g[i] += w;
  for (const Term& t : terms_) {
    const Vec gf = t.f.gradient(evaluate(t.arg, v));
    for (std::size_t k = 0; k < t.arg.size(); ++k)
      for (auto [i, w] : t.arg[k].terms) g[i] += t.weight * w * gf[k];
  }
  return g;
}

void AffineSum::constraints(Mat& A, Vec& b) const {
  std::vector<Vec> rows;
  std::vector<double> rhs;
  for (const Term& t : terms_) {
    const LinearConstraint c = t.f.constraint();
    for (int r = 0; r < c.matrix.rows(); ++r) {
      Vec row = Vec::Zero(num_vars());
      double off = 0.0;
      for (std::size_t k = 0; k < t.arg.size(); ++k) {
        const double ck = c.matrix(r, k);
        if (ck == 0.0) continue;
        off += ck * t.arg[k].offset;
        for (auto [i, w] : t.arg[k].terms) row[i] += ck * w;
      }
      rows.push_back(std::move(row));
      rhs.push_back(c.rhs[r] - off);
    }
  }
  A.resize(static_cast<Eigen::Index>(rows.size()), num_vars());
  b.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t r = 0; r < rows.size(); ++r) {
    A.row(r) = rows[r].transpose();
    b[r] = rhs[r];
  }
}

AffineSum::Minimum AffineSum::minimize(const Vec& start, const Options& opts) const {
  const int n = num_vars();
  require_dim(start.size(), n, "AffineSum::minimize start");
  Minimum out;
  if (n == 0) {
    out.v = Vec(0);
    out.value = eval(out.v);
    out.converged = true;
    out.method = "none";
    return out;
  }
  if (smooth()) {
    SmoothObjective obj;
    obj.dim = n;
    obj.sparse_hessian = n > kSparseThreshold;
    obj.value = [this](const Vec& v) {
      double s = eval_expr(linear_, v);
      for (const Term& t : terms_) {
        const double fv = t.f.smooth_value(evaluate(t.arg, v));
        if (!std::isfinite(fv)) return kInf;
        s += t.weight * fv;
      }
      return s;
    };
    obj.derivatives = [this, n](const Vec& v, Vec& g, HessianBuilder& H) {
      g = Vec::Zero(n);
      for (auto [i, w] : linear_.terms) g[i] += w;
      std::vector<std::vector<std::pair<int, double>>> rows;
      for (const Term& t : terms_) {
        const Vec z = evaluate(t.arg, v);
        const Vec gf = t.f.gradient(z);
        rows.assign(t.arg.size(), {});
        for (std::size_t k = 0; k < t.arg.size(); ++k) {
          rows[k] = t.arg[k].terms;
          for (auto [i, w] : t.arg[k].terms) g[i] += t.weight * w * gf[k];
        }
        H.add_congruence(rows, t.weight * t.f.hessian(z));
      }
    };
    constraints(obj.eq_matrix, obj.eq_rhs);
    MinimizeOptions mo;
    mo.max_iter = opts.max_iter;
    mo.record_trace = opts.record_trace;
    auto r = newton_minimize(obj, start, mo);
    out.v = r.x;
    out.value = r.value;
    out.converged = r.converged;
    out.iterations = r.iterations;
    out.trace = std::move(r.trace);
    out.method = "newton";
    if (r.value < -1e12 || !r.x.allFinite() || r.x.lpNorm<Eigen::Infinity>() > 1e12) {
      out.unbounded = true;
      out.converged = false;
      out.value = -kInf;
    }
    return out;
  }
  if (qp_representable()) {
    QPBuilder qp;
    qp.add_variables(n);
    for (const Term& t : terms_) t.f.emit_qp(t.arg, t.weight, qp);
    LinExpr lin = linear_;
    const double c = lin.offset;
    lin.offset = 0.0;
    qp.add_linear(lin, 1.0);
    qp.add_constant(c);
    QPOptions qo;
    qo.max_iter = std::max(200, opts.max_iter / 2);
    auto r = solve_qp(qp, qo);
    out.v = r.u.head(n);
    out.value = r.infeasible ? kInf : (r.unbounded ? -kInf : r.value);
    out.converged = r.converged;
    out.unbounded = r.unbounded;
    out.iterations = r.iterations;
    out.method = "qp";
    return out;
  }
  if (n > opts.direct_limit)
    fail(ErrorKind::NotSupported, "mixed smooth and nonsmooth terms in " + std::to_string(n) +
                                      " variables exceed the direct-search limit");
  MinimizeOptions mo;
  mo.max_iter = std::max(opts.max_iter, 2000);
  auto r = minimize_direct([this](const Vec& v) { return eval(v); }, start, 1.0, mo);
  out.v = r.x;
  out.value = r.value;
  out.converged = r.converged;
  out.iterations = r.iterations;
  out.method = "direct";
  if (r.value < -1e12) {
    out.unbounded = true;
    out.value = -kInf;
  }
  return out;
}

double AffineSum::value(const Vec& ext) const {
  require_dim(ext.size(), n_ext_, "AffineSum::value");
  if (n_aux_ == 0) return eval(ext);
  const AffineSum inner = bind(ext);
  const auto m = inner.minimize();
  if (m.unbounded) fail(ErrorKind::Unbounded, "inner infimum is -inf");
  if (!m.converged) {
    if (is_inf(m.value)) return kInf;
    fail(ErrorKind::InnerNoConvergence, "inner " + m.method + " after " + std::to_string(m.iterations) +
                                            " iterations");
  }
  return m.value;
}

}  // namespace selfdual
