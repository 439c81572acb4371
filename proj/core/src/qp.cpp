#include "selfdual/qp.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>

namespace selfdual {

LinExpr& LinExpr::add(const LinExpr& other, double w) {
  for (auto [i, v] : other.terms) add(i, w * v);
  offset += w * other.offset;
  return *this;
}

LinExpr LinExpr::scaled(double w) const {
  LinExpr out;
  out.add(*this, w);
  return out;
}

int QPBuilder::add_variables(int k) {
  const int start = n_;
  n_ += k;
  return start;
}

void QPBuilder::add_linear(const LinExpr& e, double w) {
  for (auto [i, v] : e.terms) f_.push_back({i, w * v});
  constant_ += w * e.offset;
}

void QPBuilder::add_hessian(int i, int j, double v) {
  if (v != 0.0) h_.emplace_back(i, j, v);
}

void QPBuilder::add_half_square(const LinExpr& e, double w) {
  // w/2 (aᵀu + o)² = w/2 uᵀaaᵀu + w o aᵀu + w o²/2.
  for (auto [i, a] : e.terms)
    for (auto [j, b] : e.terms) add_hessian(i, j, w * a * b);
  add_linear(LinExpr{e.terms, 0.0}, w * e.offset);
  constant_ += 0.5 * w * e.offset * e.offset;
}

void QPBuilder::add_quadratic_form(const std::vector<LinExpr>& e, const Mat& Q, double w) {
  const int k = static_cast<int>(e.size());
  for (int a = 0; a < k; ++a) {
    for (int b = 0; b < k; ++b) {
      const double q = w * Q(a, b);
      if (q == 0.0) continue;
      for (auto [i, va] : e[a].terms)
        for (auto [j, vb] : e[b].terms) add_hessian(i, j, q * va * vb);
      // Cross terms with offsets: ½ q (e_a e_b) contributes ½ q (o_b e_a + o_a e_b) linearly.
      for (auto [i, va] : e[a].terms) f_.push_back({i, 0.5 * q * e[b].offset * va});
      for (auto [j, vb] : e[b].terms) f_.push_back({j, 0.5 * q * e[a].offset * vb});
      constant_ += 0.5 * q * e[a].offset * e[b].offset;
    }
  }
}

void QPBuilder::add_eq(const LinExpr& e, double rhs) {
  for (auto [i, v] : e.terms) a_.emplace_back(rows_a_, i, v);
  b_.push_back(rhs - e.offset);
  ++rows_a_;
}

void QPBuilder::add_ge(const LinExpr& e, double rhs) {
  for (auto [i, v] : e.terms) c_.emplace_back(rows_c_, i, v);
  d_.push_back(rhs - e.offset);
  ++rows_c_;
}

QPBuilder::Problem QPBuilder::build() const {
  Problem p;
  p.n = n_;
  p.H.resize(n_, n_);
  p.H.setFromTriplets(h_.begin(), h_.end());
  p.f = Vec::Zero(n_);
  for (auto [i, v] : f_) p.f[i] += v;
  p.A.resize(rows_a_, n_);
  p.A.setFromTriplets(a_.begin(), a_.end());
  p.C.resize(rows_c_, n_);
  p.C.setFromTriplets(c_.begin(), c_.end());
  p.b = Eigen::Map<const Vec>(b_.data(), rows_a_);
  p.d = Eigen::Map<const Vec>(d_.data(), rows_c_);
  p.constant = constant_;
  return p;
}

double QPBuilder::objective(const Vec& u) const {
  auto p = build();
  return 0.5 * u.dot(p.H * u) + p.f.dot(u) + p.constant;
}

namespace {

double max_step(const Vec& v, const Vec& dv) {
  double a = 1.0;
  for (int i = 0; i < v.size(); ++i)
    if (dv[i] < 0.0) a = std::min(a, -v[i] / dv[i]);
  return a;
}

double inf_norm(const Vec& v) { return v.size() ? v.lpNorm<Eigen::Infinity>() : 0.0; }

class KKTSolver {
 public:
  KKTSolver(const QPBuilder::Problem& qp) : qp_(qp), n_(qp.n), p_(static_cast<int>(qp.A.rows())) {
    Ct_ = qp.C.transpose();
    At_ = qp.A.transpose();
    double scale = 1.0;
    for (int k = 0; k < qp.H.outerSize(); ++k)
      for (SpMat::InnerIterator it(qp.H, k); it; ++it)
        if (it.row() == it.col()) scale = std::max(scale, std::abs(it.value()));
    reg_ = 1e-11 * scale;
  }

  /// Factors [H + CᵀDC + δI, Aᵀ; A, −δI].
  bool factor(const Vec& D) {
    SpMat M = qp_.H;
    if (D.size()) M += SpMat(Ct_ * D.asDiagonal() * qp_.C);
    M11_ = M;
    std::vector<Eigen::Triplet<double>> t;
    t.reserve(M.nonZeros() + 2 * qp_.A.nonZeros() + n_ + p_);
    for (int k = 0; k < M.outerSize(); ++k)
      for (SpMat::InnerIterator it(M, k); it; ++it) t.emplace_back(it.row(), it.col(), it.value());
    for (int k = 0; k < qp_.A.outerSize(); ++k)
      for (SpMat::InnerIterator it(qp_.A, k); it; ++it) {
        t.emplace_back(n_ + it.row(), it.col(), it.value());
        t.emplace_back(it.col(), n_ + it.row(), it.value());
      }
    for (int i = 0; i < n_; ++i) t.emplace_back(i, i, reg_);
    for (int i = 0; i < p_; ++i) t.emplace_back(n_ + i, n_ + i, -reg_);
    K_.resize(n_ + p_, n_ + p_);
    K_.setFromTriplets(t.begin(), t.end());
    if (!analyzed_) {
      ldlt_.analyzePattern(K_);
      analyzed_ = true;
    }
    ldlt_.factorize(K_);
    return ldlt_.info() == Eigen::Success;
  }

  /// Raises the regularization after a failed factorization.
  bool bump() {
    reg_ *= 100.0;
    return reg_ < 1e-2;
  }

  /// Solves M11 du + Aᵀw = r1, A du = r2 with refinement against the unregularized system.
  void solve(const Vec& r1, const Vec& r2, Vec& du, Vec& w) const {
    Vec rhs(n_ + p_);
    rhs << r1, r2;
    Vec x = ldlt_.solve(rhs);
    for (int it = 0; it < 3; ++it) {
      Vec res = rhs - apply(x);
      if (inf_norm(res) <= 1e-15 * (1.0 + inf_norm(rhs))) break;
      x += ldlt_.solve(res);
    }
    du = x.head(n_);
    w = x.tail(p_);
  }

  const SpMat& Ct() const { return Ct_; }
  const SpMat& At() const { return At_; }

 private:
  Vec apply(const Vec& x) const {
    Vec out(n_ + p_);
    const Vec du = x.head(n_), w = x.tail(p_);
    out.head(n_) = M11_ * du + At_ * w;
    out.tail(p_) = qp_.A * du;
    return out;
  }

  const QPBuilder::Problem& qp_;
  int n_, p_;
  SpMat Ct_, At_, M11_, K_;
  double reg_;
  bool analyzed_ = false;
  Eigen::SimplicialLDLT<SpMat> ldlt_;
};

}  // namespace

QPResult solve_qp(const QPBuilder::Problem& qp, const QPOptions& opts) {
  const int n = qp.n;
  const int p = static_cast<int>(qp.A.rows());
  const int m = static_cast<int>(qp.C.rows());
  QPResult res;
  KKTSolver kkt(qp);

  const double scale_b = 1.0 + std::max(inf_norm(qp.b), inf_norm(qp.d));
  const double scale_f = 1.0 + inf_norm(qp.f);

  // Starting point from the least-squares-like system with D = I.
  Vec u = Vec::Zero(n), y = Vec::Zero(p), s, z;
  {
    if (!kkt.factor(Vec::Ones(m))) {
      res.u = u;
      return res;
    }
    Vec du, w;
    kkt.solve(-qp.f + kkt.Ct() * qp.d, qp.b, du, w);
    u = du;
    y = -w;
    s = qp.C * u - qp.d;
    z = Vec::Ones(m);
    if (m > 0) {
      const double shift_s = std::max(0.0, -1.5 * s.minCoeff());
      s.array() += shift_s + 1e-2;
      const double gap = s.dot(z);
      s.array() += 0.5 * gap / z.sum();
      z.array() += 0.5 * gap / s.sum();
    }
  }

  // Best iterate by a scaled merit; near the optimum roundoff in the KKT solve can make
  // the dual residual creep up while the gap keeps shrinking.
  Vec best_u = u, best_y = y, best_z = z;
  double best_merit = kInf, best_pr = kInf, best_dr = kInf, best_mu = kInf;
  for (int k = 0; k < opts.max_iter; ++k) {
    const Vec Hu = qp.H * u;
    const Vec rd = Hu + qp.f - kkt.At() * y - (m ? Vec(kkt.Ct() * z) : Vec(Vec::Zero(n)));
    const Vec rp = qp.A * u - qp.b;
    const Vec ri = m ? Vec(qp.C * u - s - qp.d) : Vec(0);
    const double mu = m ? s.dot(z) / m : 0.0;
    const double obj = 0.5 * u.dot(Hu) + qp.f.dot(u);
    const double pr = std::max(inf_norm(rp), inf_norm(ri));
    const double dr = inf_norm(rd);
    const double dual_scale = scale_f + inf_norm(Hu);
    res.iterations = k;
    const double merit = std::max({pr / (opts.tol * scale_b), dr / (1e3 * opts.tol * dual_scale),
                                   m * mu / (opts.tol * (1.0 + std::abs(obj)))});
    if (merit < best_merit) {
      best_merit = merit;
      best_u = u;
      best_y = y;
      best_z = z;
      best_pr = pr;
      best_dr = dr;
      best_mu = mu;
    }
    if (merit <= 1.0) break;
    if (inf_norm(u) > 1e13) {
      res.unbounded = true;
      break;
    }

    const Vec D = m ? Vec(z.cwiseQuotient(s)) : Vec(0);
    bool factored = kkt.factor(D);
    while (!factored && kkt.bump()) factored = kkt.factor(D);
    if (!factored) break;

    auto direction = [&](const Vec& rc, Vec& du, Vec& dy, Vec& dz, Vec& ds) {
      Vec r1 = -rd;
      if (m) r1 -= kkt.Ct() * (D.cwiseProduct(ri) + rc.cwiseQuotient(s));
      Vec w;
      kkt.solve(r1, -rp, du, w);
      dy = -w;
      if (m) {
        dz = -D.cwiseProduct(ri + qp.C * du) - rc.cwiseQuotient(s);
        ds = -(rc + s.cwiseProduct(dz)).cwiseQuotient(z);
      } else {
        dz.resize(0);
        ds.resize(0);
      }
    };

    Vec du, dy, dz, ds;
    if (m == 0) {
      direction(Vec(0), du, dy, dz, ds);
      u += du;
      y += dy;
      continue;
    }
    // Predictor.
    direction(s.cwiseProduct(z), du, dy, dz, ds);
    const double a_aff = std::min(max_step(s, ds), max_step(z, dz));
    const double mu_aff = (s + a_aff * ds).dot(z + a_aff * dz) / m;
    const double sigma = std::pow(std::max(0.0, mu_aff) / mu, 3.0);
    // Corrector.
    const Vec rc = s.cwiseProduct(z) + ds.cwiseProduct(dz) - Vec::Constant(m, sigma * mu);
    direction(rc, du, dy, dz, ds);
    const double a_max = std::min(max_step(s, ds), max_step(z, dz));
    const double a = std::min(1.0, 0.995 * a_max);
    u += a * du;
    y += a * dy;
    z += a * dz;
    s += a * ds;
    // Keep strictly interior.
    s = s.cwiseMax(1e-300);
    z = z.cwiseMax(1e-300);
  }
  u = best_u;
  res.primal_residual = best_pr;
  res.dual_residual = best_dr;
  res.mu = best_mu;
  // Loose acceptance: primal and gap at tolerance, dual within 1e4 of it.
  const double obj_best = 0.5 * u.dot(qp.H * u) + qp.f.dot(u);
  res.converged = best_pr <= opts.tol * scale_b * 10.0 &&
                  m * best_mu <= opts.tol * 10.0 * (1.0 + std::abs(obj_best)) &&
                  best_dr <= 1e4 * opts.tol * (scale_f + inf_norm(qp.H * u));
  if (!res.converged && best_pr > 1e-6 * scale_b) res.infeasible = true;
  res.u = u;
  res.y = best_y;
  res.z = best_z;
  res.value = 0.5 * u.dot(qp.H * u) + qp.f.dot(u) + qp.constant;
  return res;
}

}  // namespace selfdual
