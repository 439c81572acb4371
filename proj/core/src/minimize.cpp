#include "selfdual/minimize.hpp"

#include <Eigen/SparseCholesky>

#include <algorithm>
#include <numeric>

namespace selfdual {

HessianBuilder::HessianBuilder(int n, bool sparse) : n_(n), sparse_(sparse) {
  if (!sparse_) dense_ = Mat::Zero(n, n);
}

void HessianBuilder::add(int i, int j, double v) {
  if (v == 0.0) return;
  if (!sparse_) {
    dense_(i, j) += v;
    return;
  }
  triplets_.emplace_back(i, j, v);
  // More entries than a dense matrix holds: accumulate densely from here on.
  if (triplets_.size() > static_cast<std::size_t>(n_) * n_) {
    dense_ = Mat::Zero(n_, n_);
    for (const auto& t : triplets_) dense_(t.row(), t.col()) += t.value();
    triplets_.clear();
    triplets_.shrink_to_fit();
    sparse_ = false;
  }
}

void HessianBuilder::add_block(const std::vector<int>& idx, const Mat& B) {
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t b = 0; b < idx.size(); ++b) add(idx[a], idx[b], B(a, b));
}

void HessianBuilder::add_congruence(const std::vector<std::vector<std::pair<int, double>>>& rows,
                                    const Mat& B) {
  const int m = static_cast<int>(rows.size());
  for (int a = 0; a < m; ++a) {
    for (int b = 0; b < m; ++b) {
      const double w = B(a, b);
      if (w == 0.0) continue;
      for (auto [i, wi] : rows[a])
        for (auto [j, wj] : rows[b]) add(i, j, w * wi * wj);
    }
  }
}

Mat HessianBuilder::dense() const {
  if (!sparse_) return dense_;
  return Mat(assemble());
}

SpMat HessianBuilder::assemble() const {
  SpMat H(n_, n_);
  if (sparse_) H.setFromTriplets(triplets_.begin(), triplets_.end());
  else H = dense_.sparseView();
  return H;
}

void HessianBuilder::clear() {
  if (sparse_) triplets_.clear();
  else dense_.setZero();
}

AffineSubspace affine_solution_set(const Mat& A, const Vec& b, double rank_tol) {
  const int n = static_cast<int>(A.cols());
  AffineSubspace out;
  if (A.rows() == 0) {
    out.particular = Vec::Zero(n);
    out.basis = Mat::Identity(n, n);
    return out;
  }
  Eigen::BDCSVD<Mat> svd(A, Eigen::ComputeThinU | Eigen::ComputeFullV);
  const Vec& s = svd.singularValues();
  const double cut = rank_tol * std::max(1.0, s.size() ? s[0] : 0.0);
  int rank = 0;
  while (rank < s.size() && s[rank] > cut) ++rank;
  const Mat& U = svd.matrixU();
  const Mat& V = svd.matrixV();
  Vec coeff = U.leftCols(rank).transpose() * b;
  for (int i = 0; i < rank; ++i) coeff[i] /= s[i];
  out.particular = V.leftCols(rank) * coeff;
  const double defect = (A * out.particular - b).norm();
  if (defect > 1e-8 * (1.0 + b.norm())) {
    fail(ErrorKind::InvalidArgument, "inconsistent linear constraints (defect " + std::to_string(defect) + ")");
  }
  out.basis = V.rightCols(n - rank);
  return out;
}

namespace {

bool small_decrement(double dec2, double f, double tol) { return 0.5 * dec2 <= tol * (1.0 + std::abs(f)); }

}  // namespace

MinimizeResult newton_minimize(const SmoothObjective& obj, const Vec& x0, const MinimizeOptions& opts) {
  const int n = obj.dim;
  require_dim(x0.size(), n, "newton start point");
  const bool constrained = obj.eq_matrix.rows() > 0;
  MinimizeResult res;

  Mat Z;
  Vec x = x0;
  if (constrained) {
    require_dim(obj.eq_matrix.cols(), n, "equality constraint matrix");
    auto sub = affine_solution_set(obj.eq_matrix, obj.eq_rhs);
    Z = sub.basis;
    x = sub.particular + Z * (Z.transpose() * (x0 - sub.particular));
  }
  double f = obj.value(x);
  if (!is_finite(f)) {
    res.x = x;
    res.value = f;
    res.message = "start point outside the domain";
    return res;
  }

  HessianBuilder H(n, obj.sparse_hessian && !constrained);
  Vec g(n);
  double delta = 0.0;
  int stalled = 0;
  for (int k = 0; k < opts.max_iter; ++k) {
    g.setZero();
    H.clear();
    obj.derivatives(x, g, H);

    Vec dir;
    double dec2 = 0.0;
    double resid = 0.0;
    if (constrained) {
      const Vec gr = Z.transpose() * g;
      resid = gr.size() ? gr.lpNorm<Eigen::Infinity>() : 0.0;
      if (gr.size() == 0) {
        res.converged = true;
        res.iterations = k;
        res.residual = 0.0;
        break;
      }
      Mat Hr = Z.transpose() * H.dense() * Z;
      const double diag_scale = std::max(1.0, Hr.diagonal().cwiseAbs().maxCoeff());
      double d = delta;
      Vec step;
      for (int attempt = 0; attempt < 30; ++attempt) {
        Eigen::LDLT<Mat> ldlt(Hr + d * Mat::Identity(Hr.rows(), Hr.cols()));
        if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
          step = ldlt.solve(-gr);
          if (step.allFinite() && step.dot(gr) < 0.0) break;
        }
        step.resize(0);
        d = (d == 0.0) ? 1e-12 * diag_scale : 10.0 * d;
      }
      if (step.size() == 0) {
        step = -gr;
      }
      dec2 = -step.dot(gr);
      dir = Z * step;
    } else {
      resid = g.lpNorm<Eigen::Infinity>();
      double d = delta;
      Vec step;
      SpMat Hs;
      if (H.sparse()) Hs = H.assemble();
      if (H.sparse() && Hs.nonZeros() <= static_cast<Eigen::Index>(n) * n / 8) {
        SpMat I(n, n);
        I.setIdentity();
        double diag_scale = 1.0;
        for (int i = 0; i < n; ++i) diag_scale = std::max(diag_scale, std::abs(Hs.coeff(i, i)));
        Eigen::SimplicialLDLT<SpMat> ldlt;
        ldlt.analyzePattern(Hs + I);
        for (int attempt = 0; attempt < 30; ++attempt) {
          ldlt.factorize(Hs + d * I);
          if (ldlt.info() == Eigen::Success && (ldlt.vectorD().array() > 0.0).all()) {
            step = ldlt.solve(-g);
            if (step.allFinite() && step.dot(g) < 0.0) break;
          }
          step.resize(0);
          d = (d == 0.0) ? 1e-12 * diag_scale : 10.0 * d;
        }
      } else {
        // Filled-in Hessians factor faster dense.
        Mat Hd = H.sparse() ? Mat(Hs) : H.dense();
        const double diag_scale = std::max(1.0, Hd.diagonal().cwiseAbs().maxCoeff());
        for (int attempt = 0; attempt < 30; ++attempt) {
          Eigen::LDLT<Mat> ldlt(Hd + d * Mat::Identity(n, n));
          if (ldlt.info() == Eigen::Success && ldlt.isPositive()) {
            step = ldlt.solve(-g);
            if (step.allFinite() && step.dot(g) < 0.0) break;
          }
          step.resize(0);
          d = (d == 0.0) ? 1e-12 * diag_scale : 10.0 * d;
        }
      }
      if (step.size() == 0) step = -g;
      dec2 = -step.dot(g);
      dir = step;
    }

    res.iterations = k;
    res.residual = resid;
    if (opts.record_trace) res.trace.push_back({k, f, 0.0, resid});
    if (resid == 0.0 || small_decrement(dec2, f, opts.tol) || resid <= opts.grad_tol * 1e-3) {
      res.converged = true;
      break;
    }

    // Armijo backtracking; the small slack absorbs cancellation near the optimum.
    double t = 1.0;
    double f_new = kInf;
    Vec x_new;
    bool accepted = false;
    const double slack = 1e-15 * (1.0 + std::abs(f));
    for (int ls = 0; ls < 60; ++ls) {
      x_new = x + t * dir;
      f_new = obj.value(x_new);
      if (is_finite(f_new) && f_new <= f - 1e-4 * t * dec2 + slack) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Roundoff floor: accept convergence if the decrement is already tiny.
      res.converged = dec2 <= 1e-9 * (1.0 + std::abs(f)) || resid <= opts.grad_tol * (1.0 + std::abs(f));
      res.message = res.converged ? "line search floor" : "line search failed";
      break;
    }
    if (opts.record_trace) res.trace.back().step = t;
    const double change = f - f_new;
    x = x_new;
    f = f_new;
    delta = (t < 1.0) ? std::max(delta, 0.0) : 0.0;
    if (t == 1.0 && change <= 1e-16 * (1.0 + std::abs(f)) && resid <= opts.grad_tol * (1.0 + std::abs(f))) {
      res.converged = true;
      res.iterations = k + 1;
      break;
    }
    // Steps accepted only through the slack mean the value is at its roundoff floor.
    stalled = (t < 1e-6 && change <= 1e-13 * (1.0 + std::abs(f))) ? stalled + 1 : 0;
    if (stalled >= 3) {
      res.converged = dec2 <= 1e-9 * (1.0 + std::abs(f)) || resid <= opts.grad_tol * (1.0 + std::abs(f));
      res.message = res.converged ? "line search floor" : "line search stalled";
      res.iterations = k + 1;
      break;
    }
    res.iterations = k + 1;
  }
  if (!res.converged && res.message.empty()) res.message = "iteration cap reached";
  res.x = x;
  res.value = f;
  return res;
}

MinimizeResult minimize_scalar_on(const std::function<double(double)>& f, double a, double b, double tol,
                                  int max_iter) {
  // Brent's method: golden section with parabolic interpolation when safe.
  constexpr double kGold = 0.3819660112501051;
  if (a > b) std::swap(a, b);
  double x = a + kGold * (b - a), w = x, v = x;
  double fx = f(x), fw = fx, fv = fx;
  double d = 0.0, e = 0.0;
  MinimizeResult res;
  int it = 0;
  for (; it < max_iter; ++it) {
    const double m = 0.5 * (a + b);
    const double tol1 = tol * std::abs(x) + 1e-14;
    const double tol2 = 2.0 * tol1;
    if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) {
      res.converged = true;
      break;
    }
    bool golden = true;
    if (std::abs(e) > tol1 && is_finite(fx) && is_finite(fw) && is_finite(fv)) {
      double r = (x - w) * (fx - fv);
      double q = (x - v) * (fx - fw);
      double p = (x - v) * q - (x - w) * r;
      q = 2.0 * (q - r);
      if (q > 0.0) p = -p;
      q = std::abs(q);
      const double e_prev = e;
      if (std::abs(p) < std::abs(0.5 * q * e_prev) && p > q * (a - x) && p < q * (b - x)) {
        e = d;
        d = p / q;
        const double u = x + d;
        if (u - a < tol2 || b - u < tol2) d = (x < m) ? tol1 : -tol1;
        golden = false;
      }
    }
    if (golden) {
      e = (x < m) ? b - x : a - x;
      d = kGold * e;
    }
    const double u = (std::abs(d) >= tol1) ? x + d : x + (d > 0 ? tol1 : -tol1);
    const double fu = f(u);
    if (fu <= fx) {
      if (u < x) b = x;
      else a = x;
      v = w; fv = fw;
      w = x; fw = fx;
      x = u; fx = fu;
    } else {
      if (u < x) a = u;
      else b = u;
      if (fu <= fw || w == x) {
        v = w; fv = fw;
        w = u; fw = fu;
      } else if (fu <= fv || v == x || v == w) {
        v = u; fv = fu;
      }
    }
  }
  res.x = Vec::Constant(1, x);
  res.value = fx;
  res.iterations = it;
  res.residual = b - a;
  return res;
}

MinimizeResult minimize_scalar(const std::function<double(double)>& f, double x0, double step,
                               const MinimizeOptions& opts) {
  if (!(step > 0.0)) step = 1.0;
  double fx0 = f(x0);
  if (!is_finite(fx0)) {
    // Look for a finite point on either side.
    bool found = false;
    for (int k = 0; k < 60 && !found; ++k) {
      const double s = step * std::ldexp(1.0, k - 30);
      for (double cand : {x0 + s, x0 - s}) {
        const double fc = f(cand);
        if (is_finite(fc)) {
          x0 = cand;
          fx0 = fc;
          found = true;
          break;
        }
      }
    }
    if (!found) {
      MinimizeResult res;
      res.x = Vec::Constant(1, x0);
      res.message = "no finite value found";
      return res;
    }
  }
  // Pick the descending direction and expand until the function turns up.
  double a = x0, fa = fx0;
  double b = x0 + step, fb = f(b);
  if (!(fb < fa)) {
    const double bl = x0 - step, fbl = f(bl);
    if (fbl < fa) {
      b = bl;
      fb = fbl;
    } else {
      // Minimum is bracketed by [x0 - step, x0 + step].
      auto r = minimize_scalar_on(f, x0 - step, x0 + step, 1e-12, opts.max_iter);
      if (fa < r.value) {
        r.x[0] = x0;
        r.value = fa;
      }
      return r;
    }
  }
  double h = b - a;
  for (int k = 0; k < 200; ++k) {
    const double c = b + 1.618 * h;
    const double fc = f(c);
    if (!(fc < fb)) {
      auto r = minimize_scalar_on(f, std::min(a, c), std::max(a, c), 1e-12, opts.max_iter);
      if (fb < r.value) {
        r.x[0] = b;
        r.value = fb;
      }
      return r;
    }
    a = b;
    fa = fb;
    b = c;
    fb = fc;
    h *= 1.618;
  }
  MinimizeResult res;
  res.x = Vec::Constant(1, b);
  res.value = fb;
  res.message = "objective keeps decreasing";
  return res;
}

namespace {

MinimizeResult nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double scale,
                           int max_evals) {
  const int n = static_cast<int>(x0.size());
  const double alpha = 1.0, beta = 1.0 + 2.0 / n, gamma = 0.75 - 0.5 / n, shrink = 1.0 - 1.0 / n;
  std::vector<Vec> pts(n + 1, x0);
  std::vector<double> vals(n + 1);
  for (int i = 0; i < n; ++i) pts[i + 1][i] += scale;
  int evals = 0;
  for (int i = 0; i <= n; ++i, ++evals) vals[i] = f(pts[i]);
  std::vector<int> order(n + 1);
  MinimizeResult res;
  while (evals < max_evals) {
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) { return vals[a] < vals[b]; });
    const int best = order.front(), worst = order.back(), second = order[n - 1];
    double diam = 0.0;
    for (int i = 0; i <= n; ++i) diam = std::max(diam, (pts[i] - pts[best]).lpNorm<Eigen::Infinity>());
    const double spread = vals[worst] - vals[best];
    if (diam <= 1e-11 * (1.0 + pts[best].norm()) ||
        (is_finite(spread) && spread <= 1e-16 * (1.0 + std::abs(vals[best])) && diam <= 1e-8)) {
      res.converged = true;
      break;
    }
    Vec centroid = Vec::Zero(n);
    for (int i = 0; i <= n; ++i)
      if (i != worst) centroid += pts[i];
    centroid /= n;
    const Vec xr = centroid + alpha * (centroid - pts[worst]);
    const double fr = f(xr);
    ++evals;
    if (fr < vals[best]) {
      const Vec xe = centroid + beta * (xr - centroid);
      const double fe = f(xe);
      ++evals;
      if (fe < fr) {
        pts[worst] = xe;
        vals[worst] = fe;
      } else {
        pts[worst] = xr;
        vals[worst] = fr;
      }
    } else if (fr < vals[second]) {
      pts[worst] = xr;
      vals[worst] = fr;
    } else {
      const bool outside = fr < vals[worst];
      const Vec xc = outside ? Vec(centroid + gamma * (xr - centroid)) : Vec(centroid - gamma * (centroid - pts[worst]));
      const double fc = f(xc);
      ++evals;
      if (fc < std::min(fr, vals[worst]) || (outside && fc <= fr)) {
        pts[worst] = xc;
        vals[worst] = fc;
      } else {
        for (int i = 0; i <= n; ++i) {
          if (i == best) continue;
          pts[i] = pts[best] + shrink * (pts[i] - pts[best]);
          vals[i] = f(pts[i]);
          ++evals;
        }
      }
    }
  }
  int best = 0;
  for (int i = 1; i <= n; ++i)
    if (vals[i] < vals[best]) best = i;
  res.x = pts[best];
  res.value = vals[best];
  res.iterations = evals;
  return res;
}

}  // namespace

MinimizeResult minimize_direct(const std::function<double(const Vec&)>& f, const Vec& x0, double scale,
                               const MinimizeOptions& opts) {
  const int n = static_cast<int>(x0.size());
  if (!(scale > 0.0)) scale = 1.0;
  if (n == 1) {
    auto r = minimize_scalar([&](double t) { return f(Vec::Constant(1, t)); }, x0[0], scale, opts);
    return r;
  }
  Vec x = x0;
  double fx = f(x);
  MinimizeResult res;
  double s = scale;
  for (int restart = 0; restart < 4; ++restart) {
    auto r = nelder_mead(f, x, s, 400 * (n + 1));
    res.iterations += r.iterations;
    if (r.value <= fx) {
      x = r.x;
      fx = r.value;
    }
    s = std::max(scale * 1e-3, 0.1 * s);
  }
  // Compass polish along coordinates and pairwise diagonals.
  std::vector<Vec> dirs;
  for (int i = 0; i < n; ++i) dirs.push_back(Vec::Unit(n, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      dirs.push_back((Vec::Unit(n, i) + Vec::Unit(n, j)) / std::sqrt(2.0));
      dirs.push_back((Vec::Unit(n, i) - Vec::Unit(n, j)) / std::sqrt(2.0));
    }
  double step = 0.01 * scale;
  int polish = 0;
  while (step > 1e-13 * (1.0 + x.norm()) && polish < 20000) {
    bool improved = false;
    for (const Vec& d : dirs) {
      for (double sign : {1.0, -1.0}) {
        const Vec cand = x + sign * step * d;
        const double fc = f(cand);
        ++polish;
        if (fc < fx) {
          x = cand;
          fx = fc;
          improved = true;
        }
      }
    }
    if (!improved) step *= 0.5;
  }
  res.iterations += polish;
  res.x = x;
  res.value = fx;
  res.converged = is_finite(fx) && res.iterations < opts.max_iter * 1000;
  return res;
}

Vec fd_gradient(const std::function<double(const Vec&)>& f, const Vec& x, double h) {
  Vec g(x.size());
  Vec y = x;
  for (int i = 0; i < x.size(); ++i) {
    const double hi = h * std::max(1.0, std::abs(x[i]));
    y[i] = x[i] + hi;
    const double fp = f(y);
    y[i] = x[i] - hi;
    const double fm = f(y);
    y[i] = x[i];
    g[i] = (fp - fm) / (2.0 * hi);
  }
  return g;
}

double gradient_check(const std::function<double(const Vec&)>& f, const Vec& grad, const Vec& x, double h) {
  const Vec fd = fd_gradient(f, x, h);
  const double denom = std::max({1.0, fd.lpNorm<Eigen::Infinity>(), grad.lpNorm<Eigen::Infinity>()});
  return (grad - fd).lpNorm<Eigen::Infinity>() / denom;
}

}  // namespace selfdual
