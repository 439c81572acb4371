#include "selfdual/grid.hpp"

#include <algorithm>

namespace selfdual {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::DimensionTooHigh: return "DimensionTooHigh";
    case ErrorKind::GridTooCoarse: return "GridTooCoarse";
    case ErrorKind::OutOfBox: return "OutOfBox";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::InnerNoConvergence: return "InnerNoConvergence";
    case ErrorKind::Unbounded: return "Unbounded";
    case ErrorKind::NotMonotone: return "NotMonotone";
    case ErrorKind::SandwichViolated: return "SandwichViolated";
    case ErrorKind::FieldMismatch: return "FieldMismatch";
    case ErrorKind::EmptyProbe: return "EmptyProbe";
    case ErrorKind::NotCoercive: return "NotCoercive";
    case ErrorKind::SingularLambda: return "SingularLambda";
    case ErrorKind::ClassInfeasible: return "ClassInfeasible";
    case ErrorKind::ExtendedArithmetic: return "ExtendedArithmetic";
    case ErrorKind::NotSupported: return "NotSupported";
  }
  return "Unknown";
}

GridFunction::GridFunction(Vec lower, Vec upper, std::vector<int> nodes, std::vector<double> values)
    : lower_(std::move(lower)), upper_(std::move(upper)), nodes_(std::move(nodes)),
      values_(std::move(values)) {
  const int d = static_cast<int>(nodes_.size());
  if (d == 0) fail(ErrorKind::InvalidArgument, "grid needs at least one axis");
  if (d > kMaxDim) fail(ErrorKind::DimensionTooHigh, "grid dimension " + std::to_string(d) + " > 4");
  require_dim(lower_.size(), d, "grid lower bounds");
  require_dim(upper_.size(), d, "grid upper bounds");
  std::size_t total = 1;
  for (int i = 0; i < d; ++i) {
    if (nodes_[i] < 2) fail(ErrorKind::GridTooCoarse, "each axis needs at least 2 nodes");
    if (!(upper_[i] > lower_[i])) fail(ErrorKind::GridTooCoarse, "grid spacing must be positive");
    total *= static_cast<std::size_t>(nodes_[i]);
  }
  if (values_.size() != total) {
    fail(ErrorKind::DimensionMismatch, "grid holds " + std::to_string(values_.size()) +
                                           " values, expected " + std::to_string(total));
  }
  bool any_finite = false;
  for (double& v : values_) {
    if (std::isnan(v)) fail(ErrorKind::InvalidArgument, "grid value is NaN");
    if (v == -kInf) fail(ErrorKind::Unbounded, "grid value is -inf");
    any_finite = any_finite || is_finite(v);
  }
  if (!any_finite) fail(ErrorKind::InvalidArgument, "grid function has no finite value");
}

GridFunction GridFunction::sample(const Vec& lower, const Vec& upper, const std::vector<int>& nodes,
                                  const std::function<double(const Vec&)>& f) {
  std::size_t total = 1;
  for (int n : nodes) total *= static_cast<std::size_t>(std::max(n, 0));
  // Build a throwaway grid to reuse node() arithmetic.
  std::vector<double> values(total, 0.0);
  GridFunction probe(lower, upper, nodes, std::vector<double>(total, 0.0));
  for (std::size_t k = 0; k < total; ++k) values[k] = f(probe.node(k));
  return GridFunction(lower, upper, nodes, std::move(values));
}

double GridFunction::spacing(int axis) const {
  return (upper_[axis] - lower_[axis]) / (nodes_[axis] - 1);
}

double GridFunction::max_spacing() const {
  double h = 0.0;
  for (int i = 0; i < dim(); ++i) h = std::max(h, spacing(i));
  return h;
}

std::vector<int> GridFunction::multi_index(std::size_t flat) const {
  std::vector<int> idx(nodes_.size());
  for (int i = dim() - 1; i >= 0; --i) {
    idx[i] = static_cast<int>(flat % nodes_[i]);
    flat /= nodes_[i];
  }
  return idx;
}

std::size_t GridFunction::flat_index(std::span<const int> idx) const {
  std::size_t flat = 0;
  for (int i = 0; i < dim(); ++i) flat = flat * nodes_[i] + idx[i];
  return flat;
}

Vec GridFunction::node(std::size_t flat) const {
  auto idx = multi_index(flat);
  Vec x(dim());
  for (int i = 0; i < dim(); ++i) x[i] = lower_[i] + idx[i] * spacing(i);
  return x;
}

bool GridFunction::contains(const Vec& x, double slack) const {
  if (x.size() != dim()) return false;
  for (int i = 0; i < dim(); ++i) {
    const double tol = slack * std::max(1.0, upper_[i] - lower_[i]);
    if (x[i] < lower_[i] - tol || x[i] > upper_[i] + tol) return false;
  }
  return true;
}

double GridFunction::interpolate(const Vec& x) const {
  require_dim(x.size(), dim(), "grid interpolation point");
  if (!contains(x)) return kInf;
  const int d = dim();
  int base[kMaxDim];
  double frac[kMaxDim];
  for (int i = 0; i < d; ++i) {
    const double t = std::clamp((x[i] - lower_[i]) / spacing(i), 0.0, double(nodes_[i] - 1));
    int b = static_cast<int>(std::floor(t));
    if (b >= nodes_[i] - 1) b = nodes_[i] - 2;
    base[i] = b;
    frac[i] = t - b;
  }
  double acc = 0.0;
  int idx[kMaxDim];
  for (int corner = 0; corner < (1 << d); ++corner) {
    double w = 1.0;
    for (int i = 0; i < d; ++i) {
      const bool up = (corner >> i) & 1;
      idx[i] = base[i] + (up ? 1 : 0);
      w *= up ? frac[i] : 1.0 - frac[i];
    }
    if (w == 0.0) continue;
    const double v = values_[flat_index(std::span<const int>(idx, d))];
    if (is_inf(v)) return kInf;
    acc += w * v;
  }
  return acc;
}

std::pair<Vec, Vec> GridFunction::slope_range() const {
  const int d = dim();
  Vec lo = Vec::Constant(d, kInf), hi = Vec::Constant(d, -kInf);
  for (std::size_t k = 0; k < values_.size(); ++k) {
    if (!is_finite(values_[k])) continue;
    auto idx = multi_index(k);
    for (int i = 0; i < d; ++i) {
      if (idx[i] + 1 >= nodes_[i]) continue;
      ++idx[i];
      const double next = values_[flat_index(idx)];
      --idx[i];
      if (!is_finite(next)) continue;
      const double s = (next - values_[k]) / spacing(i);
      lo[i] = std::min(lo[i], s);
      hi[i] = std::max(hi[i], s);
    }
  }
  return {lo, hi};
}

GridFunction GridFunction::conjugate() const {
  auto [lo, hi] = slope_range();
  Vec dlo(dim()), dhi(dim());
  for (int i = 0; i < dim(); ++i) {
    if (!is_finite(lo[i]) || !is_finite(hi[i]) || !(hi[i] > lo[i])) {
      fail(ErrorKind::GridTooCoarse, "dual box along axis " + std::to_string(i) + " is empty");
    }
    const double pad = 0.1 * (hi[i] - lo[i]);
    dlo[i] = lo[i] - pad;
    dhi[i] = hi[i] + pad;
  }
  return conjugate_on(dlo, dhi, nodes_);
}

void discrete_conjugate_1d(std::span<const double> x, std::span<const double> f,
                           std::span<const double> s, std::span<double> out) {
  // Lower convex hull of the finite points.
  std::vector<std::size_t> hull;
  hull.reserve(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!is_finite(f[i])) continue;
    while (hull.size() >= 2) {
      const std::size_t a = hull[hull.size() - 2], b = hull.back();
      // Drop b if it lies on or above the chord a -> i (keeps the earlier index on ties).
      const double cross = (f[b] - f[a]) * (x[i] - x[a]) - (f[i] - f[a]) * (x[b] - x[a]);
      if (cross >= 0.0) hull.pop_back();
      else break;
    }
    hull.push_back(i);
  }
  if (hull.empty()) {
    std::fill(out.begin(), out.end(), -kInf);
    return;
  }
  // Monotone-slope argmax: vertex k is optimal for slopes in [c_{k-1}, c_k].
  std::size_t k = 0;
  for (std::size_t j = 0; j < s.size(); ++j) {
    while (k + 1 < hull.size()) {
      const std::size_t a = hull[k], b = hull[k + 1];
      const double edge = (f[b] - f[a]) / (x[b] - x[a]);
      if (s[j] > edge) ++k;
      else break;
    }
    out[j] = s[j] * x[hull[k]] - f[hull[k]];
  }
}

GridFunction GridFunction::conjugate_on(const Vec& dual_lower, const Vec& dual_upper,
                                        const std::vector<int>& dual_nodes) const {
  const int d = dim();
  require_dim(dual_lower.size(), d, "dual lower bounds");
  require_dim(static_cast<Eigen::Index>(dual_nodes.size()), d, "dual node counts");

  // Work array indexed by a mixed shape: axes < axis are dual, axes >= axis primal.
  // After processing axis a (from last to first) that axis is dual. We process the last
  // axis first: h(x_1..x_{d-1}, s_d) = max_{x_d} s_d x_d - f; then recurse with -h.
  std::vector<int> shape = nodes_;
  std::vector<double> work = values_;
  // Sign convention: work holds g with conjugate computed as max s*x - g.
  for (int axis = d - 1; axis >= 0; --axis) {
    const int n_in = shape[axis];
    const int n_out = dual_nodes[axis];
    std::vector<double> xs(n_in), ss(n_out);
    const double hx = spacing(axis);
    const double hs = (dual_upper[axis] - dual_lower[axis]) / (n_out - 1);
    for (int i = 0; i < n_in; ++i) xs[i] = lower_[axis] + i * hx;
    for (int j = 0; j < n_out; ++j) ss[j] = dual_lower[axis] + j * hs;

    std::size_t outer = 1, inner = 1;
    for (int i = 0; i < axis; ++i) outer *= shape[i];
    for (int i = axis + 1; i < d; ++i) inner *= shape[i];
    std::vector<double> next(outer * n_out * inner);
    std::vector<double> line(n_in), res(n_out);
    for (std::size_t o = 0; o < outer; ++o) {
      for (std::size_t in = 0; in < inner; ++in) {
        for (int i = 0; i < n_in; ++i) line[i] = work[(o * n_in + i) * inner + in];
        discrete_conjugate_1d(xs, line, ss, res);
        for (int j = 0; j < n_out; ++j) {
          // Negate so the next axis again sees "max s*x - g".
          const double v = res[j];
          next[(o * n_out + j) * inner + in] = (v == -kInf) ? kInf : -v;
        }
      }
    }
    shape[axis] = n_out;
    work = std::move(next);
  }
  for (double& v : work) v = (v == kInf) ? -kInf : -v;
  for (double v : work) {
    if (v == -kInf) fail(ErrorKind::GridTooCoarse, "conjugate has no finite support line");
  }
  return GridFunction(dual_lower, dual_upper, dual_nodes, std::move(work));
}

}  // namespace selfdual
