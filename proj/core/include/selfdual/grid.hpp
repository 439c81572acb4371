#pragma once

#include "selfdual/common.hpp"

#include <functional>
#include <span>
#include <string>
#include <vector>

namespace selfdual {

/// Uniform tensor grid over a box in R^d (d <= 4) holding extended-real samples.
/// Values are stored row-major: the last axis varies fastest.
class GridFunction {
 public:
  static constexpr int kMaxDim = 4;

  GridFunction() = default;
  GridFunction(Vec lower, Vec upper, std::vector<int> nodes, std::vector<double> values);

  /// Samples f at every node.
  static GridFunction sample(const Vec& lower, const Vec& upper, const std::vector<int>& nodes,
                             const std::function<double(const Vec&)>& f);

  int dim() const { return static_cast<int>(nodes_.size()); }
  const Vec& lower() const { return lower_; }
  const Vec& upper() const { return upper_; }
  const std::vector<int>& nodes() const { return nodes_; }
  const std::vector<double>& values() const { return values_; }
  double spacing(int axis) const;
  double max_spacing() const;
  std::size_t size() const { return values_.size(); }

  Vec node(std::size_t flat) const;
  std::vector<int> multi_index(std::size_t flat) const;
  std::size_t flat_index(std::span<const int> idx) const;
  double at(std::span<const int> idx) const { return values_[flat_index(idx)]; }

  bool contains(const Vec& x, double slack = 1e-12) const;

  /// Multilinear interpolation; +inf outside the box or if any active corner is +inf.
  double interpolate(const Vec& x) const;

  /// Discrete Legendre-Fenchel conjugate on a dual grid chosen from the slope range
  /// of the finite region, padded by 10%. Axis-by-axis linear-time transform.
  GridFunction conjugate() const;

  /// Same transform onto an explicit dual grid.
  GridFunction conjugate_on(const Vec& dual_lower, const Vec& dual_upper,
                            const std::vector<int>& dual_nodes) const;

  /// Min and max finite-difference slope along each axis over the finite region.
  std::pair<Vec, Vec> slope_range() const;

 private:
  Vec lower_, upper_;
  std::vector<int> nodes_;
  std::vector<double> values_;
};

/// One-dimensional discrete conjugate: out[j] = max_i s[j]*x[i] - f[i] over finite f[i].
/// x and s must be increasing. Runs in O(|x| + |s|) using the lower convex hull;
/// ties on equal slopes resolve to the smallest index.
void discrete_conjugate_1d(std::span<const double> x, std::span<const double> f,
                           std::span<const double> s, std::span<double> out);

}  // namespace selfdual
