#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace selfdual {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Error categories surfaced by the library. The CLI maps these onto exit codes.
enum class ErrorKind {
  InvalidArgument,
  DimensionMismatch,
  DimensionTooHigh,
  GridTooCoarse,
  OutOfBox,
  NoConvergence,
  InnerNoConvergence,
  Unbounded,
  NotMonotone,
  SandwichViolated,
  FieldMismatch,
  EmptyProbe,
  NotCoercive,
  SingularLambda,
  ClassInfeasible,
  ExtendedArithmetic,
  NotSupported,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

// Extended reals. +inf is the IEEE infinity; -inf never appears in a proper
// convex function's range, so a -inf result is reported as Unbounded.
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool is_inf(double v) { return v == kInf; }
inline bool is_finite(double v) { return std::isfinite(v); }

namespace ext {

/// a * v for a scalar weight and an extended value. 0 * inf is rejected.
inline double scale(double a, double v) {
  if (is_inf(v)) {
    if (a == 0.0) fail(ErrorKind::ExtendedArithmetic, "0 * inf is undefined");
    if (a < 0.0) fail(ErrorKind::ExtendedArithmetic, "negative weight on +inf");
    return kInf;
  }
  return a * v;
}

inline double add(double a, double b) {
  if (is_inf(a) || is_inf(b)) return kInf;
  return a + b;
}

}  // namespace ext

inline void require_dim(Eigen::Index got, Eigen::Index want, const char* what) {
  if (got != want) {
    fail(ErrorKind::DimensionMismatch,
         std::string(what) + ": expected dimension " + std::to_string(want) + ", got " +
             std::to_string(got));
  }
}

inline Vec stack(const Vec& a, const Vec& b) {
  Vec out(a.size() + b.size());
  out << a, b;
  return out;
}

/// Result record of a gap minimization. A value near zero certifies a solution.
struct Certificate {
  double value = kInf;
  Vec point;
  int iterations = 0;
  double tolerance = 0.0;
  bool converged = false;
  std::string diagnostics;
};

/// Deterministic seed used by every randomized probe in the library.
inline constexpr std::uint64_t kDefaultSeed = 20240611ULL;

}  // namespace selfdual
