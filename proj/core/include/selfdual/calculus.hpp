#pragma once

#include "selfdual/lagrangian.hpp"

#include <utility>
#include <vector>

namespace selfdual {

/// Unary operations on Lagrangians, named by their effect on the field T = ∂̄L.
struct TransformSpec {
  enum class Kind {
    Scale,            // λ·T(x/λ):     λ²L(x/λ, p/λ)
    TranslateDomain,  // T(x + y):     L(x + y, p) − ⟨y, p⟩
    TranslateRange,   // T(x) − q:     L(x, p + q) − ⟨x, q⟩
    Unitary,          // UᵀTU:         L(Ux, Up)
    AddSkew,          // T + Λ:        L(x, −Λx + p)
    TwistInvert,      //               L(x + Λ⁻¹p, Λx)
    ScaleRange,       // c·T:          c·L(x, p/c)
    Inverse,          // T⁻¹:          L(p, x)
  };
  Kind kind = Kind::Scale;
  double factor = 1.0;
  Vec vector;
  Mat matrix;

  static TransformSpec scale(double lambda) { return {Kind::Scale, lambda, {}, {}}; }
  static TransformSpec translate_domain(const Vec& y) { return {Kind::TranslateDomain, 1.0, y, {}}; }
  static TransformSpec translate_range(const Vec& q) { return {Kind::TranslateRange, 1.0, q, {}}; }
  static TransformSpec unitary(const Mat& U) { return {Kind::Unitary, 1.0, {}, U}; }
  static TransformSpec add_skew(const Mat& L) { return {Kind::AddSkew, 1.0, {}, L}; }
  static TransformSpec twist_invert(const Mat& L) { return {Kind::TwistInvert, 1.0, {}, L}; }
  static TransformSpec scale_range(double c) { return {Kind::ScaleRange, c, {}, {}}; }
  static TransformSpec inverse() { return {Kind::Inverse, 1.0, {}, {}}; }

  nlohmann::json describe() const;
};

/// Binary and n-ary combinations.
struct CombineSpec {
  enum class Kind {
    DirectSum,       // Σ L_i(x_i, p_i)
    OpSum,           // inf_r L₁(x, r) + L₂(x, p − r)          field T + S
    OpConvolve,      // inf_z L₁(z, p) + L₂(x − z, p)          field (T⁻¹ + S⁻¹)⁻¹
    CrossCoupling,   // L₁(x, Aᵀy + p) + L₂(y, −Ax + q)
    BlockSuperpose,  // Σ L_i(A_i z + (Γ⁻ᵀp)_i, Γ_i z)
  };
  Kind kind = Kind::DirectSum;
  Mat coupling;                                 // A for CrossCoupling (rows: second block)
  std::vector<std::pair<Mat, Mat>> blocks;      // (A_i, Γ_i) for BlockSuperpose

  static CombineSpec direct_sum() { return {Kind::DirectSum, {}, {}}; }
  static CombineSpec op_sum() { return {Kind::OpSum, {}, {}}; }
  static CombineSpec op_convolve() { return {Kind::OpConvolve, {}, {}}; }
  static CombineSpec cross_coupling(const Mat& A) { return {Kind::CrossCoupling, A, {}}; }
  static CombineSpec block_superpose(std::vector<std::pair<Mat, Mat>> b) {
    return {Kind::BlockSuperpose, {}, std::move(b)};
  }

  nlohmann::json describe() const;
};

Lagrangian transform(const Lagrangian& L, const TransformSpec& spec);
Lagrangian combine(const std::vector<Lagrangian>& parts, const CombineSpec& spec);

/// w·L(x, p) for w > 0. Not selfdual unless w = 1; used for weighted path integrands.
Lagrangian time_weighted(const Lagrangian& L, double w);

/// Max over 50 seeded random z of |Σ⟨A_i z, Γ_i z⟩|, and the condition number of the stacked Γ.
std::pair<double, double> block_identity_check(const std::vector<std::pair<Mat, Mat>>& blocks,
                                               std::uint64_t seed = kDefaultSeed);

}  // namespace selfdual
