#include "selfdual/calculus.hpp"
#include "selfdual/io.hpp"

#include <random>

namespace selfdual {

namespace {

LinMap scale(double a, const LinMap& x) { return lincomb(a, x, 0.0, x); }

/// w·S(map(v)) + lin over n_new externals.
AffineSum pull(const AffineSum& S, const LinMap& map, int n_new, double w, const LinExpr& lin = {}) {
  AffineSum out(n_new);
  out.embed(S, map, w);
  out.add_linear(lin);
  return out;
}

void require_skew(const Mat& M, int d, const char* what) {
  require_dim(M.rows(), d, what);
  require_dim(M.cols(), d, what);
  if (!is_skew(M)) fail(ErrorKind::InvalidArgument, std::string(what) + " must satisfy Λᵀ = −Λ exactly");
}

}  // namespace

nlohmann::json TransformSpec::describe() const {
  static const char* names[] = {"scale",     "translate_domain", "translate_range", "unitary",
                                "add_skew",  "twist_invert",     "scale_range",     "inverse"};
  nlohmann::json j = {{"kind", names[static_cast<int>(kind)]}};
  if (kind == Kind::Scale || kind == Kind::ScaleRange) j["factor"] = factor;
  if (vector.size()) j["vector"] = vec_json(vector);
  if (matrix.size()) j["matrix"] = mat_json(matrix);
  return j;
}

nlohmann::json CombineSpec::describe() const {
  static const char* names[] = {"direct_sum", "op_sum", "op_convolve", "cross_coupling", "block_superpose"};
  nlohmann::json j = {{"kind", names[static_cast<int>(kind)]}};
  if (coupling.size()) j["A"] = mat_json(coupling);
  if (!blocks.empty()) {
    j["blocks"] = nlohmann::json::array();
    for (const auto& [A, G] : blocks) j["blocks"].push_back({{"A", mat_json(A)}, {"Gamma", mat_json(G)}});
  }
  return j;
}

Lagrangian transform(const Lagrangian& L, const TransformSpec& s) {
  const int d = L.dim(), n = 2 * d;
  const LinMap X = var_block(0, d), P = var_block(d, d);
  const LinMap& Q = X;
  const LinMap& Y = P;
  LinMap bmap, cmap;
  LinExpr blin, clin;
  double bw = 1.0, cw = 1.0;
  switch (s.kind) {
    case TransformSpec::Kind::Scale: {
      const double l = s.factor;
      if (!(l > 0.0)) fail(ErrorKind::InvalidArgument, "scale factor must be positive");
      bmap = concat(scale(1.0 / l, X), scale(1.0 / l, P));
      cmap = bmap;
      bw = cw = l * l;
      break;
    }
    case TransformSpec::Kind::TranslateDomain: {
      require_dim(s.vector.size(), d, "domain shift");
      bmap = concat(shift(X, s.vector), P);
      blin = dot(-s.vector, P);
      cmap = concat(Q, shift(Y, s.vector));
      clin = dot(-s.vector, Q);
      break;
    }
    case TransformSpec::Kind::TranslateRange: {
      require_dim(s.vector.size(), d, "range shift");
      bmap = concat(X, shift(P, s.vector));
      blin = dot(-s.vector, X);
      cmap = concat(shift(Q, s.vector), Y);
      clin = dot(-s.vector, Y);
      break;
    }
    case TransformSpec::Kind::Unitary: {
      const Mat& U = s.matrix;
      require_dim(U.rows(), d, "unitary");
      require_dim(U.cols(), d, "unitary");
      if ((U.transpose() * U - Mat::Identity(d, d)).lpNorm<Eigen::Infinity>() > 1e-12)
        fail(ErrorKind::InvalidArgument, "matrix is not orthogonal to 1e-12");
      bmap = concat(mat_apply(U, X), mat_apply(U, P));
      cmap = bmap;
      break;
    }
    case TransformSpec::Kind::AddSkew: {
      require_skew(s.matrix, d, "added skew map");
      bmap = concat(X, lincomb(-1.0, mat_apply(s.matrix, X), 1.0, P));
      cmap = concat(lincomb(1.0, Q, 1.0, mat_apply(s.matrix.transpose(), Y)), Y);
      break;
    }
    case TransformSpec::Kind::TwistInvert: {
      require_skew(s.matrix, d, "twist map");
      Eigen::FullPivLU<Mat> lu(s.matrix);
      Eigen::JacobiSVD<Mat> svd(s.matrix);
      const auto sv = svd.singularValues();
      if (!lu.isInvertible() || sv.minCoeff() <= 1e-12 * std::max(1.0, sv.maxCoeff()))
        fail(ErrorKind::SingularLambda, "twist map is numerically singular");
      const Mat inv = lu.inverse();
      bmap = concat(lincomb(1.0, X, 1.0, mat_apply(inv, P)), mat_apply(s.matrix, X));
      cmap = concat(mat_apply(s.matrix.transpose(), Y),
                    lincomb(1.0, mat_apply(inv.transpose(), Q), -1.0, Y));
      break;
    }
    case TransformSpec::Kind::ScaleRange: {
      const double c = s.factor;
      if (!(c > 0.0)) fail(ErrorKind::InvalidArgument, "range scale must be positive");
      bmap = concat(X, scale(1.0 / c, P));
      cmap = concat(scale(1.0 / c, Q), Y);
      bw = cw = c;
      break;
    }
    case TransformSpec::Kind::Inverse: {
      bmap = concat(P, X);
      cmap = concat(Y, Q);
      break;
    }
  }
  AffineSum body = pull(L.body(), bmap, n, bw, blin);
  std::optional<AffineSum> conj;
  if (L.has_conjugate()) conj = pull(L.conjugate_body(), cmap, n, cw, clin);
  return Lagrangian(d, "transformed", std::move(body), std::move(conj),
                    {{"transform", s.describe()}, {"base", L.describe()}});
}

Lagrangian time_weighted(const Lagrangian& L, double w) {
  if (!(w > 0.0)) fail(ErrorKind::InvalidArgument, "time weight must be positive");
  const int d = L.dim(), n = 2 * d;
  const LinMap Z = var_block(0, n);
  AffineSum body = pull(L.body(), Z, n, w);
  std::optional<AffineSum> conj;
  if (L.has_conjugate()) conj = pull(L.conjugate_body(), scale(1.0 / w, Z), n, w);
  return Lagrangian(d, "time_weighted", std::move(body), std::move(conj), {{"weight", w}, {"base", L.describe()}});
}

std::pair<double, double> block_identity_check(const std::vector<std::pair<Mat, Mat>>& blocks, std::uint64_t seed) {
  if (blocks.empty()) fail(ErrorKind::InvalidArgument, "no blocks");
  const int D = static_cast<int>(blocks.front().first.cols());
  int rows = 0;
  for (const auto& [A, G] : blocks) {
    require_dim(A.cols(), D, "block A columns");
    require_dim(G.cols(), D, "block Γ columns");
    require_dim(G.rows(), A.rows(), "block Γ rows");
    rows += static_cast<int>(G.rows());
  }
  require_dim(rows, D, "stacked Γ rows");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    Vec z(D);
    for (int i = 0; i < D; ++i) z[i] = N(rng);
    double s = 0.0;
    for (const auto& [A, G] : blocks) s += (A * z).dot(G * z);
    worst = std::max(worst, std::abs(s) / std::max(1.0, z.squaredNorm()));
  }
  Mat G(D, D);
  int r = 0;
  for (const auto& [A, Gi] : blocks) {
    G.middleRows(r, Gi.rows()) = Gi;
    r += static_cast<int>(Gi.rows());
  }
  Eigen::JacobiSVD<Mat> svd(G);
  const auto sv = svd.singularValues();
  const double cond = sv.minCoeff() > 0.0 ? sv.maxCoeff() / sv.minCoeff() : kInf;
  return {worst, cond};
}

Lagrangian combine(const std::vector<Lagrangian>& parts, const CombineSpec& s) {
  if (parts.empty()) fail(ErrorKind::InvalidArgument, "combine needs at least one part");
  bool all_conj = true;
  for (const auto& L : parts) all_conj = all_conj && L.has_conjugate();
  nlohmann::json params = {{"combine", s.describe()}, {"parts", nlohmann::json::array()}};
  for (const auto& L : parts) params["parts"].push_back(L.describe());

  auto two = [&] {
    if (parts.size() != 2) fail(ErrorKind::InvalidArgument, "this combination takes exactly two parts");
  };

  switch (s.kind) {
    case CombineSpec::Kind::DirectSum: {
      int D = 0;
      for (const auto& L : parts) D += L.dim();
      const LinMap X = var_block(0, D), P = var_block(D, D);
      AffineSum body(2 * D), conj(2 * D);
      int o = 0;
      for (const auto& L : parts) {
        const int d = L.dim();
        const LinMap m = concat(slice(X, o, d), slice(P, o, d));
        body.embed(L.body(), m);
        if (all_conj) conj.embed(L.conjugate_body(), m);
        o += d;
      }
      return Lagrangian(D, "combined", std::move(body), all_conj ? std::optional(conj) : std::nullopt, params);
    }
    case CombineSpec::Kind::OpSum:
    case CombineSpec::Kind::OpConvolve: {
      two();
      const int d = parts[0].dim();
      require_dim(parts[1].dim(), d, "combined parts");
      const LinMap X = var_block(0, d), P = var_block(d, d);
      AffineSum body(2 * d), conj(2 * d);
      const LinMap R = var_block(body.add_aux(d), d);
      const LinMap R2 = var_block(conj.add_aux(d), d);
      if (s.kind == CombineSpec::Kind::OpSum) {
        body.embed(parts[0].body(), concat(X, R));
        body.embed(parts[1].body(), concat(X, lincomb(1.0, P, -1.0, R)));
        if (all_conj) {
          conj.embed(parts[0].conjugate_body(), concat(R2, P));
          conj.embed(parts[1].conjugate_body(), concat(lincomb(1.0, X, -1.0, R2), P));
        }
      } else {
        body.embed(parts[0].body(), concat(R, P));
        body.embed(parts[1].body(), concat(lincomb(1.0, X, -1.0, R), P));
        if (all_conj) {
          conj.embed(parts[0].conjugate_body(), concat(X, R2));
          conj.embed(parts[1].conjugate_body(), concat(X, lincomb(1.0, P, -1.0, R2)));
        }
      }
      return Lagrangian(d, "combined", std::move(body), all_conj ? std::optional(conj) : std::nullopt, params);
    }
    case CombineSpec::Kind::CrossCoupling: {
      two();
      const int d1 = parts[0].dim(), d2 = parts[1].dim(), D = d1 + d2;
      const Mat& A = s.coupling;
      require_dim(A.rows(), d2, "coupling rows");
      require_dim(A.cols(), d1, "coupling columns");
      const LinMap V = var_block(0, 2 * D);
      const LinMap x = slice(V, 0, d1), y = slice(V, d1, d2), p = slice(V, D, d1), q = slice(V, D + d1, d2);
      AffineSum body(2 * D), conj(2 * D);
      body.embed(parts[0].body(), concat(x, lincomb(1.0, mat_apply(A.transpose(), y), 1.0, p)));
      body.embed(parts[1].body(), concat(y, lincomb(-1.0, mat_apply(A, x), 1.0, q)));
      if (all_conj) {
        // same slots read as (ξ₁, ξ₂, η₁, η₂)
        conj.embed(parts[0].conjugate_body(), concat(lincomb(1.0, x, 1.0, mat_apply(A.transpose(), q)), p));
        conj.embed(parts[1].conjugate_body(), concat(lincomb(1.0, y, -1.0, mat_apply(A, p)), q));
      }
      return Lagrangian(D, "combined", std::move(body), all_conj ? std::optional(conj) : std::nullopt, params);
    }
    case CombineSpec::Kind::BlockSuperpose: {
      if (s.blocks.size() != parts.size()) fail(ErrorKind::DimensionMismatch, "one (A, Γ) block per part");
      for (std::size_t i = 0; i < parts.size(); ++i)
        require_dim(s.blocks[i].first.rows(), parts[i].dim(), "block rows");
      const auto [identity, cond] = block_identity_check(s.blocks);
      if (identity > 1e-9)
        fail(ErrorKind::InvalidArgument, "blocks violate Σ⟨A_i z, Γ_i z⟩ = 0 (" + std::to_string(identity) + ")");
      if (!(cond < 1e12)) fail(ErrorKind::InvalidArgument, "stacked Γ is not invertible");
      const int D = static_cast<int>(s.blocks.front().first.cols());
      Mat G(D, D);
      int r = 0;
      for (const auto& [A, Gi] : s.blocks) {
        G.middleRows(r, Gi.rows()) = Gi;
        r += static_cast<int>(Gi.rows());
      }
      const Mat Ginv_t = G.inverse().transpose();
      const LinMap Z = var_block(0, D), P = var_block(D, D);
      const LinMap Pt = mat_apply(Ginv_t, P);  // (p_i) blocks; Q shares the slot in the conjugate
      AffineSum body(2 * D), conj(2 * D);
      int o = 0;
      for (std::size_t i = 0; i < parts.size(); ++i) {
        const auto& [A, Gi] = s.blocks[i];
        const int d = parts[i].dim();
        body.embed(parts[i].body(), concat(lincomb(1.0, mat_apply(A, Z), 1.0, slice(Pt, o, d)), mat_apply(Gi, Z)));
        if (all_conj) {
          // L*(q, y) = Σ L_i*(Γ_i y, (Γ⁻ᵀq)_i + A_i y) with q in the first slot and y in the second
          const LinMap Qt = mat_apply(Ginv_t, Z);
          conj.embed(parts[i].conjugate_body(),
                     concat(mat_apply(Gi, P), lincomb(1.0, slice(Qt, o, d), 1.0, mat_apply(A, P))));
        }
        o += d;
      }
      return Lagrangian(D, "combined", std::move(body), all_conj ? std::optional(conj) : std::nullopt, params);
    }
  }
  fail(ErrorKind::InvalidArgument, "unknown combination");
}

}  // namespace selfdual
