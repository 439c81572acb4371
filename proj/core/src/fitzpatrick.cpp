#include "selfdual/calculus.hpp"
#include "selfdual/lagrangian.hpp"

#include <algorithm>
#include <sstream>

namespace selfdual {

Lagrangian fitzpatrick(const MonotoneGraph& g) {
  g.validate(LagrangianTolerances::monotone);
  const int d = g.dim(), k = static_cast<int>(g.size());
  // L(x, p) = max_j ⟨q_j, x⟩ + ⟨y_j, p⟩ − ⟨y_j, q_j⟩ over graph pairs (y_j, q_j)
  Mat A(k, 2 * d);
  Vec c(k);
  for (int j = 0; j < k; ++j) {
    A.row(j).head(d) = g.p[j].transpose();
    A.row(j).tail(d) = g.x[j].transpose();
    c[j] = g.x[j].dot(g.p[j]);
  }
  AffineSum body(2 * d), conj(2 * d);
  body.add(ConvexFunction::max_affine(A, c), var_block(0, 2 * d));
  conj.add(ConvexFunction::hull_lp(A.transpose(), c), var_block(0, 2 * d));

  Vec lo(2 * d), hi(2 * d);
  for (int i = 0; i < d; ++i) {
    lo[i] = hi[i] = g.x[0][i];
    lo[d + i] = hi[d + i] = g.p[0][i];
  }
  for (int j = 1; j < k; ++j)
    for (int i = 0; i < d; ++i) {
      lo[i] = std::min(lo[i], g.x[j][i]);
      hi[i] = std::max(hi[i], g.x[j][i]);
      lo[d + i] = std::min(lo[d + i], g.p[j][i]);
      hi[d + i] = std::max(hi[d + i], g.p[j][i]);
    }
  const Vec pad = (0.5 * (hi - lo)).cwiseMax(1.0);
  Lagrangian L(d, "fitzpatrick", std::move(body), std::move(conj), {{"pairs", k}});
  return L.with_probe_box(lo - pad, hi + pad);
}

Lagrangian proximal_average(const Lagrangian& L, const std::vector<std::pair<Vec, Vec>>& probes) {
  if (!L.has_conjugate()) fail(ErrorKind::NotSupported, "proximal average needs a closed-form conjugate");
  const int d = L.dim();
  const double tol = LagrangianTolerances::gap_pipeline;
  for (const auto& [x, p] : probes) {
    const double a = L.value(x, p);
    const double b = L.conjugate_body().value(stack(p, x));
    if (a < x.dot(p) - tol || a > b + tol) {
      std::ostringstream os;
      os << "at x = " << x.transpose() << ", p = " << p.transpose() << ": L = " << a << ", L~ = " << b
         << ", <x,p> = " << x.dot(p);
      fail(ErrorKind::SandwichViolated, os.str());
    }
  }
  const LinMap Z = var_block(0, 2 * d);
  AffineSum body(2 * d);
  const LinMap D = var_block(body.add_aux(2 * d), 2 * d);
  body.embed(L.body(), lincomb(1.0, Z, 1.0, D), 0.5);
  // L̃(x, p) = L*(p, x)
  const LinMap W = lincomb(1.0, Z, -1.0, D);
  body.embed(L.conjugate_body(), concat(slice(W, d, d), slice(W, 0, d)), 0.5);
  body.add(ConvexFunction::half_squared_norm(2 * d), D);
  return Lagrangian(d, "prox_average", std::move(body), std::nullopt, {{"base", L.describe()}});
}

namespace {

bool contains_samples(const MonotoneOperator& T) {
  if (T.kind() == MonotoneOperator::Kind::Sampled) return true;
  for (const auto& p : T.parts())
    if (contains_samples(p)) return true;
  return false;
}

Lagrangian build_potential(const MonotoneOperator& T) {
  using K = MonotoneOperator::Kind;
  switch (T.kind()) {
    case K::GradConvex: return Lagrangian::sum_form(T.phi());
    case K::SkewPlusGrad: return Lagrangian::sum_form(T.phi(), T.matrix());
    case K::LinearPositive: {
      const int d = T.dim();
      const ConvexFunction psi = ConvexFunction::quadratic(sym_part(T.matrix()), Vec::Zero(d), 0.0);
      return Lagrangian::sum_form(psi, skew_part(T.matrix()));
    }
    case K::Sampled: {
      const Lagrangian F = fitzpatrick(T.graph());
      std::vector<std::pair<Vec, Vec>> probes;
      for (std::size_t j = 0; j < T.graph().size(); ++j) probes.emplace_back(T.graph().x[j], T.graph().p[j]);
      return proximal_average(F, probes);
    }
    case K::Sum:
      return combine({build_potential(T.parts()[0]), build_potential(T.parts()[1])}, CombineSpec::op_sum());
    case K::Scaled: return transform(build_potential(T.parts()[0]), TransformSpec::scale_range(T.factor()));
  }
  fail(ErrorKind::NotSupported, "operator variant");
}

double graph_spacing(const MonotoneGraph& g) {
  double h = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    double nearest = kInf;
    for (std::size_t j = 0; j < g.size(); ++j)
      if (j != i) nearest = std::min(nearest, (g.x[i] - g.x[j]).norm());
    if (std::isfinite(nearest)) h = std::max(h, nearest);
  }
  return h;
}

}  // namespace

Lagrangian potential_for(const MonotoneOperator& T, bool validate) {
  Lagrangian L = build_potential(T);
  if (!validate) return L;

  const bool pipeline = contains_samples(T);
  const double tol_gap = pipeline ? LagrangianTolerances::gap_pipeline : LagrangianTolerances::gap_analytic;
  const double tol_field = LagrangianTolerances::field(tol_gap);
  std::mt19937_64 rng(kDefaultSeed);

  MonotoneGraph samples;
  bool have_samples = true;
  if (T.kind() == MonotoneOperator::Kind::Sampled) {
    samples = T.graph();
  } else {
    try {
      samples = T.sample_pairs(25, rng);
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::NotSupported) throw;
      have_samples = false;
    }
  }
  if (have_samples)
    for (std::size_t k = 0; k < samples.size(); ++k) {
      const double gap = lag_gap(L, samples.x[k], samples.p[k]);
      if (!(std::abs(gap) <= tol_field)) {
        std::ostringstream os;
        os << "sample " << k << " (x = " << samples.x[k].transpose() << ", p = " << samples.p[k].transpose()
           << ") has gap " << gap;
        fail(ErrorKind::FieldMismatch, os.str());
      }
    }

  // spot check of selfduality at seeded probes
  const double h = pipeline ? graph_spacing(T.graph().size() ? T.graph() : samples) : 0.0;
  const double tol_sd = pipeline ? std::max(LagrangianTolerances::selfdual(h), 2e-2) : 1e-6;
  std::uniform_real_distribution<double> U(-2.0, 2.0);
  const int d = T.dim();
  for (int k = 0; k < 10; ++k) {
    Vec x(d), p(d);
    for (int i = 0; i < d; ++i) {
      x[i] = U(rng);
      p[i] = U(rng);
    }
    const double a = L.value(x, p);
    const double b = lag_conjugate_value(L, p, x);
    if (!std::isfinite(a) || !std::isfinite(b)) continue;
    if (std::abs(a - b) > tol_sd * std::max(1.0, std::abs(a))) {
      std::ostringstream os;
      os << "potential is not selfdual at x = " << x.transpose() << ", p = " << p.transpose() << ": L = " << a
         << ", L*(p,x) = " << b;
      fail(ErrorKind::FieldMismatch, os.str());
    }
  }
  return L;
}

}  // namespace selfdual
