#pragma once

/**
 * @file checks.hpp
 * @brief Residuals of the structural identities the forward engine must
 *        satisfy on any admissible scene. Shared by `verify` and the
 *        acceptance driver.
 */

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "elastic_dtn/recovery.hpp"
#include "elastic_dtn/scene.hpp"

namespace elastic_dtn {

/// One named check. For "max" checks value must stay <= bound; for "min"
/// checks value must stay > bound.
struct Check {
  std::string name;
  double value = 0.0;
  double bound = 0.0;
  bool lower_bound = false;
  bool pass() const { return lower_bound ? value > bound : value <= bound; }
};

/// Splitting d_n^2 + B d_n + C against A^{-1} L on a vector field.
inline double operator_identity_residual(const MetricJet& metric, const LameJet& lame, const VectorFieldJet& u) {
  const auto lhs = apply_decomposition(u, metric, lame);
  const auto rhs = apply_principal_inverse(lame_apply(u, metric, lame), lame);
  double r = 0.0;
  for (std::size_t j = 0; j < lhs.size(); ++j) r = std::max(r, max_abs(lhs[j] - rhs[j]));
  return r;
}

struct GammaResiduals {
  double normal_tangential = 0.0;  ///< Gamma^b_{gn} xi^g xi_b + d_n|xi'|^2 / 2
  double tangential_normal = 0.0;  ///< Gamma^n_{bg} xi^g xi^b - d_n|xi'|^2 / 2
  double trace = 0.0;              ///< Gamma^a_{na} against both log-determinant forms
  double max() const { return std::max({normal_tangential, tangential_normal, trace}); }
};

inline GammaResiduals gamma_identity_residuals(const MetricJet& metric) {
  const auto& c = metric.context();
  const BoundaryGeometry geo = make_geometry(metric);
  const std::size_t N = static_cast<std::size_t>(c.dimension() - 1);
  const int nv = c.normal();
  std::vector<Jet> lo, up;
  for (std::size_t a = 0; a < N; ++a) lo.push_back(Jet::covector(c, static_cast<int>(a)));
  Jet norm2(c);
  for (std::size_t a = 0; a < N; ++a) {
    Jet u(c);
    for (std::size_t b = 0; b < N; ++b) u += geo.ginv(a, b) * lo[b];
    up.push_back(u);
    norm2 += u * lo[a];
  }
  const Jet dn = partial(norm2, nv);
  Jet first = 0.5 * dn, second = -0.5 * dn, trace(c), via_g(c), via_ginv(c);
  for (std::size_t b = 0; b < N; ++b)
    for (std::size_t g = 0; g < N; ++g) {
      first += geo.gamma(b, g, N) * up[g] * lo[b];
      second += geo.gamma(N, b, g) * up[g] * up[b];
      via_g += 0.5 * geo.ginv(b, g) * partial(geo.g(b, g), nv);
      via_ginv -= 0.5 * geo.g(b, g) * partial(geo.ginv(b, g), nv);
    }
  for (std::size_t a = 0; a < N; ++a) trace += geo.gamma(a, N, a);
  return {max_abs(first), max_abs(second), std::max(max_abs(trace - via_g), max_abs(trace - via_ginv))};
}

inline double riccati_residual(const SymbolContext& sc) {
  const JetMatrix Q = q1(sc);
  return (Q * Q - sc.b1 * Q + sc.c2).max_abs();
}

inline double nilpotency_residual(const SymbolContext& sc) {
  return std::max((sc.F1 * sc.F1).max_abs(), (sc.F2 * sc.F2).max_abs());
}

/// lin_inverse(solve_q(E)) - E and solve_q(lin_inverse(E)) - E on a seeded
/// random matrix of degree-2 jets.
inline double lin_inverse_residual(const SymbolContext& sc, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  const std::size_t n = sc.n();
  const auto& c = sc.chart;
  JetMatrix E(c, n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      std::vector<std::pair<MultiIndex, Complex>> terms;
      for (int d = 0; d <= std::min(2, c.truncation_order()); ++d)
        for (const auto& e : multi_indices_of_degree(static_cast<std::size_t>(c.num_variables()), d))
          terms.emplace_back(e, Complex(coef(rng), coef(rng)));
      E(i, j) = Jet::from_coefficients(c, terms);
    }
  return std::max((lin_inverse(solve_q(E, sc), sc) - E).max_abs(), (solve_q(lin_inverse(E, sc), sc) - E).max_abs());
}

/// (2n-3)(lambda+mu) + (3n-4)mu at the base point.
inline double trace_denominator(const MetricJet& metric, const LameJet& lame) {
  return trace_coefficient(metric.dimension(), lame.lambda(), lame.mu()).constant_term().real();
}

/// Every structural check on one scene. The seed drives the random test
/// field and the random matrix for the lin_inverse check.
inline std::vector<Check> invariant_checks(const MetricJet& metric, const LameJet& lame, std::uint64_t seed) {
  std::vector<Check> out;
  const auto& c = metric.context();
  std::mt19937_64 rng(seed);
  const VectorFieldJet u = random_vector_field(c, rng);
  out.push_back({"operator_identity", operator_identity_residual(metric, lame, u), 1e-9});
  const SymbolContext sc = build_context(metric, lame);
  out.push_back({"plane_wave", plane_wave_consistency(sc).max(), 1e-9});
  out.push_back({"riccati", riccati_residual(sc), 1e-10});
  out.push_back({"nilpotency", nilpotency_residual(sc), 1e-12});
  out.push_back({"lin_inverse", lin_inverse_residual(sc, seed + 1), 1e-12});
  out.push_back({"gamma_identities", gamma_identity_residuals(metric).max(), 1e-10});
  out.push_back({"trace_positivity", trace_denominator(metric, lame), 0.0, true});
  return out;
}

}  // namespace elastic_dtn
