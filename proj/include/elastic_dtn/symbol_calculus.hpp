#pragma once

/**
 * @file symbol_calculus.hpp
 * @brief Full symbol of the elastic Dirichlet-to-Neumann map in boundary
 *        normal coordinates.
 *
 * The operator A^{-1} L factors as (d_n + B - Q)(d_n + Q); the symbol levels
 * q_1, q_0, q_{-1}, ... of Q follow from a recursion driven by the E-terms, and
 * the DtN levels p_j are read off from them. Every level is a JetMatrix in the
 * chart's x and covector-offset variables; homogeneity in the covector is not
 * represented structurally.
 */

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "elastic_dtn/geometry.hpp"

namespace elastic_dtn {

/// Geometry, Lamé data and the b/c/F symbol matrices of one chart.
struct SymbolContext {
  JetContext chart;
  MetricJet metric;
  LameJet lame;
  BoundaryGeometry geometry;
  LameTerms terms;

  std::vector<Jet> xi_lower;  ///< xi_a = xi0_a + offset
  std::vector<Jet> xi_upper;  ///< xi^a = g^{ab} xi_b
  Jet norm2;                  ///< |xi'|^2
  Jet norm;                   ///< |xi'|
  Jet s2;                     ///< (lambda + mu) / (lambda + 3 mu)

  JetMatrix A, A_inv;
  JetMatrix b1, b0, c2, c1, c0;
  JetMatrix F1, F2;

  std::size_t n() const { return A.rows(); }
};

inline SymbolContext build_context(const MetricJet& m, const LameJet& lame) {
  if (!(m.context() == lame.context())) throw ContextMismatch();
  const JetContext& ctx = m.context();
  BoundaryGeometry geo = make_geometry(m);
  LameTerms lt(lame, geo);
  const std::size_t n = static_cast<std::size_t>(ctx.dimension()), N = n - 1;
  const Complex I(0.0, 1.0);
  const auto& G = geo.gamma;

  std::vector<Jet> lo, up;
  for (std::size_t a = 0; a < N; ++a) lo.push_back(Jet::covector(ctx, static_cast<int>(a)));
  Jet norm2(ctx);
  for (std::size_t a = 0; a < N; ++a) {
    Jet s(ctx);
    for (std::size_t b = 0; b < N; ++b) s += geo.ginv(a, b) * lo[b];
    up.push_back(s);
    norm2 += s * lo[a];
  }
  Jet norm = sqrt(norm2);
  Jet norm_inv = reciprocal(norm);
  Jet lambda_plus_3mu = lt.lambda + lt.mu * 3.0;
  Jet s2 = lt.lambda_plus_mu * reciprocal(lambda_plus_3mu);

  JetMatrix b1(ctx, n, n), c2(ctx, n, n), c1(ctx, n, n), F1(ctx, n, n), F2(ctx, n, n);
  const Jet lpm_over_mu = lt.lambda_plus_mu * lt.mu_inv;
  const Jet mu_over_l2m = lt.mu * lt.lambda_plus_2mu_inv;
  const Jet l2m_over_mu = lt.lambda_plus_2mu * lt.mu_inv;
  for (std::size_t a = 0; a < N; ++a) {
    b1(a, N) = I * lpm_over_mu * up[a];
    b1(N, a) = I * lt.lambda_plus_mu * lt.lambda_plus_2mu_inv * lo[a];
  }

  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      Jet e = -lpm_over_mu * up[a] * lo[b];
      if (a == b) e -= norm2;
      c2(a, b) = e;
    }
  }
  c2(N, N) = -mu_over_l2m * norm2;

  // c1: trace term (xi^a Gamma^b_ab + d xi^a / d x_a)
  Jet t(ctx);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) t += up[a] * G(b, a, b);
    t += partial(up[a], static_cast<int>(a));
  }
  Jet xi_grad_mu(ctx);  // xi_a grad^a mu
  for (std::size_t a = 0; a < N; ++a) xi_grad_mu += lo[a] * lt.grad_mu[a];
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      Jet tr_b(ctx), twice(ctx);
      for (std::size_t g = 0; g < N; ++g) {
        tr_b += G(g, g, b);
        twice += up[g] * G(a, g, b);
      }
      Jet e = I * lpm_over_mu * up[a] * tr_b + 2.0 * I * twice +
              I * lt.mu_inv * (lo[b] * lt.grad_lambda[a] + up[a] * lt.d_mu[b]);
      if (a == b) e += I * t + I * lt.mu_inv * xi_grad_mu;
      c1(a, b) = e;
    }
    Jet tr_n(ctx), twice(ctx);
    for (std::size_t b = 0; b < N; ++b) tr_n += G(b, b, N);
    for (std::size_t g = 0; g < N; ++g) twice += up[g] * G(a, g, N);
    c1(a, N) = I * lpm_over_mu * tr_n * up[a] + 2.0 * I * twice + I * lt.mu_inv * lt.d_mu[N] * up[a];
  }
  for (std::size_t b = 0; b < N; ++b) {
    Jet twice(ctx);
    for (std::size_t g = 0; g < N; ++g) twice += up[g] * G(N, g, b);
    c1(N, b) = 2.0 * I * mu_over_l2m * twice + I * lt.lambda_plus_2mu_inv * lt.d_lambda[N] * lo[b];
  }
  c1(N, N) = I * mu_over_l2m * t + I * lt.lambda_plus_2mu_inv * xi_grad_mu;

  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      Jet e = up[a] * lo[b] * norm_inv;
      F1(a, b) = e;
      F2(a, b) = e;
    }
    F1(a, N) = I * up[a];
    F1(N, a) = I * lo[a];
    F2(a, N) = -I * l2m_over_mu * up[a];
    F2(N, a) = -I * mu_over_l2m * lo[a];
  }
  F1(N, N) = -norm;
  F2(N, N) = -norm;

  JetMatrix b0 = zeroth_order_B(geo, lt);
  JetMatrix c0 = zeroth_order_C(geo, lt);
  JetMatrix A = lame_principal(lame);
  JetMatrix A_inv = lame_principal_inverse(lame);
  return SymbolContext{ctx,          m,  lame,          std::move(geo), std::move(lt), std::move(lo),
                       std::move(up), norm2, norm,     s2,             std::move(A),  std::move(A_inv),
                       std::move(b1), std::move(b0), std::move(c2), std::move(c1), std::move(c0),
                       std::move(F1), std::move(F2)};
}

/// q_1 = |xi'| I + s2 F_1.
inline JetMatrix q1(const SymbolContext& sc) {
  return JetMatrix::identity(sc.chart, sc.n()) * sc.norm + sc.F1 * sc.s2;
}

/// Homogeneous symbol levels indexed by degree (1, 0, -1, ...).
struct SymbolLevels {
  std::string kind;  ///< "q" or "p"
  JetContext chart;
  std::map<int, JetMatrix> levels;
  int requested_order = 0;  ///< M: levels 1 down to -M were requested
  bool complete = true;     ///< false when accuracy ran out before -M

  bool has(int degree) const { return levels.count(degree) != 0; }
  const JetMatrix& level(int degree) const {
    auto it = levels.find(degree);
    if (it == levels.end()) throw MissingLevel(degree);
    return it->second;
  }
  int lowest_degree() const { return levels.empty() ? 2 : levels.begin()->first; }
  int accuracy(int degree) const { return level(degree).accuracy(); }
};

namespace detail {

inline JetMatrix partial_multi(const JetMatrix& m, const std::vector<int>& vars, const MultiIndex& J) {
  return m.map([&](const Jet& e) { return partial(e, vars, J); });
}

inline std::vector<int> tangential_vars(const JetContext& ctx, bool covector) {
  std::vector<int> v;
  for (int a = 0; a + 1 < ctx.dimension(); ++a) v.push_back(covector ? ctx.xi(a) : ctx.x(a));
  return v;
}

}  // namespace detail

/// E_{-m} for m >= -1, given q levels 1 .. -m.
inline JetMatrix build_E(int m, const SymbolLevels& q, const SymbolContext& sc) {
  if (m < -1) throw InputError("E-term index must be >= -1");
  const auto& ctx = sc.chart;
  const Complex I(0.0, 1.0);
  const std::size_t N = sc.n() - 1;
  const auto xs = detail::tangential_vars(ctx, false), ks = detail::tangential_vars(ctx, true);
  const JetMatrix& Q1 = q.level(1);

  if (m == -1) {
    JetMatrix E = sc.b0 * Q1 + partial(Q1, ctx.normal()) - sc.c1;
    const JetMatrix diff = Q1 - sc.b1;
    for (std::size_t a = 0; a < N; ++a) E += partial(diff, ks[a]) * partial(Q1, xs[a]) * I;
    return E;
  }
  if (m == 0) {
    const JetMatrix& Q0 = q.level(0);
    JetMatrix E = sc.b0 * Q0 + partial(Q0, ctx.normal()) - sc.c0 - Q0 * Q0;
    const JetMatrix diff = Q1 - sc.b1;
    for (std::size_t a = 0; a < N; ++a)
      E += (partial(diff, ks[a]) * partial(Q0, xs[a]) + partial(Q0, ks[a]) * partial(Q1, xs[a])) * I;
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = 0; b < N; ++b)
        E += partial(partial(Q1, ks[a]), ks[b]) * partial(partial(Q1, xs[a]), xs[b]) * 0.5;
    return E;
  }
  const JetMatrix& Qm = q.level(-m);
  JetMatrix E = sc.b0 * Qm + partial(Qm, ctx.normal());
  for (std::size_t a = 0; a < N; ++a) E -= partial(sc.b1, ks[a]) * partial(Qm, xs[a]) * I;
  for (int j = -m; j <= 1; ++j)
    for (int k = -m; k <= 1; ++k) {
      const int order = j + k + m;
      if (order < 0) continue;
      const JetMatrix& Qj = q.level(j);
      const JetMatrix& Qk = q.level(k);
      Complex weight = 1.0;
      for (int r = 0; r < order; ++r) weight *= -I;
      for (const auto& J : multi_indices_of_degree(N, order)) {
        try {
          E -= detail::partial_multi(Qj, ks, J) * detail::partial_multi(Qk, xs, J) * (weight / J.factorial());
        } catch (const AccuracyExhausted&) {
          throw AccuracyExhausted("derivative exceeds trusted degree in E_" + std::to_string(-m) +
                                  " (|J| = " + std::to_string(order) + ")");
        }
      }
    }
  return E;
}

/// q_{-m-1} from E_{-m}:
/// E/(2|xi|) - s2 (F2 E + E F1)/(4|xi|^2) + s2^2 F2 E F1/(4|xi|^3).
inline JetMatrix solve_q(const JetMatrix& E, const SymbolContext& sc) {
  const Jet inv = reciprocal(sc.norm);
  const Jet inv2 = inv * inv;
  return E * (0.5 * inv) - (sc.F2 * E + E * sc.F1) * (0.25 * sc.s2 * inv2) +
         sc.F2 * E * sc.F1 * (0.25 * sc.s2 * sc.s2 * inv2 * inv);
}

/// Lowest level -m reachable at truncation order K: the level must keep
/// accuracy >= 2, and q_{-m} carries accuracy K - m - 1.
inline bool level_reachable(int K, int m) { return K - m - 1 >= 2; }

/// Levels q_1, q_0, ..., q_{-M} of the factorization.
inline SymbolLevels factorization_levels(const SymbolContext& sc, int M) {
  if (M < 0) throw InputError("order must be non-negative");
  SymbolLevels q{"q", sc.chart, {}, M, true};
  q.levels.emplace(1, q1(sc));
  const int K = sc.chart.truncation_order();
  for (int m = 0; m <= M; ++m) {
    if (!level_reachable(K, m)) {
      q.complete = false;
      break;
    }
    q.levels.emplace(-m, solve_q(build_E(m - 1, q, sc), sc));
  }
  return q;
}

/// p_1 in closed form.
inline JetMatrix principal_dtn_symbol(const SymbolContext& sc) {
  const auto& lt = sc.terms;
  const std::size_t n = sc.n(), N = n - 1;
  const Complex I(0.0, 1.0);
  const Jet l3m_inv = reciprocal(lt.lambda + lt.mu * 3.0);
  const Jet off = 2.0 * lt.mu * lt.mu * l3m_inv;
  const Jet block = lt.mu * lt.lambda_plus_mu * l3m_inv * reciprocal(sc.norm);
  JetMatrix p(sc.chart, n, n);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      Jet e = block * sc.xi_upper[a] * sc.xi_lower[b];
      if (a == b) e += lt.mu * sc.norm;
      p(a, b) = e;
    }
    p(a, N) = -I * off * sc.xi_upper[a];
    p(N, a) = I * off * sc.xi_lower[a];
  }
  p(N, N) = 2.0 * lt.mu * lt.lambda_plus_2mu * l3m_inv * sc.norm;
  return p;
}

/// The lambda-Gamma term subtracted from A q_0 to give p_0.
inline JetMatrix p0_correction(const SymbolContext& sc) {
  const std::size_t n = sc.n(), N = n - 1;
  JetMatrix corr(sc.chart, n, n);
  for (std::size_t j = 0; j < n; ++j) {
    Jet tr(sc.chart);
    for (std::size_t a = 0; a < N; ++a) tr += sc.geometry.gamma(a, a, j);
    corr(N, j) = sc.terms.lambda * tr;
  }
  return corr;
}

/// Converts factorization levels into DtN levels.
inline SymbolLevels dtn_from_factorization(const SymbolContext& sc, const SymbolLevels& q) {
  SymbolLevels p{"p", sc.chart, {}, q.requested_order, q.complete};
  p.levels.emplace(1, principal_dtn_symbol(sc));
  for (const auto& [d, Q] : q.levels) {
    if (d == 1) continue;
    JetMatrix level = sc.A * Q;
    if (d == 0) level -= p0_correction(sc);
    p.levels.emplace(d, std::move(level));
  }
  return p;
}

/// DtN symbol levels p_1 .. p_{-M}; stops early (complete = false) when the
/// chart's truncation order cannot support the requested depth.
inline SymbolLevels dtn_symbols(const SymbolContext& sc, int M) {
  return dtn_from_factorization(sc, factorization_levels(sc, M));
}

/// Residuals of sigma(B) = b1 + b0 and sigma(C) = c2 + c1 + c0, checked by
/// applying B and C to v exp(i <x', xi0>).
struct PlaneWaveReport {
  double base_B = 0.0;  ///< base-point residual for B
  double base_C = 0.0;
  double jet_B = 0.0;   ///< residual over every trusted x-coefficient
  double jet_C = 0.0;
  double max_base() const { return std::max(base_B, base_C); }
  double max() const { return std::max({base_B, base_C, jet_B, jet_C}); }
};

inline PlaneWaveReport plane_wave_consistency(const SymbolContext& sc) {
  const auto& ctx = sc.chart;
  const std::size_t n = sc.n(), N = n - 1;
  const Complex I(0.0, 1.0);
  Jet phase(ctx);
  for (std::size_t a = 0; a < N; ++a)
    phase += Jet::variable(ctx, ctx.x(static_cast<int>(a))) * ctx.base_covector()[a];
  const Jet wave = exp(phase * I), wave_inv = exp(phase * (-I));
  auto at_base_covector = [&](const Jet& j) {
    return filter_terms(j, [&](const MultiIndex& e) {
      for (int v = ctx.dimension(); v < ctx.num_variables(); ++v)
        if (e[static_cast<std::size_t>(v)] != 0) return false;
      return true;
    });
  };
  const JetMatrix sigma_B = sc.b1 + sc.b0;
  const JetMatrix sigma_C = sc.c2 + sc.c1 + sc.c0;
  PlaneWaveReport r;
  for (std::size_t j = 0; j < n; ++j) {
    VectorFieldJet v{std::vector<Jet>(n, Jet(ctx))};
    v[j] = wave;
    const VectorFieldJet Bv = apply_B(sc.geometry, sc.terms, sc.b0, v);
    const VectorFieldJet Cv = apply_C(sc.geometry, sc.terms, sc.c0, v);
    for (std::size_t i = 0; i < n; ++i) {
      const Jet dB = Bv[i] * wave_inv - at_base_covector(sigma_B(i, j));
      const Jet dC = Cv[i] * wave_inv - at_base_covector(sigma_C(i, j));
      r.base_B = std::max(r.base_B, std::abs(dB.constant_term()));
      r.base_C = std::max(r.base_C, std::abs(dC.constant_term()));
      r.jet_B = std::max(r.jet_B, max_abs(dB));
      r.jet_C = std::max(r.jet_C, max_abs(dC));
    }
  }
  return r;
}

}  // namespace elastic_dtn
