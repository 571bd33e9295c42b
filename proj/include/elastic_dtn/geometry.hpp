#pragma once

/**
 * @file geometry.hpp
 * @brief Metric and Lamé jets in boundary normal coordinates, Christoffel
 *        symbols, Ricci tensor, and two independent routes to the Lamé
 *        operator: covariant differentiation, and the normal/tangential
 *        splitting A^{-1} L = d_n^2 + B d_n + C.
 *
 * Index convention: Greek (tangential) indices are 0..n-2, the normal index
 * is n-1. The full metric is always assembled with g_nn = 1, g_an = 0.
 */

#include <array>
#include <cmath>
#include <string>
#include <vector>

#include "elastic_dtn/jet.hpp"

namespace elastic_dtn {

namespace detail {

/// Eigenvalues of a small real symmetric matrix (cyclic Jacobi).
inline std::vector<double> symmetric_eigenvalues(std::vector<std::vector<double>> a) {
  const std::size_t n = a.size();
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += a[p][q] * a[p][q];
    if (off < 1e-30) break;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) {
        if (std::abs(a[p][q]) < 1e-300) continue;
        const double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a[k][p], akq = a[k][q];
          a[k][p] = c * akp - s * akq;
          a[k][q] = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a[p][k], aqk = a[q][k];
          a[p][k] = c * apk - s * aqk;
          a[q][k] = s * apk + c * aqk;
        }
      }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a[i][i];
  return ev;
}

inline bool depends_on_covector(const Jet& j) {
  const auto& ctx = j.context();
  for (const auto& t : j.terms()) {
    const auto& m = ctx.monomial(t.first);
    for (int v = ctx.dimension(); v < ctx.num_variables(); ++v)
      if (m[v] != 0) return true;
  }
  return false;
}

inline void require_real_spatial(const Jet& j, const std::string& what) {
  if (depends_on_covector(j)) throw InputError(what + " must depend on x only");
  if (max_imag(j) > 1e-12) throw InputError(what + " must be real");
}

}  // namespace detail

/// Tangential block g_{ab}(x) of a metric in boundary normal form.
class MetricJet {
 public:
  /// Entries in row-major order, (n-1)^2 of them.
  MetricJet(const JetContext& ctx, std::vector<Jet> entries) : ctx_(ctx), g_(std::move(entries)) {
    const std::size_t m = static_cast<std::size_t>(ctx.dimension() - 1);
    if (g_.size() != m * m) throw InputError("metric block must have (n-1)^2 entries");
    std::vector<std::vector<double>> c0(m, std::vector<double>(m));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) {
        auto& e = g_[a * m + b];
        if (!(e.context() == ctx)) throw ContextMismatch();
        detail::require_real_spatial(e, "metric entry g_" + std::to_string(a + 1) + std::to_string(b + 1));
        e = real_part(e);
        c0[a][b] = e.constant_term().real();
      }
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b)
        if (!approx_equal(g_[a * m + b], g_[b * m + a]))
          throw InputError("metric block is not symmetric");
    for (double ev : detail::symmetric_eigenvalues(c0))
      if (!(ev > 1e-10)) throw InputError("metric block is not positive definite at the base point");
  }

  /// Builds the metric from a tangential inverse block g^{ab}.
  static MetricJet from_inverse(const JetMatrix& ginv) {
    JetMatrix g = mat_inverse(ginv);
    const std::size_t m = g.rows();
    std::vector<Jet> e;
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) e.push_back(real_part(g(a, b)));
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) {
        Jet s = (e[a * m + b] + e[b * m + a]) * 0.5;
        e[a * m + b] = s;
        e[b * m + a] = s;
      }
    return MetricJet(ginv.context(), std::move(e));
  }

  const JetContext& context() const { return ctx_; }
  int dimension() const { return ctx_.dimension(); }
  const Jet& operator()(std::size_t a, std::size_t b) const {
    return g_[a * static_cast<std::size_t>(ctx_.dimension() - 1) + b];
  }

  JetMatrix block() const {
    const std::size_t m = static_cast<std::size_t>(ctx_.dimension() - 1);
    JetMatrix out(ctx_, m, m);
    for (std::size_t a = 0; a < m; ++a)
      for (std::size_t b = 0; b < m; ++b) out(a, b) = (*this)(a, b);
    return out;
  }

 private:
  JetContext ctx_;
  std::vector<Jet> g_;
};

/// Lamé coefficients; admissible when mu > 0 and lambda + mu >= 0 at the base.
class LameJet {
 public:
  LameJet(Jet lambda, Jet mu) : lambda_(std::move(lambda)), mu_(std::move(mu)) {
    if (!(lambda_.context() == mu_.context())) throw ContextMismatch();
    detail::require_real_spatial(lambda_, "lambda");
    detail::require_real_spatial(mu_, "mu");
    lambda_ = real_part(lambda_);
    mu_ = real_part(mu_);
    const double l0 = lambda_.constant_term().real(), m0 = mu_.constant_term().real();
    if (!(m0 > 0.0) || !(l0 + m0 >= -1e-14))
      throw InputError("Lame coefficients must satisfy mu > 0 and lambda + mu >= 0 (got lambda = " +
                       std::to_string(l0) + ", mu = " + std::to_string(m0) + ")");
    if (!(l0 + 2.0 * m0 > 0.0) || !(l0 + 3.0 * m0 > 0.0))
      throw InputError("lambda + 2 mu and lambda + 3 mu must be positive");
  }

  const Jet& lambda() const { return lambda_; }
  const Jet& mu() const { return mu_; }
  const JetContext& context() const { return mu_.context(); }

 private:
  Jet lambda_;
  Jet mu_;
};

/// Gamma^j_{kl}, stored densely; symmetric in the lower pair.
class ChristoffelField {
 public:
  ChristoffelField(const JetContext& ctx, std::size_t n) : n_(n), data_(n * n * n, Jet(ctx)) {}
  std::size_t dimension() const { return n_; }
  Jet& operator()(std::size_t j, std::size_t k, std::size_t l) { return data_[(j * n_ + k) * n_ + l]; }
  const Jet& operator()(std::size_t j, std::size_t k, std::size_t l) const {
    return data_[(j * n_ + k) * n_ + l];
  }

 private:
  std::size_t n_;
  std::vector<Jet> data_;
};

/// Components u^j of a vector field.
struct VectorFieldJet {
  std::vector<Jet> components;

  std::size_t size() const { return components.size(); }
  Jet& operator[](std::size_t j) { return components[j]; }
  const Jet& operator[](std::size_t j) const { return components[j]; }
  int accuracy() const {
    int a = components.at(0).context().truncation_order();
    for (const auto& c : components) a = std::min(a, c.accuracy());
    return a;
  }
};

/// Full n x n metric with g_nn = 1, g_an = g_na = 0.
inline JetMatrix assemble_full_metric(const MetricJet& m) {
  const auto& ctx = m.context();
  const std::size_t n = static_cast<std::size_t>(ctx.dimension());
  JetMatrix g(ctx, n, n);
  for (std::size_t a = 0; a + 1 < n; ++a)
    for (std::size_t b = 0; b + 1 < n; ++b) g(a, b) = m(a, b);
  g(n - 1, n - 1) = Jet::constant(ctx, 1.0);
  return g;
}

/// Tangential block of a full metric (inverse of assemble_full_metric).
inline MetricJet tangential_block(const JetMatrix& full) {
  const std::size_t m = full.rows() - 1;
  std::vector<Jet> e;
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b) e.push_back(full(a, b));
  return MetricJet(full.context(), std::move(e));
}

/// Gamma^j_{kl} = 1/2 g^{jm} (d_l g_km + d_k g_lm - d_m g_kl).
inline ChristoffelField christoffel(const JetMatrix& g, const JetMatrix& ginv) {
  const auto& ctx = g.context();
  const std::size_t n = g.rows();
  // dg[(m*n + k)*n + l] = d_m g_kl
  std::vector<Jet> dg;
  dg.reserve(n * n * n);
  for (std::size_t m = 0; m < n; ++m)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t l = 0; l < n; ++l) dg.push_back(partial(g(k, l), static_cast<int>(m)));
  auto d = [&](std::size_t m, std::size_t k, std::size_t l) -> const Jet& { return dg[(m * n + k) * n + l]; };
  ChristoffelField gamma(ctx, n);
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = k; l < n; ++l) {
      std::vector<Jet> lowered;  // Gamma_{m,kl}
      for (std::size_t m = 0; m < n; ++m) lowered.push_back((d(l, k, m) + d(k, l, m) - d(m, k, l)) * 0.5);
      for (std::size_t j = 0; j < n; ++j) {
        Jet s(ctx);
        for (std::size_t m = 0; m < n; ++m) s += ginv(j, m) * lowered[m];
        gamma(j, k, l) = s;
        gamma(j, l, k) = s;
      }
    }
  return gamma;
}

/// R_kl = d_j Gamma^j_kl - d_k Gamma^j_jl + Gamma^j_jm Gamma^m_kl - Gamma^j_km Gamma^m_jl.
inline JetMatrix ricci(const ChristoffelField& gamma) {
  const std::size_t n = gamma.dimension();
  const auto& ctx = gamma(0, 0, 0).context();
  JetMatrix r(ctx, n, n);
  std::vector<Jet> trace;  // Gamma^j_jl
  for (std::size_t l = 0; l < n; ++l) {
    Jet s(ctx);
    for (std::size_t j = 0; j < n; ++j) s += gamma(j, j, l);
    trace.push_back(s);
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t l = 0; l < n; ++l) {
      Jet s = -partial(trace[l], static_cast<int>(k));
      for (std::size_t j = 0; j < n; ++j) s += partial(gamma(j, k, l), static_cast<int>(j));
      for (std::size_t m = 0; m < n; ++m) {
        s += trace[m] * gamma(m, k, l);
        for (std::size_t j = 0; j < n; ++j) s -= gamma(j, k, m) * gamma(m, j, l);
      }
      r(k, l) = s;
    }
  return r;
}

/// Metric, inverse metric and Christoffel symbols of one chart.
struct BoundaryGeometry {
  JetMatrix g;
  JetMatrix ginv;
  ChristoffelField gamma;
};

inline BoundaryGeometry make_geometry(const MetricJet& m) {
  JetMatrix g = assemble_full_metric(m);
  JetMatrix ginv = mat_inverse(g);
  ChristoffelField gamma = christoffel(g, ginv);
  return {std::move(g), std::move(ginv), std::move(gamma)};
}

/// Lamé coefficients with the quotients and gradients used by B and C.
struct LameTerms {
  Jet lambda, mu, lambda_plus_mu, lambda_plus_2mu;
  Jet mu_inv, lambda_plus_2mu_inv;
  std::vector<Jet> d_lambda, d_mu;             // d_k, all n directions
  std::vector<Jet> grad_lambda, grad_mu;       // g^{ab} d_b, tangential

  LameTerms(const LameJet& lame, const BoundaryGeometry& geo)
      : lambda(lame.lambda()),
        mu(lame.mu()),
        lambda_plus_mu(lame.lambda() + lame.mu()),
        lambda_plus_2mu(lame.lambda() + lame.mu() * 2.0),
        mu_inv(reciprocal(lame.mu())),
        lambda_plus_2mu_inv(reciprocal(lambda_plus_2mu)) {
    const auto& ctx = lame.context();
    const std::size_t n = static_cast<std::size_t>(ctx.dimension());
    for (std::size_t k = 0; k < n; ++k) {
      d_lambda.push_back(partial(lambda, static_cast<int>(k)));
      d_mu.push_back(partial(mu, static_cast<int>(k)));
    }
    for (std::size_t a = 0; a + 1 < n; ++a) {
      Jet gl(ctx), gm(ctx);
      for (std::size_t b = 0; b + 1 < n; ++b) {
        gl += geo.ginv(a, b) * d_lambda[b];
        gm += geo.ginv(a, b) * d_mu[b];
      }
      grad_lambda.push_back(gl);
      grad_mu.push_back(gm);
    }
  }
};

/// diag(mu I_{n-1}, lambda + 2 mu).
inline JetMatrix lame_principal(const LameJet& lame) {
  const std::size_t n = static_cast<std::size_t>(lame.context().dimension());
  std::vector<Jet> d(n - 1, lame.mu());
  d.push_back(lame.lambda() + lame.mu() * 2.0);
  return JetMatrix::diagonal(d);
}

/// Explicit diagonal inverse of lame_principal.
inline JetMatrix lame_principal_inverse(const LameJet& lame) {
  const std::size_t n = static_cast<std::size_t>(lame.context().dimension());
  std::vector<Jet> d(n - 1, reciprocal(lame.mu()));
  d.push_back(reciprocal(lame.lambda() + lame.mu() * 2.0));
  return JetMatrix::diagonal(d);
}

/// Zeroth-order coefficient matrix B_0 of the normal splitting.
inline JetMatrix zeroth_order_B(const BoundaryGeometry& geo, const LameTerms& lt) {
  const auto& ctx = lt.mu.context();
  const std::size_t n = geo.g.rows(), N = n - 1;
  const auto& G = geo.gamma;
  Jet trace_n(ctx);  // Gamma^a_{an}
  for (std::size_t a = 0; a < N; ++a) trace_n += G(a, a, N);
  JetMatrix B0(ctx, n, n);
  const Jet dmu_over_mu = lt.d_mu[N] * lt.mu_inv;
  const Jet s = lt.lambda_plus_mu * lt.lambda_plus_2mu_inv;
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      Jet e = G(a, b, N) * 2.0;
      if (a == b) e += trace_n + dmu_over_mu;
      B0(a, b) = e;
    }
    B0(a, N) = lt.grad_lambda[a] * lt.mu_inv;
  }
  for (std::size_t b = 0; b < N; ++b) {
    Jet tr(ctx);
    for (std::size_t a = 0; a < N; ++a) tr += G(a, a, b);
    B0(N, b) = s * tr + lt.d_mu[b] * lt.lambda_plus_2mu_inv;
  }
  B0(N, N) = trace_n + partial(lt.lambda_plus_2mu, static_cast<int>(N)) * lt.lambda_plus_2mu_inv;
  return B0;
}

/// Zeroth-order coefficient matrix C_0 of the normal splitting.
inline JetMatrix zeroth_order_C(const BoundaryGeometry& geo, const LameTerms& lt) {
  const auto& ctx = lt.mu.context();
  const std::size_t n = geo.g.rows(), N = n - 1;
  const auto& G = geo.gamma;
  const auto& gi = geo.ginv;
  const int nv = static_cast<int>(N);
  // Gamma^r_{rj} over tangential r, for every j
  std::vector<Jet> tr;
  for (std::size_t j = 0; j < n; ++j) {
    Jet s(ctx);
    for (std::size_t r = 0; r < N; ++r) s += G(r, r, j);
    tr.push_back(s);
  }
  // g^{ml} d_k Gamma^i_{ml}
  auto contracted = [&](std::size_t i, std::size_t k) {
    Jet s(ctx);
    for (std::size_t m = 0; m < n; ++m)
      for (std::size_t l = 0; l < n; ++l)
        if (!gi(m, l).is_zero()) s += gi(m, l) * partial(G(i, m, l), static_cast<int>(k));
    return s;
  };
  const Jet lpm_over_mu = lt.lambda_plus_mu * lt.mu_inv;
  const Jet lpm_over_l2m = lt.lambda_plus_mu * lt.lambda_plus_2mu_inv;
  const Jet mu_over_l2m = lt.mu * lt.lambda_plus_2mu_inv;
  JetMatrix C0(ctx, n, n);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t j = 0; j < n; ++j) {
      // column j = b (tangential) or n
      Jet first(ctx);
      for (std::size_t c = 0; c < N; ++c) first += gi(a, c) * partial(tr[j], static_cast<int>(c));
      Jet third(ctx);
      if (j < N) {
        for (std::size_t c = 0; c < N; ++c)
          third += lt.grad_lambda[a] * G(c, j, c) - lt.d_mu[c] * partial(gi(a, c), static_cast<int>(j));
      } else {
        third = lt.grad_lambda[a] * tr[N];
        for (std::size_t b = 0; b < N; ++b) third -= lt.d_mu[b] * partial(gi(a, b), nv);
      }
      C0(a, j) = lpm_over_mu * first + contracted(a, j) + third * lt.mu_inv;
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    C0(N, j) = lpm_over_l2m * partial(tr[j], nv) + mu_over_l2m * contracted(N, j) +
               lt.d_lambda[N] * tr[j] * lt.lambda_plus_2mu_inv;
  }
  return C0;
}

/// Applies B = B_1 + B_0 to a vector field w.
inline VectorFieldJet apply_B(const BoundaryGeometry& geo, const LameTerms& lt, const JetMatrix& B0,
                              const VectorFieldJet& w) {
  const auto& ctx = lt.mu.context();
  const std::size_t n = geo.g.rows(), N = n - 1;
  VectorFieldJet out{std::vector<Jet>(n, Jet(ctx))};
  const Jet lpm_over_mu = lt.lambda_plus_mu * lt.mu_inv;
  const Jet lpm_over_l2m = lt.lambda_plus_mu * lt.lambda_plus_2mu_inv;
  std::vector<Jet> dwn;
  for (std::size_t b = 0; b < N; ++b) dwn.push_back(partial(w[N], static_cast<int>(b)));
  for (std::size_t a = 0; a < N; ++a) {
    Jet s(ctx);
    for (std::size_t b = 0; b < N; ++b) s += geo.ginv(a, b) * dwn[b];
    out[a] = lpm_over_mu * s;
  }
  Jet div_t(ctx);
  for (std::size_t b = 0; b < N; ++b) div_t += partial(w[b], static_cast<int>(b));
  out[N] = lpm_over_l2m * div_t;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += B0(i, j) * w[j];
  return out;
}

/// Applies C = C_2 + C_1 + C_0 to a vector field u.
inline VectorFieldJet apply_C(const BoundaryGeometry& geo, const LameTerms& lt, const JetMatrix& C0,
                              const VectorFieldJet& u) {
  const auto& ctx = lt.mu.context();
  const std::size_t n = geo.g.rows(), N = n - 1;
  const auto& G = geo.gamma;
  const auto& gi = geo.ginv;
  // du[i][c] = d_c u^i, tangential c
  std::vector<std::vector<Jet>> du(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t c = 0; c < N; ++c) du[i].push_back(partial(u[i], static_cast<int>(c)));
  auto ddu = [&](std::size_t i, std::size_t c, std::size_t d) { return partial(du[i][c], static_cast<int>(d)); };

  const Jet lpm_over_mu = lt.lambda_plus_mu * lt.mu_inv;
  const Jet mu_over_l2m = lt.mu * lt.lambda_plus_2mu_inv;

  // first-order coefficient (g^{cb} Gamma^d_{cd} + d_c g^{cb}), index b
  std::vector<Jet> vcoef;
  for (std::size_t b = 0; b < N; ++b) {
    Jet s(ctx);
    for (std::size_t c = 0; c < N; ++c) {
      Jet t(ctx);
      for (std::size_t d = 0; d < N; ++d) t += G(d, c, d);
      s += gi(c, b) * t + partial(gi(c, b), static_cast<int>(c));
    }
    vcoef.push_back(s);
  }
  std::vector<Jet> tr;  // Gamma^r_{rj}
  for (std::size_t j = 0; j < n; ++j) {
    Jet s(ctx);
    for (std::size_t r = 0; r < N; ++r) s += G(r, r, j);
    tr.push_back(s);
  }

  VectorFieldJet out{std::vector<Jet>(n, Jet(ctx))};
  for (std::size_t a = 0; a < N; ++a) {
    Jet s(ctx);
    // C2
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t d = 0; d < N; ++d) s += gi(c, d) * ddu(a, c, d);
    Jet mixed(ctx);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t b = 0; b < N; ++b) mixed += gi(a, c) * ddu(b, c, b);
    s += lpm_over_mu * mixed;
    // C1
    for (std::size_t b = 0; b < N; ++b) s += vcoef[b] * du[a][b];
    Jet t2(ctx);
    for (std::size_t c = 0; c < N; ++c) {
      for (std::size_t b = 0; b < N; ++b) t2 += gi(a, c) * tr[b] * du[b][c];
      t2 += gi(a, c) * tr[N] * du[N][c];
    }
    s += lpm_over_mu * t2;
    Jet t3(ctx);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t r = 0; r < N; ++r) {
        for (std::size_t b = 0; b < N; ++b) t3 += gi(c, r) * G(a, r, b) * du[b][c];
        t3 += gi(c, r) * G(a, r, N) * du[N][c];
      }
    s += t3 * 2.0;
    Jet t4(ctx);
    for (std::size_t c = 0; c < N; ++c) t4 += lt.grad_mu[c] * du[a][c];
    for (std::size_t b = 0; b < N; ++b) {
      t4 += lt.grad_lambda[a] * du[b][b];
      for (std::size_t c = 0; c < N; ++c) t4 += gi(a, c) * lt.d_mu[b] * du[b][c];
      t4 += lt.d_mu[N] * gi(a, b) * du[N][b];
    }
    s += t4 * lt.mu_inv;
    out[a] = s;
  }
  {
    Jet s(ctx);
    Jet lap(ctx);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t d = 0; d < N; ++d) lap += gi(c, d) * ddu(N, c, d);
    Jet first(ctx);
    for (std::size_t b = 0; b < N; ++b) first += vcoef[b] * du[N][b];
    s += mu_over_l2m * (lap + first);
    Jet t3(ctx);
    for (std::size_t c = 0; c < N; ++c)
      for (std::size_t r = 0; r < N; ++r)
        for (std::size_t b = 0; b < N; ++b) t3 += gi(c, r) * G(N, r, b) * du[b][c];
    s += mu_over_l2m * t3 * 2.0;
    Jet t4(ctx);
    for (std::size_t b = 0; b < N; ++b) t4 += lt.d_lambda[N] * du[b][b];
    for (std::size_t c = 0; c < N; ++c) t4 += lt.grad_mu[c] * du[N][c];
    s += t4 * lt.lambda_plus_2mu_inv;
    out[N] = s;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out[i] += C0(i, j) * u[j];
  return out;
}

/// L u = mu Lap_B u + (lambda+mu) grad div u + mu Ric(u) + (grad lambda) div u
///       + (S u)(grad mu), by covariant differentiation.
inline VectorFieldJet lame_apply(const VectorFieldJet& u, const MetricJet& m, const LameJet& lame) {
  const auto& ctx = m.context();
  const std::size_t n = static_cast<std::size_t>(ctx.dimension());
  if (u.size() != n) throw InputError("vector field has wrong number of components");
  if (u.accuracy() < 2) throw AccuracyExhausted("vector field needs accuracy >= 2");
  const BoundaryGeometry geo = make_geometry(m);
  const auto& G = geo.gamma;
  const auto& gi = geo.ginv;

  // T[k][j] = nabla_k u^j
  std::vector<std::vector<Jet>> T(n, std::vector<Jet>(n, Jet(ctx)));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t j = 0; j < n; ++j) {
      Jet s = partial(u[j], static_cast<int>(k));
      for (std::size_t l = 0; l < n; ++l) s += G(j, k, l) * u[l];
      T[k][j] = s;
    }
  Jet div(ctx);
  for (std::size_t k = 0; k < n; ++k) div += T[k][k];
  std::vector<Jet> d_div, d_lambda, d_mu;
  for (std::size_t k = 0; k < n; ++k) {
    d_div.push_back(partial(div, static_cast<int>(k)));
    d_lambda.push_back(partial(lame.lambda(), static_cast<int>(k)));
    d_mu.push_back(partial(lame.mu(), static_cast<int>(k)));
  }
  const JetMatrix R = ricci(G);

  VectorFieldJet out{std::vector<Jet>(n, Jet(ctx))};
  for (std::size_t j = 0; j < n; ++j) {
    // Bochner Laplacian: g^{lk} nabla_l T^j_k
    Jet lap(ctx);
    for (std::size_t l = 0; l < n; ++l)
      for (std::size_t k = 0; k < n; ++k) {
        if (gi(l, k).is_zero()) continue;
        Jet cov = partial(T[k][j], static_cast<int>(l));
        for (std::size_t q = 0; q < n; ++q) cov += G(j, l, q) * T[k][q] - G(q, l, k) * T[q][j];
        lap += gi(l, k) * cov;
      }
    Jet grad_div(ctx), ric(ctx), grad_lambda(ctx), strain(ctx);
    for (std::size_t k = 0; k < n; ++k) {
      grad_div += gi(j, k) * d_div[k];
      grad_lambda += gi(j, k) * d_lambda[k];
      for (std::size_t l = 0; l < n; ++l) {
        ric += gi(j, k) * R(k, l) * u[l];
        // (Su)^j_k (grad mu)^k = g^{jk} T^l_k d_l mu + T^j_k g^{kl} d_l mu
        strain += gi(j, k) * T[k][l] * d_mu[l] + T[k][j] * gi(k, l) * d_mu[l];
      }
    }
    out[j] = lame.mu() * lap + (lame.lambda() + lame.mu()) * grad_div + lame.mu() * ric + grad_lambda * div + strain;
  }
  return out;
}

/// d_n^2 u + B(d_n u) + C(u) with the coefficient matrices of the splitting.
inline VectorFieldJet apply_decomposition(const VectorFieldJet& u, const MetricJet& m, const LameJet& lame) {
  const auto& ctx = m.context();
  const std::size_t n = static_cast<std::size_t>(ctx.dimension());
  if (u.size() != n) throw InputError("vector field has wrong number of components");
  if (u.accuracy() < 2) throw AccuracyExhausted("vector field needs accuracy >= 2");
  const BoundaryGeometry geo = make_geometry(m);
  const LameTerms lt(lame, geo);
  const int nv = ctx.normal();
  VectorFieldJet w{{}}, w2{{}};
  w.components.clear();
  w2.components.clear();
  for (std::size_t j = 0; j < n; ++j) {
    w.components.push_back(partial(u[j], nv));
    w2.components.push_back(partial(w.components.back(), nv));
  }
  const VectorFieldJet bw = apply_B(geo, lt, zeroth_order_B(geo, lt), w);
  const VectorFieldJet cu = apply_C(geo, lt, zeroth_order_C(geo, lt), u);
  VectorFieldJet out{std::vector<Jet>(n, Jet(ctx))};
  for (std::size_t j = 0; j < n; ++j) out[j] = w2[j] + bw[j] + cu[j];
  return out;
}

/// A^{-1} applied to a vector field (row a divided by mu, row n by lambda + 2 mu).
inline VectorFieldJet apply_principal_inverse(const VectorFieldJet& v, const LameJet& lame) {
  const std::size_t n = v.size();
  VectorFieldJet out = v;
  const Jet mu_inv = reciprocal(lame.mu());
  for (std::size_t a = 0; a + 1 < n; ++a) out[a] = v[a] * mu_inv;
  out[n - 1] = v[n - 1] * reciprocal(lame.lambda() + lame.mu() * 2.0);
  return out;
}

}  // namespace elastic_dtn
