#pragma once

/**
 * @file recovery.hpp
 * @brief Recovery of g^{ab} and its normal derivatives on the boundary from
 *        observed DtN symbol levels, by layer peeling.
 *
 * Order 0 comes from the (n,n) entry of p_1. For order m >= 1 a reference
 * scene is built that agrees with everything recovered so far and has zero
 * normal derivatives of order >= m; its forward symbols are subtracted from
 * the observed level of degree 1 - m. Everything that depends only on lower
 * orders cancels, and what is left is a quadratic form in the covector whose
 * coefficients determine the m-th normal derivative.
 *
 * All recovered quantities are jets in the tangential variables x' (no x_n,
 * no covector dependence). A jet recovered at order m is trusted up to
 * tangential degree K - m - 2.
 */

#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "elastic_dtn/symbol_calculus.hpp"

namespace elastic_dtn {

struct RecoveryOptions {
  double quadraticity_gate = 1e-6;
  double imaginary_gate = 1e-9;
  bool cross_check = false;  ///< also extract forms by covector sampling
};

/// Observed DtN levels together with the known Lamé coefficients.
struct ObservedSymbols {
  SymbolLevels p;
  LameJet lame;
};

/// Result of reading k^{ab} off a scalar that should equal k^{ab} xi_a xi_b.
struct QuadraticForm {
  JetMatrix k;            ///< real part, symmetric, tangential accuracy a - 2
  double residual = 0.0;  ///< non-quadratic coefficients, relative to max(1, |Q|)
  double imaginary = 0.0;
};

struct OrderDiagnostics {
  int order = 0;
  int trusted_degree = 0;
  double quadraticity = 0.0;
  double imaginary = 0.0;
  double trace_residual = 0.0;   ///< k g - D h, with h from the recovered derivative
  double denominator = 0.0;      ///< (n-1)(2 lambda + 5 mu) - (lambda + 2 mu) at the base point
  double polarization = -1.0;    ///< sampled vs Hessian extraction; -1 when not run
};

struct RecoveredBoundaryData {
  JetContext chart;
  JetMatrix g_inv;
  std::vector<JetMatrix> normal_derivs;  ///< index m - 1 holds d^m g^{ab} / dx_n^m
  std::vector<OrderDiagnostics> orders;  ///< index m holds order m (0 = g_inv)

  int orders_recovered() const { return static_cast<int>(normal_derivs.size()); }
  double quadraticity() const {
    double r = 0.0;
    for (const auto& o : orders) r = std::max(r, o.quadraticity);
    return r;
  }
  double imaginary() const {
    double r = 0.0;
    for (const auto& o : orders) r = std::max(r, o.imaginary);
    return r;
  }
};

/// Tangential truncation degree trusted at normal order m.
inline int trusted_degree(int K, int m) { return K - m - 2; }

/// (n-1)(2 lambda + 5 mu) - (lambda + 2 mu) = (2n-3)(lambda+mu) + (3n-4) mu.
inline Jet trace_coefficient(int n, const Jet& lambda, const Jet& mu) {
  return static_cast<double>(n - 1) * (2.0 * lambda + 5.0 * mu) - (lambda + 2.0 * mu);
}

namespace detail {

inline int x_degree(const JetContext& ctx, const MultiIndex& e) {
  int d = 0;
  for (int v = 0; v < ctx.dimension(); ++v) d += e[static_cast<std::size_t>(v)];
  return d;
}

/// The x-part of a multi-index with the covector part zeroed.
inline MultiIndex x_part(const JetContext& ctx, const MultiIndex& e) {
  std::vector<int> out(e.exponents().begin(), e.exponents().end());
  for (int v = ctx.dimension(); v < ctx.num_variables(); ++v) out[static_cast<std::size_t>(v)] = 0;
  return MultiIndex(std::move(out));
}

inline JetMatrix symmetric_from_terms(const JetContext& ctx, std::size_t m,
                                      const std::vector<std::vector<std::pair<MultiIndex, Complex>>>& terms,
                                      int accuracy) {
  JetMatrix k(ctx, m, m);
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      Jet e = Jet::from_coefficients(ctx, terms[a * m + b], accuracy);
      k(a, b) = e;
      k(b, a) = e;
    }
  return k;
}

inline JetMatrix realify(const JetMatrix& m) { return m.map([](const Jet& e) { return real_part(e); }); }

inline double max_imag(const JetMatrix& m) {
  double r = 0.0;
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) r = std::max(r, elastic_dtn::max_imag(m(i, j)));
  return r;
}

}  // namespace detail

/// k^{ab} from the covector Hessian: k^{aa} is the coefficient of xh_a^2 and
/// k^{ab} half the coefficient of xh_a xh_b, each as a jet in x.
inline QuadraticForm extract_quadratic(const Jet& Q, const RecoveryOptions& opt = {}) {
  const auto& ctx = Q.context();
  const int a = Q.accuracy();
  if (a < 2) throw AccuracyExhausted("quadratic-form extraction needs accuracy >= 2");
  const std::size_t m = static_cast<std::size_t>(ctx.dimension() - 1);
  const int n = ctx.dimension();
  std::vector<std::vector<std::pair<MultiIndex, Complex>>> terms(m * m);
  for (const auto& [e, c] : Q.coefficients()) {
    if (detail::x_degree(ctx, e) > a - 2) continue;
    std::vector<std::size_t> hits;
    int deg = 0;
    for (std::size_t al = 0; al < m; ++al) {
      const int p = e[static_cast<std::size_t>(n) + al];
      deg += p;
      for (int r = 0; r < p; ++r) hits.push_back(al);
    }
    if (deg != 2) continue;
    const MultiIndex x = detail::x_part(ctx, e);
    if (hits[0] == hits[1])
      terms[hits[0] * m + hits[0]].emplace_back(x, c);
    else
      terms[hits[0] * m + hits[1]].emplace_back(x, c * 0.5);
  }
  JetMatrix k = detail::symmetric_from_terms(ctx, m, terms, a - 2);

  // Non-quadratic remainder over the coefficients the extraction can vouch for.
  Jet model(ctx);
  for (std::size_t al = 0; al < m; ++al)
    for (std::size_t be = 0; be < m; ++be)
      model += k(al, be).with_accuracy(a) * Jet::covector(ctx, static_cast<int>(al)) *
               Jet::covector(ctx, static_cast<int>(be));
  const Jet diff = Q - model;
  double residual = 0.0;
  for (const auto& [e, c] : diff.coefficients())
    if (detail::x_degree(ctx, e) <= a - 2) residual = std::max(residual, std::abs(c));
  residual /= std::max(1.0, max_abs(Q));

  QuadraticForm out{detail::realify(k), residual, detail::max_imag(k)};
  if (out.residual > opt.quadraticity_gate)
    throw ConsistencyError("observed level inconsistent with quadratic-form model (residual " +
                           std::to_string(out.residual) + ")");
  if (out.imaginary > opt.imaginary_gate)
    throw ConsistencyError("recovered form has imaginary part " + std::to_string(out.imaginary));
  return out;
}

/// Polarization over the covector samples e_a and e_a + e_b.
inline JetMatrix polarization_form(const Jet& Q) {
  const auto& ctx = Q.context();
  const int a = Q.accuracy();
  const int n = ctx.dimension();
  const std::size_t m = static_cast<std::size_t>(n - 1);
  auto sample = [&](const std::vector<double>& xi) {
    std::vector<std::pair<MultiIndex, Complex>> terms;
    for (const auto& [e, c] : Q.coefficients()) {
      if (detail::x_degree(ctx, e) > a - 2) continue;
      Complex w = c;
      for (std::size_t al = 0; al < m; ++al)
        for (int r = 0; r < e[static_cast<std::size_t>(n) + al]; ++r) w *= xi[al] - ctx.base_covector()[al];
      terms.emplace_back(detail::x_part(ctx, e), w);
    }
    return Jet::from_coefficients(ctx, terms, a - 2);
  };
  std::vector<Jet> diag;
  for (std::size_t al = 0; al < m; ++al) {
    std::vector<double> e(m, 0.0);
    e[al] = 1.0;
    diag.push_back(sample(e));
  }
  JetMatrix k(ctx, m, m);
  for (std::size_t al = 0; al < m; ++al) {
    k(al, al) = diag[al];
    for (std::size_t be = al + 1; be < m; ++be) {
      std::vector<double> e(m, 0.0);
      e[al] = e[be] = 1.0;
      Jet off = (sample(e) - diag[al] - diag[be]) * 0.5;
      k(al, be) = off;
      k(be, al) = off;
    }
  }
  return k;
}

/// Checks the structural requirements on observed data.
inline void validate_observed(const ObservedSymbols& obs) {
  if (obs.p.kind != "p") throw InputError("observed symbols must be DtN levels (kind \"p\")");
  if (!(obs.p.chart == obs.lame.context())) throw ContextMismatch();
  const JetMatrix& p1 = obs.p.level(1);
  const int n = obs.p.chart.dimension();
  if (p1.rows() != static_cast<std::size_t>(n) || p1.cols() != static_cast<std::size_t>(n))
    throw InputError("symbol level has wrong shape");
  for (int d = 1; d >= obs.p.lowest_degree(); --d)
    if (!obs.p.has(d)) throw InputError("symbol levels are not contiguous (missing " + std::to_string(d) + ")");
  const Complex c = p1(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(n - 1)).constant_term();
  if (!(c.real() > 0.0) || std::abs(c.imag()) > 1e-9 * std::max(1.0, c.real()))
    throw InputError("(p_1)_nn must have a positive real constant term");
}

/// g^{ab} on the boundary from (p_1)_nn = 2 mu (lambda + 2 mu) |xi'| / (lambda + 3 mu).
inline RecoveredBoundaryData recover_order0(const ObservedSymbols& obs, const RecoveryOptions& opt = {}) {
  validate_observed(obs);
  const auto& ctx = obs.p.chart;
  const std::size_t N = static_cast<std::size_t>(ctx.dimension() - 1);
  const Jet lambda = restrict_to_boundary(obs.lame.lambda());
  const Jet mu = restrict_to_boundary(obs.lame.mu());
  const Jet pnn = restrict_to_boundary(obs.p.level(1)(N, N));
  const Jet norm = (lambda + 3.0 * mu) * pnn / (2.0 * mu * (lambda + 2.0 * mu));
  const Jet norm2 = norm * norm;
  if (!(norm2.constant_term().real() > 1e-12))
    throw ConsistencyError("recovered |xi'|^2 is not positive");
  QuadraticForm qf = extract_quadratic(norm2, opt);
  const int t0 = trusted_degree(ctx.truncation_order(), 0);
  JetMatrix g_inv = truncated(qf.k, t0);
  try {
    (void)MetricJet::from_inverse(g_inv);
  } catch (const InputError& e) {
    throw ConsistencyError(std::string("recovered boundary metric is not admissible: ") + e.what());
  }
  OrderDiagnostics d;
  d.order = 0;
  d.trusted_degree = t0;
  d.quadraticity = qf.residual;
  d.imaginary = qf.imaginary;
  if (opt.cross_check) d.polarization = (polarization_form(norm2) - qf.k).max_abs();
  return RecoveredBoundaryData{ctx, std::move(g_inv), {}, {d}};
}

/// Inverse of solve_q: E = (q_1 - b_1) X + X q_1. Depends on order-0 data only.
inline JetMatrix lin_inverse(const JetMatrix& X, const SymbolContext& sc) {
  const JetMatrix Q1 = q1(sc);
  return (Q1 - sc.b1) * X + X * Q1;
}

/// Metric whose inverse agrees with the recovered data through normal order
/// m - 1 and has vanishing higher normal derivatives. Coefficients are taken
/// as exact: the reference scene is a definite polynomial metric.
inline MetricJet reference_metric(const RecoveredBoundaryData& data, int m) {
  const auto& ctx = data.chart;
  const int K = ctx.truncation_order();
  const std::size_t N = data.g_inv.rows();
  const Jet xn = Jet::variable(ctx, ctx.normal());
  JetMatrix ginv = data.g_inv.map([K](const Jet& e) { return e.with_accuracy(K); });
  Jet power = Jet::constant(ctx, 1.0);
  double factorial = 1.0;
  for (int j = 1; j < m; ++j) {
    power = power * xn;
    factorial *= j;
    const JetMatrix& D = data.normal_derivs.at(static_cast<std::size_t>(j - 1));
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = 0; b < N; ++b) ginv(a, b) += D(a, b).with_accuracy(K) * power * (1.0 / factorial);
  }
  return MetricJet::from_inverse(ginv);
}

/// Recovers d^m g^{ab} / dx_n^m on the boundary and appends it to data.
inline void recover_normal_derivative(int m, const ObservedSymbols& obs, RecoveredBoundaryData& data,
                                      const RecoveryOptions& opt = {}) {
  if (m < 1) throw InputError("normal order must be >= 1");
  if (data.orders_recovered() != m - 1) throw InputError("normal orders must be recovered in sequence");
  const auto& ctx = data.chart;
  const int K = ctx.truncation_order();
  const int t = trusted_degree(K, m);
  if (t < 0)
    throw AccuracyExhausted("normal order " + std::to_string(m) + " needs truncation order >= " +
                            std::to_string(m + 2));
  const int degree = 1 - m;
  const JetMatrix& observed = obs.p.level(degree);
  const std::size_t n = static_cast<std::size_t>(ctx.dimension()), N = n - 1;

  const SymbolContext ref = build_context(reference_metric(data, m), obs.lame);
  const SymbolLevels ref_p = dtn_symbols(ref, m - 1);
  if (!ref_p.has(degree))
    throw AccuracyExhausted("reference scene cannot reach symbol level " + std::to_string(degree));
  const JetMatrix delta = restrict_to_boundary(observed) - restrict_to_boundary(ref_p.level(degree));

  const Jet lambda = restrict_to_boundary(obs.lame.lambda());
  const Jet mu = restrict_to_boundary(obs.lame.mu());
  const Jet l2m = lambda + 2.0 * mu, l3m = lambda + 3.0 * mu;
  const Jet norm2 = restrict_to_boundary(ref.norm2);

  Jet R(ctx);
  Jet scale = -(l3m * l3m) * norm2 / (mu * mu);
  if (m == 1) {
    R = delta(N, N);
  } else {
    JetMatrix X = restrict_to_boundary(ref.A_inv) * delta;
    for (int i = 0; i < m - 1; ++i) X = restrict_to_boundary(lin_inverse(X, ref));
    R = X(N, N);
    scale = scale * l2m;
  }
  const Jet Q = R * scale;
  QuadraticForm qf = extract_quadratic(Q, opt);

  const JetMatrix g_lower = mat_inverse(data.g_inv);
  const Jet D = trace_coefficient(static_cast<int>(n), lambda, mu);
  const double d0 = D.constant_term().real();
  if (!(d0 > 0.0)) throw InputError("trace coefficient (2n-3)(lambda+mu) + (3n-4)mu is not positive");
  Jet kg(ctx);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) kg += qf.k(a, b) * g_lower(a, b);
  const Jet h = kg / D;
  const Jet c = 2.0 * lambda + 5.0 * mu;
  const Jet inv_l2m = reciprocal(l2m);
  JetMatrix deriv(ctx, N, N);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = a; b < N; ++b) {
      Jet e = real_part(((c * h * data.g_inv(a, b) - qf.k(a, b)) * inv_l2m).truncated(t));
      deriv(a, b) = e;
      deriv(b, a) = e;
    }

  OrderDiagnostics d;
  d.order = m;
  d.trusted_degree = t;
  d.quadraticity = qf.residual;
  d.imaginary = qf.imaginary;
  d.denominator = d0;
  Jet h_check(ctx);
  for (std::size_t a = 0; a < N; ++a)
    for (std::size_t b = 0; b < N; ++b) h_check += g_lower(a, b) * deriv(a, b);
  d.trace_residual = max_abs((kg - D * h_check).truncated(t));
  if (opt.cross_check) d.polarization = (polarization_form(Q) - qf.k).max_abs();

  data.normal_derivs.push_back(std::move(deriv));
  data.orders.push_back(d);
}

/// Order 0 followed by normal orders 1..M.
inline RecoveredBoundaryData recover_full(const ObservedSymbols& obs, int M, const RecoveryOptions& opt = {}) {
  if (M < 0) throw InputError("order must be non-negative");
  RecoveredBoundaryData data = recover_order0(obs, opt);
  for (int m = 1; m <= M; ++m) {
    const std::string where = "order " + std::to_string(m) + ": ";
    try {
      recover_normal_derivative(m, obs, data, opt);
    } catch (const MissingLevel&) {
      throw;
    } catch (const ContextMismatch&) {
      throw;
    } catch (const InputError& e) {
      throw InputError(where + e.what());
    } catch (const AccuracyExhausted& e) {
      throw AccuracyExhausted(where + e.what());
    } catch (const ConsistencyError& e) {
      throw ConsistencyError(where + e.what());
    } catch (const NotInvertible& e) {
      throw NotInvertible(where + e.what());
    }
  }
  return data;
}

/// Forward direction packaged as observed data: boundary-restricted p levels
/// 1 .. -M plus the full Lamé jets.
inline ObservedSymbols observe(const MetricJet& metric, const LameJet& lame, int M) {
  const SymbolContext sc = build_context(metric, lame);
  SymbolLevels p = dtn_symbols(sc, M);
  for (auto& [d, level] : p.levels) level = restrict_to_boundary(level);
  return ObservedSymbols{std::move(p), lame};
}

/// Exact boundary values d^m g^{ab} / dx_n^m of a metric, m = 0..M.
inline std::vector<JetMatrix> true_normal_derivatives(const MetricJet& metric, int M) {
  JetMatrix ginv = mat_inverse(metric.block());
  std::vector<JetMatrix> out;
  const int nv = metric.context().normal();
  for (int m = 0; m <= M; ++m) {
    out.push_back(detail::realify(restrict_to_boundary(ginv)));
    if (m < M) ginv = partial(ginv, nv);
  }
  return out;
}

/// max |recovered - truth| over coefficients of degree <= trusted, divided by max(|truth|, 1).
inline double relative_error(const JetMatrix& recovered, const JetMatrix& truth, int trusted) {
  const JetMatrix d = truncated(recovered, trusted) - truncated(truth, trusted);
  return d.max_abs() / std::max(1.0, truncated(truth, trusted).max_abs());
}

/// Forward then recover; errors per normal order 0..M.
struct RoundTripResult {
  RecoveredBoundaryData recovered;
  std::vector<double> errors;
  double max_error() const {
    double r = 0.0;
    for (double e : errors) r = std::max(r, e);
    return r;
  }
};

inline RoundTripResult roundtrip(const MetricJet& metric, const LameJet& lame, int M,
                                 const RecoveryOptions& opt = {}) {
  const ObservedSymbols obs = observe(metric, lame, M);
  RecoveredBoundaryData rec = recover_full(obs, M, opt);
  const auto truth = true_normal_derivatives(metric, M);
  const int K = metric.context().truncation_order();
  std::vector<double> errors;
  errors.push_back(relative_error(rec.g_inv, truth[0], trusted_degree(K, 0)));
  for (int m = 1; m <= M; ++m)
    errors.push_back(relative_error(rec.normal_derivs[static_cast<std::size_t>(m - 1)],
                                    truth[static_cast<std::size_t>(m)], trusted_degree(K, m)));
  return RoundTripResult{std::move(rec), std::move(errors)};
}

}  // namespace elastic_dtn
