#pragma once

// Shared helpers for the test suites: random jet generators and a naive
// dictionary-based polynomial used as an independent oracle.

#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "elastic_dtn/jet.hpp"

namespace testing_support {

using elastic_dtn::Complex;
using elastic_dtn::Jet;
using elastic_dtn::JetContext;
using elastic_dtn::MultiIndex;

using Poly = std::map<std::vector<int>, Complex>;

inline Poly to_poly(const Jet& j) {
  Poly p;
  for (const auto& [m, c] : j.coefficients())
    p[std::vector<int>(m.exponents().begin(), m.exponents().end())] += c;
  return p;
}

inline int poly_degree(const std::vector<int>& e) {
  int d = 0;
  for (int v : e) d += v;
  return d;
}

inline Poly poly_mul(const Poly& a, const Poly& b, int max_degree) {
  Poly out;
  for (const auto& [ea, ca] : a)
    for (const auto& [eb, cb] : b) {
      std::vector<int> e(ea.size());
      for (std::size_t i = 0; i < e.size(); ++i) e[i] = ea[i] + eb[i];
      if (poly_degree(e) <= max_degree) out[e] += ca * cb;
    }
  return out;
}

inline double poly_distance(const Poly& a, const Poly& b) {
  double d = 0.0;
  for (const auto& [e, c] : a) {
    auto it = b.find(e);
    d = std::max(d, std::abs(c - (it == b.end() ? Complex{} : it->second)));
  }
  for (const auto& [e, c] : b)
    if (!a.count(e)) d = std::max(d, std::abs(c));
  return d;
}

/// Dense random jet over all variables, coefficients in the unit box.
inline Jet random_jet(const JetContext& ctx, std::mt19937_64& rng, int max_degree, double scale = 1.0,
                      bool complex_coeffs = true) {
  std::uniform_real_distribution<double> u(-scale, scale);
  std::vector<std::pair<MultiIndex, Complex>> terms;
  for (int d = 0; d <= max_degree; ++d)
    for (const auto& m : elastic_dtn::multi_indices_of_degree(static_cast<std::size_t>(ctx.num_variables()), d))
      terms.emplace_back(m, Complex(u(rng), complex_coeffs ? u(rng) : 0.0));
  return Jet::from_coefficients(ctx, terms);
}

/// Random jet with a constant term bounded away from zero.
inline Jet random_invertible_jet(const JetContext& ctx, std::mt19937_64& rng, int max_degree) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Jet j = random_jet(ctx, rng, max_degree, 0.5);
  return j - j.constant_term() + Complex(1.0 + u(rng), u(rng) - 0.5);
}

inline JetContext random_context(std::mt19937_64& rng, int n, int K) {
  std::uniform_real_distribution<double> u(0.5, 1.5);
  std::vector<double> xi0;
  for (int a = 0; a + 1 < n; ++a) xi0.push_back(u(rng));
  return JetContext(n, K, xi0);
}

}  // namespace testing_support
