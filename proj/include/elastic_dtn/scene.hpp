#pragma once

/**
 * @file scene.hpp
 * @brief Seeded random scenes (metric, Lamé coefficients, covector) used by
 *        the test suites and the CLI's roundtrip/verify commands.
 */

#include <cstdint>
#include <random>
#include <vector>

#include "elastic_dtn/geometry.hpp"

namespace elastic_dtn {

struct Scene {
  JetContext ctx;
  MetricJet metric;
  LameJet lame;
};

/// Random real polynomial in x of total degree 1..max_degree (no constant term).
inline Jet random_spatial_polynomial(const JetContext& ctx, std::mt19937_64& rng, int max_degree,
                                     double scale) {
  std::uniform_real_distribution<double> coef(-scale, scale);
  const int n = ctx.dimension();
  std::vector<std::pair<MultiIndex, Complex>> terms;
  for (int d = 1; d <= std::min(max_degree, ctx.truncation_order()); ++d)
    for (const auto& e : multi_indices_of_degree(static_cast<std::size_t>(n), d)) {
      std::vector<int> full(static_cast<std::size_t>(ctx.num_variables()), 0);
      for (int k = 0; k < n; ++k) full[static_cast<std::size_t>(k)] = e[static_cast<std::size_t>(k)];
      terms.emplace_back(MultiIndex(full), Complex(coef(rng) / d, 0.0));
    }
  return Jet::from_coefficients(ctx, terms);
}

/// Random admissible scene: metric block near the identity, Lamé coefficients
/// with mu in [0.5, 2] and lambda + mu >= 0.1, base covector components of
/// magnitude in [0.5, 1.5].
inline Scene random_scene(int n, int truncation_order, std::uint64_t seed, int max_degree = 3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> xi0;
  for (int a = 0; a + 1 < n; ++a) xi0.push_back((unit(rng) < 0.5 ? -1.0 : 1.0) * (0.5 + unit(rng)));
  JetContext ctx(n, truncation_order, xi0);

  const std::size_t m = static_cast<std::size_t>(n - 1);
  std::vector<Jet> g(m * m, Jet(ctx));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = a; b < m; ++b) {
      const double c0 = a == b ? 1.0 + 0.5 * unit(rng) : 0.4 * (unit(rng) - 0.5);
      Jet e = Jet::constant(ctx, c0) + random_spatial_polynomial(ctx, rng, max_degree, 0.3);
      g[a * m + b] = e;
      g[b * m + a] = e;
    }
  const double mu0 = 0.5 + 1.5 * unit(rng);
  const double lambda0 = -mu0 + 0.1 + 2.0 * unit(rng);
  Jet mu = Jet::constant(ctx, mu0) + random_spatial_polynomial(ctx, rng, max_degree, 0.2);
  Jet lambda = Jet::constant(ctx, lambda0) + random_spatial_polynomial(ctx, rng, max_degree, 0.2);
  return Scene{ctx, MetricJet(ctx, std::move(g)), LameJet(std::move(lambda), std::move(mu))};
}

/// Random complex vector field with polynomial components of degree <= max_degree in x.
inline VectorFieldJet random_vector_field(const JetContext& ctx, std::mt19937_64& rng, int max_degree = 3) {
  std::uniform_real_distribution<double> coef(-1.0, 1.0);
  VectorFieldJet u;
  for (int j = 0; j < ctx.dimension(); ++j) {
    Jet re = Jet::constant(ctx, coef(rng)) + random_spatial_polynomial(ctx, rng, max_degree, 1.0);
    Jet im = Jet::constant(ctx, coef(rng)) + random_spatial_polynomial(ctx, rng, max_degree, 1.0);
    u.components.push_back(re + im * Complex(0.0, 1.0));
  }
  return u;
}

}  // namespace elastic_dtn
