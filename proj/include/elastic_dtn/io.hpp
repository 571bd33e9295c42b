#pragma once

/**
 * @file io.hpp
 * @brief JSON forms of jets, scenes, symbol levels and recovered data.
 *
 * A jet is an object mapping space-separated exponent tuples (2n-1 entries,
 * x_1..x_n then the covector offsets) to [re, im] pairs. Scene files may use
 * n-entry tuples for x-only jets and bare numbers for real coefficients.
 * Every document carries "schema": 1.
 */

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "elastic_dtn/recovery.hpp"

namespace elastic_dtn::io {

using json = nlohmann::json;

inline constexpr int kSchema = 1;

namespace detail {

inline const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object");
  auto it = j.find(key);
  if (it == j.end()) throw InputError(where + " is missing \"" + key + "\"");
  return *it;
}

inline int as_int(const json& j, const std::string& where) {
  if (!j.is_number_integer()) throw InputError(where + " must be an integer");
  return j.get<int>();
}

inline double as_double(const json& j, const std::string& where) {
  if (!j.is_number()) throw InputError(where + " must be a number");
  return j.get<double>();
}

inline Complex as_complex(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw InputError(where + " must be a number or an [re, im] pair");
}

inline void check_schema(const json& j, const std::string& what) {
  auto it = j.find("schema");
  if (it != j.end() && !(it->is_number_integer() && it->get<int>() == kSchema))
    throw InputError(what + " has unsupported schema (expected " + std::to_string(kSchema) + ")");
}

/// "a,b" with 1 <= a <= b <= n-1, returned 0-based.
inline std::pair<std::size_t, std::size_t> parse_block_key(const std::string& key, int n, const std::string& what) {
  int a = 0, b = 0;
  char comma = 0;
  std::istringstream in(key);
  std::string rest;
  if (!(in >> a >> comma >> b) || comma != ',' || (in >> rest))
    throw InputError(what + " key \"" + key + "\" is not of the form \"a,b\"");
  if (a < 1 || b > n - 1 || a > b)
    throw InputError(what + " key \"" + key + "\" must satisfy 1 <= a <= b <= " + std::to_string(n - 1));
  return {static_cast<std::size_t>(a - 1), static_cast<std::size_t>(b - 1)};
}

}  // namespace detail

// ---------------------------------------------------------------- jets

inline json jet_to_json(const Jet& j) {
  json out = json::object();
  for (const auto& [m, c] : j.coefficients())
    if (c != Complex{}) out[m.to_string()] = json::array({c.real(), c.imag()});
  return out;
}

/// Accuracy defaults to the truncation order (exact polynomial).
inline Jet jet_from_json(const json& j, const JetContext& ctx, std::optional<int> accuracy,
                         const std::string& where) {
  if (!j.is_object()) throw InputError(where + " must be a JSON object of exponent tuples");
  const std::size_t nv = static_cast<std::size_t>(ctx.num_variables());
  const std::size_t nx = static_cast<std::size_t>(ctx.dimension());
  std::vector<std::pair<MultiIndex, Complex>> terms;
  for (const auto& [key, value] : j.items()) {
    MultiIndex m = MultiIndex::parse(key);
    if (m.size() == nx && nx != nv) {
      std::vector<int> e(m.exponents().begin(), m.exponents().end());
      e.resize(nv, 0);
      m = MultiIndex(std::move(e));
    }
    if (m.size() != nv)
      throw InputError(where + ": exponent tuple \"" + key + "\" must have " + std::to_string(nv) + " entries");
    if (m.degree() > accuracy.value_or(ctx.truncation_order()))
      throw InputError(where + ": exponent tuple \"" + key + "\" exceeds the truncation order");
    terms.emplace_back(std::move(m), detail::as_complex(value, where + "[\"" + key + "\"]"));
  }
  return Jet::from_coefficients(ctx, terms, accuracy);
}

inline json context_to_json(const JetContext& ctx) {
  json xi = json::array();
  for (double v : ctx.base_covector()) xi.push_back(v);
  return {{"dimension", ctx.dimension()}, {"truncation_order", ctx.truncation_order()}, {"base_covector", xi}};
}

inline JetContext context_from_json(const json& j, const std::string& where = "chart") {
  const int n = detail::as_int(detail::field(j, "dimension", where), where + ".dimension");
  const int K = detail::as_int(detail::field(j, "truncation_order", where), where + ".truncation_order");
  const json& xi = detail::field(j, "base_covector", where);
  if (!xi.is_array()) throw InputError(where + ".base_covector must be an array");
  std::vector<double> xi0;
  for (const auto& v : xi) xi0.push_back(detail::as_double(v, where + ".base_covector"));
  return JetContext(n, K, std::move(xi0));
}

inline json matrix_to_json(const JetMatrix& m) {
  json rows = json::array();
  for (std::size_t i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (std::size_t k = 0; k < m.cols(); ++k) row.push_back(jet_to_json(m(i, k)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline JetMatrix matrix_from_json(const json& j, const JetContext& ctx, std::size_t size, int accuracy,
                                  const std::string& where) {
  if (!j.is_array() || j.size() != size) throw InputError(where + " must be a " + std::to_string(size) + "x" +
                                                          std::to_string(size) + " array of jets");
  JetMatrix m(ctx, size, size);
  for (std::size_t i = 0; i < size; ++i) {
    if (!j[i].is_array() || j[i].size() != size) throw InputError(where + " row " + std::to_string(i) + " has wrong length");
    for (std::size_t k = 0; k < size; ++k)
      m(i, k) = jet_from_json(j[i][k], ctx, accuracy, where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  return m;
}

/// Symmetric tangential block as {"a,b": jet} with a <= b (1-based).
inline json block_to_json(const JetMatrix& m) {
  json out = json::object();
  for (std::size_t a = 0; a < m.rows(); ++a)
    for (std::size_t b = a; b < m.cols(); ++b)
      out[std::to_string(a + 1) + "," + std::to_string(b + 1)] = jet_to_json(m(a, b));
  return out;
}

inline JetMatrix block_from_json(const json& j, const JetContext& ctx, std::optional<int> accuracy,
                                 const std::string& what) {
  if (!j.is_object()) throw InputError(what + " must be an object keyed by \"a,b\"");
  const std::size_t N = static_cast<std::size_t>(ctx.dimension() - 1);
  JetMatrix m(ctx, N, N);
  if (accuracy)
    for (std::size_t a = 0; a < N; ++a)
      for (std::size_t b = 0; b < N; ++b) m(a, b) = m(a, b).truncated(*accuracy);
  for (const auto& [key, value] : j.items()) {
    const auto [a, b] = detail::parse_block_key(key, ctx.dimension(), what);
    Jet e = jet_from_json(value, ctx, accuracy, what + "[\"" + key + "\"]");
    m(a, b) = e;
    m(b, a) = e;
  }
  return m;
}

// ---------------------------------------------------------------- scenes

struct SceneConfig {
  JetContext ctx;
  MetricJet metric;
  LameJet lame;
  std::optional<int> order;        ///< default recursion depth M
  std::optional<std::uint64_t> seed;
  std::optional<double> tolerance;  ///< round-trip acceptance override
};

inline SceneConfig scene_from_json(const json& j) {
  detail::check_schema(j, "scene");
  const JetContext ctx = context_from_json(j, "scene");
  const JetMatrix g = block_from_json(detail::field(j, "g", "scene"), ctx, std::nullopt, "metric");
  std::vector<Jet> entries;
  for (std::size_t a = 0; a < g.rows(); ++a)
    for (std::size_t b = 0; b < g.cols(); ++b) entries.push_back(g(a, b));
  MetricJet metric(ctx, std::move(entries));
  LameJet lame(jet_from_json(detail::field(j, "lambda", "scene"), ctx, std::nullopt, "lambda"),
               jet_from_json(detail::field(j, "mu", "scene"), ctx, std::nullopt, "mu"));
  SceneConfig cfg{ctx, std::move(metric), std::move(lame), std::nullopt, std::nullopt, std::nullopt};
  if (auto it = j.find("order"); it != j.end()) {
    cfg.order = detail::as_int(*it, "scene.order");
    if (*cfg.order < 0) throw InputError("scene.order must be non-negative");
  }
  if (auto it = j.find("seed"); it != j.end()) {
    if (!it->is_number_unsigned()) throw InputError("scene.seed must be a non-negative integer");
    cfg.seed = it->get<std::uint64_t>();
  }
  if (auto it = j.find("tolerance"); it != j.end()) cfg.tolerance = detail::as_double(*it, "scene.tolerance");
  return cfg;
}

inline json scene_to_json(const MetricJet& metric, const LameJet& lame) {
  json out = context_to_json(metric.context());
  out["schema"] = kSchema;
  out["g"] = block_to_json(metric.block());
  out["lambda"] = jet_to_json(lame.lambda());
  out["mu"] = jet_to_json(lame.mu());
  return out;
}

// ---------------------------------------------------------------- symbols

/// DtN levels plus the Lamé jets the recovery needs alongside them. Each
/// level is written at its matrix accuracy.
inline json symbols_to_json(const SymbolLevels& p, const LameJet& lame) {
  json levels = json::object(), accuracy = json::object();
  for (const auto& [d, level] : p.levels) {
    levels[std::to_string(d)] = matrix_to_json(truncated(level, level.accuracy()));
    accuracy[std::to_string(d)] = level.accuracy();
  }
  return {{"schema", kSchema},
          {"kind", p.kind},
          {"chart", context_to_json(p.chart)},
          {"levels", levels},
          {"accuracy", accuracy},
          {"requested_order", p.requested_order},
          {"complete", p.complete},
          {"lowest_degree", p.lowest_degree()},
          {"lambda", jet_to_json(lame.lambda())},
          {"mu", jet_to_json(lame.mu())}};
}

inline ObservedSymbols symbols_from_json(const json& j) {
  detail::check_schema(j, "symbols");
  const JetContext ctx = context_from_json(detail::field(j, "chart", "symbols"));
  const json& kind = detail::field(j, "kind", "symbols");
  if (!kind.is_string()) throw InputError("symbols.kind must be a string");
  SymbolLevels p{kind.get<std::string>(), ctx, {}, 0, true};
  const json& levels = detail::field(j, "levels", "symbols");
  const json& acc = detail::field(j, "accuracy", "symbols");
  if (!levels.is_object()) throw InputError("symbols.levels must be an object keyed by degree");
  const std::size_t n = static_cast<std::size_t>(ctx.dimension());
  for (const auto& [key, value] : levels.items()) {
    int d = 0;
    std::size_t pos = 0;
    try {
      d = std::stoi(key, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != key.size()) throw InputError("symbols.levels key \"" + key + "\" is not an integer degree");
    const int a = detail::as_int(detail::field(acc, key, "symbols.accuracy"), "symbols.accuracy[\"" + key + "\"]");
    p.levels.emplace(d, matrix_from_json(value, ctx, n, a, "level " + key));
  }
  if (auto it = j.find("requested_order"); it != j.end()) p.requested_order = detail::as_int(*it, "symbols.requested_order");
  if (auto it = j.find("complete"); it != j.end()) {
    if (!it->is_boolean()) throw InputError("symbols.complete must be a boolean");
    p.complete = it->get<bool>();
  }
  LameJet lame(jet_from_json(detail::field(j, "lambda", "symbols"), ctx, std::nullopt, "lambda"),
               jet_from_json(detail::field(j, "mu", "symbols"), ctx, std::nullopt, "mu"));
  return ObservedSymbols{std::move(p), std::move(lame)};
}

// ---------------------------------------------------------------- recovered data

inline json diagnostics_to_json(const OrderDiagnostics& d) {
  json out = {{"order", d.order},
              {"trusted_degree", d.trusted_degree},
              {"quadraticity", d.quadraticity},
              {"imaginary", d.imaginary}};
  if (d.order > 0) {
    out["trace_residual"] = d.trace_residual;
    out["denominator"] = d.denominator;
  }
  if (d.polarization >= 0.0) out["polarization"] = d.polarization;
  return out;
}

inline json recovered_to_json(const RecoveredBoundaryData& r) {
  json derivs = json::object();
  for (std::size_t m = 0; m < r.normal_derivs.size(); ++m) derivs[std::to_string(m + 1)] = block_to_json(r.normal_derivs[m]);
  json orders = json::array();
  for (const auto& d : r.orders) orders.push_back(diagnostics_to_json(d));
  return {{"schema", kSchema},
          {"chart", context_to_json(r.chart)},
          {"g_inv", block_to_json(r.g_inv)},
          {"normal_derivatives", derivs},
          {"diagnostics",
           {{"quadraticity", r.quadraticity()},
            {"imaginary", r.imaginary()},
            {"orders_recovered", r.orders_recovered()},
            {"orders", orders}}}};
}

inline RecoveredBoundaryData recovered_from_json(const json& j) {
  detail::check_schema(j, "recovered");
  const JetContext ctx = context_from_json(detail::field(j, "chart", "recovered"));
  const json& diag = detail::field(j, "diagnostics", "recovered");
  const json& orders = detail::field(diag, "orders", "recovered.diagnostics");
  if (!orders.is_array() || orders.empty()) throw InputError("recovered.diagnostics.orders must be a non-empty array");
  RecoveredBoundaryData r{ctx, JetMatrix(ctx, 0, 0), {}, {}};
  for (const auto& o : orders) {
    OrderDiagnostics d;
    d.order = detail::as_int(detail::field(o, "order", "order diagnostics"), "order");
    d.trusted_degree = detail::as_int(detail::field(o, "trusted_degree", "order diagnostics"), "trusted_degree");
    d.quadraticity = detail::as_double(detail::field(o, "quadraticity", "order diagnostics"), "quadraticity");
    d.imaginary = detail::as_double(detail::field(o, "imaginary", "order diagnostics"), "imaginary");
    if (auto it = o.find("trace_residual"); it != o.end()) d.trace_residual = detail::as_double(*it, "trace_residual");
    if (auto it = o.find("denominator"); it != o.end()) d.denominator = detail::as_double(*it, "denominator");
    if (auto it = o.find("polarization"); it != o.end()) d.polarization = detail::as_double(*it, "polarization");
    r.orders.push_back(d);
  }
  r.g_inv = block_from_json(detail::field(j, "g_inv", "recovered"), ctx, r.orders[0].trusted_degree, "g_inv");
  const json& derivs = detail::field(j, "normal_derivatives", "recovered");
  for (std::size_t m = 1; m < r.orders.size(); ++m)
    r.normal_derivs.push_back(block_from_json(detail::field(derivs, std::to_string(m), "normal_derivatives"), ctx,
                                              r.orders[m].trusted_degree, "normal_derivatives." + std::to_string(m)));
  return r;
}

// ---------------------------------------------------------------- files

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw InputError(path + ": " + e.what());
  }
}

/// Two-space indented, sorted keys, trailing newline.
inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

/// Writes to a sibling temporary file and renames it over the target.
inline void write_file_atomic(const std::string& path, const std::string& text) {
  const std::filesystem::path target(path);
  std::filesystem::path tmp = target;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out << text;
    out.flush();
    if (!out) throw InputError("failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, target, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw InputError("cannot replace " + path + ": " + ec.message());
  }
}

}  // namespace elastic_dtn::io
