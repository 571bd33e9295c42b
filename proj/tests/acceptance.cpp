// Acceptance driver: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <cstdio>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "elastic_dtn/checks.hpp"
#include "elastic_dtn/io.hpp"
#include "process.hpp"

using namespace elastic_dtn;
using io::json;

namespace {

constexpr int kSeeds = 20;
constexpr std::uint64_t kSceneSeedBase = 9000;
constexpr std::uint64_t kRoundTripSeedBase = 9500;

constexpr double kOperatorTol = 1e-9;
constexpr double kPlaneWaveTol = 1e-9;
constexpr double kRiccatiTol = 1e-10;
constexpr double kAlgebraTol = 1e-12;
constexpr double kEuclidP1Tol = 1e-12;
constexpr double kEuclidLowerTol = 1e-10;
constexpr double kGammaTol = 1e-10;
constexpr double kHandTol = 1e-8;
constexpr double kRoundTripTol = 1e-6;
constexpr double kQuadraticityTol = 1e-9;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

Scene criterion_scene(int i) { return random_scene(2 + i % 2, 5, kSceneSeedBase + static_cast<std::uint64_t>(i), 3); }

Outcome operator_identity() {
  double worst = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    const Scene s = criterion_scene(i);
    std::mt19937_64 rng(kSceneSeedBase + 100 + static_cast<std::uint64_t>(i));
    worst = std::max(worst, operator_identity_residual(s.metric, s.lame, random_vector_field(s.ctx, rng, 3)));
  }
  return {worst <= kOperatorTol, "max residual " + fmt(worst) + " <= " + fmt(kOperatorTol)};
}

Outcome plane_wave() {
  double worst = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    const Scene s = criterion_scene(i);
    worst = std::max(worst, plane_wave_consistency(build_context(s.metric, s.lame)).max());
  }
  return {worst <= kPlaneWaveTol, "max residual " + fmt(worst) + " <= " + fmt(kPlaneWaveTol)};
}

Outcome riccati() {
  double worst = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    const Scene s = criterion_scene(i);
    worst = std::max(worst, riccati_residual(build_context(s.metric, s.lame)));
  }
  return {worst <= kRiccatiTol, "max residual " + fmt(worst) + " <= " + fmt(kRiccatiTol)};
}

Outcome algebra() {
  double nil = 0.0, inv = 0.0;
  for (int i = 0; i < kSeeds; ++i) {
    const Scene s = criterion_scene(i);
    const SymbolContext sc = build_context(s.metric, s.lame);
    nil = std::max(nil, nilpotency_residual(sc));
    inv = std::max(inv, lin_inverse_residual(sc, kSceneSeedBase + 200 + static_cast<std::uint64_t>(i)));
  }
  return {nil <= kAlgebraTol && inv <= kAlgebraTol,
          "F^2 " + fmt(nil) + ", lin_inverse/solve_q " + fmt(inv) + " <= " + fmt(kAlgebraTol)};
}

/// Closed-form principal DtN symbol for constant coefficients, evaluated at a
/// covector with the Euclidean tangential metric.
std::vector<std::vector<Complex>> euclidean_p1(const std::vector<double>& xi, double lambda, double mu) {
  const std::size_t N = xi.size(), n = N + 1;
  double norm = 0.0;
  for (double v : xi) norm += v * v;
  norm = std::sqrt(norm);
  const Complex I(0.0, 1.0);
  const double l3 = lambda + 3.0 * mu;
  std::vector<std::vector<Complex>> p(n, std::vector<Complex>(n));
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b)
      p[a][b] = (a == b ? mu * norm : 0.0) + mu * (lambda + mu) * xi[a] * xi[b] / (l3 * norm);
    p[a][N] = -I * 2.0 * mu * mu * xi[a] / l3;
    p[N][a] = I * 2.0 * mu * mu * xi[a] / l3;
  }
  p[N][N] = 2.0 * mu * (lambda + 2.0 * mu) * norm / l3;
  return p;
}

Outcome euclidean() {
  struct Case {
    std::vector<double> xi;
    double lambda, mu;
  };
  const std::vector<Case> cases = {{{1.0}, 1.0, 1.0}, {{-0.7}, 0.3, 2.0}, {{0.6, 0.8}, 1.0, 1.0},
                                   {{1.2, -0.4}, -0.5, 1.5}, {{0.3, 1.1}, 4.0, 0.5}};
  double p1_err = 0.0, lower = 0.0;
  for (const auto& c : cases) {
    const int n = static_cast<int>(c.xi.size()) + 1;
    JetContext ctx(n, 6, c.xi);
    std::vector<Jet> g;
    for (int a = 0; a + 1 < n; ++a)
      for (int b = 0; b + 1 < n; ++b) g.push_back(Jet::constant(ctx, a == b ? 1.0 : 0.0));
    const SymbolLevels p = dtn_symbols(
        build_context(MetricJet(ctx, g), LameJet(Jet::constant(ctx, c.lambda), Jet::constant(ctx, c.mu))), 2);
    const auto expected = euclidean_p1(c.xi, c.lambda, c.mu);
    for (std::size_t i = 0; i < expected.size(); ++i)
      for (std::size_t j = 0; j < expected.size(); ++j)
        p1_err = std::max(p1_err, std::abs(p.level(1)(i, j).constant_term() - expected[i][j]));
    for (int d = 0; d >= -2; --d) lower = std::max(lower, p.level(d).max_abs());
  }
  return {p1_err <= kEuclidP1Tol && lower <= kEuclidLowerTol,
          "p1 deviation " + fmt(p1_err) + " <= " + fmt(kEuclidP1Tol) + ", |p0|,|p-1|,|p-2| " + fmt(lower) +
              " <= " + fmt(kEuclidLowerTol)};
}

Outcome gamma_and_trace() {
  double worst = 0.0, min_d = 1e300;
  for (int i = 0; i < kSeeds; ++i) {
    const Scene s = criterion_scene(i);
    worst = std::max(worst, gamma_identity_residuals(s.metric).max());
    min_d = std::min(min_d, trace_denominator(s.metric, s.lame));
  }
  std::mt19937_64 rng(kSceneSeedBase + 300);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  JetContext c(3, 2, {1.0, 0.0});
  double min_ratio = 1e300;
  for (int t = 0; t < 2000; ++t) {
    const int n = 2 + t % 5;
    const double mu = 1e-3 + 10.0 * u(rng);
    const double lambda = -mu + (t % 5 == 0 ? 0.0 : 10.0 * u(rng));
    const double D = trace_coefficient(n, Jet::constant(c, lambda), Jet::constant(c, mu)).constant_term().real();
    min_ratio = std::min(min_ratio, D / mu);
  }
  const double eleven = trace_coefficient(3, Jet::constant(c, 1.0), Jet::constant(c, 1.0)).constant_term().real();
  const bool pass = worst <= kGammaTol && min_d > 0.0 && min_ratio > 0.0 && eleven == 11.0;
  return {pass, "Gamma residual " + fmt(worst) + " <= " + fmt(kGammaTol) + ", min trace coefficient " + fmt(min_d) +
                    " > 0, n=3 unit coefficient " + fmt(eleven)};
}

Outcome hand_scene() {
  JetContext c(2, 6, {1.0});
  const LameJet lame(Jet::constant(c, 1.0), Jet::constant(c, 1.0));
  const MetricJet metric(c, {1.0 + Jet::variable(c, 1)});
  const ObservedSymbols obs = observe(metric, lame, 1);
  const SymbolLevels flat = dtn_symbols(build_context(MetricJet(c, {Jet::constant(c, 1.0)}), lame), 0);
  const Jet R = obs.p.level(0)(1, 1) - restrict_to_boundary(flat.level(0)(1, 1));
  const Jet xi = Jet::covector(c, 0);
  // Q = -R (lambda + 3 mu)^2 |xi'|^2 / mu^2 with |xi'|^2 = xi_1^2 on the boundary.
  const double k = extract_quadratic(-16.0 * R * xi * xi).k(0, 0).constant_term().real();
  const double h = k / 4.0;  // k g_11 / ((n-1)(2 lambda + 5 mu) - (lambda + 2 mu))
  const RecoveredBoundaryData rec = recover_full(obs, 1);
  const double d = rec.normal_derivs.at(0)(0, 0).constant_term().real();
  const double err = std::max({std::abs(d + 1.0), std::abs(k + 4.0) / 4.0, std::abs(h + 1.0)});
  return {err <= kHandTol, "d_n g^11 = " + fmt(d) + ", k = " + fmt(k) + ", h = " + fmt(h) +
                               " (relative error " + fmt(err) + " <= " + fmt(kHandTol) + ")"};
}

struct RoundTrips {
  double error = 0.0, quadraticity = 0.0, imaginary = 0.0;
  std::string failure;
};

const RoundTrips& round_trips() {
  static const RoundTrips r = [] {
    RoundTrips out;
    for (int i = 0; i < kSeeds; ++i) {
      const Scene s = random_scene(2 + i % 2, 6, kRoundTripSeedBase + static_cast<std::uint64_t>(i), 4);
      try {
        const RoundTripResult rt = roundtrip(s.metric, s.lame, 3);
        out.error = std::max(out.error, rt.max_error());
        out.quadraticity = std::max(out.quadraticity, rt.recovered.quadraticity());
        out.imaginary = std::max(out.imaginary, rt.recovered.imaginary());
      } catch (const std::exception& e) {
        out.failure = "seed " + std::to_string(i) + ": " + e.what();
        out.error = 1e300;
      }
    }
    return out;
  }();
  return r;
}

Outcome full_round_trip() {
  const auto& r = round_trips();
  if (!r.failure.empty()) return {false, r.failure};
  return {r.error <= kRoundTripTol, "max relative error " + fmt(r.error) + " <= " + fmt(kRoundTripTol)};
}

Outcome quadraticity() {
  const auto& r = round_trips();
  if (!r.failure.empty()) return {false, r.failure};
  return {r.quadraticity <= kQuadraticityTol && r.imaginary <= kQuadraticityTol,
          "max non-quadratic coefficient " + fmt(r.quadraticity) + ", imaginary " + fmt(r.imaginary) +
              " <= " + fmt(kQuadraticityTol)};
}

Outcome cli() {
  using testing_support::quote;
  using testing_support::run;
  using testing_support::slurp;
  const std::string exe = ELASTIC_DTN_CLI;
  const std::string fixtures = ELASTIC_DTN_FIXTURES;
  testing_support::ScratchDir dir("acceptance_cli");
  auto fixture = [&](const std::string& name) { return quote(fixtures + "/" + name); };
  auto path = [&](const std::string& name) { return quote((dir / name).string()); };
  std::vector<std::string> problems;

  // Determinism.
  const std::vector<std::string> commands = {
      "forward --config " + fixture("single_mode.json"), "roundtrip --seed 3 --dim 3 --cross-check",
      "roundtrip --config " + fixture("euclidean3.json"), "verify --seed 7 --dim 3"};
  for (const auto& cmd : commands) {
    const int a = run(exe, cmd + " --out " + path("a.json"), dir).exit_code;
    const int b = run(exe, cmd + " --out " + path("b.json"), dir).exit_code;
    if (a != 0 || b != 0 || slurp(dir / "a.json") != slurp(dir / "b.json")) problems.push_back("nondeterministic: " + cmd);
  }
  run(exe, "forward --config " + fixture("single_mode.json") + " --out " + path("s.json"), dir);
  run(exe, "recover --symbols " + path("s.json") + " --out " + path("r1.json"), dir);
  run(exe, "recover --symbols " + path("s.json") + " --out " + path("r2.json"), dir);
  if (slurp(dir / "r1.json") != slurp(dir / "r2.json")) problems.push_back("nondeterministic: recover");

  // Lossless re-parse: file -> in-memory -> file reproduces every byte of the data.
  try {
    json s = json::parse(slurp(dir / "s.json"));
    json again = io::symbols_to_json(io::symbols_from_json(s).p, io::symbols_from_json(s).lame);
    for (const char* k : {"command", "inputs"}) s.erase(k);
    if (io::dump(again) != io::dump(s)) problems.push_back("symbols.json does not re-parse losslessly");
    json r = json::parse(slurp(dir / "r1.json"));
    json again_r = io::recovered_to_json(io::recovered_from_json(r));
    for (const char* k : {"command", "inputs"}) r.erase(k);
    if (io::dump(again_r) != io::dump(r)) problems.push_back("recovered.json does not re-parse losslessly");
    for (const auto& cmd : commands) {
      run(exe, cmd + " --out " + path("x.json"), dir);
      const std::string text = slurp(dir / "x.json");
      if (io::dump(json::parse(text)) != text) problems.push_back("re-serialization differs: " + cmd);
    }
  } catch (const std::exception& e) {
    problems.push_back(std::string("re-parse failed: ") + e.what());
  }

  // Exit-code contract on forced failures.
  json good = json::parse(slurp(dir / "s.json"));
  json missing = good;
  missing["levels"].erase("0");
  missing["accuracy"].erase("0");
  io::write_file_atomic((dir / "missing.json").string(), io::dump(missing));
  json cubic = good;
  cubic["levels"]["0"][1][1]["0 0 3"] = json::array({1e-3, 0.0});
  io::write_file_atomic((dir / "cubic.json").string(), io::dump(cubic));
  const std::vector<std::pair<std::string, int>> expect = {
      {"verify --config " + fixture("euclidean.json"), 0},
      {"roundtrip --seed 11 --tol 1e-300", 1},
      {"forward --config " + fixture("bad_key.json"), 2},
      {"verify --config " + fixture("negative_mu.json"), 2},
      {"recover --order 1 --symbols " + path("missing.json"), 2},
      {"forward --config " + fixture("shallow.json"), 3},
      {"recover --order 1 --symbols " + path("cubic.json"), 4}};
  for (const auto& [cmd, code] : expect) {
    const int got = run(exe, cmd + " --out " + path("y.json"), dir).exit_code;
    if (got != code) problems.push_back(cmd + " exited " + std::to_string(got) + ", expected " + std::to_string(code));
  }
  if (problems.empty())
    return {true, std::to_string(commands.size() + 1) + " commands byte-identical, re-parse lossless, " +
                      std::to_string(expect.size()) + " exit codes as contracted"};
  std::string d;
  for (const auto& p : problems) d += (d.empty() ? "" : "; ") + p;
  return {false, d};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"operator identity", operator_identity},
      {"plane-wave symbol consistency", plane_wave},
      {"Riccati identity", riccati},
      {"nilpotency and lin_inverse", algebra},
      {"Euclidean degeneration", euclidean},
      {"Gamma identities and trace positivity", gamma_and_trace},
      {"hand single-mode scene", hand_scene},
      {"full round trip, M = 3", full_round_trip},
      {"quadraticity diagnostics", quadraticity},
      {"CLI determinism, schema and exit codes", cli}};
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::printf("%s  criterion %zu (%s): %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first.c_str(),
                o.detail.c_str());
    failures += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failures, criteria.size());
  return failures == 0 ? 0 : 1;
}
