// elastic-dtn: forward symbol computation, boundary recovery, round trips and
// invariant checks on jet scenes.
//
// Exit codes: 0 pass, 1 invariant failure, 2 input error, 3 accuracy
// exhaustion, 4 consistency-gate failure.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "elastic_dtn/checks.hpp"
#include "elastic_dtn/io.hpp"

namespace {

using namespace elastic_dtn;
using io::json;

enum Exit : int { kPass = 0, kInvariant = 1, kInput = 2, kAccuracy = 3, kConsistency = 4 };

struct Options {
  std::string config;
  std::string symbols;
  std::string out;
  std::optional<int> order;
  std::optional<double> tol;
  std::optional<std::uint64_t> seed;
  int dim = 2;
  int truncation = 6;
  bool cross_check = false;
  bool timing = false;
};

struct Loaded {
  MetricJet metric;
  LameJet lame;
  json echo;
  std::optional<int> order;
  std::optional<double> tolerance;
  std::uint64_t seed = 0;
};

Loaded load_scene(const Options& o) {
  if (!o.config.empty()) {
    json j = io::read_json_file(o.config);
    io::SceneConfig cfg = io::scene_from_json(j);
    json echo = {{"config", o.config}};
    return Loaded{cfg.metric, cfg.lame, echo, cfg.order, cfg.tolerance, o.seed.value_or(cfg.seed.value_or(0))};
  }
  if (!o.seed) throw InputError("either --config or --seed is required");
  const Scene s = random_scene(o.dim, o.truncation, *o.seed);
  json echo = {{"seed", *o.seed}, {"dimension", o.dim}, {"truncation_order", o.truncation}};
  return Loaded{s.metric, s.lame, echo, std::nullopt, std::nullopt, *o.seed};
}

void emit(const Options& o, const json& doc) {
  const std::string text = io::dump(doc);
  if (o.out.empty())
    std::cout << text;
  else
    io::write_file_atomic(o.out, text);
}

using Clock = std::chrono::steady_clock;

void add_timing(const Options& o, json& doc, Clock::time_point start) {
  if (o.timing) doc["wall_time_s"] = std::chrono::duration<double>(Clock::now() - start).count();
}

int cmd_forward(const Options& o) {
  const auto start = Clock::now();
  if (o.config.empty()) throw InputError("forward needs --config");
  const Loaded s = load_scene(o);
  const int M = o.order.value_or(s.order.value_or(3));
  const SymbolLevels p = dtn_symbols(build_context(s.metric, s.lame), M);
  json doc = io::symbols_to_json(p, s.lame);
  doc["command"] = "forward";
  doc["inputs"] = s.echo;
  add_timing(o, doc, start);
  emit(o, doc);
  if (!p.complete) {
    std::cerr << "accuracy exhausted: levels computed down to degree " << p.lowest_degree() << " of "
              << -M << " (truncation order " << s.metric.context().truncation_order() << " needs >= " << M + 3
              << ")\n";
    return kAccuracy;
  }
  return kPass;
}

int cmd_recover(const Options& o) {
  const auto start = Clock::now();
  if (o.symbols.empty()) throw InputError("recover needs --symbols");
  const ObservedSymbols obs = io::symbols_from_json(io::read_json_file(o.symbols));
  RecoveryOptions opt;
  opt.cross_check = o.cross_check;
  const int M = o.order.value_or(3);
  const RecoveredBoundaryData r = recover_full(obs, M, opt);
  json doc = io::recovered_to_json(r);
  doc["command"] = "recover";
  doc["inputs"] = {{"symbols", o.symbols}, {"order", M}};
  add_timing(o, doc, start);
  emit(o, doc);
  return kPass;
}

int cmd_roundtrip(const Options& o) {
  const auto start = Clock::now();
  const Loaded s = load_scene(o);
  const int M = o.order.value_or(s.order.value_or(3));
  const double tol = o.tol.value_or(s.tolerance.value_or(1e-6));
  RecoveryOptions opt;
  opt.cross_check = o.cross_check;
  const RoundTripResult r = roundtrip(s.metric, s.lame, M, opt);
  json errors = json::object();
  bool pass = true;
  for (std::size_t m = 0; m < r.errors.size(); ++m) {
    errors[std::to_string(m)] = r.errors[m];
    pass = pass && r.errors[m] <= tol;
  }
  json doc = {{"schema", io::kSchema},
              {"command", "roundtrip"},
              {"inputs", s.echo},
              {"order", M},
              {"tolerance", tol},
              {"relative_errors", errors},
              {"max_relative_error", r.max_error()},
              {"pass", pass},
              {"recovered", io::recovered_to_json(r.recovered)}};
  doc["inputs"]["order"] = M;
  add_timing(o, doc, start);
  emit(o, doc);
  if (!pass) std::cerr << "round-trip error " << r.max_error() << " exceeds tolerance " << tol << "\n";
  return pass ? kPass : kInvariant;
}

int cmd_verify(const Options& o) {
  const auto start = Clock::now();
  const Loaded s = load_scene(o);
  const auto checks = invariant_checks(s.metric, s.lame, s.seed);
  json list = json::array();
  std::vector<std::string> failing;
  for (const auto& c : checks) {
    list.push_back({{"name", c.name},
                    {"value", c.value},
                    {"bound", c.bound},
                    {"kind", c.lower_bound ? "min" : "max"},
                    {"pass", c.pass()}});
    if (!c.pass()) failing.push_back(c.name);
  }
  json doc = {{"schema", io::kSchema},
              {"command", "verify"},
              {"inputs", s.echo},
              {"checks", list},
              {"pass", failing.empty()}};
  add_timing(o, doc, start);
  emit(o, doc);
  for (const auto& f : failing) std::cerr << "check failed: " << f << "\n";
  return failing.empty() ? kPass : kInvariant;
}

template <class F>
int guarded(F&& f, bool scene_input) {
  try {
    return f();
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInput;
  } catch (const AccuracyExhausted& e) {
    std::cerr << "accuracy exhausted: " << e.what() << "\n";
    return kAccuracy;
  } catch (const ConsistencyError& e) {
    std::cerr << "consistency gate: " << e.what() << "\n";
    return kConsistency;
  } catch (const NotInvertible& e) {
    std::cerr << (scene_input ? "input error: " : "consistency gate: ") << e.what() << "\n";
    return scene_input ? kInput : kConsistency;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInput;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Elastic Dirichlet-to-Neumann symbols: forward computation and boundary metric recovery"};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* c) {
    c->add_option("--out", o.out, "Output file (stdout when omitted)");
    c->add_flag("--timing", o.timing, "Include wall time in the report");
  };
  auto scene = [&](CLI::App* c) {
    c->add_option("--config", o.config, "Scene configuration (JSON)");
    c->add_option("--seed", o.seed, "Random scene seed (used when no --config)");
    c->add_option("--dim", o.dim, "Dimension of the random scene")->check(CLI::Range(2, 6));
    c->add_option("--truncation", o.truncation, "Truncation order of the random scene")->check(CLI::Range(2, 12));
  };
  auto order = [&](CLI::App* c) { c->add_option("--order", o.order, "Recursion depth M (default 3)")->check(CLI::NonNegativeNumber); };

  CLI::App* forward = app.add_subcommand("forward", "Compute DtN symbol levels p_1 .. p_{-M}");
  forward->add_option("--config", o.config, "Scene configuration (JSON)")->required();
  order(forward);
  common(forward);

  CLI::App* recover = app.add_subcommand("recover", "Recover g^{ab} and its normal derivatives from symbols");
  recover->add_option("--symbols", o.symbols, "Symbols file written by forward")->required();
  recover->add_flag("--cross-check", o.cross_check, "Also extract forms by covector sampling");
  order(recover);
  common(recover);

  CLI::App* rt = app.add_subcommand("roundtrip", "Forward then recover; report relative errors per order");
  scene(rt);
  order(rt);
  rt->add_option("--tol", o.tol, "Acceptance tolerance on relative error (default 1e-6)");
  rt->add_flag("--cross-check", o.cross_check, "Also extract forms by covector sampling");
  common(rt);

  CLI::App* verify = app.add_subcommand("verify", "Check the structural identities on a scene");
  scene(verify);
  common(verify);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kPass : kInput;
  }

  if (*forward) return guarded([&] { return cmd_forward(o); }, true);
  if (*recover) return guarded([&] { return cmd_recover(o); }, false);
  if (*rt) return guarded([&] { return cmd_roundtrip(o); }, true);
  return guarded([&] { return cmd_verify(o); }, true);
}
