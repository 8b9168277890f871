#include "qreduce/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "qreduce/dcp_solver.hpp"
#include "qreduce/geometry.hpp"
#include "qreduce/lattice.hpp"
#include "qreduce/matching.hpp"
#include "qreduce/svp_reduction.hpp"

namespace qreduce::harness {

using nlohmann::json;

namespace {

template <typename T>
T param(const ExperimentConfig& cfg, const std::string& key, T fallback) {
  const auto it = cfg.params.find(key);
  if (it == cfg.params.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const json::exception&) {
    throw UsageError("parameter '" + key + "' has the wrong type");
  }
}

std::uint64_t trial_seed(const ExperimentConfig& cfg, std::string_view name, std::uint64_t i) {
  return Rng::stream(cfg.seed, name, i).fork_seed();
}

void write_csv(const std::string& path, const std::string& header,
               const std::vector<std::string>& rows) {
  if (path.empty()) return;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << header << '\n';
  for (const auto& r : rows) out << r << '\n';
}

std::uint64_t circular_distance(std::uint64_t a, double x, std::uint64_t n) {
  const double d = std::fabs(std::fmod(static_cast<double>(a) - x + 1.5 * n, double(n)) - 0.5 * n);
  return static_cast<std::uint64_t>(std::llround(d));
}

}  // namespace

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  ExperimentConfig cfg;
  for (const auto& [key, value] : j.items()) {
    if (key == "seed") cfg.seed = value.get<std::uint64_t>();
    else if (key == "trials") cfg.trials = value.get<std::uint64_t>();
    else if (key == "threads") cfg.threads = value.get<int>();
    else if (key == "command") cfg.command = value.get<std::string>();
    else if (key == "params") cfg.params.update(value);
    else cfg.params[key] = value;
  }
  return cfg;
}

SubsetSumOracle parse_oracle(const std::string& spec, std::uint64_t seed) {
  if (spec == "exhaustive") return SubsetSumOracle(Strategy::exhaustive);
  if (spec == "mitm") return SubsetSumOracle(Strategy::meet_in_middle);
  if (spec.rfind("unreliable:", 0) == 0) {
    double p = 0;
    try {
      p = std::stod(spec.substr(11));
    } catch (const std::exception&) {
      throw UsageError("bad oracle spec " + spec);
    }
    if (!(p > 0 && p <= 1)) throw UsageError("unreliable fraction must lie in (0, 1]");
    return wrap_unreliable(SubsetSumOracle(), p, seed);
  }
  throw UsageError("unknown oracle " + spec);
}

std::vector<json> run_trials(std::uint64_t count, int threads,
                             const std::function<json(std::uint64_t)>& fn) {
  std::vector<json> out(count);
  const auto workers = static_cast<std::uint64_t>(std::max(1, threads));
  if (workers == 1 || count < 2) {
    for (std::uint64_t i = 0; i < count; ++i) out[i] = fn(i);
    return out;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  for (std::uint64_t w = 0; w < std::min(workers, count); ++w)
    pool.emplace_back([&] {
      for (std::uint64_t i; (i = next++) < count;) {
        try {
          out[i] = fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::vector<std::uint64_t> verify_dcp_candidates(DcpWorld& world, const ModularOracle& oracle,
                                                 const std::vector<std::uint64_t>& candidates,
                                                 std::uint64_t seed) {
  const std::uint64_t n = world.modulus();
  SolverConfig cfg;
  cfg.k_max = static_cast<int>(std::min<std::uint64_t>(16, n - 1));
  Rng rng = Rng::stream(seed, "verify");
  PhaseEstimate e;
  try {
    e = routine_r3(world, oracle, 1, cfg, rng);
  } catch (const EstimationFailed&) {
    return {};
  }
  std::vector<std::uint64_t> ok;
  for (std::uint64_t d : candidates)
    if (circular_distance(e.q_prime * d % n, e.x, n) <= n / 16) ok.push_back(d);
  return ok;
}

Report cmd_dcp(const ExperimentConfig& cfg) {
  const auto n = param<std::uint64_t>(cfg, "N", 4096);
  if (n < 2) throw UsageError("N must be at least 2");
  const auto fixed_d = cfg.params.contains("d") && !cfg.params["d"].is_null()
                           ? std::optional(param<std::uint64_t>(cfg, "d", 0))
                           : std::nullopt;
  if (fixed_d && *fixed_d >= n) throw UsageError("d must lie in [0, N)");
  const double bad =
      param<double>(cfg, "bad_prob", n > 2 ? 1.0 / std::log2(static_cast<double>(n)) : 0.0);
  if (!(bad >= 0 && bad < 1)) throw UsageError("bad_prob must lie in [0, 1)");
  const double min_success = param<double>(cfg, "min_success", 0.0);
  const bool verify = param<bool>(cfg, "verify", true);
  const std::string oracle_spec = param<std::string>(cfg, "oracle", "exhaustive");
  SolverConfig scfg;
  scfg.r = param<int>(cfg, "r", 0);
  scfg.window = param<std::uint64_t>(cfg, "window", 0);
  scfg.samples_per_arm = param<std::uint64_t>(cfg, "samples_per_arm", scfg.samples_per_arm);
  scfg.k_max = param<int>(cfg, "k_max", scfg.k_max);
  const ModularOracle oracle = parse_oracle(oracle_spec, cfg.seed).for_modulus(n);

  const auto trials = run_trials(cfg.trials, cfg.threads, [&](std::uint64_t i) {
    const std::uint64_t seed = trial_seed(cfg, "dcp_trial", i);
    const std::uint64_t d = fixed_d ? *fixed_d : Rng::stream(seed, "harness_d").below(n);
    json t{{"trial", i}, {"d", d}};
    if (n == 2) {
      // Both residues are candidates; the planted one is among them.
      t["candidates"] = {0, 1};
      t["found"] = true;
      return t;
    }
    DcpWorld world = make_world(n, d, bad, seed);
    SolverConfig c = scfg;
    c.seed = seed;
    const DcpSolution sol = solve_dcp(world, oracle, c);
    t["solution"] = to_json(sol);
    t["found"] = std::find(sol.candidates.begin(), sol.candidates.end(), d) != sol.candidates.end();
    t["world"] = {{"registers", world.stats().registers},
                  {"bad_registers", world.stats().bad_registers},
                  {"routine_calls", world.stats().routine_calls},
                  {"successes", world.stats().successes}};
    if (verify && !sol.candidates.empty() && sol.candidates.size() <= 8)
      t["verified_candidates"] = verify_dcp_candidates(world, oracle, sol.candidates, seed);
    return t;
  });
  std::uint64_t hits = 0;
  for (const auto& t : trials) hits += t["found"].get<bool>();
  const double rate = cfg.trials ? double(hits) / double(cfg.trials) : 0.0;
  Report r;
  r.body = {{"N", n},
            {"bad_prob", bad},
            {"oracle", oracle_spec},
            {"success_rate", rate},
            {"min_success", min_success},
            {"trials", trials}};
  r.criterion_met = rate >= min_success;
  return r;
}

namespace {

LatticeInstance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read instance " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw UsageError(std::string("instance is not valid JSON: ") + e.what());
  }
  if (j.contains("instance")) j = j["instance"];
  return lattice_from_json(j);
}

}  // namespace

Report cmd_gen_lattice(const ExperimentConfig& cfg) {
  const int n = param<int>(cfg, "n", 2);
  const Rational gap = rational_from_string(param<std::string>(cfg, "gap", "16"));
  const auto budget = param<std::int64_t>(cfg, "coeff_budget", 1 << 20);
  const LatticeInstance inst = gen_unique_lattice(n, gap, budget, cfg.seed);
  Report r;
  r.body = {{"instance", to_json(inst)}, {"certified_gap", rational_to_string(inst.gap)}};
  const std::string out = param<std::string>(cfg, "instance_out", "");
  if (!out.empty()) {
    std::ofstream f(out);
    if (!f) throw IoError("cannot write " + out);
    f << to_json(inst).dump(2) << '\n';
  }
  return r;
}

Report cmd_svp(const ExperimentConfig& cfg) {
  const std::string path = param<std::string>(cfg, "instance", "");
  std::optional<LatticeInstance> loaded;
  if (!path.empty()) loaded = load_instance(path);
  const int n = param<int>(cfg, "n", 2);
  const Rational gap = rational_from_string(param<std::string>(cfg, "gap", "16"));
  const std::string mode = param<std::string>(cfg, "mode", "cube");
  const std::string sampler = param<std::string>(cfg, "sampler", "exhaustive");
  if (mode != "cube" && mode != "ball") throw UsageError("mode must be cube or ball");
  if (sampler != "exhaustive" && sampler != "planted")
    throw UsageError("sampler must be exhaustive or planted");

  SvpConfig base;
  base.mode = mode == "cube" ? SamplingMode::cube : SamplingMode::ball;
  base.sampler = sampler == "exhaustive" ? SamplerKind::exhaustive : SamplerKind::planted;
  base.p = param<std::int64_t>(cfg, "p", 0);
  base.M = param<std::int64_t>(cfg, "M", 0);
  base.cell_factor = param<double>(
      cfg, "cell_factor", base.mode == SamplingMode::cube ? 16.0 : 4.0 * std::sqrt(double(n)));
  base.grid_L = param<std::int64_t>(cfg, "grid_L", 16);
  base.desk_override = param<bool>(cfg, "desk_override", false);
  base.stop_at_first = param<bool>(cfg, "stop_at_first", true);
  base.dcp.window = param<std::uint64_t>(cfg, "window", 16);
  base.dcp.samples_per_arm = param<std::uint64_t>(cfg, "samples_per_arm", 512);
  const std::string oracle_spec = param<std::string>(cfg, "oracle", "exhaustive");
  base.oracle = parse_oracle(oracle_spec, cfg.seed);
  const double min_success = param<double>(cfg, "min_success", 0.0);
  const bool cells = param<bool>(cfg, "cells", true);
  if (base.p && !is_prime(base.p)) throw UsageError("p must be prime");

  const auto trials = run_trials(cfg.trials, cfg.threads, [&](std::uint64_t i) {
    const std::uint64_t seed = trial_seed(cfg, "svp_trial", i);
    const LatticeInstance inst = loaded ? *loaded : gen_unique_lattice(n, gap, 1 << 20, seed);
    SvpConfig c = base;
    c.seed = seed;
    const SvpReport rep = solve_unique_svp(inst, c);
    json t = to_json(rep);
    if (!cells) t.erase("cells");
    t["trial"] = i;
    t["instance"] = to_json(inst);
    std::uint64_t wrong = 0;
    for (const auto& cell : rep.cells)
      for (const auto& cand : cell.candidates)
        if (cand.verified && (!coefficients_in_basis(inst.basis, cand.vector) ||
                              cand.norm2 > rep.b1_norm2))
          ++wrong;
    t["wrong_emitted"] = wrong;
    bool planted = false;
    if (rep.winner && inst.planted_u) {
      const IntVector u = lattice_vector(inst.basis, *inst.planted_u);
      planted = rep.winner->vector == u || rep.winner->vector == IntVector(-u);
    }
    t["winner_is_planted"] = planted;
    return t;
  });
  std::uint64_t hits = 0, wrong = 0;
  for (const auto& t : trials) {
    hits += t["winner_is_planted"].get<bool>();
    wrong += t["wrong_emitted"].get<std::uint64_t>();
  }
  const double rate = cfg.trials ? double(hits) / double(cfg.trials) : 0.0;
  Report r;
  r.body = {{"mode", mode},
            {"sampler", sampler},
            {"oracle", oracle_spec},
            {"success_rate", rate},
            {"wrong_emitted", wrong},
            {"min_success", min_success},
            {"trials", trials}};
  r.criterion_met = rate >= min_success && wrong == 0;
  return r;
}

Report cmd_subsetsum_stats(const ExperimentConfig& cfg) {
  const auto batteries =
      param<std::vector<std::string>>(cfg, "batteries", {"legal", "equivalence"});
  const auto moduli = param<std::vector<std::uint64_t>>(cfg, "moduli", {256, 1024, 4096});
  const auto samples = param<std::uint64_t>(cfg, "samples", 1000);
  Report r;
  r.body = json::object();
  std::vector<std::string> rows;
  for (const auto& b : batteries) {
    if (b == "legal") {
      json table = json::array();
      for (std::uint64_t n : moduli) {
        const int base = ceil_log2(n);
        for (int r_len = base + 1; r_len <= base + 6; ++r_len) {
          const auto f = estimate_legal_fraction(r_len, n, samples,
                                                 Rng::stream(cfg.seed, "legal", n * 64 + r_len)());
          table.push_back({{"N", n}, {"r", r_len}, {"failure_fraction", f.fraction},
                           {"half_width", f.half_width}});
          std::ostringstream row;
          row << n << ',' << r_len << ',' << f.fraction << ',' << f.half_width;
          rows.push_back(row.str());
          if (r_len == base + 4 && f.fraction > 0.5) r.criterion_met = false;
        }
      }
      r.body["legal"] = table;
    } else if (b == "equivalence") {
      std::uint64_t mismatches = 0, solved = 0;
      for (std::uint64_t n : moduli) {
        Rng rng = Rng::stream(cfg.seed, "equivalence", n);
        const int len = ceil_log2(n) + 4;
        const SubsetSumOracle ex(Strategy::exhaustive), mitm(Strategy::meet_in_middle);
        for (std::uint64_t i = 0; i < samples; ++i) {
          std::vector<std::uint64_t> a(len);
          for (auto& x : a) x = rng.below(n);
          const std::uint64_t t = rng.below(n);
          const auto x = solve(ex, a, t, n);
          solved += x.has_value();
          mismatches += x != solve(mitm, a, t, n);
        }
      }
      r.body["equivalence"] = {{"instances", samples * moduli.size()},
                               {"solved", solved},
                               {"mismatches", mismatches}};
      if (mismatches) r.criterion_met = false;
    } else {
      throw UsageError("unknown battery " + b);
    }
  }
  write_csv(param<std::string>(cfg, "csv", ""), "N,r,failure_fraction,half_width", rows);
  return r;
}

Report cmd_matching_stats(const ExperimentConfig& cfg) {
  const auto batteries =
      param<std::vector<std::string>>(cfg, "batteries", {"involution", "pair_density"});
  Report r;
  r.body = json::object();
  for (const auto& b : batteries) {
    if (b == "involution") {
      const auto n = param<std::uint64_t>(cfg, "N", 4096);
      const auto q_max = param<std::uint64_t>(cfg, "q_max", 64);
      std::uint64_t checked = 0, failures = 0;
      for (int kind : {1, 2})
        for (std::uint64_t q = 1; q <= q_max; ++q) {
          const MatchingDesc f{kind, q, n};
          for (std::uint64_t t = 0; t < n; ++t) {
            const auto ft = eval(f, t);
            if (!ft) continue;
            ++checked;
            const auto back = eval(f, *ft);
            const std::uint64_t gap = *ft > t ? *ft - t : t - *ft;
            if (!back || *back != t || gap != q) ++failures;
          }
        }
      r.body["involution"] = {{"N", n}, {"q_max", q_max}, {"checked", checked},
                              {"failures", failures}};
      if (failures) r.criterion_met = false;
    } else if (b == "pair_density") {
      const auto n = param<std::uint64_t>(cfg, "density_N", 1024);
      const auto sets = param<std::uint64_t>(cfg, "sets", 100);
      json table = json::array();
      for (std::uint64_t s : {2, 4, 8}) {
        Rng rng = Rng::stream(cfg.seed, "pair_density", s);
        std::uint64_t failures = 0, worst = n;
        for (std::uint64_t i = 0; i < sets; ++i) {
          TargetSet t(n);
          while (t.count() * s < n) t.set(rng.below(n));
          const std::uint64_t q = 1 + rng.below((n - 1) / (8 * s));
          const auto d = check_pair_density(t, q, s);
          worst = std::min(worst, d.count);
          if (double(d.count) < double(n) / double(32 * s * s * s)) ++failures;
        }
        table.push_back({{"s", s}, {"bound", double(n) / double(32 * s * s * s)},
                         {"min_count", worst}, {"failures", failures}});
        if (failures) r.criterion_met = false;
      }
      r.body["pair_density"] = table;
    } else {
      throw UsageError("unknown battery " + b);
    }
  }
  return r;
}

Report cmd_geometry_check(const ExperimentConfig& cfg) {
  const auto radii = param<std::vector<double>>(cfg, "radii", {2, 4, 8});
  const auto L = param<std::int64_t>(cfg, "L", 8);
  const double tol = param<double>(cfg, "tolerance", 0.02);
  const std::vector<std::vector<std::int64_t>> shifts{{1, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 3}};
  Report r;
  json lens = json::array();
  std::vector<std::string> rows;
  double worst = 0;
  for (double radius : radii)
    for (const auto& s : shifts) {
      const double dist = std::hypot(double(s[0]), double(s[1]));
      const double grid = grid_intersection_ratio({2, radius, L, {}}, s);
      const double exact = lens_ratio(radius, dist);
      worst = std::max(worst, std::fabs(grid - exact));
      lens.push_back({{"R", radius}, {"shift", s}, {"grid", grid}, {"lens", exact}});
      rows.push_back(intersection_csv_row(2, radius, L, dist, grid, exact));
    }
  json volume = json::array();
  std::uint64_t violations = 0;
  for (int n = 1; n <= 3; ++n)
    for (double radius : {2.0, 3.0, 5.0})
      for (std::int64_t l : {2, 4, 8}) {
        if (radius * l < std::pow(n, 1.5)) continue;
        if (n == 3 && radius * l > 24) continue;
        const double dev = grid_volume_deviation({n, radius, l, {}});
        const double bound = grid_volume_tolerance(n, radius, l);
        violations += std::fabs(dev) >= bound;
        volume.push_back({{"n", n}, {"R", radius}, {"L", l}, {"deviation", dev}, {"tolerance", bound}});
      }
  r.body = {{"lens", lens},
            {"max_lens_error", worst},
            {"tolerance", tol},
            {"volume", volume},
            {"volume_violations", violations}};
  r.criterion_met = worst <= tol && violations == 0;
  write_csv(param<std::string>(cfg, "csv", ""), "n,R,L,distance,ratio,bound", rows);
  return r;
}

Report cmd_prepare_state(const ExperimentConfig& cfg) {
  BallGridSpec spec{param<int>(cfg, "n", 2), param<double>(cfg, "R", 3.0),
                    param<std::int64_t>(cfg, "L", 8), {}};
  PrepareOptions opt;
  const std::string method = param<std::string>(cfg, "method", "monte_carlo");
  if (method != "monte_carlo" && method != "exact") throw UsageError("method must be monte_carlo or exact");
  opt.method = method == "exact" ? VolumeMethod::exact : VolumeMethod::monte_carlo;
  opt.target_accuracy = param<double>(cfg, "target_accuracy", opt.target_accuracy);
  opt.seed = cfg.seed;
  const double threshold = param<double>(cfg, "max_distance", 0.01);
  const AmplitudeTree t = grover_rudolph_prepare(spec, opt);
  Report r;
  r.body = {{"n", t.n},
            {"R", spec.radius},
            {"L", t.L},
            {"m", t.m},
            {"K", t.K},
            {"first_split", {t.first_split[0], t.first_split[1]}},
            {"nodes", t.nodes},
            {"estimated_nodes", t.estimated_nodes},
            {"max_split_error", t.max_split_error},
            {"certificate", t.certificate},
            {"reference_distance",
             t.reference_distance ? json(*t.reference_distance) : json(nullptr)}};
  r.criterion_met = t.first_split[0] == 0.5 && t.first_split[1] == 0.5 &&
                    t.certificate <= threshold;
  return r;
}

Report cmd_selftest(const ExperimentConfig& cfg) {
  json checks = json::object();
  bool ok = true;
  auto record = [&](const std::string& name, bool pass) {
    checks[name] = pass;
    ok = ok && pass;
  };
  bool roundtrip = true;
  for (std::int64_t x = -3; x <= 3; ++x)
    for (std::int64_t y = -3; y <= 3; ++y)
      roundtrip = roundtrip && decode_difference(encode_difference({x, y}, 4), 4, 2) == Coeffs{x, y};
  record("encode_roundtrip", roundtrip);

  const LatticeInstance inst = gen_unique_lattice(2, Rational(8), 1 << 20, cfg.seed);
  record("lll_reduced", is_lll_reduced(reduce_instance(inst).basis));

  ExperimentConfig dcp = cfg;
  dcp.trials = 1;
  dcp.params = {{"N", 256}, {"bad_prob", 0.0}, {"verify", false}};
  record("dcp_small", cmd_dcp(dcp).body["success_rate"].get<double>() == 1.0);

  PrepareOptions opt;
  opt.method = VolumeMethod::exact;
  record("state_preparation", *grover_rudolph_prepare({2, 2.0, 4, {}}, opt).reference_distance < 1e-6);
  Report r;
  r.body = {{"checks", checks}};
  r.criterion_met = ok;
  return r;
}

Report run(const ExperimentConfig& cfg) {
  const auto start = std::chrono::steady_clock::now();
  Report r;
  if (cfg.command == "gen-lattice") r = cmd_gen_lattice(cfg);
  else if (cfg.command == "solve-svp") r = cmd_svp(cfg);
  else if (cfg.command == "solve-dcp") r = cmd_dcp(cfg);
  else if (cfg.command == "subsetsum-stats") r = cmd_subsetsum_stats(cfg);
  else if (cfg.command == "matching-stats") r = cmd_matching_stats(cfg);
  else if (cfg.command == "geometry-check") r = cmd_geometry_check(cfg);
  else if (cfg.command == "prepare-state") r = cmd_prepare_state(cfg);
  else if (cfg.command == "selftest") r = cmd_selftest(cfg);
  else throw UsageError("unknown command " + cfg.command);

  json report = {{"command", cfg.command},
                 {"version", QREDUCE_VERSION},
                 {"config",
                  {{"seed", cfg.seed}, {"trials", cfg.trials}, {"params", cfg.params}}},
                 {"seed", cfg.seed},
                 {"criterion_met", r.criterion_met},
                 {"result", r.body}};
  if (!cfg.omit_timing)
    report["wall_time_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  r.body = std::move(report);
  return r;
}

}  // namespace qreduce::harness
