#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "qreduce/dcp_world.hpp"
#include "qreduce/harness.hpp"
#include "qreduce/svp_reduction.hpp"

using namespace qreduce;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kCriterion = 1, kUsage = 2, kInternal = 3 };

json parse_value(const std::string& text) {
  try {
    return json::parse(text);
  } catch (const json::exception&) {
    return text;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qreduce: lattice to dihedral coset reduction experiments"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path, out_path;
  std::optional<std::uint64_t> seed, trials;
  std::optional<int> threads;
  bool omit_timing = false;
  std::map<std::string, std::string> overrides;
  std::vector<std::string> sets;

  app.add_option("--config", config_path, "JSON config file");
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "number of trials");
  app.add_option("--out", out_path, "write the JSON report here instead of stdout");
  app.add_option("--threads", threads, "worker threads");
  app.add_flag("--omit-timing", omit_timing, "leave wall time out of the report");
  app.add_option("--set", sets, "extra parameter key=value (value parsed as JSON)");
  for (const char* key : {"n", "N", "p", "m", "M", "d", "r", "R", "L", "gap", "mode", "sampler",
                          "oracle", "bad-prob", "window", "instance", "csv", "method"})
    app.add_option(std::string("--") + key, overrides[key]);

  for (const auto& name : harness::commands()) app.add_subcommand(name, name);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return e.get_exit_code() == 0 ? code : kUsage;
  }

  try {
    harness::ExperimentConfig cfg;
    if (!config_path.empty()) cfg = harness::load_config(config_path);
    cfg.command = app.get_subcommands().front()->get_name();
    if (seed) cfg.seed = *seed;
    if (trials) cfg.trials = *trials;
    if (threads) cfg.threads = *threads;
    cfg.omit_timing = omit_timing;
    for (const auto& [key, value] : overrides) {
      if (value.empty()) continue;
      std::string k = key;
      if (k == "bad-prob") k = "bad_prob";
      cfg.params[k] = parse_value(value);
      if (k == "gap" || k == "instance" || k == "csv" || k == "mode" || k == "sampler" ||
          k == "oracle" || k == "method")
        cfg.params[k] = value;
    }
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw harness::UsageError("--set expects key=value");
      cfg.params[s.substr(0, eq)] = parse_value(s.substr(eq + 1));
    }

    const auto report = harness::run(cfg);
    const std::string text = report.body.dump(2);
    if (out_path.empty()) {
      std::cout << text << '\n';
    } else {
      std::ofstream out(out_path);
      if (!out) throw harness::IoError("cannot write " + out_path);
      out << text << '\n';
    }
    return report.criterion_met ? kOk : kCriterion;
  } catch (const harness::UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const harness::IoError& e) {
    std::cerr << "i/o error: " << e.what() << '\n';
    return kUsage;
  } catch (const ContractViolation& e) {
    std::cerr << "contract violation: " << e.what() << '\n';
    return kInternal;
  } catch (const StructuralViolation& e) {
    std::cerr << "structural violation: " << e.what() << '\n';
    return kInternal;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return kUsage;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}
