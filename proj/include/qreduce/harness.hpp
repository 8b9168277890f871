#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "qreduce/dcp_world.hpp"
#include "qreduce/subsetsum.hpp"

namespace qreduce::harness {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ExperimentConfig {
  std::string command;
  std::uint64_t seed = 0;
  std::uint64_t trials = 1;
  int threads = 1;
  bool omit_timing = false;
  nlohmann::json params = nlohmann::json::object();
};

struct Report {
  nlohmann::json body;
  bool criterion_met = true;
};

inline const std::vector<std::string>& commands() {
  static const std::vector<std::string> names{
      "gen-lattice",    "solve-svp",     "solve-dcp",     "subsetsum-stats",
      "matching-stats", "geometry-check", "prepare-state", "selftest"};
  return names;
}

/// Reads {"seed", "trials", "threads", "params"}; unknown top-level keys are
/// treated as params.
ExperimentConfig load_config(const std::string& path);

/// exhaustive | mitm | unreliable:p (thinning over exhaustive)
SubsetSumOracle parse_oracle(const std::string& spec, std::uint64_t seed);

/// Runs fn(i) for i < count on up to `threads` workers; output order is by i.
std::vector<nlohmann::json> run_trials(std::uint64_t count, int threads,
                                       const std::function<nlohmann::json(std::uint64_t)>& fn);

/// Candidates whose circular distance to a fresh q = 1 phase estimate is at
/// most N/16.
std::vector<std::uint64_t> verify_dcp_candidates(DcpWorld& world, const ModularOracle& oracle,
                                                 const std::vector<std::uint64_t>& candidates,
                                                 std::uint64_t seed);

Report run(const ExperimentConfig& cfg);

Report cmd_gen_lattice(const ExperimentConfig& cfg);
Report cmd_svp(const ExperimentConfig& cfg);
Report cmd_dcp(const ExperimentConfig& cfg);
Report cmd_subsetsum_stats(const ExperimentConfig& cfg);
Report cmd_matching_stats(const ExperimentConfig& cfg);
Report cmd_geometry_check(const ExperimentConfig& cfg);
Report cmd_prepare_state(const ExperimentConfig& cfg);
Report cmd_selftest(const ExperimentConfig& cfg);

}  // namespace qreduce::harness
