#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include <json.hpp>

#include "qreduce/dcp_world.hpp"
#include "qreduce/matching.hpp"
#include "qreduce/rng.hpp"
#include "qreduce/subsetsum.hpp"

namespace qreduce {

struct EstimationFailed : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SolverConfig {
  int r = 0;                           // 0: ceil(log2 N) + 4
  std::uint64_t samples_per_arm = 512;
  int k_max = 16;
  double delta = 1e-3;                 // Hoeffding failure probability per arm
  std::uint64_t window = 0;            // 0: N / 64
  std::uint64_t attempt_factor = 64;   // attempts per arm = samples_per_arm * attempt_factor
  bool screen = true;
  int screen_probes = 8;
  double screen_fraction = 0.125;
  std::uint64_t seed = 0;
};

struct PhaseEstimate {
  std::uint64_t q_prime = 0;
  double x = 0.0;  // in [0, modulus)
  std::uint64_t modulus = 0;
  double half_width = 0.0;
  std::uint64_t successes = 0;  // per arm, the smaller of the two
  std::uint64_t attempts = 0;
  MatchingDesc matching;
};

/// One TwoPointRoutine call on r fresh registers, then a qubit measurement.
/// R1 measures in X (Pr[1] = 1/2 - cos/2), R2 in Y (Pr[1] = 1/2 + sin/2).
std::optional<int> routine_r1(DcpWorld& world, const ModularOracle& oracle,
                              const MatchingDesc& f, int r);
std::optional<int> routine_r2(DcpWorld& world, const ModularOracle& oracle,
                              const MatchingDesc& f, int r);

/// phi mod 2pi from x ~ sin(phi), y ~ cos(phi).
double estimate_angle(double x, double y);

/// Half-width of the angle error (radians) for contrast rho after n samples per arm.
double hoeffding_angle_bound(std::uint64_t n, double delta, double rho);

PhaseEstimate routine_r3(DcpWorld& world, const ModularOracle& oracle, std::uint64_t q,
                         const SolverConfig& cfg, Rng& rng);

/// Lifts x_prev (mod q_prev N) to the scale q_next and snaps it to the
/// representative of x (mod N) nearest to it. Result lies in [0, q_next N).
double combine_estimates(double x_prev, std::uint64_t q_prev, double x, std::uint64_t q_next,
                         std::uint64_t modulus);

std::uint64_t round_estimate(double x, std::uint64_t q, std::uint64_t modulus);

/// All d in [0, N) with q_hat d = d_prime (mod N).
std::vector<std::uint64_t> solve_linear_congruence(std::uint64_t q_hat, std::uint64_t d_prime,
                                                   std::uint64_t modulus);

struct StageRecord {
  std::uint64_t q_i = 0;
  std::uint64_t q_prime = 0;
  double x = 0.0;
  double x_combined = 0.0;
  double half_width = 0.0;
  std::uint64_t successes = 0;
  std::uint64_t samples = 0;
};

struct DcpSolution {
  std::vector<std::uint64_t> candidates;
  std::uint64_t q_hat = 0;
  std::uint64_t d_prime = 0;
  std::vector<StageRecord> stages;
  std::optional<std::string> error;
};

DcpSolution solve_dcp(DcpWorld& world, const ModularOracle& oracle, const SolverConfig& cfg);

nlohmann::json to_json(const DcpSolution& s);

}  // namespace qreduce
