#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <unordered_map>
#include <vector>

#include "qreduce/matching.hpp"
#include "qreduce/qsim.hpp"
#include "qreduce/rng.hpp"
#include "qreduce/subsetsum.hpp"

namespace qreduce {

struct ContractViolation : std::logic_error {
  using std::logic_error::logic_error;
};

/// Hidden content of one coset register: good registers hold
/// |0,x> + |1,x+shift>, bad ones a basis state |bit, x>.
struct RegisterTruth {
  bool good = true;
  std::uint64_t shift = 0;
  int bit = 0;
};

class RegisterSource {
 public:
  virtual ~RegisterSource() = default;
  virtual std::uint64_t modulus() const = 0;
  virtual RegisterTruth next(Rng& rng) = 0;
};

/// DCP input distribution: shift d, each register bad with probability bad_prob.
class UniformDcpSource : public RegisterSource {
 public:
  UniformDcpSource(std::uint64_t modulus, std::uint64_t d, double bad_prob);
  std::uint64_t modulus() const override { return modulus_; }
  RegisterTruth next(Rng& rng) override;

 private:
  std::uint64_t modulus_;
  std::uint64_t d_;
  double bad_prob_;
};

/// Single-qubit residual after the to-one-qubit map: either
/// (|0> + e(phase/N)|1>)/sqrt2 or the basis state |bit>.
struct ResidualQubit {
  bool coherent = false;
  std::uint64_t phase = 0;
  int bit = 0;
};

QState residual_state(const ResidualQubit& q, std::uint64_t modulus);

struct AlphaResolution {
  bool success = false;
  Mask beta = 0;
  Mask left = 0;   // element of L in the pair
  Mask right = 0;  // element of R in the pair
  ResidualQubit residual;
};

/// Outcome of the TwoPointRoutine on basis label alpha (alpha must agree with
/// the bad bits).
AlphaResolution resolve_alpha(Mask alpha, const std::vector<RegisterTruth>& regs,
                              const BoundOracle& oracle, const MatchingDesc& f);

struct TwoPointDistribution {
  double success_probability = 0.0;  // |L u R| / 2^{r-s}
  std::size_t l_size = 0, r_size = 0;
  std::map<Mask, double> beta_probability;  // unconditional Pr[beta, gamma=1]
  /// Residual per beta as a mixture: (weight, qubit) pairs from the alphas
  /// that fold to beta. Coherent pairs appear once with the full weight.
  std::map<Mask, std::vector<std::pair<double, ResidualQubit>>> residuals;
};

TwoPointDistribution two_point_distribution(const std::vector<RegisterTruth>& regs,
                                            const BoundOracle& oracle, const MatchingDesc& f);

enum class QubitBasis { x, y };

struct WorldStats {
  std::uint64_t registers = 0;
  std::uint64_t bad_registers = 0;
  std::uint64_t routine_calls = 0;
  std::uint64_t successes = 0;
  std::uint64_t coherent = 0;
  std::uint64_t phase_mismatches = 0;
};

class WorldAudit;

/// Holds the hidden registers. Solver-side code only sees measurement
/// outcomes through the public interface.
class DcpWorld {
 public:
  struct PhaseRegister {
    std::uint64_t a = 0;
    std::uint64_t id = 0;
  };
  struct TwoPointResult {
    bool success = false;
    Mask beta = 0;
    std::uint64_t handle = 0;
  };

  DcpWorld(std::shared_ptr<RegisterSource> source, std::uint64_t seed);

  std::uint64_t modulus() const { return modulus_; }
  PhaseRegister sample_phase_register();
  TwoPointResult run_two_point(const std::vector<PhaseRegister>& registers,
                               const BoundOracle& oracle, const MatchingDesc& f);
  int measure_residual(std::uint64_t handle, QubitBasis basis);
  const WorldStats& stats() const { return stats_; }

 private:
  friend class WorldAudit;

  std::shared_ptr<RegisterSource> source_;
  std::uint64_t modulus_;
  Rng rng_;
  std::uint64_t next_id_ = 0;
  std::unordered_map<std::uint64_t, RegisterTruth> pending_;
  std::unordered_map<std::uint64_t, ResidualQubit> residuals_;
  WorldStats stats_;
};

/// N >= 2; bad_prob in [0, 1). Without an explicit value bad_prob defaults to
/// 1/log2 N and d is drawn from the seed.
DcpWorld make_world(std::uint64_t modulus, std::optional<std::uint64_t> d,
                    std::optional<double> bad_prob, std::uint64_t seed);

}  // namespace qreduce
