#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <boost/dynamic_bitset.hpp>

namespace qreduce {

using TargetSet = boost::dynamic_bitset<std::uint64_t>;
/// Bit i set <=> element a_i is in the subset.
using Mask = std::uint64_t;

struct OracleSizeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

enum class Strategy { exhaustive, meet_in_middle };

/// Default sequence length ceil(log2 N) + c_r.
int default_r(std::uint64_t modulus, int c_r = 4);
int ceil_log2(std::uint64_t x);

struct Thinning {
  double p = 1.0;
  std::uint64_t seed = 0;
};

class BoundOracle;
class ModularOracle;

/// Deterministic subset-sum oracle S(A, t). Returns the numerically smallest
/// mask among all solutions, or nothing. Thinnings restrict the answered
/// targets to a seed-keyed subset that depends on t only.
class SubsetSumOracle {
 public:
  explicit SubsetSumOracle(Strategy s = Strategy::exhaustive) : strategy_(s) {}

  Strategy strategy() const { return strategy_; }
  const std::vector<Thinning>& thinnings() const { return thinnings_; }
  bool selects(std::uint64_t t) const;
  std::string describe() const;

  ModularOracle for_modulus(std::uint64_t modulus) const;

  friend SubsetSumOracle wrap_unreliable(const SubsetSumOracle& base, double p,
                                         std::uint64_t seed);

 private:
  Strategy strategy_;
  std::vector<Thinning> thinnings_;
};

SubsetSumOracle wrap_unreliable(const SubsetSumOracle& base, double p, std::uint64_t seed);

/// Oracle specialised to one modulus; caches the selected target set.
class ModularOracle {
 public:
  ModularOracle(SubsetSumOracle oracle, std::uint64_t modulus);
  std::uint64_t modulus() const { return modulus_; }
  const SubsetSumOracle& oracle() const { return oracle_; }
  const TargetSet& selected() const { return *selected_; }
  BoundOracle bind(std::vector<std::uint64_t> a) const;

 private:
  SubsetSumOracle oracle_;
  std::uint64_t modulus_;
  std::shared_ptr<const TargetSet> selected_;
};

/// Oracle with the sequence A fixed.
class BoundOracle {
 public:
  std::optional<Mask> solve(std::uint64_t t) const;
  bool answers(std::uint64_t t) const { return answered_.test(t); }
  /// S(A)
  const TargetSet& answered() const { return answered_; }
  const std::vector<std::uint64_t>& sequence() const { return a_; }
  std::uint64_t modulus() const { return modulus_; }
  std::uint64_t sum(Mask m) const;

 private:
  friend class ModularOracle;
  std::optional<Mask> solve_exhaustive(std::uint64_t t) const;
  std::optional<Mask> solve_mitm(std::uint64_t t) const;

  Strategy strategy_ = Strategy::exhaustive;
  std::uint64_t modulus_ = 1;
  std::vector<std::uint64_t> a_;
  std::vector<TargetSet> reach_;       // reach_[i]: sums of subsets of a_0..a_{i-1}
  std::vector<std::int64_t> low_min_;  // meet-in-middle table
  int low_bits_ = 0;
  TargetSet answered_;
};

std::optional<Mask> solve(const SubsetSumOracle& oracle, const std::vector<std::uint64_t>& a,
                          std::uint64_t t, std::uint64_t modulus);
TargetSet s_of_a(const SubsetSumOracle& oracle, const std::vector<std::uint64_t>& a,
                 std::uint64_t modulus);

struct LegalFraction {
  double fraction = 0.0;
  double half_width = 0.0;  // 95% normal-approximation interval
  std::uint64_t trials = 0;
};

/// Fraction of uniformly random (A, t) with no solution.
LegalFraction estimate_legal_fraction(int r, std::uint64_t modulus, std::uint64_t trials,
                                      std::uint64_t seed);

std::string csv_row(const std::vector<std::uint64_t>& a, std::uint64_t t, std::uint64_t modulus,
                    const std::optional<Mask>& answer);

}  // namespace qreduce
