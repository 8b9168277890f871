#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "qreduce/subsetsum.hpp"

namespace qreduce {

/// The q-matchings f^1_q and f^2_q on {0..N-1}.
struct MatchingDesc {
  int kind = 1;
  std::uint64_t q = 1;
  std::uint64_t modulus = 2;

  bool operator==(const MatchingDesc&) const = default;
};

std::optional<std::uint64_t> eval(const MatchingDesc& f, std::uint64_t t);

struct MatchingPartition {
  TargetSet a1;  // f(t) > t
  TargetSet a2;  // f(t) < t
};

MatchingPartition partition(const MatchingDesc& f);

/// Number of t in T with f(t) defined and in T.
std::uint64_t intersection_size(const MatchingDesc& f, const TargetSet& t);

/// Candidates f^1_q, f^2_q, f^1_{2q}, f^2_{2q}, ... up to k_max * q.
std::vector<MatchingDesc> candidate_matchings(std::uint64_t modulus, std::uint64_t q, int k_max);

std::optional<MatchingDesc> find_good_matching(const TargetSet& s_a, std::uint64_t q, int k_max,
                                               std::uint64_t threshold);

struct PairDensity {
  std::uint64_t q_prime = 0;
  std::uint64_t count = 0;
};

/// Best multiple q' in {q, 2q, ..., 4sq} by #{t in T : t + q' in T}.
PairDensity check_pair_density(const TargetSet& t, std::uint64_t q, std::uint64_t s);

}  // namespace qreduce
