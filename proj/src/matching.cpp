#include "qreduce/matching.hpp"

namespace qreduce {

std::optional<std::uint64_t> eval(const MatchingDesc& f, std::uint64_t t) {
  const std::uint64_t q = f.q, n = f.modulus;
  if (q == 0 || t >= n) return std::nullopt;
  const bool low = t % (2 * q) < q;
  const bool up = (f.kind == 1) == low;
  if (up) {
    if (t + q < n) return t + q;
  } else {
    if (t >= q) return t - q;
  }
  return std::nullopt;
}

MatchingPartition partition(const MatchingDesc& f) {
  MatchingPartition p{TargetSet(f.modulus), TargetSet(f.modulus)};
  for (std::uint64_t t = 0; t < f.modulus; ++t) {
    const auto v = eval(f, t);
    if (!v) continue;
    (*v > t ? p.a1 : p.a2).set(t);
  }
  return p;
}

std::uint64_t intersection_size(const MatchingDesc& f, const TargetSet& t) {
  std::uint64_t count = 0;
  for (auto i = t.find_first(); i != TargetSet::npos; i = t.find_next(i)) {
    const auto v = eval(f, i);
    if (v && t.test(*v)) ++count;
  }
  return count;
}

std::vector<MatchingDesc> candidate_matchings(std::uint64_t modulus, std::uint64_t q, int k_max) {
  std::vector<MatchingDesc> out;
  for (int j = 1; j <= k_max; ++j)
    for (int kind = 1; kind <= 2; ++kind) out.push_back({kind, q * j, modulus});
  return out;
}

std::optional<MatchingDesc> find_good_matching(const TargetSet& s_a, std::uint64_t q, int k_max,
                                               std::uint64_t threshold) {
  const std::uint64_t n = s_a.size();
  if (q == 0 || k_max < 1 || q * static_cast<std::uint64_t>(k_max) >= n)
    throw std::invalid_argument("find_good_matching needs q * k_max < N");
  for (const auto& f : candidate_matchings(n, q, k_max))
    if (intersection_size(f, s_a) >= threshold) return f;
  return std::nullopt;
}

PairDensity check_pair_density(const TargetSet& t, std::uint64_t q, std::uint64_t s) {
  const std::uint64_t n = t.size();
  if (s == 0 || q == 0) throw std::invalid_argument("q and s must be positive");
  if (t.count() * s < n) throw std::invalid_argument("pair density needs |T| >= N/s");
  if (8 * s * q >= n) throw std::invalid_argument("pair density needs q < N/(8s)");
  PairDensity best;
  for (std::uint64_t j = 1; j <= 4 * s && j * q < n; ++j) {
    const std::uint64_t count = (t & (t >> (j * q))).count();
    if (count > best.count || best.q_prime == 0) best = {j * q, count};
  }
  return best;
}

}  // namespace qreduce
