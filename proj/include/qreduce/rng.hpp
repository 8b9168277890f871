#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace qreduce {

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view text);

/// Seeded generator. Streams are derived from (master seed, name, index) so
/// that independent consumers never share state.
class Rng {
 public:
  using result_type = std::uint64_t;

  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  static Rng stream(std::uint64_t master_seed, std::string_view name,
                    std::uint64_t index = 0);

  static constexpr result_type min() { return std::mt19937_64::min(); }
  static constexpr result_type max() { return std::mt19937_64::max(); }
  result_type operator()() { return engine_(); }

  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n);
  double uniform();
  bool bernoulli(double p);
  std::uint64_t fork_seed() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace qreduce
