#include <gtest/gtest.h>

#include <cmath>

#include "qreduce/rng.hpp"
#include "qreduce/subsetsum.hpp"

using namespace qreduce;

namespace {

// Plain 2^r scan, independent of the reachability tables.
std::optional<Mask> naive_solve(const std::vector<std::uint64_t>& a, std::uint64_t t,
                                std::uint64_t n) {
  for (Mask m = 0; m < (Mask{1} << a.size()); ++m) {
    std::uint64_t s = 0;
    for (std::size_t i = 0; i < a.size(); ++i)
      if (m >> i & 1) s += a[i];
    if (s % n == t % n) return m;
  }
  return std::nullopt;
}

std::vector<std::uint64_t> random_seq(int r, std::uint64_t n, Rng& rng) {
  std::vector<std::uint64_t> a(r);
  for (auto& x : a) x = rng.below(n);
  return a;
}

}  // namespace

TEST(SubsetSum, Examples) {
  const SubsetSumOracle o;
  EXPECT_EQ(solve(o, {3, 5, 7}, 1, 7), std::optional<Mask>(0b011));
  EXPECT_EQ(solve(o, {3, 5, 7}, 2, 7), std::nullopt);
  EXPECT_EQ(solve(o, {3, 5, 7}, 0, 7), std::optional<Mask>(0));
  EXPECT_EQ(solve(o, {9, 2, 4, 1}, 0, 16), std::optional<Mask>(0));
}

TEST(SubsetSum, SOfA) {
  const SubsetSumOracle o;
  const auto s = s_of_a(o, {3, 5, 7}, 7);
  EXPECT_EQ(s.count(), 4u);
  for (std::uint64_t t : {0, 1, 3, 5}) EXPECT_TRUE(s.test(t));
  EXPECT_EQ(s_of_a(o, std::vector<std::uint64_t>(5, 0), 8).count(), 1u);
}

TEST(SubsetSum, TypicalCoverageAt256) {
  Rng rng(1);
  int full = 0;
  for (int trial = 0; trial < 50; ++trial)
    if (s_of_a(SubsetSumOracle(), random_seq(12, 256, rng), 256).count() == 256) ++full;
  EXPECT_GE(full, 45);
}

TEST(SubsetSum, MatchesNaiveScan) {
  Rng rng(2);
  const SubsetSumOracle o;
  for (int trial = 0; trial < 300; ++trial) {
    const std::uint64_t n = 1 + rng.below(64);
    const auto a = random_seq(1 + static_cast<int>(rng.below(9)), n, rng);
    const auto bound = o.for_modulus(n).bind(a);
    for (std::uint64_t t = 0; t < n; ++t) EXPECT_EQ(bound.solve(t), naive_solve(a, t, n));
  }
}

TEST(SubsetSum, MeetInMiddleAgrees) {
  Rng rng(3);
  const SubsetSumOracle ex, mitm(Strategy::meet_in_middle);
  for (int trial = 0; trial < 200; ++trial) {
    const std::uint64_t n = 2 + rng.below(511);
    const int r = 1 + static_cast<int>(rng.below(16));
    const auto a = random_seq(r, n, rng);
    const auto b1 = ex.for_modulus(n).bind(a);
    const auto b2 = mitm.for_modulus(n).bind(a);
    EXPECT_EQ(b1.answered(), b2.answered());
    for (int k = 0; k < 8; ++k) {
      const std::uint64_t t = rng.below(n);
      EXPECT_EQ(b1.solve(t), b2.solve(t));
    }
  }
}

TEST(SubsetSum, AnswersAreValid) {
  Rng rng(4);
  const auto mod = SubsetSumOracle().for_modulus(4096);
  const auto b = mod.bind(random_seq(16, 4096, rng));
  for (std::uint64_t t = 0; t < 4096; ++t) {
    const auto m = b.solve(t);
    ASSERT_TRUE(m);
    EXPECT_EQ(b.sum(*m), t);
  }
}

TEST(LegalFraction, Examples) {
  const auto f = estimate_legal_fraction(12, 256, 1000, 1);
  EXPECT_LE(f.fraction, 0.5);
  EXPECT_LT(f.fraction, 0.01);
  const auto g = estimate_legal_fraction(1, 2, 20000, 2);
  EXPECT_NEAR(g.fraction, 0.25, 4 * std::sqrt(0.25 * 0.75 / 20000));
  EXPECT_EQ(estimate_legal_fraction(3, 1, 100, 3).fraction, 0.0);
}

TEST(Unreliable, FullFractionIsIdentity) {
  Rng rng(5);
  const auto a = random_seq(12, 256, rng);
  const auto base = SubsetSumOracle();
  const auto w = wrap_unreliable(base, 1.0, 77);
  for (std::uint64_t t = 0; t < 256; ++t) EXPECT_EQ(solve(base, a, t, 256), solve(w, a, t, 256));
}

TEST(Unreliable, QuarterThinsSOfA) {
  Rng rng(6);
  const auto w = wrap_unreliable(SubsetSumOracle(), 0.25, 99).for_modulus(256);
  double total = 0;
  int covered = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const auto a = random_seq(12, 256, rng);
    if (s_of_a(SubsetSumOracle(), a, 256).count() != 256) continue;
    total += static_cast<double>(w.bind(a).answered().count());
    ++covered;
  }
  ASSERT_GT(covered, 0);
  EXPECT_NEAR(total / covered, 64.0, 20.0);
  const auto a = random_seq(12, 256, rng);
  if (s_of_a(SubsetSumOracle(), a, 256).count() == 256) {
    EXPECT_EQ(w.bind(a).answered(), w.selected());
  }
}

TEST(Unreliable, Deterministic) {
  Rng rng(7);
  const auto a = random_seq(10, 128, rng);
  const auto w = wrap_unreliable(SubsetSumOracle(), 0.5, 3);
  for (std::uint64_t t = 0; t < 128; ++t) EXPECT_EQ(solve(w, a, t, 128), solve(w, a, t, 128));
  EXPECT_THROW(wrap_unreliable(SubsetSumOracle(), 0.0, 1), std::invalid_argument);
}

TEST(SubsetSum, BigSaCorollary) {
  Rng rng(8);
  const std::uint64_t n = 1024;
  const auto mod = SubsetSumOracle().for_modulus(n);
  int big = 0;
  const int trials = 300;
  for (int k = 0; k < trials; ++k)
    if (mod.bind(random_seq(default_r(n), n, rng)).answered().count() >= n / 4) ++big;
  EXPECT_GT(double(big) / trials, 0.9);
}

TEST(SubsetSum, PairwiseIndependence) {
  // X_b = [sum_b(A) == t]; for distinct nonzero masks Pr[X_b X_b'] = 1/N^2.
  Rng rng(9);
  const std::uint64_t n = 16;
  const Mask b1 = 0b0011, b2 = 0b0110;
  const int trials = 200000;
  int both = 0;
  for (int k = 0; k < trials; ++k) {
    const auto a = random_seq(4, n, rng);
    const std::uint64_t t = rng.below(n);
    auto s = [&](Mask m) {
      std::uint64_t x = 0;
      for (int i = 0; i < 4; ++i)
        if (m >> i & 1) x += a[i];
      return x % n;
    };
    if (s(b1) == t && s(b2) == t) ++both;
  }
  const double p = 1.0 / (n * n);
  EXPECT_NEAR(double(both) / trials, p, 4 * std::sqrt(p * (1 - p) / trials));
}

TEST(SubsetSum, CsvRow) {
  EXPECT_EQ(csv_row({3, 5, 7}, 1, 7, Mask{3}), "3;5;7,1,7,3");
  EXPECT_EQ(csv_row({3, 5, 7}, 2, 7, std::nullopt), "3;5;7,2,7,ERROR");
}
