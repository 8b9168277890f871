#include <gtest/gtest.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dense_two_point.hpp"
#include "qreduce/dcp_solver.hpp"
#include "qreduce/dcp_world.hpp"

namespace qreduce {

// Test-only window into the hidden side of the world.
class WorldAudit {
 public:
  static const RegisterTruth& truth(const DcpWorld& w, const DcpWorld::PhaseRegister& reg) {
    return w.pending_.at(reg.id);
  }
  static const ResidualQubit& residual(const DcpWorld& w, std::uint64_t handle) {
    return w.residuals_.at(handle);
  }
};

}  // namespace qreduce

using namespace qreduce;

namespace {

constexpr double kPi = std::numbers::pi;

std::uint64_t planted_d(std::uint64_t seed, std::uint64_t n) {
  return Rng::stream(seed, "planted_d").below(n);
}

double circular_distance(double x, double y, double m) {
  const double d = std::fmod(std::fabs(x - y), m);
  return std::min(d, m - d);
}

class FixedSource : public RegisterSource {
 public:
  FixedSource(std::uint64_t n, std::vector<RegisterTruth> cycle) : n_(n), cycle_(std::move(cycle)) {}
  std::uint64_t modulus() const override { return n_; }
  RegisterTruth next(Rng&) override { return cycle_[k_++ % cycle_.size()]; }

 private:
  std::uint64_t n_;
  std::vector<RegisterTruth> cycle_;
  std::size_t k_ = 0;
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(DcpWorld, MakeWorld) {
  auto w = make_world(8, 3, 0.0, 1);
  for (int i = 0; i < 100; ++i) w.sample_phase_register();
  EXPECT_EQ(w.stats().bad_registers, 0u);

  auto v = make_world(4096, std::nullopt, 1.0 / 12, 2);
  const int draws = 10000;
  for (int i = 0; i < draws; ++i) v.sample_phase_register();
  const double p = 1.0 / 12;
  EXPECT_NEAR(double(v.stats().bad_registers) / draws, p, 4 * std::sqrt(p * (1 - p) / draws));

  EXPECT_THROW(make_world(8, 3, 1.0, 1), std::invalid_argument);
  EXPECT_THROW(make_world(1, 0, 0.0, 1), std::invalid_argument);
}

TEST(DcpWorld, MeasuredValueIsUniform) {
  auto w = make_world(4, 1, 0.5, 3);
  const int draws = 10000;
  std::vector<int> hist(4);
  for (int i = 0; i < draws; ++i) ++hist[w.sample_phase_register().a];
  for (int c : hist) EXPECT_NEAR(c / double(draws), 0.25, 4 * std::sqrt(0.25 * 0.75 / draws));
}

TEST(DcpWorld, ShortcutMatchesFullRegisterSimulation) {
  // Fourier transform of |0,x> + |1,x+d> then measuring a: a is uniform and
  // the qubit carries relative phase e(ad/N).
  const std::uint64_t n = 16, d = 5;
  for (std::uint64_t x : {0u, 3u, 11u}) {
    QState reg = QState::from_entries({2, n}, {{{0, x}, 1.0}, {{1, (x + d) % n}, 1.0}});
    reg = fourier_mod(reg, 1);
    for (const auto& [label, p] : marginal(reg, {1})) EXPECT_NEAR(p, 1.0 / n, 1e-12);
    for (std::uint64_t a = 0; a < n; ++a) {
      const QState q = dense::collapsed_register({true, d, 0}, a, x, n);
      EXPECT_LT(dense::aligned_distance(q, residual_state({true, a * d % n, 0}, n)), 1e-10);
    }
  }
  const QState bad = dense::collapsed_register({false, 0, 1}, 6, 2, n);
  EXPECT_LT(dense::aligned_distance(bad, residual_state({false, 0, 1}, n)), 1e-10);
}

TEST(TwoPoint, ToyExample) {
  const std::vector<RegisterTruth> regs(2, {true, 1, 0});
  const auto oracle = SubsetSumOracle().for_modulus(4).bind({1, 2});
  const MatchingDesc f{1, 1, 4};
  const auto dist = two_point_distribution(regs, oracle, f);
  EXPECT_DOUBLE_EQ(dist.success_probability, 1.0);
  const auto& mix = dist.residuals.at(0b00);
  ASSERT_EQ(mix.size(), 1u);
  EXPECT_TRUE(mix[0].second.coherent);
  EXPECT_EQ(mix[0].second.phase, 1u);
  QState s = hadamard(residual_state(mix[0].second, 4), 0);
  EXPECT_NEAR(std::norm(s.amplitude({1})), 0.5, 1e-12);
}

TEST(TwoPoint, MatchesDenseSimulation) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const std::uint64_t n = std::uint64_t{1} << (2 + rng.below(4));
    const int r = default_r(n);
    const std::uint64_t d = rng.below(n);
    std::vector<RegisterTruth> regs(r);
    std::vector<std::uint64_t> a(r);
    for (int i = 0; i < r; ++i) {
      regs[i] = rng.bernoulli(0.2) ? RegisterTruth{false, 0, int(rng.below(2))} : RegisterTruth{true, d, 0};
      a[i] = rng.below(n);
    }
    const auto oracle = wrap_unreliable(SubsetSumOracle(), trial % 2 ? 0.6 : 1.0, trial)
                            .for_modulus(n)
                            .bind(a);
    const MatchingDesc f{1 + int(rng.below(2)), 1 + rng.below(n / 4), n};
    const auto sparse = two_point_distribution(regs, oracle, f);
    const auto dense = dense::dense_two_point(regs, oracle, f, rng.below(n));
    EXPECT_NEAR(sparse.success_probability, dense.success_probability, 1e-10);
    ASSERT_EQ(sparse.beta_probability.size(), dense.beta_probability.size());
    for (const auto& [beta, p] : sparse.beta_probability) {
      EXPECT_NEAR(p, dense.beta_probability.at(beta), 1e-10);
      const auto& mix = sparse.residuals.at(beta);
      ASSERT_EQ(mix.size(), 1u);
      EXPECT_LT(dense::aligned_distance(residual_state(mix[0].second, n), dense.residual.at(beta)), 1e-10);
    }
  }
}

TEST(TwoPoint, SuccessRateMatchesSetComputation) {
  auto w = make_world(256, 77, 1.0 / 8, 5);
  const auto oracle = wrap_unreliable(SubsetSumOracle(), 0.5, 9).for_modulus(256);
  const MatchingDesc f{2, 3, 256};
  const int r = default_r(256), trials = 10000;
  double expected = 0, variance = 0;
  int successes = 0;
  for (int k = 0; k < trials; ++k) {
    std::vector<DcpWorld::PhaseRegister> regs(r);
    std::vector<RegisterTruth> truths(r);
    std::vector<std::uint64_t> a(r);
    for (int i = 0; i < r; ++i) {
      regs[i] = w.sample_phase_register();
      truths[i] = WorldAudit::truth(w, regs[i]);
      a[i] = regs[i].a;
    }
    const auto bound = oracle.bind(a);
    const double p = two_point_distribution(truths, bound, f).success_probability;
    expected += p;
    variance += p * (1 - p);
    if (w.run_two_point(regs, bound, f).success) ++successes;
  }
  EXPECT_NEAR(successes, expected, 4 * std::sqrt(variance) + 1);
}

TEST(TwoPoint, ConditionalPhaseIsExact) {
  auto w = make_world(1024, std::nullopt, 0.1, 6);
  const auto oracle = wrap_unreliable(SubsetSumOracle(), 0.3, 4).for_modulus(1024);
  for (int k = 0; k < 2000; ++k) routine_r1(w, oracle, {1, 5, 1024}, default_r(1024));
  EXPECT_GT(w.stats().coherent, 0u);
  EXPECT_EQ(w.stats().phase_mismatches, 0u);
}

TEST(TwoPoint, ForcedBadRegisterNeverCorruptsPhase) {
  const std::uint64_t n = 512, d = 123;
  const int r = default_r(n);
  std::vector<RegisterTruth> cycle(r, {true, d, 0});
  cycle[0] = {false, 0, 1};
  DcpWorld w(std::make_shared<FixedSource>(n, cycle), 8);
  const auto oracle = SubsetSumOracle().for_modulus(n);
  const MatchingDesc f{1, 7, n};
  int coherent = 0;
  for (int k = 0; k < 3000; ++k) {
    std::vector<DcpWorld::PhaseRegister> regs(r);
    std::vector<std::uint64_t> a(r);
    for (int i = 0; i < r; ++i) a[i] = (regs[i] = w.sample_phase_register()).a;
    const auto res = w.run_two_point(regs, oracle.bind(a), f);
    if (!res.success) continue;
    const auto& q = WorldAudit::residual(w, res.handle);
    if (!q.coherent) continue;
    ++coherent;
    EXPECT_EQ(q.phase, 7 * d % n);
  }
  EXPECT_GT(coherent, 0);
  EXPECT_EQ(w.stats().phase_mismatches, 0u);
}

TEST(TwoPoint, ContractChecks) {
  auto w = make_world(64, 1, 0.0, 7);
  const auto oracle = SubsetSumOracle().for_modulus(64);
  std::vector<DcpWorld::PhaseRegister> regs{w.sample_phase_register(), w.sample_phase_register()};
  EXPECT_THROW(w.run_two_point(regs, oracle.bind({regs[0].a + 1, regs[1].a}), {1, 1, 64}),
               ContractViolation);
  w.run_two_point(regs, oracle.bind({regs[0].a, regs[1].a}), {1, 1, 64});
  EXPECT_THROW(w.run_two_point(regs, oracle.bind({regs[0].a, regs[1].a}), {1, 1, 64}),
               ContractViolation);
  EXPECT_THROW(w.measure_residual(999999, QubitBasis::x), ContractViolation);
}

TEST(Routines, BitStatistics) {
  const auto oracle = SubsetSumOracle().for_modulus(48);
  const int r = default_r(48);
  {
    auto w = make_world(48, 0, 0.0, 1);
    for (int k = 0; k < 500; ++k) {
      const auto b = routine_r1(w, oracle, {1, 1, 48}, r);
      if (b) {
        EXPECT_EQ(*b, 0);
      }
    }
  }
  {
    auto w = make_world(48, 16, 0.0, 2);  // qd/N = 1/3
    int ones = 0, succ = 0;
    while (succ < 10000)
      if (const auto b = routine_r1(w, oracle, {1, 1, 48}, r)) ++succ, ones += *b;
    EXPECT_NEAR(ones / 1e4, 0.75, 4 * std::sqrt(0.75 * 0.25 / 1e4));
  }
  {
    auto w = make_world(48, 12, 0.0, 3);  // qd/N = 1/4
    for (int k = 0; k < 500; ++k) {
      const auto b = routine_r2(w, oracle, {1, 1, 48}, r);
      if (b) {
        EXPECT_EQ(*b, 1);
      }
    }
  }
}

TEST(Solver, EstimateAngle) {
  EXPECT_NEAR(estimate_angle(0, 1), 0.0, 1e-12);
  EXPECT_NEAR(estimate_angle(1, 0), kPi / 2, 1e-12);
  EXPECT_NEAR(estimate_angle(0, -1), kPi, 1e-12);
  for (double phi = 0.0; phi < 2 * kPi; phi += 0.01) {
    const double got = estimate_angle(std::sin(phi), std::cos(phi));
    EXPECT_LT(circular_distance(got, phi, 2 * kPi), 1e-9);
  }
  Rng rng(3);
  const double eps = 0.01;
  for (int k = 0; k < 1000; ++k) {
    const double phi = 2 * kPi * rng.uniform();
    const double x = std::sin(phi) + eps * (2 * rng.uniform() - 1);
    const double y = std::cos(phi) + eps * (2 * rng.uniform() - 1);
    EXPECT_LE(circular_distance(estimate_angle(x, y), phi, 2 * kPi), 8 * eps);
  }
}

TEST(Solver, CombineAndRound) {
  EXPECT_DOUBLE_EQ(combine_estimates(5, 1, 10, 2, 16), 10.0);
  EXPECT_EQ(round_estimate(41, 8, 16), 5u);
  EXPECT_DOUBLE_EQ(combine_estimates(15.5, 1, 0.5, 2, 16), 0.5);
  EXPECT_EQ(solve_linear_congruence(1, 9, 16), (std::vector<std::uint64_t>{9}));
  EXPECT_EQ(solve_linear_congruence(3, 1, 16), (std::vector<std::uint64_t>{11}));
  EXPECT_EQ(solve_linear_congruence(2, 6, 16), (std::vector<std::uint64_t>{3, 11}));
  EXPECT_TRUE(solve_linear_congruence(2, 5, 16).empty());
}

TEST(Solver, HoeffdingBound) {
  EXPECT_DOUBLE_EQ(hoeffding_angle_bound(0, 1e-3, 1.0), kPi);
  EXPECT_DOUBLE_EQ(hoeffding_angle_bound(10, 1e-3, 0.1), kPi);
  EXPECT_LT(hoeffding_angle_bound(512, 1e-3, 1.0), hoeffding_angle_bound(128, 1e-3, 1.0));
}

TEST(Solver, R3Estimates) {
  const std::uint64_t n = 4096;
  const auto oracle = SubsetSumOracle().for_modulus(n);
  int within = 0;
  const int runs = 20;
  for (int s = 0; s < runs; ++s) {
    auto w = make_world(n, std::nullopt, 0.0, 100 + s);
    const std::uint64_t d = planted_d(100 + s, n);
    Rng rng(s);
    const auto e = routine_r3(w, oracle, 1, SolverConfig{}, rng);
    EXPECT_EQ(e.matching, (MatchingDesc{1, 1, n}));
    if (circular_distance(e.x, double(e.q_prime * d % n), n) <= n / 64.0) ++within;
  }
  EXPECT_GE(within, 19);

  auto w = make_world(n, 1, 0.0, 1);
  Rng rng(1);
  SolverConfig cfg;
  cfg.k_max = 16;
  EXPECT_THROW(routine_r3(w, oracle, 256, cfg, rng), std::invalid_argument);
}

TEST(Solver, StarvedCandidatesFail) {
  const std::uint64_t n = 256;
  auto w = make_world(n, 3, 0.0, 1);
  const auto oracle = wrap_unreliable(SubsetSumOracle(), 0.01, 1).for_modulus(n);
  SolverConfig cfg;
  cfg.samples_per_arm = 64;
  cfg.attempt_factor = 2;
  cfg.k_max = 2;
  Rng rng(1);
  EXPECT_THROW(routine_r3(w, oracle, 1, cfg, rng), EstimationFailed);
  const auto sol = solve_dcp(w, oracle, cfg);
  EXPECT_TRUE(sol.error.has_value());
  EXPECT_TRUE(sol.candidates.empty());
}

TEST(Solver, CascadeInvariant) {
  const std::uint64_t n = 4096;
  const auto oracle = SubsetSumOracle().for_modulus(n);
  for (int s = 0; s < 3; ++s) {
    auto w = make_world(n, std::nullopt, 1.0 / 12, 200 + s);
    const std::uint64_t d = planted_d(200 + s, n);
    SolverConfig cfg;
    cfg.seed = s;
    const auto sol = solve_dcp(w, oracle, cfg);
    ASSERT_FALSE(sol.error) << *sol.error;
    const std::uint64_t d_prime = sol.q_hat * d % n;
    for (const auto& st : sol.stages) {
      const double m = double(st.q_i) * n;
      EXPECT_LE(circular_distance(st.x_combined, double(st.q_i * d_prime) , m), st.half_width);
    }
    EXPECT_NE(std::find(sol.candidates.begin(), sol.candidates.end(), d), sol.candidates.end());
    EXPECT_EQ(to_json(sol)["stages"].size(), sol.stages.size());
  }
}

TEST(Solver, WallAudit) {
  // Solver sources may only use the public, measurement-level interface.
  for (const char* file : {"/src/dcp_solver.cpp", "/include/qreduce/dcp_solver.hpp"}) {
    const std::string text = slurp(std::string(QREDUCE_SOURCE_DIR) + file);
    ASSERT_FALSE(text.empty()) << file;
    for (const char* token : {"WorldAudit", "RegisterTruth", "resolve_alpha", "two_point_distribution",
                              "residual_state", "pending_", "residuals_", ".shift", "planted_d",
                              "RegisterSource"})
      EXPECT_EQ(text.find(token), std::string::npos) << file << " mentions " << token;
  }
}
