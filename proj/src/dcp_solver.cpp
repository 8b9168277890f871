#include "qreduce/dcp_solver.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>
#include <tuple>

namespace qreduce {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::optional<int> run_routine(DcpWorld& world, const ModularOracle& oracle, const MatchingDesc& f,
                               int r, QubitBasis basis) {
  if (f.modulus != world.modulus() || oracle.modulus() != world.modulus())
    throw std::invalid_argument("modulus mismatch between world, oracle and matching");
  std::vector<DcpWorld::PhaseRegister> regs(r);
  std::vector<std::uint64_t> a(r);
  for (int i = 0; i < r; ++i) {
    regs[i] = world.sample_phase_register();
    a[i] = regs[i].a;
  }
  const BoundOracle bound = oracle.bind(std::move(a));
  const auto res = world.run_two_point(regs, bound, f);
  if (!res.success) return std::nullopt;
  return world.measure_residual(res.handle, basis);
}

double screen_matching(const ModularOracle& oracle, const MatchingDesc& f, int r, int probes,
                       Rng& rng) {
  const std::uint64_t n = oracle.modulus();
  double total = 0.0;
  std::vector<std::uint64_t> a(r);
  for (int k = 0; k < probes; ++k) {
    for (auto& x : a) x = rng.below(n);
    total += static_cast<double>(intersection_size(f, oracle.bind(a).answered())) / n;
  }
  return probes > 0 ? total / probes : 1.0;
}

std::int64_t inverse_mod(std::int64_t a, std::int64_t m) {
  std::int64_t g = m, x = 0, x1 = 1, b = a % m;
  while (b != 0) {
    const std::int64_t k = g / b;
    std::tie(g, b) = std::make_pair(b, g - k * b);
    std::tie(x, x1) = std::make_pair(x1, x - k * x1);
  }
  return ((x % m) + m) % m;
}

}  // namespace

std::optional<int> routine_r1(DcpWorld& world, const ModularOracle& oracle, const MatchingDesc& f,
                              int r) {
  return run_routine(world, oracle, f, r, QubitBasis::x);
}

std::optional<int> routine_r2(DcpWorld& world, const ModularOracle& oracle, const MatchingDesc& f,
                              int r) {
  return run_routine(world, oracle, f, r, QubitBasis::y);
}

double estimate_angle(double x, double y) {
  const double phi = y >= 0 ? 2.0 * std::atan(x / (1.0 + y))
                            : 2.0 * (std::numbers::pi / 2 - std::atan(x / (1.0 - y)));
  const double m = std::fmod(phi, kTwoPi);
  return m < 0 ? m + kTwoPi : m;
}

double hoeffding_angle_bound(std::uint64_t n, double delta, double rho) {
  if (n == 0) return std::numbers::pi;
  const double eps = std::sqrt(std::log(2.0 / delta) / (2.0 * static_cast<double>(n)));
  const double dist = 2.0 * std::numbers::sqrt2 * eps;
  if (rho <= dist) return std::numbers::pi;
  return std::asin(std::min(1.0, dist / (rho - dist)));
}

PhaseEstimate routine_r3(DcpWorld& world, const ModularOracle& oracle, std::uint64_t q,
                         const SolverConfig& cfg, Rng& rng) {
  const std::uint64_t n = world.modulus();
  if (q == 0 || cfg.k_max < 1 ||
      static_cast<unsigned __int128>(q) * static_cast<unsigned>(cfg.k_max) >= n)
    throw std::invalid_argument("routine_r3 needs q * k_max < N");
  const int r = cfg.r > 0 ? cfg.r : default_r(n);
  const std::uint64_t quota = cfg.samples_per_arm;
  const std::uint64_t budget = quota * cfg.attempt_factor;

  for (const MatchingDesc& f : candidate_matchings(n, q, cfg.k_max)) {
    if (cfg.screen && screen_matching(oracle, f, r, cfg.screen_probes, rng) < cfg.screen_fraction)
      continue;
    std::uint64_t ones[2] = {0, 0}, succ[2] = {0, 0}, tried[2] = {0, 0};
    for (bool progress = true; progress;) {
      progress = false;
      for (int arm = 0; arm < 2; ++arm) {
        if (succ[arm] >= quota || tried[arm] >= budget) continue;
        progress = true;
        ++tried[arm];
        const auto bit = arm == 0 ? routine_r1(world, oracle, f, r) : routine_r2(world, oracle, f, r);
        if (!bit) continue;
        ++succ[arm];
        ones[arm] += static_cast<std::uint64_t>(*bit);
      }
    }
    if (succ[0] < quota || succ[1] < quota) continue;

    const double c = 1.0 - 2.0 * static_cast<double>(ones[0]) / quota;
    const double s = 2.0 * static_cast<double>(ones[1]) / quota - 1.0;
    const double rho = std::hypot(c, s);
    const double angle = rho > 0 ? estimate_angle(s / rho, c / rho) : 0.0;
    PhaseEstimate est;
    est.q_prime = f.q;
    est.modulus = n;
    est.x = std::fmod(static_cast<double>(n) * angle / kTwoPi, static_cast<double>(n));
    est.half_width = static_cast<double>(n) * hoeffding_angle_bound(quota, cfg.delta, rho) / kTwoPi;
    est.successes = quota;
    est.attempts = tried[0] + tried[1];
    est.matching = f;
    return est;
  }
  throw EstimationFailed("every candidate matching was starved at q = " + std::to_string(q));
}

double combine_estimates(double x_prev, std::uint64_t q_prev, double x, std::uint64_t q_next,
                         std::uint64_t modulus) {
  const double n = static_cast<double>(modulus);
  const double ratio = static_cast<double>(q_next) / static_cast<double>(q_prev);
  const double y = x + n * std::round((ratio * x_prev - x) / n);
  const double m = static_cast<double>(q_next) * n;
  const double out = std::fmod(y, m);
  return out < 0 ? out + m : out;
}

std::uint64_t round_estimate(double x, std::uint64_t q, std::uint64_t modulus) {
  const auto v = static_cast<std::int64_t>(std::llround(x / static_cast<double>(q)));
  const auto n = static_cast<std::int64_t>(modulus);
  return static_cast<std::uint64_t>(((v % n) + n) % n);
}

std::vector<std::uint64_t> solve_linear_congruence(std::uint64_t q_hat, std::uint64_t d_prime,
                                                   std::uint64_t modulus) {
  const std::uint64_t g = std::gcd(q_hat % modulus, modulus);
  std::vector<std::uint64_t> out;
  if (d_prime % g != 0) return out;
  const std::uint64_t m = modulus / g;
  const std::uint64_t base =
      m == 1 ? 0
             : static_cast<std::uint64_t>(
                   (static_cast<unsigned __int128>(d_prime / g) *
                    static_cast<std::uint64_t>(inverse_mod(static_cast<std::int64_t>((q_hat / g) % m),
                                                           static_cast<std::int64_t>(m)))) %
                   m);
  for (std::uint64_t k = 0; k < g; ++k) out.push_back(base + k * m);
  return out;
}

DcpSolution solve_dcp(DcpWorld& world, const ModularOracle& oracle, const SolverConfig& cfg) {
  const std::uint64_t n = world.modulus();
  const std::uint64_t window = cfg.window ? cfg.window : std::max<std::uint64_t>(1, n / 64);
  const std::uint64_t stop_q = (4 * n + window - 1) / window;
  Rng rng = Rng::stream(cfg.seed, "dcp_solver");
  DcpSolution sol;
  try {
    SolverConfig stage_cfg = cfg;
    stage_cfg.k_max = static_cast<int>(std::min<std::uint64_t>(cfg.k_max, n - 1));
    PhaseEstimate e = routine_r3(world, oracle, 1, stage_cfg, rng);
    sol.q_hat = e.q_prime;
    std::uint64_t q_i = 1;
    double x_i = e.x;
    sol.stages.push_back({q_i, e.q_prime, e.x, x_i, e.half_width, e.successes, e.attempts});
    while (q_i < stop_q) {
      const std::uint64_t q = 2 * q_i * sol.q_hat;
      if (q >= n) break;
      stage_cfg.k_max = static_cast<int>(std::min<std::uint64_t>(cfg.k_max, (n - 1) / q));
      e = routine_r3(world, oracle, q, stage_cfg, rng);
      const std::uint64_t q_next = e.q_prime / sol.q_hat;
      x_i = combine_estimates(x_i, q_i, e.x, q_next, n);
      q_i = q_next;
      sol.stages.push_back({q_i, e.q_prime, e.x, x_i, e.half_width, e.successes, e.attempts});
    }
    sol.d_prime = round_estimate(x_i, q_i, n);
    sol.candidates = solve_linear_congruence(sol.q_hat, sol.d_prime, n);
  } catch (const EstimationFailed& ex) {
    sol.error = ex.what();
  }
  return sol;
}

nlohmann::json to_json(const DcpSolution& s) {
  nlohmann::json stages = nlohmann::json::array();
  for (const auto& st : s.stages)
    stages.push_back({{"q_i", st.q_i},
                      {"q_prime", st.q_prime},
                      {"x", st.x},
                      {"x_combined", st.x_combined},
                      {"half_width", st.half_width},
                      {"successes", st.successes},
                      {"samples", st.samples}});
  nlohmann::json j = {{"stages", stages},
                      {"q_hat", s.q_hat},
                      {"d_prime", s.d_prime},
                      {"d_candidates", s.candidates}};
  if (s.error) j["error"] = *s.error;
  return j;
}

}  // namespace qreduce
