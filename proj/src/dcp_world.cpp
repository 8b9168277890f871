#include "qreduce/dcp_world.hpp"

#include <cmath>

namespace qreduce {

UniformDcpSource::UniformDcpSource(std::uint64_t modulus, std::uint64_t d, double bad_prob)
    : modulus_(modulus), d_(d % modulus), bad_prob_(bad_prob) {
  if (modulus < 2) throw std::invalid_argument("modulus must be at least 2");
  if (!(bad_prob >= 0.0 && bad_prob < 1.0)) throw std::invalid_argument("bad_prob must be in [0,1)");
}

RegisterTruth UniformDcpSource::next(Rng& rng) {
  if (rng.bernoulli(bad_prob_)) return {false, 0, static_cast<int>(rng.below(2))};
  return {true, d_, 0};
}

QState residual_state(const ResidualQubit& q, std::uint64_t modulus) {
  if (!q.coherent) return QState::basis({2}, {static_cast<std::uint64_t>(q.bit)});
  return QState::from_entries(
      {2}, {{{0}, 1.0}, {{1}, e(static_cast<double>(q.phase) / static_cast<double>(modulus))}});
}

namespace {

bool agrees_with_bad_bits(Mask m, const std::vector<RegisterTruth>& regs) {
  for (std::size_t i = 0; i < regs.size(); ++i)
    if (!regs[i].good && static_cast<int>(m >> i & 1) != regs[i].bit) return false;
  return true;
}

}  // namespace

AlphaResolution resolve_alpha(Mask alpha, const std::vector<RegisterTruth>& regs,
                              const BoundOracle& oracle, const MatchingDesc& f) {
  const std::uint64_t n = oracle.modulus();
  const std::uint64_t t = oracle.sum(alpha);
  AlphaResolution res;
  const auto s = oracle.solve(t);
  if (!s || *s != alpha) return res;
  const auto ft = eval(f, t);
  if (!ft) return res;
  const auto other = oracle.solve(*ft);
  if (!other) return res;
  if (oracle.sum(*other) != *ft) throw ContractViolation("oracle answer does not sum to target");

  res.success = true;
  const bool in_a1 = *ft > t;
  res.left = in_a1 ? alpha : *other;
  res.right = in_a1 ? *other : alpha;
  res.beta = res.left;
  if (agrees_with_bad_bits(*other, regs)) {
    const auto& a = oracle.sequence();
    std::uint64_t phase = 0;
    for (std::size_t i = 0; i < regs.size(); ++i) {
      if (!regs[i].good) continue;
      const int delta = static_cast<int>(res.right >> i & 1) - static_cast<int>(res.left >> i & 1);
      if (delta == 0) continue;
      const std::uint64_t term = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(a[i]) * regs[i].shift) % n);
      phase = delta > 0 ? (phase + term) % n : (phase + n - term) % n;
    }
    res.residual = {true, phase, 0};
  } else {
    res.residual = {false, 0, alpha == res.left ? 0 : 1};
  }
  return res;
}

TwoPointDistribution two_point_distribution(const std::vector<RegisterTruth>& regs,
                                            const BoundOracle& oracle, const MatchingDesc& f) {
  std::vector<std::size_t> free_bits;
  Mask fixed = 0;
  for (std::size_t i = 0; i < regs.size(); ++i) {
    if (regs[i].good)
      free_bits.push_back(i);
    else if (regs[i].bit)
      fixed |= Mask{1} << i;
  }
  const double w = std::ldexp(1.0, -static_cast<int>(free_bits.size()));
  TwoPointDistribution dist;
  for (Mask k = 0; k < (Mask{1} << free_bits.size()); ++k) {
    Mask alpha = fixed;
    for (std::size_t j = 0; j < free_bits.size(); ++j)
      if (k >> j & 1) alpha |= Mask{1} << free_bits[j];
    const auto res = resolve_alpha(alpha, regs, oracle, f);
    if (!res.success) continue;
    (alpha == res.left ? dist.l_size : dist.r_size) += 1;
    dist.success_probability += w;
    dist.beta_probability[res.beta] += w;
    auto& mix = dist.residuals[res.beta];
    if (res.residual.coherent && !mix.empty() && mix.front().second.coherent)
      mix.front().first += w;
    else
      mix.emplace_back(w, res.residual);
  }
  return dist;
}

DcpWorld::DcpWorld(std::shared_ptr<RegisterSource> source, std::uint64_t seed)
    : source_(std::move(source)), modulus_(source_->modulus()), rng_(Rng::stream(seed, "dcp_world")) {}

DcpWorld::PhaseRegister DcpWorld::sample_phase_register() {
  const RegisterTruth truth = source_->next(rng_);
  ++stats_.registers;
  if (!truth.good) ++stats_.bad_registers;
  const std::uint64_t id = next_id_++;
  pending_.emplace(id, truth);
  // Measuring the Fourier register gives a uniform value for good and bad registers alike.
  return {rng_.below(modulus_), id};
}

DcpWorld::TwoPointResult DcpWorld::run_two_point(const std::vector<PhaseRegister>& registers,
                                                 const BoundOracle& oracle,
                                                 const MatchingDesc& f) {
  if (oracle.modulus() != modulus_ || f.modulus != modulus_)
    throw ContractViolation("modulus mismatch");
  if (oracle.sequence().size() != registers.size())
    throw ContractViolation("oracle bound to a different sequence length");
  std::vector<RegisterTruth> regs;
  regs.reserve(registers.size());
  for (std::size_t i = 0; i < registers.size(); ++i) {
    if (oracle.sequence()[i] != registers[i].a)
      throw ContractViolation("oracle bound to a different sequence");
    auto it = pending_.find(registers[i].id);
    if (it == pending_.end()) throw ContractViolation("register already consumed or unknown");
    regs.push_back(it->second);
    pending_.erase(it);
  }
  ++stats_.routine_calls;

  Mask alpha = 0;
  for (std::size_t i = 0; i < regs.size(); ++i) {
    const int bit = regs[i].good ? static_cast<int>(rng_.below(2)) : regs[i].bit;
    if (bit) alpha |= Mask{1} << i;
  }
  const AlphaResolution res = resolve_alpha(alpha, regs, oracle, f);
  if (!res.success) return {};
  ++stats_.successes;
  if (res.residual.coherent) {
    ++stats_.coherent;
    std::optional<std::uint64_t> shift;
    bool uniform = true;
    for (const auto& r : regs) {
      if (!r.good) continue;
      if (shift && *shift != r.shift) uniform = false;
      shift = r.shift;
    }
    if (uniform && shift) {
      const std::uint64_t expect = static_cast<std::uint64_t>(
          (static_cast<unsigned __int128>(f.q) * *shift) % modulus_);
      if (expect != res.residual.phase) ++stats_.phase_mismatches;
    }
  }
  const std::uint64_t handle = next_id_++;
  residuals_.emplace(handle, res.residual);
  return {true, res.beta, handle};
}

int DcpWorld::measure_residual(std::uint64_t handle, QubitBasis basis) {
  auto it = residuals_.find(handle);
  if (it == residuals_.end()) throw ContractViolation("unknown residual handle");
  QState s = residual_state(it->second, modulus_);
  residuals_.erase(it);
  if (basis == QubitBasis::y) s = phase_i(s, 0);
  s = hadamard(s, 0);
  return static_cast<int>(measure(s, {0}, rng_).outcome[0]);
}

DcpWorld make_world(std::uint64_t modulus, std::optional<std::uint64_t> d,
                    std::optional<double> bad_prob, std::uint64_t seed) {
  if (modulus < 2) throw std::invalid_argument("modulus must be at least 2");
  const double p = bad_prob.value_or(1.0 / std::log2(static_cast<double>(modulus)));
  if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("bad_prob must be in [0,1)");
  const std::uint64_t shift = d ? *d % modulus : Rng::stream(seed, "planted_d").below(modulus);
  return DcpWorld(std::make_shared<UniformDcpSource>(modulus, shift, p), seed);
}

}  // namespace qreduce
