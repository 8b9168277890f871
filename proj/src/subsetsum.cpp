#include "qreduce/subsetsum.hpp"

#include <cmath>
#include <sstream>

#include "qreduce/rng.hpp"

namespace qreduce {

namespace {

constexpr std::uint64_t kMaxModulus = std::uint64_t{1} << 24;
constexpr int kMaxExhaustiveR = 63;
constexpr int kMaxMitmR = 40;

TargetSet rotate(const TargetSet& x, std::uint64_t shift) {
  const std::uint64_t n = x.size();
  shift %= n;
  if (shift == 0) return x;
  return (x << shift) | (x >> (n - shift));
}

}  // namespace

int ceil_log2(std::uint64_t x) {
  int k = 0;
  while ((std::uint64_t{1} << k) < x) ++k;
  return k;
}

int default_r(std::uint64_t modulus, int c_r) { return ceil_log2(modulus) + c_r; }

bool SubsetSumOracle::selects(std::uint64_t t) const {
  for (const auto& th : thinnings_) {
    if (th.p >= 1.0) continue;
    const std::uint64_t h = splitmix64(th.seed ^ splitmix64(t));
    if (static_cast<double>(h >> 11) * 0x1.0p-53 >= th.p) return false;
  }
  return true;
}

std::string SubsetSumOracle::describe() const {
  std::string s = strategy_ == Strategy::exhaustive ? "exhaustive" : "mitm";
  for (const auto& th : thinnings_) {
    std::ostringstream os;
    os << "+unreliable(" << th.p << "," << th.seed << ")";
    s += os.str();
  }
  return s;
}

SubsetSumOracle wrap_unreliable(const SubsetSumOracle& base, double p, std::uint64_t seed) {
  if (!(p > 0.0 && p <= 1.0)) throw std::invalid_argument("answer fraction must be in (0, 1]");
  SubsetSumOracle out = base;
  out.thinnings_.push_back({p, seed});
  return out;
}

ModularOracle SubsetSumOracle::for_modulus(std::uint64_t modulus) const {
  return ModularOracle(*this, modulus);
}

ModularOracle::ModularOracle(SubsetSumOracle oracle, std::uint64_t modulus)
    : oracle_(std::move(oracle)), modulus_(modulus) {
  if (modulus == 0 || modulus > kMaxModulus) throw OracleSizeError("modulus outside desk range");
  auto sel = std::make_shared<TargetSet>(modulus);
  for (std::uint64_t t = 0; t < modulus; ++t) sel->set(t, oracle_.selects(t));
  selected_ = std::move(sel);
}

BoundOracle ModularOracle::bind(std::vector<std::uint64_t> a) const {
  BoundOracle b;
  b.strategy_ = oracle_.strategy();
  b.modulus_ = modulus_;
  for (auto& x : a) x %= modulus_;
  b.a_ = std::move(a);
  const int r = static_cast<int>(b.a_.size());
  const std::uint64_t n = modulus_;

  if (b.strategy_ == Strategy::exhaustive) {
    if (r > kMaxExhaustiveR) throw OracleSizeError("sequence too long for exhaustive oracle");
    b.reach_.reserve(r + 1);
    TargetSet reach(n);
    reach.set(0);
    b.reach_.push_back(reach);
    for (int i = 0; i < r; ++i) {
      reach |= rotate(reach, b.a_[i]);
      b.reach_.push_back(reach);
    }
    b.answered_ = reach & *selected_;
  } else {
    if (r > kMaxMitmR) throw OracleSizeError("sequence too long for meet-in-middle oracle");
    b.low_bits_ = r / 2;
    b.low_min_.assign(n, -1);
    const Mask low_count = Mask{1} << b.low_bits_;
    for (Mask m = 0; m < low_count; ++m) {
      const std::uint64_t s = b.sum(m);
      if (b.low_min_[s] < 0) b.low_min_[s] = static_cast<std::int64_t>(m);
    }
    TargetSet reach(n);
    const Mask high_count = Mask{1} << (r - b.low_bits_);
    for (Mask h = 0; h < high_count; ++h) {
      const std::uint64_t sh = b.sum(h << b.low_bits_);
      for (std::uint64_t s = 0; s < n; ++s)
        if (b.low_min_[s] >= 0) reach.set((s + sh) % n);
    }
    b.answered_ = reach & *selected_;
  }
  return b;
}

std::uint64_t BoundOracle::sum(Mask m) const {
  std::uint64_t s = 0;
  for (std::size_t i = 0; m != 0; ++i, m >>= 1)
    if (m & 1) s = (s + a_[i]) % modulus_;
  return s;
}

std::optional<Mask> BoundOracle::solve(std::uint64_t t) const {
  t %= modulus_;
  if (!answered_.test(t)) return std::nullopt;
  return strategy_ == Strategy::exhaustive ? solve_exhaustive(t) : solve_mitm(t);
}

std::optional<Mask> BoundOracle::solve_exhaustive(std::uint64_t t) const {
  // Numerically smallest mask: decide bits from the top, keeping a bit clear
  // whenever the residual is reachable from the lower elements alone.
  Mask m = 0;
  std::uint64_t residual = t;
  for (std::size_t i = a_.size(); i-- > 0;) {
    if (reach_[i].test(residual)) continue;
    m |= Mask{1} << i;
    residual = (residual + modulus_ - a_[i]) % modulus_;
  }
  if (residual != 0) return std::nullopt;
  return m;
}

std::optional<Mask> BoundOracle::solve_mitm(std::uint64_t t) const {
  const Mask high_count = Mask{1} << (a_.size() - low_bits_);
  for (Mask h = 0; h < high_count; ++h) {
    const std::uint64_t sh = sum(h << low_bits_);
    const std::int64_t low = low_min_[(t + modulus_ - sh) % modulus_];
    if (low >= 0) return (h << low_bits_) | static_cast<Mask>(low);
  }
  return std::nullopt;
}

std::optional<Mask> solve(const SubsetSumOracle& oracle, const std::vector<std::uint64_t>& a,
                          std::uint64_t t, std::uint64_t modulus) {
  return oracle.for_modulus(modulus).bind(a).solve(t);
}

TargetSet s_of_a(const SubsetSumOracle& oracle, const std::vector<std::uint64_t>& a,
                 std::uint64_t modulus) {
  return oracle.for_modulus(modulus).bind(a).answered();
}

LegalFraction estimate_legal_fraction(int r, std::uint64_t modulus, std::uint64_t trials,
                                      std::uint64_t seed) {
  Rng rng = Rng::stream(seed, "legal_fraction");
  const ModularOracle oracle = SubsetSumOracle().for_modulus(modulus);
  std::uint64_t failures = 0;
  std::vector<std::uint64_t> a(r);
  for (std::uint64_t k = 0; k < trials; ++k) {
    for (auto& x : a) x = rng.below(modulus);
    const std::uint64_t t = rng.below(modulus);
    if (!oracle.bind(a).answers(t)) ++failures;
  }
  LegalFraction out;
  out.trials = trials;
  out.fraction = trials ? static_cast<double>(failures) / trials : 0.0;
  out.half_width = trials ? 1.96 * std::sqrt(out.fraction * (1 - out.fraction) / trials) : 1.0;
  return out;
}

std::string csv_row(const std::vector<std::uint64_t>& a, std::uint64_t t, std::uint64_t modulus,
                    const std::optional<Mask>& answer) {
  std::ostringstream os;
  for (std::size_t i = 0; i < a.size(); ++i) os << (i ? ";" : "") << a[i];
  os << "," << t << "," << modulus << ",";
  if (answer)
    os << *answer;
  else
    os << "ERROR";
  return os.str();
}

}  // namespace qreduce
