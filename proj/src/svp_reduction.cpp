#include "qreduce/svp_reduction.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>
#include <utility>

#include <Eigen/LU>

#include "qreduce/geometry.hpp"

namespace qreduce {

namespace {

std::string key_of(const Coeffs& v) {
  return {reinterpret_cast<const char*>(v.data()), v.size() * sizeof(std::int64_t)};
}

std::uint64_t ipow(std::uint64_t b, int e) {
  std::uint64_t r = 1;
  for (int i = 0; i < e; ++i) r *= b;
  return r;
}

constexpr std::uint64_t kEnumerationBudget = 1'000'000;

}  // namespace

bool is_prime(std::int64_t p) {
  if (p < 2) return false;
  for (std::int64_t d = 2; d * d <= p; ++d)
    if (p % d == 0) return false;
  return true;
}

std::int64_t default_prime(int n) {
  std::int64_t p = static_cast<std::int64_t>(ipow(n, 4)) + 1;
  while (!is_prime(p)) ++p;
  return p;
}

void validate(const ReductionParams& q) {
  if (q.n < 1) throw std::invalid_argument("dimension must be positive");
  if (!is_prime(q.p)) throw std::invalid_argument("p must be prime");
  if (!q.desk_override && q.p <= static_cast<std::int64_t>(ipow(q.n, 4)))
    throw std::invalid_argument("p must exceed n^4 without the desk override");
  if (q.m < 1 || q.m >= q.p) throw std::invalid_argument("m must lie in [1, p-1]");
  if (q.i0 < 0 || q.i0 >= q.n) throw std::invalid_argument("i0 out of range");
  if (q.M < 1) throw std::invalid_argument("M must be positive");
  if (!(q.cell > 0) || !(q.l > 0)) throw std::invalid_argument("cell and l must be positive");
  if (!q.w.empty() && static_cast<int>(q.w.size()) != q.n)
    throw std::invalid_argument("shift vector has the wrong length");
  for (double x : q.w)
    if (x < 0 || x >= 1) throw std::invalid_argument("shifts must lie in [0, 1)");
  if (q.mode == SamplingMode::ball && q.grid_L < 1)
    throw std::invalid_argument("grid scale must be positive");
}

std::uint64_t dcp_modulus(std::int64_t M, int n) {
  if (M < 1 || n < 1) throw EncodeError("bad encoding parameters");
  const double bits = n * std::log2(2.0 * static_cast<double>(M));
  if (bits > 62) throw EncodeError("modulus too large");
  return ipow(2 * static_cast<std::uint64_t>(M), n);
}

std::uint64_t encode_coefficients(const Coeffs& a, std::int64_t M) {
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(M);
  dcp_modulus(M, static_cast<int>(a.size()));
  std::uint64_t x = 0, scale = 1;
  for (std::int64_t ai : a) {
    if (ai < 0 || ai >= M) throw EncodeError("coefficient outside [0, M)");
    x += static_cast<std::uint64_t>(ai) * scale;
    scale *= base;
  }
  return x;
}

std::uint64_t encode_difference(const Coeffs& b, std::int64_t M) {
  const auto N = static_cast<std::int64_t>(dcp_modulus(M, static_cast<int>(b.size())));
  std::int64_t x = 0, scale = 1;
  for (std::int64_t bi : b) {
    if (bi <= -M || bi >= M) throw EncodeError("difference outside (-M, M)");
    x += bi * scale;
    scale *= 2 * M;
  }
  return static_cast<std::uint64_t>((x % N + N) % N);
}

Coeffs decode_difference(std::uint64_t d, std::int64_t M, int n) {
  const std::uint64_t N = dcp_modulus(M, n);
  if (d >= N) throw DecodeError("value outside Z_N");
  const std::uint64_t base = 2 * static_cast<std::uint64_t>(M);
  std::uint64_t offset = 0, scale = 1;
  for (int i = 0; i < n; ++i) {
    offset += static_cast<std::uint64_t>(M) * scale;
    scale *= base;
  }
  std::uint64_t x = (d + offset) % N;
  Coeffs b(n);
  for (int i = 0; i < n; ++i) {
    const std::uint64_t digit = x % base;
    if (digit == 0) throw DecodeError("digit overflow");
    b[i] = static_cast<std::int64_t>(digit) - M;
    x /= base;
  }
  return b;
}

Coeffs f_embed(int t, const Coeffs& a, const DeskMatrix& basis, std::int64_t p, std::int64_t m,
               int i0) {
  const auto n = basis.rows();
  Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> c(n);
  for (Eigen::Index i = 0; i < n; ++i) c(i) = a[i];
  c(i0) = a[i0] * p + t * m;
  const Eigen::Matrix<std::int64_t, 1, Eigen::Dynamic> v = c * basis;
  return {v.data(), v.data() + v.size()};
}

Coeffs g_cell(const std::vector<double>& v, double cell, const std::vector<double>& w) {
  Coeffs r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    r[i] = static_cast<std::int64_t>(std::floor(v[i] / cell - (w.empty() ? 0.0 : w[i])));
  return r;
}

EncodedRegister encode_two_point_to_dcp(const TwoPointRegister& reg, std::int64_t M, int n) {
  if (static_cast<int>(reg.a.size()) != n) throw EncodeError("dimension mismatch");
  EncodedRegister out;
  out.x = encode_coefficients(reg.a, M);
  if (reg.good) {
    Coeffs diff(n);
    for (int i = 0; i < n; ++i) diff[i] = reg.a_prime[i] - reg.a[i];
    encode_coefficients(reg.a_prime, M);
    out.truth = {true, encode_difference(diff, M), 0};
  } else {
    out.truth = {false, 0, reg.bit};
  }
  return out;
}

DeskMatrix to_desk(const IntMatrix& basis) {
  DeskMatrix d(basis.rows(), basis.cols());
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      if (abs(basis(i, j)) > (std::int64_t{1} << 40))
        throw std::invalid_argument("basis entry beyond desk scale");
      d(i, j) = basis(i, j).convert_to<std::int64_t>();
    }
  return d;
}

TwoPointSampler::TwoPointSampler(const DeskMatrix& basis, ReductionParams params,
                                 std::optional<Coeffs> planted_u)
    : basis_(basis), params_(std::move(params)) {
  if (basis_.rows() != params_.n || basis_.cols() != params_.n)
    throw std::invalid_argument("basis must be n x n");
  if (params_.w.empty()) params_.w.assign(params_.n, 0.0);
  validate(params_);
  dcp_modulus(params_.M, params_.n);
  inverse_ = basis_.cast<double>().inverse();
  if (!inverse_.allFinite()) throw std::invalid_argument("singular basis");

  if (planted_u) {
    const std::int64_t ui0 = (*planted_u)[params_.i0];
    // Either u or -u may realise the residue m.
    for (int sign : {1, -1}) {
      const std::int64_t num = sign * ui0 - params_.m;
      if (num % params_.p != 0) continue;
      Coeffs diff(params_.n);
      for (int i = 0; i < params_.n; ++i) diff[i] = sign * (*planted_u)[i];
      diff[params_.i0] = num / params_.p;
      planted_diff_ = diff;
      break;
    }
  }
  if (params_.sampler == SamplerKind::planted && !planted_diff_)
    throw std::invalid_argument("planted sampler needs u with u_i0 = +-m (mod p)");

  if (params_.mode == SamplingMode::ball) {
    ball_points_ = grid_points_in_ball({params_.n, params_.cell, params_.grid_L, {}}, true).points;
    for (const auto& k : ball_points_) ball_keys_.insert(key_of(k));
    ball_reach_ = params_.cell;
  }
}

bool TwoPointSampler::might_be_image(const Coeffs& c) const {
  const std::int64_t r = c[params_.i0] % params_.p;
  return r == 0 || r == params_.m || r == params_.m - params_.p;
}

std::optional<TwoPointSampler::Preimage> TwoPointSampler::preimage_of(const Coeffs& c) const {
  for (int t : {0, 1}) {
    const std::int64_t num = c[params_.i0] - t * params_.m;
    if (num % params_.p != 0) continue;
    Coeffs a = c;
    a[params_.i0] = num / params_.p;
    if (std::all_of(a.begin(), a.end(), [&](std::int64_t x) { return x >= 0 && x < params_.M; }))
      return Preimage{t, std::move(a)};
    return std::nullopt;
  }
  return std::nullopt;
}

void TwoPointSampler::for_each_lattice_point(
    const std::vector<double>& lo, const std::vector<double>& hi,
    const std::function<void(const Coeffs&, const Coeffs&)>& fn) const {
  const int n = params_.n;
  Coeffs cmin(n), cmax(n);
  std::uint64_t total = 1;
  for (int j = 0; j < n; ++j) {
    double a = 0, b = 0;
    for (int i = 0; i < n; ++i) {
      const double x = lo[i] * inverse_(i, j), y = hi[i] * inverse_(i, j);
      a += std::min(x, y);
      b += std::max(x, y);
    }
    cmin[j] = static_cast<std::int64_t>(std::floor(a - 1e-9));
    cmax[j] = static_cast<std::int64_t>(std::ceil(b + 1e-9));
    total *= static_cast<std::uint64_t>(cmax[j] - cmin[j] + 1);
    if (total > kEnumerationBudget) throw std::runtime_error("preimage enumeration budget exceeded");
  }
  Coeffs c = cmin, pt(n, 0);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) pt[i] += c[j] * basis_(j, i);
  while (true) {
    fn(c, pt);
    int j = 0;
    for (; j < n; ++j) {
      if (c[j] < cmax[j]) {
        ++c[j];
        for (int i = 0; i < n; ++i) pt[i] += basis_(j, i);
        break;
      }
      for (int i = 0; i < n; ++i) pt[i] -= (cmax[j] - cmin[j]) * basis_(j, i);
      c[j] = cmin[j];
    }
    if (j == n) break;
  }
}

TwoPointRegister TwoPointSampler::finish(TwoPointRegister reg, int t, const Coeffs& a,
                                         const std::vector<Preimage>& pre) const {
  reg.preimages = static_cast<int>(pre.size());
  int count[2] = {0, 0};
  for (const auto& q : pre) ++count[q.t];
  const bool drawn_found = std::any_of(pre.begin(), pre.end(),
                                       [&](const Preimage& q) { return q.t == t && q.a == a; });
  if (!drawn_found || count[0] > 1 || count[1] > 1) {
    if (params_.strict) throw StructuralViolation("measured cell has an unexpected preimage set");
    reg.violation = true;
    reg.bit = t;
    reg.a = a;
    return reg;
  }
  if (pre.size() == 2) {
    reg.good = true;
    for (const auto& q : pre) (q.t == 0 ? reg.a : reg.a_prime) = q.a;
  } else {
    reg.bit = t;
    reg.a = a;
  }
  return reg;
}

TwoPointRegister TwoPointSampler::classify_cube(int t, const Coeffs& a) const {
  const int n = params_.n;
  const Coeffs v = f_embed(t, a, basis_, params_.p, params_.m, params_.i0);
  auto as_double = [](const Coeffs& x) { return std::vector<double>(x.begin(), x.end()); };
  TwoPointRegister reg;
  reg.label = g_cell(as_double(v), params_.cell, params_.w);

  if (params_.sampler == SamplerKind::planted) {
    const Coeffs& diff = *planted_diff_;
    Coeffs partner(n);
    for (int i = 0; i < n; ++i) partner[i] = t == 0 ? a[i] + diff[i] : a[i] - diff[i];
    const bool in_range = std::all_of(partner.begin(), partner.end(),
                                      [&](std::int64_t x) { return x >= 0 && x < params_.M; });
    if (in_range &&
        g_cell(as_double(f_embed(1 - t, partner, basis_, params_.p, params_.m, params_.i0)),
               params_.cell, params_.w) == reg.label) {
      reg.good = true;
      reg.a = t == 0 ? a : partner;
      reg.a_prime = t == 0 ? partner : a;
    } else {
      reg.bit = t;
      reg.a = a;
    }
    return reg;
  }

  std::vector<double> lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo[i] = (static_cast<double>(reg.label[i]) + params_.w[i]) * params_.cell;
    hi[i] = lo[i] + params_.cell;
  }
  std::vector<Preimage> pre;
  for_each_lattice_point(lo, hi, [&](const Coeffs& c, const Coeffs& pt) {
    if (!might_be_image(c)) return;
    for (int i = 0; i < n; ++i)
      if (static_cast<std::int64_t>(std::floor(static_cast<double>(pt[i]) / params_.cell -
                                               params_.w[i])) != reg.label[i])
        return;
    if (auto q = preimage_of(c)) pre.push_back(std::move(*q));
  });
  return finish(std::move(reg), t, a, pre);
}

bool TwoPointSampler::in_ball(const Coeffs& x, const Coeffs& point) const {
  Coeffs k(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) k[i] = x[i] - params_.grid_L * point[i];
  return ball_keys_.count(key_of(k)) > 0;
}

TwoPointRegister TwoPointSampler::classify_ball(int t, const Coeffs& a, const Coeffs& z) const {
  const int n = params_.n;
  const Coeffs v = f_embed(t, a, basis_, params_.p, params_.m, params_.i0);
  TwoPointRegister reg;
  reg.label.resize(n);
  for (int i = 0; i < n; ++i) reg.label[i] = params_.grid_L * v[i] + z[i];
  if (!in_ball(reg.label, v)) throw std::invalid_argument("offset outside the ball grid");

  if (params_.sampler == SamplerKind::planted) {
    const Coeffs& diff = *planted_diff_;
    Coeffs partner(n);
    for (int i = 0; i < n; ++i) partner[i] = t == 0 ? a[i] + diff[i] : a[i] - diff[i];
    const bool in_range = std::all_of(partner.begin(), partner.end(),
                                      [&](std::int64_t x) { return x >= 0 && x < params_.M; });
    if (in_range &&
        in_ball(reg.label, f_embed(1 - t, partner, basis_, params_.p, params_.m, params_.i0))) {
      reg.good = true;
      reg.a = t == 0 ? a : partner;
      reg.a_prime = t == 0 ? partner : a;
    } else {
      reg.bit = t;
      reg.a = a;
    }
    return reg;
  }

  std::vector<double> lo(n), hi(n);
  const double L = static_cast<double>(params_.grid_L);
  for (int i = 0; i < n; ++i) {
    lo[i] = static_cast<double>(reg.label[i]) / L - ball_reach_;
    hi[i] = static_cast<double>(reg.label[i]) / L + ball_reach_;
  }
  std::vector<Preimage> pre;
  for_each_lattice_point(lo, hi, [&](const Coeffs& c, const Coeffs& pt) {
    if (!might_be_image(c) || !in_ball(reg.label, pt)) return;
    if (auto q = preimage_of(c)) pre.push_back(std::move(*q));
  });
  return finish(std::move(reg), t, a, pre);
}

TwoPointRegister TwoPointSampler::sample(Rng& rng) const {
  const int t = static_cast<int>(rng.below(2));
  Coeffs a(params_.n);
  for (auto& x : a) x = static_cast<std::int64_t>(rng.below(static_cast<std::uint64_t>(params_.M)));
  if (params_.mode == SamplingMode::cube) return classify_cube(t, a);
  const auto& z = ball_points_[rng.below(ball_points_.size())];
  return classify_ball(t, a, z);
}

SvpRegisterSource::SvpRegisterSource(std::shared_ptr<const TwoPointSampler> sampler)
    : sampler_(std::move(sampler)),
      modulus_(dcp_modulus(sampler_->params().M, sampler_->params().n)) {}

RegisterTruth SvpRegisterSource::next(Rng& rng) {
  const auto reg = sampler_->sample(rng);
  const auto& q = sampler_->params();
  ++stats_.draws;
  if (reg.violation) ++stats_.violations;
  if (!reg.good) {
    ++stats_.bad;
    return {false, 0, reg.bit};
  }
  ++stats_.good;
  if (const auto diff = sampler_->planted_difference()) {
    for (int i = 0; i < q.n; ++i)
      if (reg.a_prime[i] - reg.a[i] != (*diff)[i]) {
        ++stats_.difference_mismatches;
        break;
      }
  }
  return encode_two_point_to_dcp(reg, q.M, q.n).truth;
}

namespace {

std::int64_t default_M(const LatticeInstance& reduced) {
  std::int64_t umax = 1;
  if (reduced.planted_u)
    for (Eigen::Index i = 0; i < reduced.planted_u->size(); ++i)
      umax = std::max(umax, abs((*reduced.planted_u)(i)).convert_to<std::int64_t>());
  return static_cast<std::int64_t>(std::bit_ceil(static_cast<std::uint64_t>(64 * umax)));
}

}  // namespace

SvpReport solve_unique_svp(const LatticeInstance& instance, const SvpConfig& config) {
  const LatticeInstance reduced = reduce_instance(instance);
  const int n = reduced.n;
  SvpReport report;
  report.reduced = reduced.basis;
  report.b1_norm2 = norm2(IntVector(reduced.basis.row(0).transpose()));
  report.p = config.p ? config.p : default_prime(n);
  report.M = config.M ? config.M : default_M(reduced);
  report.modulus = dcp_modulus(report.M, n);
  const DeskMatrix basis = to_desk(reduced.basis);

  std::optional<Coeffs> planted;
  if (reduced.planted_u) {
    planted.emplace(n);
    for (int i = 0; i < n; ++i) (*planted)[i] = (*reduced.planted_u)(i).convert_to<std::int64_t>();
  }
  const ModularOracle oracle = config.oracle.for_modulus(report.modulus);
  const DcpHook hook = config.hook ? config.hook : DcpHook(solve_dcp);
  const double b1_len = std::sqrt(report.b1_norm2.convert_to<double>());
  const int k_max = n / 2;  // ceil((n - 1) / 2)

  std::uint64_t index = 0;
  for (int k = 0; k <= k_max; ++k)
    for (int i0 = 0; i0 < n; ++i0)
      for (std::int64_t m = 1; m < report.p; ++m, ++index) {
        ReductionParams params;
        params.n = n;
        params.p = report.p;
        params.m = m;
        params.i0 = i0;
        params.l = b1_len / std::ldexp(1.0, k);
        params.M = report.M;
        params.cell = config.cell_factor * params.l;
        params.mode = config.mode;
        params.sampler = config.sampler;
        params.grid_L = config.grid_L;
        params.desk_override = config.desk_override;
        params.strict = false;
        Rng shift_rng = Rng::stream(config.seed, "svp_shift", index);
        params.w.resize(n);
        for (auto& x : params.w) x = shift_rng.uniform();

        CellOutcome cell;
        cell.k = k;
        cell.i0 = i0;
        cell.m = m;
        cell.l = params.l;
        std::shared_ptr<const TwoPointSampler> sampler;
        try {
          sampler = std::make_shared<TwoPointSampler>(basis, params,
                                                      config.sampler == SamplerKind::planted
                                                          ? planted
                                                          : std::optional<Coeffs>{});
        } catch (const std::invalid_argument&) {
          // Planted mode: u_i0 does not realise this residue.
          continue;
        }
        auto source = std::make_shared<SvpRegisterSource>(sampler);
        DcpWorld world(source, Rng::stream(config.seed, "svp_world", index).fork_seed());
        SolverConfig dcfg = config.dcp;
        dcfg.seed = Rng::stream(config.seed, "svp_dcp", index).fork_seed();
        cell.dcp = hook(world, oracle, dcfg);
        cell.source = source->stats();
        cell.world = world.stats();

        for (std::uint64_t d : cell.dcp.candidates) {
          Coeffs b;
          try {
            b = decode_difference(d, report.M, n);
          } catch (const DecodeError&) {
            continue;
          }
          SvpCandidate cand;
          cand.d = d;
          cand.coeffs = b;
          cand.coeffs[i0] = report.p * b[i0] + m;
          IntVector c(n);
          for (int i = 0; i < n; ++i) c(i) = cand.coeffs[i];
          cand.vector = lattice_vector(reduced.basis, c);
          cand.norm2 = norm2(cand.vector);
          cand.verified = cand.norm2 != 0 && cand.norm2 <= report.b1_norm2;
          if (cand.verified && (!report.winner || cand.norm2 < report.winner->norm2))
            report.winner = cand;
          cell.candidates.push_back(std::move(cand));
        }
        report.cells.push_back(std::move(cell));
        if (config.stop_at_first && report.winner) return report;
      }
  return report;
}

namespace {

nlohmann::json big_vector(const IntVector& v) {
  auto j = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) j.push_back(v(i).str());
  return j;
}

nlohmann::json candidate_json(const SvpCandidate& c) {
  return {{"d", c.d},
          {"coeffs", c.coeffs},
          {"vector", big_vector(c.vector)},
          {"norm2", c.norm2.str()},
          {"verified", c.verified}};
}

}  // namespace

nlohmann::json to_json(const SvpReport& r) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : r.cells) {
    nlohmann::json cands = nlohmann::json::array();
    for (const auto& x : c.candidates) cands.push_back(candidate_json(x));
    cells.push_back({{"k", c.k},
                     {"i0", c.i0},
                     {"m", c.m},
                     {"l", c.l},
                     {"registers",
                      {{"draws", c.source.draws},
                       {"good", c.source.good},
                       {"bad", c.source.bad},
                       {"violations", c.source.violations},
                       {"difference_mismatches", c.source.difference_mismatches}}},
                     {"routine_calls", c.world.routine_calls},
                     {"routine_successes", c.world.successes},
                     {"dcp", to_json(c.dcp)},
                     {"candidates", cands}});
  }
  nlohmann::json basis = nlohmann::json::array();
  for (Eigen::Index i = 0; i < r.reduced.rows(); ++i)
    basis.push_back(big_vector(IntVector(r.reduced.row(i).transpose())));
  return {{"reduced_basis", basis},
          {"b1_norm2", r.b1_norm2.str()},
          {"p", r.p},
          {"M", r.M},
          {"N", r.modulus},
          {"cells_visited", r.cells.size()},
          {"cells", cells},
          {"found", r.winner.has_value()},
          {"winner", r.winner ? candidate_json(*r.winner) : nlohmann::json(nullptr)}};
}

}  // namespace qreduce
