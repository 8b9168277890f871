#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_set>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qreduce/dcp_solver.hpp"
#include "qreduce/dcp_world.hpp"
#include "qreduce/lattice.hpp"
#include "qreduce/rng.hpp"

namespace qreduce {

struct StructuralViolation : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DecodeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EncodeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

using Coeffs = std::vector<std::int64_t>;
using DeskMatrix = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic>;

enum class SamplingMode { cube, ball };
enum class SamplerKind { exhaustive, planted };

struct ReductionParams {
  int n = 2;
  std::int64_t p = 17;
  std::int64_t m = 1;
  int i0 = 0;
  double l = 1.0;
  std::int64_t M = 64;
  double cell = 16.0;  // cube side, or ball radius in ball mode
  std::vector<double> w;
  SamplingMode mode = SamplingMode::cube;
  SamplerKind sampler = SamplerKind::exhaustive;
  std::int64_t grid_L = 16;
  bool desk_override = false;  // allow p <= n^4
  bool strict = true;          // throw on structural violations
};

bool is_prime(std::int64_t p);
/// Smallest prime strictly above n^4.
std::int64_t default_prime(int n);
void validate(const ReductionParams& params);

/// sum a_i (2M)^i for a in [0, M)^n.
std::uint64_t encode_coefficients(const Coeffs& a, std::int64_t M);
/// sum b_i (2M)^i mod (2M)^n for b in (-M, M)^n.
std::uint64_t encode_difference(const Coeffs& b, std::int64_t M);
Coeffs decode_difference(std::uint64_t d, std::int64_t M, int n);
std::uint64_t dcp_modulus(std::int64_t M, int n);

/// (a_{i0} p + t m) b_{i0} + sum_{i != i0} a_i b_i, basis vectors as rows.
Coeffs f_embed(int t, const Coeffs& a, const DeskMatrix& basis, std::int64_t p, std::int64_t m,
               int i0);
Coeffs g_cell(const std::vector<double>& v, double cell, const std::vector<double>& w);

struct TwoPointRegister {
  bool good = false;
  bool violation = false;
  int bit = 0;         // bad: the measured t
  Coeffs a;            // good: t = 0 element; bad: the single preimage
  Coeffs a_prime;      // good: t = 1 element
  Coeffs label;        // measured cell, or measured point times L
  int preimages = 0;   // exhaustive mode
};

struct EncodedRegister {
  RegisterTruth truth;
  std::uint64_t x = 0;
};

EncodedRegister encode_two_point_to_dcp(const TwoPointRegister& reg, std::int64_t M, int n);

DeskMatrix to_desk(const IntMatrix& basis);

/// Simulates the measurement of g(f(t, a)) (cube) or of f(t, a) + z (ball)
/// by drawing the preimage uniformly and enumerating the remaining preimages.
class TwoPointSampler {
 public:
  /// planted_u: coefficients of the short vector in `basis`, required in
  /// planted mode only.
  TwoPointSampler(const DeskMatrix& basis, ReductionParams params,
                  std::optional<Coeffs> planted_u = std::nullopt);

  const ReductionParams& params() const { return params_; }
  TwoPointRegister sample(Rng& rng) const;
  TwoPointRegister classify_cube(int t, const Coeffs& a) const;
  TwoPointRegister classify_ball(int t, const Coeffs& a, const Coeffs& z) const;
  /// Grid offsets k with |k / L| <= R, as integers.
  const std::vector<Coeffs>& ball_points() const { return ball_points_; }
  /// Expected partner difference a' - a for the planted vector, if any.
  std::optional<Coeffs> planted_difference() const { return planted_diff_; }

 private:
  struct Preimage {
    int t;
    Coeffs a;
  };
  std::optional<Preimage> preimage_of(const Coeffs& c) const;
  bool might_be_image(const Coeffs& c) const;
  /// Calls fn(coefficients, point) for every lattice point whose coefficient
  /// box covers [lo, hi].
  void for_each_lattice_point(const std::vector<double>& lo, const std::vector<double>& hi,
                              const std::function<void(const Coeffs&, const Coeffs&)>& fn) const;
  TwoPointRegister finish(TwoPointRegister reg, int t, const Coeffs& a,
                          const std::vector<Preimage>& pre) const;
  bool in_ball(const Coeffs& x, const Coeffs& lattice_point) const;

  DeskMatrix basis_;
  Eigen::MatrixXd inverse_;
  ReductionParams params_;
  std::optional<Coeffs> planted_diff_;
  std::vector<Coeffs> ball_points_;
  std::unordered_set<std::string> ball_keys_;
  double ball_reach_ = 0.0;
};

struct SourceStats {
  std::uint64_t draws = 0;
  std::uint64_t good = 0;
  std::uint64_t bad = 0;
  std::uint64_t violations = 0;
  std::uint64_t difference_mismatches = 0;  // good pairs off the planted difference
};

/// Feeds two-point registers, encoded as DCP registers, into a DcpWorld.
class SvpRegisterSource : public RegisterSource {
 public:
  explicit SvpRegisterSource(std::shared_ptr<const TwoPointSampler> sampler);
  std::uint64_t modulus() const override { return modulus_; }
  RegisterTruth next(Rng& rng) override;
  const SourceStats& stats() const { return stats_; }

 private:
  std::shared_ptr<const TwoPointSampler> sampler_;
  std::uint64_t modulus_;
  SourceStats stats_;
};

using DcpHook =
    std::function<DcpSolution(DcpWorld&, const ModularOracle&, const SolverConfig&)>;

struct SvpConfig {
  SamplingMode mode = SamplingMode::cube;
  SamplerKind sampler = SamplerKind::exhaustive;
  std::int64_t p = 0;            // 0: default_prime(n)
  std::int64_t M = 0;            // 0: smallest power of two >= 64 u_max
  double cell_factor = 16.0;     // cell = cell_factor * l
  std::int64_t grid_L = 16;
  bool desk_override = false;
  bool stop_at_first = true;
  SubsetSumOracle oracle{};
  SolverConfig dcp{.window = 16};
  DcpHook hook;                  // empty: solve_dcp
  std::uint64_t seed = 0;
};

struct SvpCandidate {
  std::uint64_t d = 0;
  Coeffs coeffs;
  IntVector vector;
  BigInt norm2{0};
  bool verified = false;  // nonzero lattice vector with norm <= |b_1|
};

struct CellOutcome {
  int k = 0;
  int i0 = 0;
  std::int64_t m = 0;
  double l = 0.0;
  SourceStats source;
  WorldStats world;
  DcpSolution dcp;
  std::vector<SvpCandidate> candidates;
};

struct SvpReport {
  IntMatrix reduced;
  BigInt b1_norm2{0};
  std::int64_t p = 0;
  std::int64_t M = 0;
  std::uint64_t modulus = 0;
  std::vector<CellOutcome> cells;
  std::optional<SvpCandidate> winner;
};

/// Cells are visited in the order (k, i0, m), k = 0 first.
SvpReport solve_unique_svp(const LatticeInstance& instance, const SvpConfig& config);

nlohmann::json to_json(const SvpReport& report);

}  // namespace qreduce
