#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <boost/multiprecision/cpp_int.hpp>
#include <boost/multiprecision/eigen.hpp>
#include <json.hpp>

namespace qreduce {

using BigInt = boost::multiprecision::number<boost::multiprecision::cpp_int_backend<>,
                                             boost::multiprecision::et_off>;
using Rational = boost::multiprecision::number<boost::multiprecision::cpp_rational_backend,
                                               boost::multiprecision::et_off>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using IntMatrix = Matrix<BigInt>;
using IntVector = Vector<BigInt>;
using RatMatrix = Matrix<Rational>;
using RatVector = Vector<Rational>;

struct DegenerateBasisError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct EnumerationBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct GenerationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

/// Rows of `basis` are the basis vectors b_1..b_n.
struct LatticeInstance {
  int n = 0;
  IntMatrix basis;
  std::optional<IntVector> planted_u;
  Rational gap{1};
};

struct GramSchmidtData {
  RatMatrix bstar;
  RatMatrix mu;  // lower triangular, unit diagonal
  RatVector norms2;
};

GramSchmidtData gram_schmidt(const IntMatrix& basis);

struct LllResult {
  IntMatrix basis;
  IntMatrix transform;  // basis == transform * input
};

LllResult lll_reduce(const IntMatrix& basis, const Rational& delta = Rational(3, 4));

/// Both inequalities: |mu_ij| <= 1/2 and |b*_i|^2 <= 2 |b*_{i+1}|^2.
bool is_lll_reduced(const IntMatrix& basis);

struct ShortVector {
  std::vector<std::int64_t> coeffs;
  IntVector vector;
  BigInt norm2;
  double length() const;
};

ShortVector shortest_vector_bruteforce(const IntMatrix& basis, std::int64_t coeff_bound,
                                       std::uint64_t budget = 10'000'000);

/// Smallest squared norm among lattice vectors in the coefficient box that are
/// not parallel to `coeffs`. Returns nullopt when no such vector exists (n = 1).
std::optional<BigInt> min_nonparallel_norm2(const IntMatrix& basis,
                                            const std::vector<std::int64_t>& coeffs,
                                            std::int64_t coeff_bound,
                                            std::uint64_t budget = 10'000'000);

struct GenOptions {
  int retries = 32;
  std::int64_t max_entry = 4096;
  int mixing_steps = 6;
};

LatticeInstance gen_unique_lattice(int n, const Rational& gap_target, std::int64_t coeff_budget,
                                   std::uint64_t seed, const GenOptions& options = {});

/// Replaces the basis by its LLL reduction and re-expresses planted_u.
LatticeInstance reduce_instance(const LatticeInstance& instance);

bool check_coeff_bound(const LatticeInstance& instance);

IntVector lattice_vector(const IntMatrix& basis, const IntVector& coeffs);
BigInt norm2(const IntVector& v);

/// Exact coefficients of v in the row basis; nullopt if v is not in the lattice.
std::optional<IntVector> coefficients_in_basis(const IntMatrix& basis, const IntVector& v);

BigInt determinant(const IntMatrix& m);
/// Exact inverse of a square integer matrix.
RatMatrix inverse(const IntMatrix& m);

/// Largest k/scale with (k/scale)^2 <= value.
Rational sqrt_lower_bound(const Rational& value, std::int64_t scale = 1000);

std::string rational_to_string(const Rational& q);
Rational rational_from_string(const std::string& text);

nlohmann::json to_json(const LatticeInstance& instance);
LatticeInstance lattice_from_json(const nlohmann::json& j);

}  // namespace qreduce
