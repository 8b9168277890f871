#include "qreduce/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qreduce/rng.hpp"

namespace qreduce {

namespace {

using Wide = __int128;

BigInt floor_div(const BigInt& a, const BigInt& b) {
  BigInt q = a / b;
  if ((a % b != 0) && ((a < 0) != (b < 0))) q -= 1;
  return q;
}

BigInt round_nearest(const Rational& x) {
  // floor(x + 1/2)
  Rational y = x + Rational(1, 2);
  return floor_div(boost::multiprecision::numerator(y), boost::multiprecision::denominator(y));
}

BigInt ceil_rational(const Rational& x) {
  return -floor_div(-boost::multiprecision::numerator(x), boost::multiprecision::denominator(x));
}

Matrix<Wide> to_wide(const IntMatrix& basis) {
  const BigInt limit = BigInt(1) << 31;
  Matrix<Wide> out(basis.rows(), basis.cols());
  for (Eigen::Index i = 0; i < basis.rows(); ++i)
    for (Eigen::Index j = 0; j < basis.cols(); ++j) {
      if (abs(basis(i, j)) >= limit)
        throw EnumerationBudgetError("basis entry too large for enumeration");
      out(i, j) = static_cast<Wide>(basis(i, j).convert_to<long long>());
    }
  return out;
}

BigInt from_wide(Wide x) {
  bool neg = x < 0;
  unsigned __int128 u = neg ? static_cast<unsigned __int128>(-(x + 1)) + 1
                            : static_cast<unsigned __int128>(x);
  BigInt r = BigInt(static_cast<std::uint64_t>(u >> 64));
  r <<= 64;
  r += BigInt(static_cast<std::uint64_t>(u));
  return neg ? BigInt(-r) : r;
}

std::uint64_t box_size(int n, std::int64_t bound, std::uint64_t budget) {
  if (bound < 0) throw PreconditionError("negative coefficient bound");
  const std::uint64_t side = 2 * static_cast<std::uint64_t>(bound) + 1;
  std::uint64_t total = 1;
  for (int i = 0; i < n; ++i) {
    if (total > budget / side) throw EnumerationBudgetError("enumeration budget exceeded");
    total *= side;
  }
  return total;
}

// Visits every coefficient vector in [-B, B]^n in lexicographic order, passing
// the running lattice vector and its squared norm.
template <typename Visit>
void enumerate_box(const IntMatrix& basis, std::int64_t bound, std::uint64_t budget, Visit&& visit) {
  const int n = static_cast<int>(basis.rows());
  const int dim = static_cast<int>(basis.cols());
  box_size(n, bound, budget);
  const Matrix<Wide> b = to_wide(basis);
  std::vector<std::int64_t> c(n, -bound);
  std::vector<Wide> v(dim, 0);
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < dim; ++k) v[k] += static_cast<Wide>(-bound) * b(i, k);
  while (true) {
    Wide nrm = 0;
    for (int k = 0; k < dim; ++k) nrm += v[k] * v[k];
    visit(c, v, nrm);
    int i = n - 1;
    while (i >= 0 && c[i] == bound) {
      c[i] = -bound;
      for (int k = 0; k < dim; ++k) v[k] -= static_cast<Wide>(2 * bound) * b(i, k);
      --i;
    }
    if (i < 0) break;
    ++c[i];
    for (int k = 0; k < dim; ++k) v[k] += b(i, k);
  }
}

// Eigen's product kernels do not instantiate for Boost multiprecision scalars.
template <typename S>
Matrix<S> mat_mul(const Matrix<S>& a, const Matrix<S>& b) {
  Matrix<S> out = Matrix<S>::Zero(a.rows(), b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index k = 0; k < a.cols(); ++k) {
      if (a(i, k) == 0) continue;
      for (Eigen::Index j = 0; j < b.cols(); ++j) out(i, j) += a(i, k) * b(k, j);
    }
  return out;
}

bool first_nonzero_positive(const std::vector<std::int64_t>& c) {
  for (auto x : c)
    if (x != 0) return x > 0;
  return false;
}

bool parallel(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = i + 1; j < a.size(); ++j)
      if (static_cast<Wide>(a[i]) * b[j] != static_cast<Wide>(a[j]) * b[i]) return false;
  return true;
}

}  // namespace

GramSchmidtData gram_schmidt(const IntMatrix& basis) {
  const Eigen::Index n = basis.rows();
  GramSchmidtData gs;
  gs.bstar = basis.cast<Rational>();
  gs.mu = RatMatrix::Identity(n, n);
  gs.norms2 = RatVector::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      gs.mu(i, j) = basis.row(i).cast<Rational>().dot(gs.bstar.row(j)) / gs.norms2(j);
      gs.bstar.row(i) -= gs.mu(i, j) * gs.bstar.row(j);
    }
    gs.norms2(i) = gs.bstar.row(i).squaredNorm();
    if (gs.norms2(i) == 0) throw DegenerateBasisError("basis rows are linearly dependent");
  }
  return gs;
}

LllResult lll_reduce(const IntMatrix& basis, const Rational& delta) {
  const Eigen::Index n = basis.rows();
  LllResult res{basis, IntMatrix::Identity(n, n)};
  GramSchmidtData gs = gram_schmidt(basis);
  Eigen::Index k = 1;
  while (k < n) {
    for (Eigen::Index j = k - 1; j >= 0; --j) {
      BigInt r = round_nearest(gs.mu(k, j));
      if (r == 0) continue;
      res.basis.row(k) -= r * res.basis.row(j);
      res.transform.row(k) -= r * res.transform.row(j);
      Rational rq(r);
      for (Eigen::Index i = 0; i < j; ++i) gs.mu(k, i) -= rq * gs.mu(j, i);
      gs.mu(k, j) -= rq;
    }
    const Rational m = gs.mu(k, k - 1);
    if (gs.norms2(k) >= (delta - m * m) * gs.norms2(k - 1)) {
      ++k;
    } else {
      res.basis.row(k).swap(res.basis.row(k - 1));
      res.transform.row(k).swap(res.transform.row(k - 1));
      gs = gram_schmidt(res.basis);
      k = std::max<Eigen::Index>(k - 1, 1);
    }
  }
  return res;
}

bool is_lll_reduced(const IntMatrix& basis) {
  const GramSchmidtData gs = gram_schmidt(basis);
  const Eigen::Index n = basis.rows();
  const Rational half(1, 2);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j)
      if (abs(gs.mu(i, j)) > half) return false;
  for (Eigen::Index i = 0; i + 1 < n; ++i)
    if (gs.norms2(i) > 2 * gs.norms2(i + 1)) return false;
  return true;
}

double ShortVector::length() const { return std::sqrt(norm2.convert_to<double>()); }

ShortVector shortest_vector_bruteforce(const IntMatrix& basis, std::int64_t coeff_bound,
                                       std::uint64_t budget) {
  bool found = false;
  Wide best = 0;
  std::vector<std::int64_t> best_c;
  enumerate_box(basis, coeff_bound, budget,
                [&](const std::vector<std::int64_t>& c, const std::vector<Wide>&, Wide nrm) {
                  if (nrm == 0 || !first_nonzero_positive(c)) return;
                  if (!found || nrm < best) {
                    found = true;
                    best = nrm;
                    best_c = c;
                  }
                });
  if (!found) throw EnumerationBudgetError("no nonzero vector in coefficient box");
  ShortVector sv;
  sv.coeffs = best_c;
  IntVector c(best_c.size());
  for (std::size_t i = 0; i < best_c.size(); ++i) c(i) = BigInt(best_c[i]);
  sv.vector = lattice_vector(basis, c);
  sv.norm2 = from_wide(best);
  return sv;
}

std::optional<BigInt> min_nonparallel_norm2(const IntMatrix& basis,
                                            const std::vector<std::int64_t>& coeffs,
                                            std::int64_t coeff_bound, std::uint64_t budget) {
  std::optional<Wide> best;
  enumerate_box(basis, coeff_bound, budget,
                [&](const std::vector<std::int64_t>& c, const std::vector<Wide>&, Wide nrm) {
                  if (nrm == 0 || (best && nrm >= *best)) return;
                  if (parallel(c, coeffs)) return;
                  best = nrm;
                });
  if (!best) return std::nullopt;
  return from_wide(*best);
}

IntVector lattice_vector(const IntMatrix& basis, const IntVector& coeffs) {
  IntVector out = IntVector::Zero(basis.cols());
  for (Eigen::Index i = 0; i < basis.rows(); ++i) out += coeffs(i) * basis.row(i).transpose();
  return out;
}

BigInt norm2(const IntVector& v) { return v.squaredNorm(); }

BigInt determinant(const IntMatrix& m) {
  // Bareiss fraction-free elimination
  IntMatrix a = m;
  const Eigen::Index n = a.rows();
  if (n == 0) return BigInt(1);
  BigInt sign = 1, prev = 1;
  for (Eigen::Index k = 0; k + 1 < n; ++k) {
    if (a(k, k) == 0) {
      Eigen::Index p = k + 1;
      while (p < n && a(p, k) == 0) ++p;
      if (p == n) return BigInt(0);
      a.row(k).swap(a.row(p));
      sign = -sign;
    }
    for (Eigen::Index i = k + 1; i < n; ++i)
      for (Eigen::Index j = k + 1; j < n; ++j)
        a(i, j) = (a(i, j) * a(k, k) - a(i, k) * a(k, j)) / prev;
    prev = a(k, k);
  }
  return sign * a(n - 1, n - 1);
}

RatMatrix inverse(const IntMatrix& m) {
  const Eigen::Index n = m.rows();
  RatMatrix a = m.cast<Rational>();
  RatMatrix inv = RatMatrix::Identity(n, n);
  for (Eigen::Index k = 0; k < n; ++k) {
    Eigen::Index p = k;
    while (p < n && a(p, k) == 0) ++p;
    if (p == n) throw DegenerateBasisError("singular matrix");
    a.row(k).swap(a.row(p));
    inv.row(k).swap(inv.row(p));
    const Rational pivot = a(k, k);
    a.row(k) /= pivot;
    inv.row(k) /= pivot;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (i == k || a(i, k) == 0) continue;
      const Rational f = a(i, k);
      a.row(i) -= f * a.row(k);
      inv.row(i) -= f * inv.row(k);
    }
  }
  return inv;
}

std::optional<IntVector> coefficients_in_basis(const IntMatrix& basis, const IntVector& v) {
  const RatMatrix row = v.cast<Rational>().transpose();
  const RatVector x = mat_mul<Rational>(row, inverse(basis)).transpose();
  IntVector out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (boost::multiprecision::denominator(x(i)) != 1) return std::nullopt;
    out(i) = boost::multiprecision::numerator(x(i));
  }
  return out;
}

Rational sqrt_lower_bound(const Rational& value, std::int64_t scale) {
  if (value <= 0) return Rational(0);
  const BigInt s(scale);
  const BigInt scaled = floor_div(boost::multiprecision::numerator(value) * s * s,
                                  boost::multiprecision::denominator(value));
  return Rational(boost::multiprecision::sqrt(scaled), s);
}

LatticeInstance gen_unique_lattice(int n, const Rational& gap_target, std::int64_t coeff_budget,
                                   std::uint64_t seed, const GenOptions& options) {
  if (n < 1) throw PreconditionError("dimension must be positive");
  if (n > 6) throw PreconditionError("dimension beyond desk scale");
  Rng rng = Rng::stream(seed, "gen_unique_lattice");
  if (n == 1) {
    LatticeInstance inst;
    inst.n = 1;
    inst.basis = IntMatrix::Constant(1, 1, BigInt(1));
    inst.planted_u = IntVector::Constant(1, BigInt(1));
    inst.gap = gap_target;
    return inst;
  }
  const BigInt g = std::max<BigInt>(BigInt(1), ceil_rational(gap_target));
  const std::int64_t bound = std::min<std::int64_t>(coeff_budget, std::int64_t{1} << (2 * n));

  for (int attempt = 0; attempt < options.retries; ++attempt) {
    IntMatrix d = IntMatrix::Zero(n, n);
    bool oversize = false;
    for (int i = 0; i + 1 < n; ++i) {
      const BigInt k = g + BigInt(rng.below(g.convert_to<std::uint64_t>() + 1));
      if (k > options.max_entry) oversize = true;
      d(i, i) = k;
    }
    d(n - 1, n - 1) = 1;
    if (oversize) continue;

    IntMatrix u = IntMatrix::Identity(n, n);
    for (int step = 0; step < options.mixing_steps; ++step) {
      const auto i = static_cast<Eigen::Index>(rng.below(n));
      auto j = static_cast<Eigen::Index>(rng.below(n - 1));
      if (j >= i) ++j;
      static constexpr int kMult[] = {-2, -1, 1, 2};
      u.row(i) += BigInt(kMult[rng.below(4)]) * u.row(j);
      if (rng.bernoulli(0.25)) u.row(i).swap(u.row(j));
      if (rng.bernoulli(0.25)) u.row(j) = -u.row(j);
    }
    const IntMatrix basis = mat_mul<BigInt>(u, d);

    const LllResult red = lll_reduce(basis);
    ShortVector sv;
    std::optional<BigInt> other;
    try {
      sv = shortest_vector_bruteforce(red.basis, bound);
      other = min_nonparallel_norm2(red.basis, sv.coeffs, bound);
    } catch (const EnumerationBudgetError&) {
      continue;
    }
    const Rational gap = other ? sqrt_lower_bound(Rational(*other, sv.norm2)) : gap_target;
    if (gap < gap_target) continue;

    LatticeInstance inst;
    inst.n = n;
    inst.basis = basis;
    inst.planted_u = coefficients_in_basis(basis, sv.vector);
    inst.gap = gap;
    return inst;
  }
  throw GenerationError("generation retries exhausted");
}

LatticeInstance reduce_instance(const LatticeInstance& instance) {
  LatticeInstance out = instance;
  out.basis = lll_reduce(instance.basis).basis;
  if (instance.planted_u) {
    const IntVector v = lattice_vector(instance.basis, *instance.planted_u);
    out.planted_u = coefficients_in_basis(out.basis, v);
  }
  return out;
}

bool check_coeff_bound(const LatticeInstance& instance) {
  if (!instance.planted_u) throw PreconditionError("planted_u missing");
  if (!is_lll_reduced(instance.basis)) throw PreconditionError("basis is not LLL-reduced");
  const IntVector v = lattice_vector(instance.basis, *instance.planted_u);
  const auto coeffs = coefficients_in_basis(instance.basis, v);
  if (!coeffs) return false;
  const BigInt limit = BigInt(1) << (2 * instance.n);
  for (Eigen::Index i = 0; i < coeffs->size(); ++i)
    if (abs((*coeffs)(i)) > limit) return false;
  return true;
}

std::string rational_to_string(const Rational& q) {
  return boost::multiprecision::numerator(q).str() + "/" +
         boost::multiprecision::denominator(q).str();
}

Rational rational_from_string(const std::string& text) {
  const auto slash = text.find('/');
  if (slash == std::string::npos) return Rational(BigInt(text));
  return Rational(BigInt(text.substr(0, slash)), BigInt(text.substr(slash + 1)));
}

nlohmann::json to_json(const LatticeInstance& instance) {
  nlohmann::json basis = nlohmann::json::array();
  for (Eigen::Index i = 0; i < instance.basis.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < instance.basis.cols(); ++j)
      row.push_back(instance.basis(i, j).convert_to<long long>());
    basis.push_back(row);
  }
  nlohmann::json u = nullptr;
  if (instance.planted_u) {
    u = nlohmann::json::array();
    for (Eigen::Index i = 0; i < instance.planted_u->size(); ++i)
      u.push_back((*instance.planted_u)(i).convert_to<long long>());
  }
  return {{"n", instance.n}, {"basis", basis}, {"planted_u", u},
          {"gap", rational_to_string(instance.gap)}};
}

LatticeInstance lattice_from_json(const nlohmann::json& j) {
  LatticeInstance inst;
  inst.n = j.at("n").get<int>();
  const auto& rows = j.at("basis");
  if (static_cast<int>(rows.size()) != inst.n) throw std::invalid_argument("basis row count != n");
  inst.basis = IntMatrix(inst.n, inst.n);
  for (int i = 0; i < inst.n; ++i) {
    if (static_cast<int>(rows[i].size()) != inst.n)
      throw std::invalid_argument("basis row length != n");
    for (int k = 0; k < inst.n; ++k) inst.basis(i, k) = BigInt(rows[i][k].get<long long>());
  }
  if (j.contains("planted_u") && !j["planted_u"].is_null()) {
    IntVector u(inst.n);
    for (int i = 0; i < inst.n; ++i) u(i) = BigInt(j["planted_u"][i].get<long long>());
    inst.planted_u = u;
  }
  inst.gap = rational_from_string(j.value("gap", std::string("1/1")));
  return inst;
}

}  // namespace qreduce
