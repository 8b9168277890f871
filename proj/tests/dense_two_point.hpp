#pragma once

// Dense state-vector simulation of the two-point routine, built from the
// original coset registers with qsim primitives. Used as an independent
// oracle for the set-based simulation in dcp_world.

#include <algorithm>
#include <cmath>
#include <map>
#include <vector>

#include "qreduce/dcp_world.hpp"
#include "qreduce/qsim.hpp"

namespace qreduce::dense {

struct DenseTwoPoint {
  double success_probability = 0.0;
  std::map<Mask, double> beta_probability;
  std::map<Mask, QState> residual;  // one-qubit state per beta
};

/// Register after the Fourier transform and the measurement of a, with the
/// value register dropped. Good: |0,x> + |1,x+shift>. Bad: |bit,x>.
inline QState collapsed_register(const RegisterTruth& truth, std::uint64_t a, std::uint64_t x,
                                 std::uint64_t modulus) {
  QState reg = truth.good
                   ? QState::from_entries({2, modulus}, {{{0, x}, 1.0},
                                                         {{1, (x + truth.shift) % modulus}, 1.0}})
                   : QState::basis({2, modulus}, {static_cast<std::uint64_t>(truth.bit), x});
  reg = fourier_mod(reg, 1);
  const auto m = project(reg, {1}, {a});
  return drop_components(normalized(m.collapsed), {1});
}

inline Mask mask_of(const Label& l, std::size_t r) {
  Mask m = 0;
  for (std::size_t i = 0; i < r; ++i)
    if (l[i]) m |= Mask{1} << i;
  return m;
}

inline DenseTwoPoint dense_two_point(const std::vector<RegisterTruth>& regs,
                                     const BoundOracle& oracle, const MatchingDesc& f,
                                     std::uint64_t x_seed = 0) {
  const std::size_t r = regs.size();
  const std::uint64_t n = oracle.modulus();
  const auto& a = oracle.sequence();

  QState s = collapsed_register(regs[0], a[0], x_seed % n, n);
  for (std::size_t i = 1; i < r; ++i)
    s = tensor(s, collapsed_register(regs[i], a[i], (x_seed + 7 * i) % n, n));
  s = tensor(s, QState::basis({std::uint64_t{1} << r, 2}, {0, 0}));
  const std::size_t beta_c = r, gamma_c = r + 1;

  s = apply_label_fn(s, [&](const Label& in) {
    Label out = in;
    const Mask alpha = mask_of(in, r);
    const std::uint64_t t = oracle.sum(alpha);
    const auto self = oracle.solve(t);
    const auto ft = eval(f, t);
    if (!self || *self != alpha || !ft) return out;
    const auto other = oracle.solve(*ft);
    if (!other) return out;
    out[beta_c] = *ft > t ? alpha : *other;
    out[gamma_c] = 1;
    return out;
  });

  DenseTwoPoint res;
  const auto gamma = marginal(s, {gamma_c});
  if (!gamma.count({1})) return res;
  const auto g = project(s, {gamma_c}, {1});
  res.success_probability = g.probability;
  const QState after = normalized(g.collapsed);
  for (const auto& [label, p] : marginal(after, {beta_c})) {
    const Mask beta = label[0];
    res.beta_probability[beta] = p * g.probability;
    const auto pb = project(after, {beta_c}, {beta});
    const auto partner = *oracle.solve(*eval(f, oracle.sum(beta)));
    const auto to_qubit = to_one_qubit_map(beta, partner);
    QState alpha = apply_label_fn(normalized(pb.collapsed), [&](const Label& in) {
      Label out = in;
      const Mask m = to_qubit(mask_of(in, r));
      for (std::size_t i = 0; i < r; ++i) out[i] = m >> i & 1;
      return out;
    });
    std::vector<std::size_t> drop;
    for (std::size_t c = 1; c < r + 2; ++c) drop.push_back(c);
    res.residual.emplace(beta, drop_components(alpha, drop));
  }
  return res;
}

/// max_i |a_i - e(theta) b_i| with the global phase theta chosen from <b|a>.
inline double aligned_distance(const QState& a, const QState& b) {
  const Amplitude ov = inner_product(b, a);
  const Amplitude ph = std::abs(ov) > 0 ? ov / std::abs(ov) : Amplitude(1.0);
  double worst = 0.0;
  for (std::uint64_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::abs(a.at(i) - ph * b.at(i)));
  return worst;
}

}  // namespace qreduce::dense
