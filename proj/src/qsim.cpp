#include "qreduce/qsim.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace qreduce {

Amplitude e(double x) {
  const double t = 2.0 * std::numbers::pi * x;
  return {std::cos(t), std::sin(t)};
}

void QState::init_dims(Dims dims) {
  dims_ = std::move(dims);
  strides_.assign(dims_.size(), 1);
  size_ = 1;
  for (std::size_t k = dims_.size(); k-- > 0;) {
    if (dims_[k] == 0) throw StateError("component dimension must be positive");
    strides_[k] = size_;
    if (size_ > (std::uint64_t{1} << 62) / dims_[k]) throw StateError("label space too large");
    size_ *= dims_[k];
  }
  dense_ = size_ <= kDenseLimit;
  if (dense_) dense_data_ = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(size_));
}

std::uint64_t QState::index_of(const Label& label) const {
  if (label.size() != dims_.size()) throw StateError("label arity mismatch");
  std::uint64_t idx = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    if (label[k] >= dims_[k]) throw StateError("label outside declared dims");
    idx += label[k] * strides_[k];
  }
  return idx;
}

Label QState::label_of(std::uint64_t index) const {
  Label l(dims_.size());
  for (std::size_t k = 0; k < dims_.size(); ++k) l[k] = digit(index, k);
  return l;
}

Amplitude QState::at(std::uint64_t index) const {
  if (dense_) return dense_data_[static_cast<Eigen::Index>(index)];
  auto it = sparse_data_.find(index);
  return it == sparse_data_.end() ? Amplitude(0.0) : it->second;
}

double QState::norm2() const {
  double s = 0.0;
  for_each([&](std::uint64_t, Amplitude a) { s += std::norm(a); });
  return s;
}

std::size_t QState::support_size() const {
  std::size_t n = 0;
  for_each([&](std::uint64_t, Amplitude) { ++n; });
  return n;
}

QState QState::basis(Dims dims, const Label& label) {
  StateBuilder b(std::move(dims));
  b.add(b.shape().index_of(label), 1.0);
  return b.build();
}

QState QState::from_entries(Dims dims, const std::vector<std::pair<Label, Amplitude>>& entries,
                            bool normalize) {
  StateBuilder b(std::move(dims));
  for (const auto& [l, a] : entries) b.add(b.shape().index_of(l), a);
  QState s = b.build();
  return normalize ? normalized(s) : s;
}

StateBuilder::StateBuilder(Dims dims) {
  state_.init_dims(std::move(dims));
  if (state_.dense_) touched_.assign(state_.size_, false);
}

void StateBuilder::add(std::uint64_t index, Amplitude a) {
  if (state_.dense_) {
    state_.dense_data_[static_cast<Eigen::Index>(index)] += a;
    touched_[index] = true;
  } else {
    state_.sparse_data_[index] += a;
  }
}

void StateBuilder::set(std::uint64_t index, Amplitude a) {
  if (state_.dense_) {
    state_.dense_data_[static_cast<Eigen::Index>(index)] = a;
    touched_[index] = true;
  } else {
    state_.sparse_data_[index] = a;
  }
}

bool StateBuilder::contains(std::uint64_t index) const {
  if (state_.dense_) return touched_[index];
  return state_.sparse_data_.count(index) > 0;
}

QState StateBuilder::build(double prune) {
  if (state_.dense_) {
    for (Eigen::Index i = 0; i < state_.dense_data_.size(); ++i)
      if (std::norm(state_.dense_data_[i]) < prune) state_.dense_data_[i] = 0.0;
  } else {
    std::erase_if(state_.sparse_data_, [&](const auto& kv) { return std::norm(kv.second) < prune; });
  }
  return std::move(state_);
}

QState normalized(const QState& s) {
  const double n = std::sqrt(s.norm2());
  if (n == 0.0) throw StateError("cannot normalize the zero vector");
  StateBuilder b(s.dims());
  s.for_each([&](std::uint64_t i, Amplitude a) { b.add(i, a / n); });
  return b.build();
}

QState tensor(const QState& a, const QState& b) {
  Dims dims = a.dims();
  dims.insert(dims.end(), b.dims().begin(), b.dims().end());
  StateBuilder out(dims);
  a.for_each([&](std::uint64_t i, Amplitude x) {
    b.for_each([&](std::uint64_t j, Amplitude y) { out.add(i * b.size() + j, x * y); });
  });
  return out.build();
}

namespace {

QState dft(const QState& s, std::size_t component, int sign) {
  if (component >= s.components()) throw StateError("component out of range");
  const std::uint64_t n = s.dims()[component];
  const std::uint64_t stride = s.stride(component);
  std::vector<Amplitude> twiddle(n);
  for (std::uint64_t k = 0; k < n; ++k) twiddle[k] = e(sign * static_cast<double>(k) / n);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n));

  // Group the support by the index with this component zeroed.
  std::unordered_map<std::uint64_t, std::vector<std::pair<std::uint64_t, Amplitude>>> groups;
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    const std::uint64_t x = s.digit(idx, component);
    groups[idx - x * stride].emplace_back(x, a);
  });
  StateBuilder out(s.dims());
  for (const auto& [base, entries] : groups) {
    for (std::uint64_t i = 0; i < n; ++i) {
      Amplitude acc = 0.0;
      for (const auto& [x, a] : entries) acc += twiddle[(i * x) % n] * a;
      out.add(base + i * stride, acc * scale);
    }
  }
  return out.build();
}

}  // namespace

QState fourier_mod(const QState& s, std::size_t component) { return dft(s, component, +1); }
QState inverse_fourier_mod(const QState& s, std::size_t component) {
  return dft(s, component, -1);
}

std::map<Label, double> marginal(const QState& s, const std::vector<std::size_t>& components) {
  std::map<Label, double> out;
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    Label l(components.size());
    for (std::size_t k = 0; k < components.size(); ++k) l[k] = s.digit(idx, components[k]);
    out[l] += std::norm(a);
  });
  return out;
}

MeasurementRecord project(const QState& s, const std::vector<std::size_t>& components,
                          const Label& outcome) {
  if (outcome.size() != components.size()) throw StateError("outcome arity mismatch");
  double p = 0.0;
  StateBuilder b(s.dims());
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    for (std::size_t k = 0; k < components.size(); ++k)
      if (s.digit(idx, components[k]) != outcome[k]) return;
    p += std::norm(a);
    b.add(idx, a);
  });
  if (p == 0.0) throw StateError("outcome has zero probability");
  const double scale = 1.0 / std::sqrt(p);
  QState kept = b.build(0.0);
  StateBuilder c(s.dims());
  kept.for_each([&](std::uint64_t idx, Amplitude a) { c.add(idx, a * scale); });
  return {components, outcome, p / s.norm2(), c.build(0.0)};
}

MeasurementRecord measure(const QState& s, const std::vector<std::size_t>& components, Rng& rng) {
  const auto dist = marginal(s, components);
  double total = 0.0;
  for (const auto& [l, p] : dist) total += p;
  const double u = rng.uniform() * total;
  double acc = 0.0;
  const Label* chosen = &dist.rbegin()->first;
  for (const auto& [l, p] : dist) {
    acc += p;
    if (u < acc) {
      chosen = &l;
      break;
    }
  }
  return project(s, components, *chosen);
}

QState drop_components(const QState& s, std::vector<std::size_t> components) {
  std::sort(components.begin(), components.end());
  Dims dims;
  std::vector<std::size_t> keep;
  for (std::size_t k = 0; k < s.components(); ++k)
    if (!std::binary_search(components.begin(), components.end(), k)) {
      keep.push_back(k);
      dims.push_back(s.dims()[k]);
    }
  std::vector<std::int64_t> fixed(s.components(), -1);
  StateBuilder b(dims);
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    for (std::size_t k : components) {
      const auto v = static_cast<std::int64_t>(s.digit(idx, k));
      if (fixed[k] < 0) fixed[k] = v;
      if (fixed[k] != v) throw StateError("dropped component is not fixed");
    }
    std::uint64_t j = 0;
    for (std::size_t k : keep) j = j * s.dims()[k] + s.digit(idx, k);
    b.add(j, a);
  });
  return b.build(0.0);
}

QState apply_label_fn(const QState& s, const LabelFn& f) {
  StateBuilder b(s.dims());
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    const std::uint64_t j = b.shape().index_of(f(s.label_of(idx)));
    if (b.contains(j)) throw NonReversibleError("label function collides on the support");
    b.set(j, a);
  });
  return b.build(0.0);
}

std::function<std::uint64_t(std::uint64_t)> to_one_qubit_map(std::uint64_t a, std::uint64_t b) {
  if (a == b) throw StateError("to_one_qubit needs distinct labels");
  // transposition (a 0), then (sigma(b) 1)
  auto swap = [](std::uint64_t x, std::uint64_t p, std::uint64_t q) {
    return x == p ? q : (x == q ? p : x);
  };
  const std::uint64_t b1 = swap(b, a, 0);
  return [=](std::uint64_t x) { return swap(swap(x, a, 0), b1, 1); };
}

QState apply_gate(const QState& s, std::size_t component, const Eigen::Matrix2cd& gate) {
  if (s.dims().at(component) != 2) throw StateError("gate target must be a qubit");
  const std::uint64_t stride = s.stride(component);
  StateBuilder b(s.dims());
  s.for_each([&](std::uint64_t idx, Amplitude a) {
    const std::uint64_t bit = s.digit(idx, component);
    const std::uint64_t base = idx - bit * stride;
    b.add(base, gate(0, bit) * a);
    b.add(base + stride, gate(1, bit) * a);
  });
  return b.build();
}

QState hadamard(const QState& s, std::size_t component) {
  const double r = 1.0 / std::sqrt(2.0);
  Eigen::Matrix2cd h;
  h << r, r, r, -r;
  return apply_gate(s, component, h);
}

QState phase_i(const QState& s, std::size_t component) {
  Eigen::Matrix2cd p;
  p << 1.0, 0.0, 0.0, Amplitude(0.0, 1.0);
  return apply_gate(s, component, p);
}

Amplitude inner_product(const QState& a, const QState& b) {
  if (a.dims() != b.dims()) throw StateError("dims mismatch");
  Amplitude acc = 0.0;
  a.for_each([&](std::uint64_t i, Amplitude x) { acc += std::conj(x) * b.at(i); });
  return acc;
}

double trace_distance_pure(const QState& a, const QState& b) {
  constexpr double kTol = 1e-10;
  if (std::abs(a.norm2() - 1.0) > kTol || std::abs(b.norm2() - 1.0) > kTol)
    throw StateError("trace distance needs normalized states");
  const double overlap = std::norm(inner_product(a, b));
  const double d = std::sqrt(std::max(0.0, 1.0 - overlap));
  double diff2 = 0.0;
  a.for_each([&](std::uint64_t i, Amplitude x) { diff2 += std::norm(x - b.at(i)); });
  b.for_each([&](std::uint64_t i, Amplitude y) {
    if (a.at(i) == Amplitude(0.0)) diff2 += std::norm(y);
  });
  if (d > std::sqrt(diff2) + 1e-6) throw std::logic_error("trace distance exceeds l2 distance");
  return d;
}

double trace_distance_product(const std::vector<std::pair<QState, QState>>& factors) {
  double overlap = 1.0;
  for (const auto& [x, y] : factors) overlap *= std::norm(inner_product(x, y));
  return std::sqrt(std::max(0.0, 1.0 - overlap));
}

nlohmann::json to_json(const QState& s) {
  std::vector<std::pair<std::uint64_t, Amplitude>> entries;
  s.for_each([&](std::uint64_t i, Amplitude a) { entries.emplace_back(i, a); });
  std::sort(entries.begin(), entries.end(),
            [](const auto& x, const auto& y) { return x.first < y.first; });
  nlohmann::json out = nlohmann::json::array();
  for (const auto& [i, a] : entries) out.push_back({s.label_of(i), a.real(), a.imag()});
  return out;
}

}  // namespace qreduce
