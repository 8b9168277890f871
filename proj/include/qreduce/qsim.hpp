#pragma once

#include <complex>
#include <cstdint>
#include <functional>
#include <map>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <json.hpp>

#include "qreduce/rng.hpp"

namespace qreduce {

using Amplitude = std::complex<double>;
using Label = std::vector<std::uint64_t>;
using Dims = std::vector<std::uint64_t>;

/// e(x) = exp(2 pi i x)
Amplitude e(double x);

struct NonReversibleError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct StateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Pure state over a mixed-radix label space. Component 0 is the most
/// significant digit of the flat index. Dense storage up to kDenseLimit
/// amplitudes, hash map above.
class QState {
 public:
  static constexpr std::uint64_t kDenseLimit = std::uint64_t{1} << 22;

  QState() = default;

  static QState basis(Dims dims, const Label& label);
  static QState from_entries(Dims dims, const std::vector<std::pair<Label, Amplitude>>& entries,
                             bool normalize = true);

  const Dims& dims() const { return dims_; }
  std::size_t components() const { return dims_.size(); }
  std::uint64_t size() const { return size_; }
  bool is_dense() const { return dense_; }

  std::uint64_t index_of(const Label& label) const;
  Label label_of(std::uint64_t index) const;
  std::uint64_t digit(std::uint64_t index, std::size_t component) const {
    return (index / strides_[component]) % dims_[component];
  }
  std::uint64_t stride(std::size_t component) const { return strides_[component]; }

  Amplitude amplitude(const Label& label) const { return at(index_of(label)); }
  Amplitude at(std::uint64_t index) const;
  double norm2() const;
  std::size_t support_size() const;

  /// f(index, amplitude) over nonzero entries, in increasing index order for
  /// dense states and unspecified order for sparse ones.
  template <typename F>
  void for_each(F&& f) const {
    if (dense_) {
      for (Eigen::Index i = 0; i < dense_data_.size(); ++i)
        if (dense_data_[i] != Amplitude(0.0)) f(static_cast<std::uint64_t>(i), dense_data_[i]);
    } else {
      for (const auto& [i, a] : sparse_data_) f(i, a);
    }
  }

 private:
  friend class StateBuilder;
  void init_dims(Dims dims);

  Dims dims_;
  std::vector<std::uint64_t> strides_;
  std::uint64_t size_ = 0;
  bool dense_ = true;
  Eigen::VectorXcd dense_data_;
  std::unordered_map<std::uint64_t, Amplitude> sparse_data_;
};

/// Accumulates amplitudes by flat index and produces a QState.
class StateBuilder {
 public:
  explicit StateBuilder(Dims dims);
  void add(std::uint64_t index, Amplitude a);
  void set(std::uint64_t index, Amplitude a);
  bool contains(std::uint64_t index) const;
  const QState& shape() const { return state_; }
  QState build(double prune = 1e-30);

 private:
  QState state_;
  std::vector<bool> touched_;
};

struct MeasurementRecord {
  std::vector<std::size_t> components;
  Label outcome;
  double probability = 0.0;
  QState collapsed;
};

QState normalized(const QState& s);
QState tensor(const QState& a, const QState& b);

QState fourier_mod(const QState& s, std::size_t component);
QState inverse_fourier_mod(const QState& s, std::size_t component);

std::map<Label, double> marginal(const QState& s, const std::vector<std::size_t>& components);
MeasurementRecord measure(const QState& s, const std::vector<std::size_t>& components, Rng& rng);
/// Conditions on a given outcome instead of sampling it.
MeasurementRecord project(const QState& s, const std::vector<std::size_t>& components,
                          const Label& outcome);

/// Removes components that hold a single value across the support.
QState drop_components(const QState& s, std::vector<std::size_t> components);

using LabelFn = std::function<Label(const Label&)>;
QState apply_label_fn(const QState& s, const LabelFn& f);

/// The reversible value map of the to-one-qubit routine: a -> 0, b -> 1.
std::function<std::uint64_t(std::uint64_t)> to_one_qubit_map(std::uint64_t a, std::uint64_t b);

QState apply_gate(const QState& s, std::size_t component, const Eigen::Matrix2cd& gate);
QState hadamard(const QState& s, std::size_t component);
QState phase_i(const QState& s, std::size_t component);

Amplitude inner_product(const QState& a, const QState& b);
double trace_distance_pure(const QState& a, const QState& b);
/// Distance between two product states given their factors pairwise.
double trace_distance_product(const std::vector<std::pair<QState, QState>>& factors);

nlohmann::json to_json(const QState& s);

}  // namespace qreduce
