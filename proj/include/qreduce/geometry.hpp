#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace qreduce {

struct GeometryBudgetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Grid (1/L) Z^n intersected with the ball of radius R around center.
struct BallGridSpec {
  int n = 2;
  double radius = 1.0;
  std::int64_t L = 1;
  std::vector<double> center;  // empty: origin
};

using GridPoint = std::vector<std::int64_t>;  // integer coordinates, point = k / L

struct GridCount {
  std::uint64_t count = 0;
  std::vector<GridPoint> points;
};

double ball_volume(int n, double radius);

GridCount grid_points_in_ball(const BallGridSpec& spec, bool keep_points = false,
                              std::uint64_t budget = 10'000'000);

/// count / (L^n vol) - 1
double grid_volume_deviation(const BallGridSpec& spec);
/// 2 n^{1.5} / (r L) for a body containing a ball of radius r.
double grid_volume_tolerance(int n, double inner_radius, std::int64_t L);

struct IntersectionRatio {
  double exact = 0.0;                  // vol(B n B') / vol(B)
  std::optional<double> monte_carlo;
  double cylinder_bound = 0.0;         // 1 - |d| vol_{n-1}(R) / vol_n(R)
};

/// Exact ratio from the regularized incomplete beta function; the lens
/// formula is used for n = 2. samples > 0 adds a Monte Carlo estimate.
IntersectionRatio ball_intersection_ratio(int n, double radius, double distance,
                                          std::uint64_t samples = 0, std::uint64_t seed = 0);

double lens_ratio(double radius, double distance);

/// |grid n B n (B + d)| / |grid n B| for an integral shift d.
double grid_intersection_ratio(const BallGridSpec& spec, const std::vector<std::int64_t>& shift);

struct BoundaryLayer {
  double fraction = 0.0;  // grid points within sqrt(n)/L of the sphere
  double bound = 0.0;     // 2 (1 - (1 - sqrt(n)/(RL))^n)
};

BoundaryLayer boundary_layer(const BallGridSpec& spec);

std::string intersection_csv_row(int n, double radius, std::int64_t L, double distance,
                                 double ratio, double bound);

enum class VolumeMethod { exact, monte_carlo };

struct PrepareOptions {
  VolumeMethod method = VolumeMethod::monte_carlo;
  double target_accuracy = 0.01;  // absolute error of each conditional mass
  double delta = 1e-6;
  std::uint64_t max_samples = 400'000'000;
  std::uint64_t seed = 0;
};

struct AmplitudeTree {
  int n = 0;
  int m = 0;               // ball inside [-2^m, 2^m)^n
  std::int64_t L = 0;
  int bits_per_dim = 0;    // m + 1 + log2 L
  int K = 0;               // n * bits_per_dim qubits
  double first_split[2] = {0.0, 0.0};
  std::uint64_t nodes = 0;             // prefixes with nonzero mass
  std::uint64_t estimated_nodes = 0;   // prefixes that needed Monte Carlo
  double max_split_error = 0.0;        // max |s~/s - 1| where exact s is known
  std::vector<double> amplitudes;      // 2^K, nonnegative
  std::vector<double> reference;       // exact discretized state (n = 2), else empty
  std::vector<double> uniform;         // uniform ball-grid state
  double certificate = 0.0;                   // D(prepared, uniform)
  std::optional<double> reference_distance;   // D(prepared, reference)
  std::optional<double> inner_product;        // <prepared|reference>
  std::optional<double> inner_product_bound;  // (1 - max_split_error)^K
};

/// Flat index of grid point k: per dimension offset-binary k + 2^m L, blocks
/// ordered by dimension, most significant bit first.
std::uint64_t grid_index(const AmplitudeTree& t, const GridPoint& k);

/// Volume of ball(R) n box, exact for n = 2.
double ball_box_volume_2d(double radius, double x0, double x1, double y0, double y1);

AmplitudeTree grover_rudolph_prepare(const BallGridSpec& spec, const PrepareOptions& opt = {});

/// D = sqrt(1 - <a|b>^2) for real amplitude vectors, normalised on the fly.
double trace_distance_real(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace qreduce
