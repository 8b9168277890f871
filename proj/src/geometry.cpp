#include "qreduce/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

#include "qreduce/rng.hpp"

namespace qreduce {

namespace {

double center_of(const BallGridSpec& spec, int d) {
  return spec.center.empty() ? 0.0 : spec.center.at(d);
}

void check_spec(const BallGridSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("dimension must be positive");
  if (!(spec.radius > 0)) throw std::invalid_argument("radius must be positive");
  if (spec.L < 1) throw std::invalid_argument("grid denominator must be positive");
  if (!spec.center.empty() && static_cast<int>(spec.center.size()) != spec.n)
    throw std::invalid_argument("center has the wrong dimension");
}

// Visits every integer k with |k/L - c| <= R.
template <typename F>
void for_each_grid_point(const BallGridSpec& spec, std::uint64_t budget, F&& visit) {
  check_spec(spec);
  const int n = spec.n;
  const double rl = spec.radius * static_cast<double>(spec.L);
  const double limit = rl * rl * (1 + 1e-12);
  std::vector<std::int64_t> lo(n), hi(n);
  std::vector<double> cl(n);
  double box = 1.0;
  for (int d = 0; d < n; ++d) {
    cl[d] = center_of(spec, d) * static_cast<double>(spec.L);
    lo[d] = static_cast<std::int64_t>(std::ceil(cl[d] - rl - 1e-9));
    hi[d] = static_cast<std::int64_t>(std::floor(cl[d] + rl + 1e-9));
    box *= static_cast<double>(hi[d] - lo[d] + 1);
  }
  if (box > 4.0 * static_cast<double>(budget)) throw GeometryBudgetError("grid enumeration over budget");
  GridPoint k(lo);
  std::uint64_t count = 0;
  while (true) {
    double r2 = 0;
    for (int d = 0; d < n; ++d) r2 += (k[d] - cl[d]) * (k[d] - cl[d]);
    if (r2 <= limit) {
      if (++count > budget) throw GeometryBudgetError("grid point count over budget");
      visit(k);
    }
    int d = n - 1;
    while (d >= 0 && k[d] == hi[d]) k[d] = lo[d], --d;
    if (d < 0) break;
    ++k[d];
  }
}

double antiderivative_h(double radius, double x) {
  const double r2 = radius * radius;
  return 0.5 * (x * std::sqrt(std::max(0.0, r2 - x * x)) + r2 * std::asin(std::clamp(x / radius, -1.0, 1.0)));
}

}  // namespace

double ball_volume(int n, double radius) {
  return std::pow(std::numbers::pi, n / 2.0) / std::tgamma(n / 2.0 + 1.0) * std::pow(radius, n);
}

GridCount grid_points_in_ball(const BallGridSpec& spec, bool keep_points, std::uint64_t budget) {
  GridCount out;
  for_each_grid_point(spec, budget, [&](const GridPoint& k) {
    ++out.count;
    if (keep_points) out.points.push_back(k);
  });
  return out;
}

double grid_volume_deviation(const BallGridSpec& spec) {
  const double expected =
      std::pow(static_cast<double>(spec.L), spec.n) * ball_volume(spec.n, spec.radius);
  return static_cast<double>(grid_points_in_ball(spec).count) / expected - 1.0;
}

double grid_volume_tolerance(int n, double inner_radius, std::int64_t L) {
  return 2.0 * std::pow(n, 1.5) / (inner_radius * static_cast<double>(L));
}

double lens_ratio(double radius, double distance) {
  if (distance >= 2 * radius) return 0.0;
  const double area = 2 * radius * radius * std::acos(distance / (2 * radius)) -
                      0.5 * distance * std::sqrt(4 * radius * radius - distance * distance);
  return area / (std::numbers::pi * radius * radius);
}

IntersectionRatio ball_intersection_ratio(int n, double radius, double distance,
                                          std::uint64_t samples, std::uint64_t seed) {
  if (n < 1 || !(radius > 0) || distance < 0) throw std::invalid_argument("bad ball parameters");
  IntersectionRatio out;
  if (distance >= 2 * radius) {
    out.exact = 0.0;
  } else if (n == 2) {
    out.exact = lens_ratio(radius, distance);
  } else {
    const double h = distance / (2 * radius);
    out.exact = boost::math::ibeta((n + 1) / 2.0, 0.5, 1.0 - h * h);
  }
  out.cylinder_bound =
      n == 1 ? 1.0 - distance / (2 * radius)
             : 1.0 - distance * ball_volume(n - 1, radius) / ball_volume(n, radius);
  if (samples > 0) {
    Rng rng = Rng::stream(seed, "ball_intersection");
    std::normal_distribution<double> gauss;
    std::uint64_t hit = 0;
    std::vector<double> x(n);
    for (std::uint64_t s = 0; s < samples; ++s) {
      double norm = 0;
      for (auto& v : x) {
        v = gauss(rng);
        norm += v * v;
      }
      const double scale = radius * std::pow(rng.uniform(), 1.0 / n) / std::sqrt(norm);
      double r2 = 0;
      for (int d = 0; d < n; ++d) {
        const double y = x[d] * scale - (d == 0 ? distance : 0.0);
        r2 += y * y;
      }
      if (r2 <= radius * radius) ++hit;
    }
    out.monte_carlo = static_cast<double>(hit) / static_cast<double>(samples);
  }
  return out;
}

double grid_intersection_ratio(const BallGridSpec& spec, const std::vector<std::int64_t>& shift) {
  if (static_cast<int>(shift.size()) != spec.n) throw std::invalid_argument("shift dimension");
  const double rl = spec.radius * static_cast<double>(spec.L);
  const double limit = rl * rl * (1 + 1e-12);
  std::uint64_t total = 0, both = 0;
  for_each_grid_point(spec, 10'000'000, [&](const GridPoint& k) {
    ++total;
    double r2 = 0;
    for (int d = 0; d < spec.n; ++d) {
      const double y = static_cast<double>(k[d]) -
                       (center_of(spec, d) + static_cast<double>(shift[d])) * static_cast<double>(spec.L);
      r2 += y * y;
    }
    if (r2 <= limit) ++both;
  });
  return total ? static_cast<double>(both) / static_cast<double>(total) : 0.0;
}

BoundaryLayer boundary_layer(const BallGridSpec& spec) {
  const double width = std::sqrt(static_cast<double>(spec.n)) / static_cast<double>(spec.L);
  const double inner = std::max(0.0, spec.radius - width) * static_cast<double>(spec.L);
  std::uint64_t total = 0, layer = 0;
  for_each_grid_point(spec, 10'000'000, [&](const GridPoint& k) {
    ++total;
    double r2 = 0;
    for (int d = 0; d < spec.n; ++d) {
      const double y = static_cast<double>(k[d]) - center_of(spec, d) * static_cast<double>(spec.L);
      r2 += y * y;
    }
    if (r2 > inner * inner) ++layer;
  });
  BoundaryLayer out;
  out.fraction = total ? static_cast<double>(layer) / static_cast<double>(total) : 0.0;
  out.bound = 2.0 * (1.0 - std::pow(1.0 - width / spec.radius, spec.n));
  return out;
}

std::string intersection_csv_row(int n, double radius, std::int64_t L, double distance,
                                 double ratio, double bound) {
  std::ostringstream os;
  os.precision(10);
  os << n << ',' << radius << ',' << L << ',' << distance << ',' << ratio << ',' << bound;
  return os.str();
}

double ball_box_volume_2d(double radius, double x0, double x1, double y0, double y1) {
  x0 = std::max(x0, -radius);
  x1 = std::min(x1, radius);
  if (x0 >= x1 || y0 >= y1) return 0.0;
  const double r2 = radius * radius;
  std::vector<double> cuts{x0, x1};
  for (double y : {y0, y1})
    if (std::fabs(y) < radius)
      for (double s : {-1.0, 1.0}) {
        const double c = s * std::sqrt(r2 - y * y);
        if (c > x0 && c < x1) cuts.push_back(c);
      }
  std::sort(cuts.begin(), cuts.end());
  double area = 0;
  for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
    const double a = cuts[i], b = cuts[i + 1];
    if (b <= a) continue;
    const double mid = 0.5 * (a + b);
    const double h = std::sqrt(std::max(0.0, r2 - mid * mid));
    const bool upper_const = y1 < h, lower_const = y0 > -h;
    if ((upper_const ? y1 : h) <= (lower_const ? y0 : -h)) continue;
    const double hint = antiderivative_h(radius, b) - antiderivative_h(radius, a);
    const double upper = upper_const ? y1 * (b - a) : hint;
    const double lower = lower_const ? y0 * (b - a) : -hint;
    area += upper - lower;
  }
  return area;
}

std::uint64_t grid_index(const AmplitudeTree& t, const GridPoint& k) {
  const std::int64_t offset = (std::int64_t{1} << t.m) * t.L;
  std::uint64_t idx = 0;
  for (int d = 0; d < t.n; ++d) {
    const std::int64_t u = k[d] + offset;
    if (u < 0 || u >= 2 * offset) throw std::out_of_range("grid point outside the cube");
    idx = (idx << t.bits_per_dim) | static_cast<std::uint64_t>(u);
  }
  return idx;
}

double trace_distance_real(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) throw std::invalid_argument("state sizes differ");
  double ab = 0, aa = 0, bb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ab += a[i] * b[i];
    aa += a[i] * a[i];
    bb += b[i] * b[i];
  }
  if (aa <= 0 || bb <= 0) throw std::invalid_argument("zero state");
  const double ip = ab / std::sqrt(aa * bb);
  return std::sqrt(std::max(0.0, 1.0 - ip * ip));
}

AmplitudeTree grover_rudolph_prepare(const BallGridSpec& spec, const PrepareOptions& opt) {
  check_spec(spec);
  if (!spec.center.empty())
    for (double c : spec.center)
      if (c != 0.0) throw std::invalid_argument("state preparation expects a centered ball");
  if (spec.radius < 1.0) throw std::invalid_argument("radius must be at least 1");
  if ((spec.L & (spec.L - 1)) != 0) throw std::invalid_argument("L must be a power of two");
  if (opt.method == VolumeMethod::exact && spec.n != 2)
    throw std::invalid_argument("exact volumes are implemented for n = 2 only");

  AmplitudeTree t;
  t.n = spec.n;
  t.L = spec.L;
  while (std::ldexp(1.0, t.m) <= spec.radius) ++t.m;  // grid point x = 2^m is not representable
  int log_l = 0;
  while ((std::int64_t{1} << log_l) < spec.L) ++log_l;
  t.bits_per_dim = t.m + 1 + log_l;
  t.K = t.n * t.bits_per_dim;
  if (t.K > 22) throw GeometryBudgetError("more than 22 qubits");
  t.amplitudes.assign(std::size_t{1} << t.K, 0.0);

  const int n = t.n;
  const double radius = spec.radius;
  const double inv_l = 1.0 / static_cast<double>(spec.L);
  const std::int64_t offset = (std::int64_t{1} << t.m) * spec.L;
  const double eps = opt.target_accuracy;
  const auto samples_per_node =
      static_cast<std::uint64_t>(std::ceil(std::log(2.0 / opt.delta) / (2 * eps * eps)));
  Rng rng = Rng::stream(opt.seed, "grover_rudolph");
  std::uint64_t samples_used = 0;

  using Box = std::vector<std::pair<std::int64_t, std::int64_t>>;  // half-open integer ranges
  auto nearest2 = [&](const Box& b) {
    double s = 0;
    for (const auto& [lo, hi] : b) {
      const double a = lo * inv_l, z = hi * inv_l;
      const double c = std::clamp(0.0, a, z);
      s += c * c;
    }
    return s;
  };
  auto farthest2 = [&](const Box& b) {
    double s = 0;
    for (const auto& [lo, hi] : b) {
      const double v = std::max(std::fabs(lo * inv_l), std::fabs(hi * inv_l));
      s += v * v;
    }
    return s;
  };
  auto exact_volume = [&](const Box& b) {
    return ball_box_volume_2d(radius, b[0].first * inv_l, b[0].second * inv_l, b[1].first * inv_l,
                              b[1].second * inv_l);
  };

  Box box(n, {-offset, offset});
  std::function<void(int, std::uint64_t, double)> visit = [&](int j, std::uint64_t prefix, double amp) {
    ++t.nodes;
    if (j == t.K) {
      t.amplitudes[prefix] = amp;
      return;
    }
    const int d = j / t.bits_per_dim;
    const auto [lo, hi] = box[d];
    const std::int64_t mid = lo + (hi - lo) / 2;
    Box child[2] = {box, box};
    child[0][d] = {lo, mid};
    child[1][d] = {mid, hi};

    double s[2];
    std::optional<double> exact;
    if (n == 2) {
      const double v0 = exact_volume(child[0]), v1 = exact_volume(child[1]);
      if (v0 + v1 > 0) exact = v0 / (v0 + v1);
    }
    const double r2 = radius * radius;
    if (j == 0) {
      s[0] = s[1] = 0.5;
    } else if (opt.method == VolumeMethod::exact) {
      if (!exact) return;
      s[0] = *exact;
      s[1] = 1.0 - *exact;
    } else if (farthest2(box) <= r2) {
      s[0] = s[1] = 0.5;
    } else if (nearest2(child[0]) > r2 || nearest2(child[1]) > r2) {
      const int live = nearest2(child[0]) > r2 ? 1 : 0;
      if (nearest2(child[live]) > r2) return;
      s[live] = 1.0;
      s[1 - live] = 0.0;
    } else {
      ++t.estimated_nodes;
      samples_used += samples_per_node;
      if (samples_used > opt.max_samples)
        throw GeometryBudgetError("state preparation exceeded its sample budget");
      std::vector<double> a(n), z(n);
      for (int e = 0; e < n; ++e) {
        a[e] = std::max(box[e].first * inv_l, -radius);
        z[e] = std::min(box[e].second * inv_l, radius);
      }
      const double split = mid * inv_l;
      std::uint64_t c[2] = {0, 0};
      for (std::uint64_t k = 0; k < samples_per_node; ++k) {
        double norm2 = 0, xd = 0;
        for (int e = 0; e < n; ++e) {
          const double x = a[e] + (z[e] - a[e]) * rng.uniform();
          norm2 += x * x;
          if (e == d) xd = x;
        }
        if (norm2 <= r2) ++c[xd >= split ? 1 : 0];
      }
      if (c[0] + c[1] == 0) return;
      s[0] = static_cast<double>(c[0]) / static_cast<double>(c[0] + c[1]);
      s[1] = 1.0 - s[0];
    }
    if (j == 0) {
      t.first_split[0] = s[0];
      t.first_split[1] = s[1];
    }
    if (exact) {
      const double e0 = *exact, e1 = 1.0 - *exact;
      if (e0 > 0) t.max_split_error = std::max(t.max_split_error, std::fabs(s[0] / e0 - 1));
      if (e1 > 0) t.max_split_error = std::max(t.max_split_error, std::fabs(s[1] / e1 - 1));
    }
    for (int b = 0; b < 2; ++b) {
      if (s[b] <= 0) continue;
      const auto saved = box[d];
      box[d] = child[b][d];
      visit(j + 1, prefix << 1 | static_cast<std::uint64_t>(b), amp * std::sqrt(s[b]));
      box[d] = saved;
    }
  };
  visit(0, 0, 1.0);

  t.uniform.assign(t.amplitudes.size(), 0.0);
  for_each_grid_point(spec, 10'000'000, [&](const GridPoint& k) { t.uniform[grid_index(t, k)] = 1.0; });
  t.certificate = trace_distance_real(t.amplitudes, t.uniform);

  if (n == 2) {
    t.reference.assign(t.amplitudes.size(), 0.0);
    const double total = std::numbers::pi * radius * radius;
    for (std::int64_t i = -offset; i < offset; ++i)
      for (std::int64_t k = -offset; k < offset; ++k) {
        const double v = ball_box_volume_2d(radius, i * inv_l, (i + 1) * inv_l, k * inv_l, (k + 1) * inv_l);
        if (v > 0) t.reference[grid_index(t, {i, k})] = std::sqrt(v / total);
      }
    t.reference_distance = trace_distance_real(t.amplitudes, t.reference);
    double ip = 0;
    for (std::size_t i = 0; i < t.amplitudes.size(); ++i) ip += t.amplitudes[i] * t.reference[i];
    t.inner_product = ip;
    t.inner_product_bound = std::pow(std::max(0.0, 1.0 - t.max_split_error), t.K);
  }
  return t;
}

}  // namespace qreduce
