#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "qreduce/geometry.hpp"

using namespace qreduce;

TEST(Grid, Examples) {
  EXPECT_EQ(grid_points_in_ball({2, 1.0, 2, {}}).count, 13u);
  const auto one = grid_points_in_ball({1, 1.0, 1, {}}, true);
  EXPECT_EQ(one.count, 3u);
  EXPECT_EQ(one.points, (std::vector<GridPoint>{{-1}, {0}, {1}}));
  EXPECT_THROW(grid_points_in_ball({3, 50.0, 8, {}}), GeometryBudgetError);
}

TEST(Grid, CountMatchesVolume) {
  for (int n = 1; n <= 3; ++n)
    for (double r : {2.0, 3.0, 5.0})
      for (std::int64_t l : {2, 4, 8}) {
        if (r * l < std::pow(n, 1.5)) continue;
        if (n == 3 && r * l > 24) continue;
        EXPECT_LT(std::fabs(grid_volume_deviation({n, r, l, {}})), grid_volume_tolerance(n, r, l))
            << n << " " << r << " " << l;
      }
}

TEST(Grid, Symmetry) {
  const auto pts = grid_points_in_ball({3, 2.5, 2, {}}, true).points;
  const std::set<GridPoint> all(pts.begin(), pts.end());
  for (const auto& p : pts) {
    EXPECT_TRUE(all.count({p[1], p[0], p[2]}));
    EXPECT_TRUE(all.count({p[2], p[1], p[0]}));
    EXPECT_TRUE(all.count({-p[0], p[1], p[2]}));
    EXPECT_TRUE(all.count({p[0], p[1], -p[2]}));
  }
}

TEST(BallIntersection, Examples) {
  EXPECT_DOUBLE_EQ(ball_intersection_ratio(3, 2.0, 0.0).exact, 1.0);
  EXPECT_NEAR(ball_intersection_ratio(2, 2.0, 1.0).exact, 8.6084 / (4 * std::numbers::pi), 1e-4);
  EXPECT_NEAR(lens_ratio(2.0, 1.0), 0.6850, 1e-3);
  double prev = 1.0;
  for (double d = 0.0; d <= 4.0; d += 0.25) {
    const double r = ball_intersection_ratio(2, 2.0, d).exact;
    EXPECT_LE(r, prev + 1e-15);
    prev = r;
  }
}

TEST(BallIntersection, IncompleteBetaAgreesWithMonteCarlo) {
  for (int n : {2, 3, 4, 6}) {
    const auto r = ball_intersection_ratio(n, 3.0, 1.2, 200000, n);
    const double p = r.exact;
    EXPECT_NEAR(*r.monte_carlo, p, 4 * std::sqrt(p * (1 - p) / 200000) + 1e-9) << n;
    EXPECT_GE(p, r.cylinder_bound);
  }
}

TEST(BallIntersection, GridRatioNearLens) {
  const std::vector<std::vector<std::int64_t>> shifts{{1, 0}, {0, 1}, {1, 1}, {2, 1}, {0, 3}};
  for (double r : {2.0, 4.0, 8.0})
    for (const auto& s : shifts) {
      const double dist = std::hypot(double(s[0]), double(s[1]));
      EXPECT_NEAR(grid_intersection_ratio({2, r, 8, {}}, s), lens_ratio(r, dist), 0.02);
    }
  EXPECT_DOUBLE_EQ(grid_intersection_ratio({2, 3.0, 4, {}}, {0, 0}), 1.0);
  EXPECT_DOUBLE_EQ(grid_intersection_ratio({2, 1.0, 4, {}}, {3, 0}), 0.0);
}

TEST(BallIntersection, FittedConstantCarriesToHigherDimensions) {
  // Fit c on n = 2 grid data, then check 1 - ratio <= c sqrt(n) |d| / R for n <= 4.
  double c = 0;
  for (double r : {2.0, 4.0, 8.0})
    for (std::int64_t dx = 1; dx <= 3; ++dx) {
      const double ratio = grid_intersection_ratio({2, r, 8, {}}, {dx, 0});
      c = std::max(c, (1 - ratio) / (std::sqrt(2.0) * dx / r));
    }
  EXPECT_LT(c, 1.0);
  for (int n = 3; n <= 4; ++n)
    for (double r : {2.0, 3.0}) {
      std::vector<std::int64_t> shift(n, 0);
      shift[0] = 1;
      const std::int64_t l = n == 3 ? 4 : 2;
      const double ratio = grid_intersection_ratio({n, r, l, {}}, shift);
      EXPECT_GE(ratio, 1 - c * std::sqrt(double(n)) / r) << n << " " << r;
    }
}

TEST(BallIntersection, BoundaryLayer) {
  for (double r : {3.0, 5.0})
    for (std::int64_t l : {8, 16}) {
      const auto b = boundary_layer({2, r, l, {}});
      EXPECT_LE(b.fraction, b.bound);
    }
  const auto b3 = boundary_layer({3, 3.0, 4, {}});
  EXPECT_LE(b3.fraction, b3.bound);
}

TEST(BallIntersection, CsvRow) {
  EXPECT_EQ(intersection_csv_row(2, 4, 8, 1, 0.5, 0.25), "2,4,8,1,0.5,0.25");
}

TEST(BoxVolume, MatchesQuarterAndHalfDisc) {
  const double pi = std::numbers::pi;
  EXPECT_NEAR(ball_box_volume_2d(2.0, -5, 5, -5, 5), 4 * pi, 1e-12);
  EXPECT_NEAR(ball_box_volume_2d(2.0, 0, 5, 0, 5), pi, 1e-12);
  EXPECT_NEAR(ball_box_volume_2d(2.0, -5, 5, 0, 5), 2 * pi, 1e-12);
  EXPECT_NEAR(ball_box_volume_2d(2.0, -0.5, 0.5, -0.5, 0.5), 1.0, 1e-12);
  EXPECT_DOUBLE_EQ(ball_box_volume_2d(1.0, 1.5, 2, 0, 1), 0.0);
  // Sum over a partition equals the disc.
  double total = 0;
  for (int i = -6; i < 6; ++i)
    for (int j = -6; j < 6; ++j) total += ball_box_volume_2d(2.5, i * 0.5, i * 0.5 + 0.5, j * 0.5, j * 0.5 + 0.5);
  EXPECT_NEAR(total, pi * 6.25, 1e-10);
}

TEST(StatePreparation, ExactVolumesReproduceDiscretisedState) {
  PrepareOptions opt;
  opt.method = VolumeMethod::exact;
  const auto t = grover_rudolph_prepare({2, 3.0, 8, {}}, opt);
  EXPECT_EQ(t.m, 2);
  EXPECT_EQ(t.K, 12);
  EXPECT_DOUBLE_EQ(t.first_split[0], 0.5);
  EXPECT_DOUBLE_EQ(t.first_split[1], 0.5);
  EXPECT_LT(*t.reference_distance, 1e-6);
  double norm = 0;
  for (double a : t.amplitudes) norm += a * a;
  EXPECT_NEAR(norm, 1.0, 1e-12);
}

TEST(StatePreparation, MonteCarloCertificate) {
  const auto t = grover_rudolph_prepare({2, 3.0, 8, {}}, {});
  EXPECT_DOUBLE_EQ(t.first_split[0], 0.5);
  EXPECT_DOUBLE_EQ(t.first_split[1], 0.5);
  EXPECT_GT(t.estimated_nodes, 0u);
  EXPECT_LE(*t.reference_distance, 0.01);
  EXPECT_GE(*t.inner_product, *t.inner_product_bound);
  EXPECT_NEAR(*t.reference_distance, std::sqrt(1 - *t.inner_product * *t.inner_product), 1e-9);
  // Triangle inequality against the discretisation gap D(reference, uniform).
  const double gap = trace_distance_real(t.reference, t.uniform);
  EXPECT_LE(std::fabs(t.certificate - gap), *t.reference_distance + 1e-12);
}

TEST(StatePreparation, HigherDimensionRuns) {
  PrepareOptions opt;
  opt.target_accuracy = 0.05;
  const auto t = grover_rudolph_prepare({3, 1.0, 2, {}}, opt);
  EXPECT_EQ(t.K, 3 * (1 + 1 + 1));
  EXPECT_FALSE(t.reference_distance.has_value());
  EXPECT_LT(t.certificate, 1.0);
}

TEST(StatePreparation, Guards) {
  EXPECT_THROW(grover_rudolph_prepare({2, 0.5, 8, {}}), std::invalid_argument);
  EXPECT_THROW(grover_rudolph_prepare({2, 3.0, 6, {}}), std::invalid_argument);
  EXPECT_THROW(grover_rudolph_prepare({3, 30.0, 64, {}}), GeometryBudgetError);
}
