#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"

using namespace mkfk;

namespace {

/// Fields rebuilt on `grid` from the archived clouds 0 .. archive.steps()-1.
AccumulatedFields rebuild(const TrajectoryArchive& archive, const Grid1D& grid, double delta) {
  AccumulatedFields f(grid, delta);
  for (std::size_t k = 0; k < archive.steps(); ++k)
    accumulate_step(f, archive.snapshots[k], archive.ensemble_size, delta, archive.dt);
  return f;
}

double midpoint_discrepancy(const TrajectoryArchive& archive, const Grid1D& grid, double delta, double window) {
  const auto f = rebuild(archive, grid, delta);
  double worst = 0.0;
  for (std::size_t g = 0; g + 1 < grid.count; ++g) {
    const double x = grid.node(g) + 0.5 * grid.spacing;
    if (std::abs(x) > window) continue;
    const auto a = interpolate(f, x);
    const auto e = exact_history_args(archive, x, delta, archive.ensemble_size, archive.steps());
    worst = std::max({worst, std::abs(a.integral - e.integral), std::abs(a.gradient - e.gradient)});
  }
  return worst;
}

}  // namespace

TEST(Fields, StartAtZero) {
  const auto g = make_symmetric_grid(2.0, 0.5);
  AccumulatedFields f(g, 0.3);
  EXPECT_EQ(f.A, std::vector<double>(g.count, 0.0));
  EXPECT_EQ(f.G, std::vector<double>(g.count, 0.0));
  EXPECT_EQ(f.time(), 0.0);
}

TEST(Fields, SingleParticleOneStep) {
  // A(0) = dt K(0) = 0.1 / sqrt(2 pi)
  const auto g = make_symmetric_grid(2.0, 0.5);
  AccumulatedFields f(g, 1.0);
  accumulate_step(f, {{0.0}, {1.0}}, 1, 1.0, 0.1);
  EXPECT_NEAR(f.A[4], 0.03989422804, 1e-11);
  EXPECT_EQ(f.G[4], 0.0);
  EXPECT_DOUBLE_EQ(f.time(), 0.1);
}

TEST(Fields, ZeroWeightCloudLeavesFieldsUnchanged) {
  const auto g = make_symmetric_grid(2.0, 0.5);
  AccumulatedFields f(g, 0.5);
  accumulate_step(f, {{0.0, 0.3}, {1.0, 1.0}}, 2, 0.5, 0.1);
  const auto A = f.A, G = f.G;
  accumulate_step(f, {{0.0, 0.3}, {0.0, 0.0}}, 2, 0.5, 0.1);
  EXPECT_EQ(f.A, A);
  EXPECT_EQ(f.G, G);
}

TEST(Fields, StaticCloudDoublesExactly) {
  const auto g = make_symmetric_grid(2.0, 0.25);
  const WeightedPointCloud c{{-0.4, 0.1, 0.7}, {1.0, 0.5, 0.25}};
  AccumulatedFields f(g, 0.4);
  accumulate_step(f, c, 3, 0.4, 0.125);
  const auto A1 = f.A;
  accumulate_step(f, c, 3, 0.4, 0.125);
  for (std::size_t i = 0; i < g.count; ++i) EXPECT_EQ(f.A[i], 2.0 * A1[i]);
}

TEST(Fields, RejectsMismatchedBandwidthAndStep) {
  const auto g = make_symmetric_grid(2.0, 0.5);
  AccumulatedFields f(g, 0.3);
  EXPECT_THROW(accumulate_step(f, {{0.0}, {1.0}}, 1, 0.4, 0.1), std::invalid_argument);
  accumulate_step(f, {{0.0}, {1.0}}, 1, 0.3, 0.1);
  EXPECT_THROW(accumulate_step(f, {{0.0}, {1.0}}, 1, 0.3, 0.2), std::invalid_argument);
}

TEST(Interpolate, NodesMidpointsAndAffine) {
  const auto g = make_grid(-1.0, 1.0, 0.25);
  AccumulatedFields f(g, 0.3);
  for (std::size_t i = 0; i < g.count; ++i) {
    f.A[i] = 3.0 * g.node(i) + 2.0;
    f.G[i] = std::sin(static_cast<double>(i));
  }
  for (std::size_t i = 0; i < g.count; ++i) {
    const auto a = interpolate(f, g.node(i));
    EXPECT_EQ(a.integral, f.A[i]);
    EXPECT_EQ(a.gradient, f.G[i]);
  }
  for (std::size_t i = 0; i + 1 < g.count; ++i) {
    const double x = g.node(i) + 0.125;
    EXPECT_NEAR(interpolate(f, x).gradient, 0.5 * (f.G[i] + f.G[i + 1]), 1e-15);
  }
  for (double x : {-0.93, -0.2, 0.0, 0.61, 0.999}) EXPECT_NEAR(interpolate(f, x).integral, 3.0 * x + 2.0, 1e-14);
}

TEST(Interpolate, OutsideReturnsBoundaryAndCounts) {
  const auto g = make_grid(-1.0, 1.0, 0.5);
  AccumulatedFields f(g, 0.3);
  f.A = {1, 2, 3, 4, 5};
  std::size_t ood = 0;
  EXPECT_EQ(interpolate(f, -3.0, &ood).integral, 1.0);
  EXPECT_EQ(interpolate(f, 2.0, &ood).integral, 5.0);
  EXPECT_EQ(interpolate(f, 0.9, &ood).integral, 4.8);
  EXPECT_EQ(ood, 2u);
}

TEST(ExactHistory, SingleSnapshot) {
  TrajectoryArchive a;
  a.dt = 0.05;
  a.ensemble_size = 1;
  a.snapshots.push_back({{0.0}, {1.0}});
  const auto args = exact_history_args(a, 0.0, 1.0, 1);
  EXPECT_NEAR(args.integral, 0.05 * 0.3989422804014327, 1e-16);
  EXPECT_EQ(args.gradient, 0.0);
}

TEST(ExactHistory, EmptyWeights) {
  TrajectoryArchive a;
  a.dt = 0.05;
  a.ensemble_size = 2;
  for (int k = 0; k < 4; ++k) a.snapshots.push_back({{0.1 * k, -0.2}, {0.0, 0.0}});
  const auto args = exact_history_args(a, 0.0, 0.3, 2);
  EXPECT_EQ(args.integral, 0.0);
  EXPECT_EQ(args.gradient, 0.0);
}

TEST(ExactHistory, NodeEquivalenceWithAccumulator) {
  auto c = test::small_config(100, 0.4, 2e-3);  // 200 steps
  RunOptions opt;
  opt.keep_archive = true;
  opt.snapshot_stride = 200;
  const auto run = run_simulation(c, opt);
  ASSERT_TRUE(run.archive);
  const auto& f = run.fields;
  ASSERT_EQ(f.steps, 200u);
  for (std::size_t g = 0; g < f.grid.count; ++g) {
    const auto e = exact_history_args(*run.archive, f.grid.node(g), c.kernel.bandwidth, c.particles, f.steps);
    EXPECT_LE(std::abs(f.A[g] - e.integral), 1e-12 * std::max(std::abs(e.integral), 1e-300)) << g;
    EXPECT_LE(std::abs(f.G[g] - e.gradient), 1e-12 * std::max(std::abs(e.gradient), 1e-300)) << g;
  }
}

TEST(ExactHistory, OffNodeErrorIsSecondOrder) {
  auto c = test::small_config(100, 0.2, 2e-3);
  RunOptions opt;
  opt.keep_archive = true;
  opt.snapshot_stride = 100;
  const auto run = run_simulation(c, opt);
  const double delta = c.kernel.bandwidth;
  const double e1 = midpoint_discrepancy(*run.archive, make_symmetric_grid(6.0, 0.1), delta, 4.0);
  const double e2 = midpoint_discrepancy(*run.archive, make_symmetric_grid(6.0, 0.05), delta, 4.0);
  const double e3 = midpoint_discrepancy(*run.archive, make_symmetric_grid(6.0, 0.025), delta, 4.0);
  EXPECT_GE(e1 / e2, 3.5);
  EXPECT_LE(e1 / e2, 4.5);
  EXPECT_GE(e2 / e3, 3.5);
  EXPECT_LE(e2 / e3, 4.5);
}

TEST(Fields, ExposureIsNonDecreasing) {
  auto c = test::small_config(150, 0.1, 2e-3);
  RunOptions opt;
  opt.field_stride = 5;
  const auto run = run_simulation(c, opt);
  ASSERT_GE(run.field_history.size(), 3u);
  for (std::size_t k = 1; k < run.field_history.size(); ++k)
    for (std::size_t g = 0; g < c.grid.count; ++g)
      EXPECT_GE(run.field_history[k].A[g], run.field_history[k - 1].A[g]);
  for (std::size_t g = 0; g < c.grid.count; ++g) EXPECT_GE(run.fields.A[g], 0.0);
}

TEST(Fields, TableColumns) {
  const auto g = make_grid(0.0, 1.0, 0.5);
  AccumulatedFields f(g, 0.3);
  f.A = {1, 2, 3};
  f.G = {-1, 0, 1};
  const auto t = fields_table(f);
  EXPECT_EQ(t.header, (std::vector<std::string>{"x", "A", "G"}));
  EXPECT_EQ(t.column("A"), f.A);
  EXPECT_EQ(t.column("x"), (std::vector<double>{0.0, 0.5, 1.0}));
}
