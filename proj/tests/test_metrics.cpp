#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace mkfk;

namespace {

DensityField random_field(const Grid1D& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  DensityField f{g, std::vector<double>(g.count)};
  for (double& v : f.values) v = u(rng);
  return f;
}

}  // namespace

TEST(Distance, IdenticalFieldsAreAtZero) {
  std::mt19937_64 rng(1);
  const auto g = make_grid(0.0, 2.0, 0.1);
  const auto a = random_field(g, rng);
  for (Norm n : {Norm::l1, Norm::l2, Norm::sup}) EXPECT_EQ(density_distance(a, a, n), 0.0);
}

TEST(Distance, L1AgainstZeroIsMass) {
  const auto g = make_symmetric_grid(8.0, 0.05);
  DensityField f{g, std::vector<double>(g.count)};
  for (std::size_t i = 0; i < g.count; ++i) f.values[i] = std::exp(-0.5 * g.node(i) * g.node(i)) / std::sqrt(2 * M_PI);
  const DensityField zero{g, std::vector<double>(g.count, 0.0)};
  EXPECT_DOUBLE_EQ(density_distance(f, zero, Norm::l1), total_mass(f));
  EXPECT_NEAR(total_mass(f), 1.0, 1e-9);
}

TEST(Distance, TriangleInequality) {
  std::mt19937_64 rng(2);
  const auto g = make_grid(-1.0, 1.0, 0.05);
  for (int trial = 0; trial < 100; ++trial) {
    const auto a = random_field(g, rng), b = random_field(g, rng), c = random_field(g, rng);
    for (Norm n : {Norm::l1, Norm::l2, Norm::sup})
      EXPECT_LE(density_distance(a, c, n), density_distance(a, b, n) + density_distance(b, c, n) + 1e-12);
  }
}

TEST(Distance, GridMismatchThrows) {
  const DensityField a{make_grid(0.0, 1.0, 0.1), std::vector<double>(11, 0.0)};
  const DensityField b{make_grid(0.0, 1.0, 0.05), std::vector<double>(21, 0.0)};
  EXPECT_THROW(density_distance(a, b, Norm::l1), GridMismatch);
  EXPECT_THROW(compare_series({0.0}, {a}, {a, a}), GridMismatch);
}

TEST(Stats, MeanStderrClosedForm) {
  const auto r = mean_stderr({1.0, 2.0, 3.0, 4.0});
  EXPECT_DOUBLE_EQ(r.mean, 2.5);
  EXPECT_NEAR(r.stderr_, std::sqrt(5.0 / 3.0 / 4.0), 1e-15);
  EXPECT_EQ(mean_stderr({4.0, 1.0, 3.0, 2.0}).mean, r.mean);  // order-independent
}

TEST(Stats, NonIncreasingWithinTwoStandardErrors) {
  EXPECT_TRUE(non_increasing_within_2se({{1.0, 0.1}, {0.5, 0.05}, {0.25, 0.02}}));
  EXPECT_TRUE(non_increasing_within_2se({{1.0, 0.1}, {1.1, 0.1}}));   // within slack
  EXPECT_FALSE(non_increasing_within_2se({{1.0, 0.01}, {1.5, 0.01}}));
}

TEST(Stats, BandExceedances) {
  // 3 sqrt(0.25 / 100) = 0.15
  const std::vector<double> a{0.5, 0.5, 0.5}, b{0.5, 0.64, 0.66}, v{0.25, 0.25, 0.25};
  EXPECT_EQ(band_exceedances(a, b, v, 100), 1u);
}

TEST(Mass, EstimatorSnapshotStartsAtOne) {
  for (Mode m : {Mode::feynman_kac, Mode::killed}) {
    auto c = test::small_config(500, 0.02);
    c.mode = m;
    const auto run = run_simulation(c);
    EXPECT_NEAR(total_mass(run.densities.front()), 1.0, 1e-6);
  }
}

TEST(Mass, ConservativeRunKeepsUnitMass) {
  auto c = test::conservative(test::small_config(500, 0.1));
  const auto run = run_simulation(c);
  for (std::size_t k = 0; k < run.times.size(); ++k)
    EXPECT_NEAR(total_mass(run.densities[k]) + run.escaped_mass[k], 1.0, 1e-6);
}

TEST(Mass, ConstantRateSurvival) {
  // drift-free, field-free, lambda = c0 = 1, t = 1: mass within 3 sigma of 1/e
  auto c = test::small_config(20000, 1.0, 0.01);
  c.grid = make_symmetric_grid(14.0, 0.2);
  c.mode = Mode::killed;
  RunOptions opt;
  opt.zero_fields = true;
  opt.snapshot_stride = 100;
  const auto run = run_simulation(c, opt);
  const double p = std::exp(-1.0);
  EXPECT_LE(std::abs(total_mass(run.densities.back()) - p), 3.0 * std::sqrt(p * (1 - p) / 20000) + 1e-6);
}

TEST(Convergence, TableShapeAndDeterminism) {
  auto c = test::small_config(0, 0.05, 2.5e-3);
  c.particles = 1;
  const auto t1 = convergence_study(c, {20, 40}, 2);
  const auto t2 = convergence_study(c, {20, 40}, 2);
  ASSERT_EQ(t1.rows.size(), 2u);
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(t1.rows[r].fk_errors.size(), 2u);
    EXPECT_EQ(t1.rows[r].fk_errors, t2.rows[r].fk_errors);
    EXPECT_EQ(t1.rows[r].killed_errors, t2.rows[r].killed_errors);
    EXPECT_GT(t1.rows[r].fk.mean, 0.0);
  }
}

TEST(Convergence, ModesAgreeWithoutReaction) {
  auto c = test::conservative(test::small_config(1, 0.05, 2.5e-3));
  const auto t = convergence_study(c, {30}, 2);
  EXPECT_EQ(t.rows[0].fk_errors, t.rows[0].killed_errors);
}

TEST(Convergence, ErrorShrinksWithN) {
  auto c = test::conservative(test::small_config(1, 0.05, 2.5e-3));
  const auto t = convergence_study(c, {100, 1600}, 6);
  EXPECT_GT(t.rows[0].fk.mean / t.rows[1].fk.mean, 2.0);  // 4 expected
}
