#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "test_support.hpp"

using namespace mkfk;

namespace {

bool mentions(const std::vector<std::string>& v, const std::string& needle) {
  return std::any_of(v.begin(), v.end(), [&](const std::string& s) { return s.find(needle) != std::string::npos; });
}

}  // namespace

TEST(Config, DefaultPhysicsIsValid) {
  SimConfig c;
  EXPECT_TRUE(config_violations(c).empty());
  EXPECT_DOUBLE_EQ(c.physical.phi0 + c.physical.phi1 * c.physical.c0, 1.0);
}

TEST(Config, NegativePorosityIsRejected) {
  SimConfig c;
  c.physical.phi1 = -0.4;
  const auto v = config_violations(c);
  ASSERT_FALSE(v.empty());
  EXPECT_TRUE(mentions(v, "porosity positivity"));
  EXPECT_THROW(validate_config(c), ConfigError);
}

TEST(Config, CflViolationIsRejected) {
  // 0.01 > 0.1^2 / 2 = 0.005
  SimConfig c;
  c.grid = make_symmetric_grid(5.0, 0.1);
  c.step = 0.01;
  EXPECT_TRUE(mentions(config_violations(c), "CFL"));
  c.step = 0.005;
  EXPECT_FALSE(mentions(config_violations(c), "CFL"));
}

TEST(Config, StepMustDivideHorizon) {
  SimConfig c;
  c.horizon = 1.0;
  c.step = 3e-4;
  EXPECT_TRUE(mentions(config_violations(c), "divide"));
  c.step = 2.5e-4;
  EXPECT_FALSE(mentions(config_violations(c), "divide"));
}

TEST(Config, EveryViolationIsReported) {
  SimConfig c;
  c.physical.phi1 = -0.4;
  c.kernel.bandwidth = 0.0;
  c.particles = 0;
  c.initial.width = 0.3;
  try {
    validate_config(c);
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_GE(e.violations().size(), 4u);
    EXPECT_TRUE(mentions(e.violations(), "bandwidth"));
    EXPECT_TRUE(mentions(e.violations(), "N must"));
    EXPECT_TRUE(mentions(e.violations(), "maximum"));
  }
}

TEST(Config, ValidationIsIdempotent) {
  const SimConfig c = test::small_config();
  const SimConfig& once = validate_config(c);
  const SimConfig& twice = validate_config(once);
  EXPECT_EQ(&once, &c);
  EXPECT_EQ(&twice, &c);
}

TEST(Grid, NodeCountIsTwoLOverHPlusOne) {
  const auto g = make_symmetric_grid(8.0, 0.05);
  EXPECT_EQ(g.count, 321u);
  EXPECT_DOUBLE_EQ(g.node(0), -8.0);
  EXPECT_NEAR(g.upper(), 8.0, 1e-12);
  for (std::size_t i = 1; i < g.count; ++i) EXPECT_GT(g.node(i), g.node(i - 1));
}

TEST(Grid, RejectsNonIntegerCellCount) {
  EXPECT_THROW(make_grid(0.0, 1.0, 0.3), ConfigError);
  EXPECT_THROW(make_grid(0.0, 0.1, 0.1), ConfigError);  // two nodes only
  EXPECT_THROW(make_grid(1.0, 0.0, 0.1), ConfigError);
}

TEST(Grid, TrapezoidIntegratesLinearExactly) {
  const auto g = make_grid(-1.0, 3.0, 0.25);
  std::vector<double> v(g.count);
  for (std::size_t i = 0; i < g.count; ++i) v[i] = 2.0 * g.node(i) + 1.0;
  EXPECT_NEAR(trapezoid(g, v), 12.0, 1e-12);  // [x^2 + x] from -1 to 3
}

TEST(Grid, DefaultHalfWidthFormula) {
  InitialDensitySpec init;  // N(0, 1): support radius 6
  const double L = default_half_width(1.0, init, 0.3, 0.05);
  const double raw = 6.0 * std::sqrt(2.0) + 6.0 + 2.4;
  EXPECT_GE(L, raw);
  EXPECT_LT(L, raw + 0.05);
  EXPECT_NEAR(std::remainder(L, 0.05), 0.0, 1e-9);
}

TEST(InitialDensity, NarrowGaussianExceedsBound) {
  // 1 / (0.3 sqrt(2 pi)) = 1.3298 > 1
  InitialDensitySpec s;
  s.width = 0.3;
  EXPECT_NEAR(max_initial_density(s), 1.329807601338109, 1e-12);
  EXPECT_TRUE(mentions(initial_density_violations(s, 1.0), "maximum"));
  s.width = 1.0;
  EXPECT_TRUE(initial_density_violations(s, 1.0).empty());
}

TEST(InitialDensity, FamiliesIntegrateToOne) {
  const auto g = make_symmetric_grid(16.0, 0.01);
  for (auto fam : {InitialFamily::gaussian_bump, InitialFamily::truncated_cosine_bump}) {
    InitialDensitySpec s;
    s.family = fam;
    s.width = 2.0;
    s.center = 0.5;
    std::vector<double> v(g.count);
    for (std::size_t i = 0; i < g.count; ++i) v[i] = initial_density(s, g.node(i));
    EXPECT_NEAR(trapezoid(g, v), 1.0, 1e-6) << to_string(fam);
    EXPECT_LE(*std::max_element(v.begin(), v.end()), max_initial_density(s) + 1e-15);
  }
}

TEST(InitialDensity, TabulatedNormalization) {
  InitialDensitySpec s;
  s.family = InitialFamily::tabulated;
  s.table_x = {-2.0, 0.0, 2.0};
  s.table_density = {0.0, 1.0, 0.0};  // triangle of mass 2
  EXPECT_TRUE(mentions(initial_density_violations(s, 1.0), "not normalized"));
  s.normalize = true;
  EXPECT_TRUE(initial_density_violations(s, 1.0).empty());
  EXPECT_DOUBLE_EQ(initial_density(s, 0.0), 0.5);
  EXPECT_DOUBLE_EQ(initial_density(s, 1.0), 0.25);
  EXPECT_DOUBLE_EQ(initial_density(s, 3.0), 0.0);
  s.table_density[1] = std::nan("");
  EXPECT_TRUE(mentions(initial_density_violations(s, 1.0), "non-finite"));
}

TEST(Sampling, GaussianMeanWithinClt) {
  // |mean| <= 3 sigma0 / sqrt(n)
  InitialDensitySpec s;
  InitialSampler sampler(s);
  const std::size_t n = 100000;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto st = make_stream(5, StreamKind::initial_position, i);
    sum += sampler(st);
  }
  EXPECT_LE(std::abs(sum / n), 3.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Sampling, CosineBumpMoments) {
  // Var = w^2 (1/3 - 2/pi^2) for (1 + cos(pi x / w)) / 2w on [-w, w].
  InitialDensitySpec s;
  s.family = InitialFamily::truncated_cosine_bump;
  s.width = 2.0;
  s.center = 1.0;
  InitialSampler sampler(s);
  const std::size_t n = 100000;
  double m1 = 0.0, m2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto st = make_stream(9, StreamKind::initial_position, i);
    const double x = sampler(st);
    ASSERT_LE(std::abs(x - 1.0), 2.0);
    m1 += x;
    m2 += (x - 1.0) * (x - 1.0);
  }
  const double var = 4.0 * (1.0 / 3.0 - 2.0 / (std::numbers::pi * std::numbers::pi));
  EXPECT_LE(std::abs(m1 / n - 1.0), 3.0 * std::sqrt(var / n));
  EXPECT_NEAR(m2 / n, var, 0.02 * var);
}

TEST(Sampling, SymmetricTableHasVanishingSkewness) {
  InitialDensitySpec s;
  s.family = InitialFamily::tabulated;
  s.table_x = {-3.0, -1.0, 0.0, 1.0, 3.0};
  s.table_density = {0.0, 0.2, 0.4, 0.2, 0.0};
  s.normalize = true;
  InitialSampler sampler(s);
  const std::size_t n = 200000;
  std::vector<double> xs(n);
  double mean = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto st = make_stream(2, StreamKind::initial_position, i);
    xs[i] = sampler(st);
    mean += xs[i];
  }
  mean /= n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : xs) {
    m2 += (x - mean) * (x - mean);
    m3 += std::pow(x - mean, 3);
  }
  const double skew = (m3 / n) / std::pow(m2 / n, 1.5);
  EXPECT_LT(std::abs(skew), 6.0 * std::sqrt(6.0 / n));
}

TEST(Sampling, DeterministicInStreamState) {
  InitialDensitySpec s;
  auto a = make_stream(1, StreamKind::initial_position, 42);
  auto b = make_stream(1, StreamKind::initial_position, 42);
  EXPECT_EQ(sample_initial_position(s, a), sample_initial_position(s, b));
}

TEST(Random, StreamsAreKeyedByEveryComponent) {
  std::set<std::uint64_t> firsts;
  for (auto kind : {StreamKind::initial_position, StreamKind::brownian_noise, StreamKind::killing_threshold})
    for (std::uint64_t id = 0; id < 4; ++id)
      for (std::uint64_t step = 0; step < 4; ++step) firsts.insert(make_stream(3, kind, id, step)());
  EXPECT_EQ(firsts.size(), 3u * 4u * 4u);
  EXPECT_NE(make_stream(3, StreamKind::brownian_noise, 0)(), make_stream(4, StreamKind::brownian_noise, 0)());
}

TEST(Random, UniformBitsLookUniform) {
  auto st = make_stream(77, StreamKind::brownian_noise, 0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int n = 200000;
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += u(st);
  EXPECT_NEAR(s / n, 0.5, 3.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(Modes, NamesRoundTrip) {
  EXPECT_EQ(parse_mode(to_string(Mode::killed)), Mode::killed);
  EXPECT_EQ(parse_mode("fk"), Mode::feynman_kac);
  EXPECT_EQ(parse_field_mode(to_string(FieldMode::exact_history)), FieldMode::exact_history);
  EXPECT_THROW(parse_mode("both"), ConfigError);
  EXPECT_EQ(parse_initial_family("truncated-cosine-bump"), InitialFamily::truncated_cosine_bump);
}
