#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cmfbo/benchmarks.hpp"
#include "oracle.hpp"

using namespace cmfbo;

namespace {

// Independent brute-force argmax over an n x n grid of [0,1]^2.
Eigen::Vector2d grid_oracle(const SyntheticMfFunction& f, double z, int n) {
  double best = -std::numeric_limits<double>::infinity();
  Eigen::Vector2d arg;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const Eigen::Vector2d p(i / (n - 1.0), j / (n - 1.0));
      const double v = f.value(p, z);
      if (v > best) best = v, arg = p;
    }
  return arg;
}

}  // namespace

TEST(BumpSum, ValueAndGradient) {
  const std::vector<Bump> bumps = {{Eigen::Vector2d(0.2, 0.3), 1.5, 0.2}, {Eigen::Vector2d(0.7, 0.6), -0.4, 0.3}};
  const Eigen::Vector2d x(0.4, 0.5);
  double expected = 0.0;
  for (const auto& b : bumps) expected += b.height * std::exp(-(x - b.center).squaredNorm() / (2 * b.width * b.width));
  Eigen::VectorXd g;
  EXPECT_NEAR(bump_sum(bumps, x, &g), expected, 1e-15);
  const auto fd = oracle::fd_gradient([&](const Eigen::VectorXd& p) { return bump_sum(bumps, p); }, x);
  EXPECT_TRUE(g.isApprox(fd, 1e-7));
}

TEST(CostModel, EndpointsAndMonotone) {
  const CostModel c{100.0, 1000.0};
  EXPECT_EQ(c(0.0), 100.0);
  EXPECT_EQ(c(1.0), 1000.0);
  for (int i = 0; i < 10; ++i) EXPECT_LT(c(i / 10.0), c((i + 1) / 10.0));
}

TEST(OverlapBenchmark, ZeroDriftKeepsArgmaxFixed) {
  const std::vector<Bump> base = {{Eigen::Vector2d(0.4, 0.6), 1.0, 0.15}, {Eigen::Vector2d(0.8, 0.2), 0.5, 0.1}};
  const SyntheticMfFunction f(2, base, {}, 0.0, 0.5, CostModel{});
  const auto top = grid_oracle(f, 1.0, 101);
  for (double z : {0.0, 0.3, 0.7}) EXPECT_EQ(grid_oracle(f, z, 101), top);
}

TEST(OverlapBenchmark, CertificateHoldsOnFineGrid) {
  for (std::uint64_t seed = 0; seed < 3; ++seed) {
    const auto f = make_overlap_benchmark(2, 0.1, seed);
    const auto a0 = grid_oracle(f, 0.0, 200);
    const auto a5 = grid_oracle(f, 0.5, 200);
    const auto a1 = grid_oracle(f, 1.0, 200);
    EXPECT_LE((a0 - a1).norm(), 0.1 + 1e-9) << "seed " << seed;
    EXPECT_LE((a5 - a1).norm(), 0.1 + 1e-9) << "seed " << seed;
    EXPECT_LE((a0 - a5).norm(), 0.1 + 1e-9) << "seed " << seed;
  }
}

TEST(OverlapBenchmark, CostEndpointsAndTopOptimum) {
  OverlapOptions opt;
  opt.cost = {50.0, 500.0};
  const auto f = make_overlap_benchmark(2, 0.1, 4, opt);
  EXPECT_EQ(f.cost(0.0), 50.0);
  EXPECT_EQ(f.cost(1.0), 500.0);
  const auto top = f.top_optimum();
  const auto grid = grid_oracle(f, 1.0, 200);
  EXPECT_GE(top.value, f.value(grid, 1.0));
  EXPECT_NEAR(top.value, f.value(top.x, 1.0), 0.0);
}

TEST(OverlapBenchmark, SupportsUpToSixDimensions) {
  const auto f = make_overlap_benchmark(6, 0.2, 1);
  EXPECT_EQ(f.dim(), 6);
  EXPECT_THROW(make_overlap_benchmark(7, 0.1, 1), std::invalid_argument);
  EXPECT_THROW(make_overlap_benchmark(2, 0.0, 1), std::invalid_argument);
  EXPECT_THROW(make_overlap_benchmark(2, 0.3, 1), std::invalid_argument);
}

TEST(OverlapBenchmark, NoiseFreeEvaluationIsPure) {
  const auto spec = make_overlap_benchmark(2, 0.1, 2).objective("overlap");
  const Eigen::Vector2d x(0.3, 0.9);
  const auto a = spec.evaluate(x, 0.4, nullptr, 1);
  const auto b = spec.evaluate(x, 0.4, nullptr, 99);
  EXPECT_EQ(a.y, b.y);
  EXPECT_EQ(a.cost, b.cost);
}

TEST(OverlapBenchmark, NoiseIsSeeded) {
  OverlapOptions opt;
  opt.noise_std = 0.1;
  const auto spec = make_overlap_benchmark(2, 0.1, 2, opt).objective("overlap");
  const Eigen::Vector2d x(0.3, 0.9);
  EXPECT_EQ(spec.evaluate(x, 0.4, nullptr, 1).y, spec.evaluate(x, 0.4, nullptr, 1).y);
  EXPECT_NE(spec.evaluate(x, 0.4, nullptr, 1).y, spec.evaluate(x, 0.4, nullptr, 2).y);
}

TEST(DeceptiveBenchmark, RankingInvertsAlongIterationAxis) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto b = make_deceptive_iteration_benchmark(seed);
    const auto& f = b.function;
    EXPECT_GT(f.iteration_value(b.x_deceptive, 0.0), f.iteration_value(b.x_true, 0.0));
    // Range recomputed independently on a coarser grid.
    double lo = 1e300, hi = -1e300;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const double v = f.value(Eigen::Vector2d(i / 100.0, j / 100.0), 1.0);
        lo = std::min(lo, v), hi = std::max(hi, v);
      }
    EXPECT_GE(f.value(b.x_true, 1.0) - f.value(b.x_deceptive, 1.0), 0.2 * (hi - lo));
    // The finer construction grid can only widen the range.
    EXPECT_GE(b.value_range, hi - lo - 1e-12);
    EXPECT_NEAR(b.value_range, hi - lo, 1e-2);
  }
}

TEST(DeceptiveBenchmark, CurriculumAxisKeepsOptimumInPlace) {
  const auto b = make_deceptive_iteration_benchmark(0);
  const auto top = grid_oracle(b.function, 1.0, 101);
  EXPECT_LE((top - b.x_true).norm(), 0.02);
  EXPECT_LE((grid_oracle(b.function, 0.0, 101) - b.x_true).norm(), 0.1);
}

TEST(DeceptiveBenchmark, AxesAgreeAtTopFidelity) {
  const auto b = make_deceptive_iteration_benchmark(1);
  const auto spec = b.function.objective("deceptive");
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto x = oracle::uniform_vector(2, rng);
    EXPECT_NEAR(spec.evaluate(x, 1.0, nullptr, 0).y, spec.evaluate_iteration(x, 1.0, nullptr, 0).y, 1e-15);
  }
}
