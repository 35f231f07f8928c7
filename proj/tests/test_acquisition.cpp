#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cmfbo/acquisition.hpp"
#include "oracle.hpp"

using namespace cmfbo;

namespace {

KernelHyper hyper(Eigen::Index d, double sf2, double ls, double lz, double eta) {
  KernelHyper h;
  h.signal_variance = sf2;
  h.length_scales = Eigen::VectorXd::Constant(d, ls);
  h.fidelity_length_scale = lz;
  h.noise_std = eta;
  return h;
}

Observation obs(Eigen::VectorXd x, double z, double y) { return {std::move(x), z, y, 1.0, nullptr}; }

GpModel random_model(Eigen::Index d, int n, std::mt19937_64& rng) {
  return GpModel(oracle::random_hyper(d, rng), oracle::random_data(n, d, rng));
}

}  // namespace

TEST(BetaSchedule, HandValues) {
  EXPECT_NEAR(beta_schedule(7, 1), 0.970406, 1e-6);
  EXPECT_NEAR(beta_schedule(1, 1), 0.138629, 1e-6);
  EXPECT_NEAR(beta_schedule(3, 5, 0.5), 0.5 * 3 * std::log(10.0), 1e-14);
}

TEST(BetaSchedule, StrictlyIncreasingInT) {
  for (int d = 1; d <= 8; ++d)
    for (int t = 1; t < 50; ++t) EXPECT_LT(beta_schedule(d, t), beta_schedule(d, t + 1));
}

TEST(BetaSchedule, RejectsNonPositiveArguments) {
  EXPECT_THROW(beta_schedule(0, 1), std::invalid_argument);
  EXPECT_THROW(beta_schedule(1, 0), std::invalid_argument);
}

TEST(Ucb, EmptyModelIsPriorBound) {
  const GpModel model(hyper(1, 1.0, 0.3, 0.5, kNoiseFloor), {});
  EXPECT_NEAR(ucb(Eigen::VectorXd::Constant(1, 0.4), model, 4.0), 2.0, 1e-7);
}

TEST(Ucb, ZeroBetaIsPosteriorMean) {
  std::mt19937_64 rng(1);
  const auto model = random_model(2, 5, rng);
  const auto x = oracle::uniform_vector(2, rng);
  EXPECT_DOUBLE_EQ(ucb(x, model, 0.0), model.posterior(x, kTopFidelity).mean);
}

TEST(Ucb, ObservedPointIsInterpolated) {
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.3);
  const GpModel model(hyper(1, 1.0, 0.3, 0.5, kNoiseFloor), {obs(x, 1.0, 0.8)}, false);
  const double beta = 2.0;
  EXPECT_NEAR(ucb(x, model, beta), 0.8, 2.0 * std::sqrt(beta) * kNoiseFloor + 1e-6);
}

TEST(MfUcb, EqualsUcbAtTopFidelity) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(3, 6, rng);
    const auto x = oracle::uniform_vector(3, rng);
    EXPECT_NEAR(mf_ucb(x, kTopFidelity, model, 1.3), ucb(x, model, 1.3), 1e-12);
  }
}

TEST(MfUcb, ZeroBetaDifferenceIsMeanDifference) {
  std::mt19937_64 rng(3);
  const auto model = random_model(2, 6, rng);
  const auto x = oracle::uniform_vector(2, rng);
  EXPECT_NEAR(mf_ucb(x, 0.2, model, 0.0) - mf_ucb(x, 0.7, model, 0.0),
              model.posterior(x, 0.2).mean - model.posterior(x, 0.7).mean, 1e-12);
}

TEST(MfUcb, TwoPointModelMatchesDenseOracle) {
  const auto h = hyper(2, 1.5, 0.4, 0.6, 0.1);
  const std::vector<Observation> data = {obs(Eigen::Vector2d(0.2, 0.3), 0.0, 0.4),
                                         obs(Eigen::Vector2d(0.7, 0.6), 1.0, -0.2)};
  const GpModel model(h, data, false);
  const Eigen::Vector2d x(0.45, 0.5);
  const double beta = 0.9;
  const double expected = oracle::posterior(data, h, x, 0.3).first +
                          std::sqrt(beta) * oracle::posterior(data, h, x, 1.0).second;
  EXPECT_NEAR(mf_ucb(x, 0.3, model, beta), expected, 1e-8);
}

TEST(AcquisitionGradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::Index d = 1 + trial % 3;
    const auto model = random_model(d, 5, rng);
    const auto x = oracle::uniform_vector(d, rng, 0.05, 0.95);
    const double z = oracle::uniform_vector(1, rng)[0];
    const double beta = 0.5 + trial * 0.1;
    const auto g = acquisition_gradient(x, z, model, beta);
    const auto fd = oracle::fd_gradient(
        [&](const Eigen::VectorXd& p) { return mf_ucb(p, z, model, beta); }, x);
    for (Eigen::Index i = 0; i < d; ++i)
      EXPECT_NEAR(g[i], fd[i], 1e-4 * std::max(1.0, std::abs(fd[i])));
  }
}

TEST(AcquisitionGradient, SymmetricModelHasZeroMidpointGradient) {
  const auto h = hyper(2, 1.0, 0.3, 0.5, 0.05);
  const GpModel model(h, {obs(Eigen::Vector2d(0.3, 0.5), 0.5, 1.0), obs(Eigen::Vector2d(0.7, 0.5), 0.5, 1.0)},
                      false);
  const auto g = acquisition_gradient(Eigen::Vector2d(0.5, 0.5), 0.5, model, 0.0);
  EXPECT_NEAR(g[0], 0.0, 1e-10);
}

TEST(AcquisitionGradient, ZeroBetaIsMeanGradient) {
  std::mt19937_64 rng(5);
  const auto model = random_model(2, 5, rng);
  const auto x = oracle::uniform_vector(2, rng);
  const auto der = model.posterior_derivatives(x, 0.4);
  const Eigen::VectorXd expected = model.scaling().scale * der.mean_grad;
  EXPECT_TRUE(acquisition_gradient(x, 0.4, model, 0.0).isApprox(expected, 1e-12));
}

TEST(MaximizeAcquisition, FindsGridArgmaxOfUnimodalLandscape) {
  // Posterior mean of a single bump is unimodal with an interior optimum.
  const auto h = hyper(2, 1.0, 0.25, 0.5, 0.01);
  const GpModel model(h, {obs(Eigen::Vector2d(0.37, 0.62), 1.0, 1.0)}, false);
  AcquisitionConfig config;
  std::mt19937_64 rng(6);
  const auto best = maximize_acquisition(model, 1.0, 0.0, std::nullopt, config, rng);
  double grid_best = -1e300;
  Eigen::Vector2d arg;
  for (int i = 0; i <= 100; ++i)
    for (int j = 0; j <= 100; ++j) {
      const Eigen::Vector2d p(i / 100.0, j / 100.0);
      const double v = mf_ucb(p, 1.0, model, 0.0);
      if (v > grid_best) grid_best = v, arg = p;
    }
  EXPECT_LE((best.x - arg).norm(), 1e-2);
  EXPECT_NEAR(best.x[0], 0.37, 1e-3);
  EXPECT_NEAR(best.x[1], 0.62, 1e-3);
  EXPECT_GE(best.value, grid_best - 1e-12);
}

TEST(MaximizeAcquisition, WarmStartNeverLosesToInit) {
  std::mt19937_64 rng(7);
  AcquisitionConfig config;
  for (int trial = 0; trial < 20; ++trial) {
    const auto model = random_model(2, 6, rng);
    const auto init = oracle::uniform_vector(2, rng);
    const auto best = maximize_acquisition(model, 0.5, 1.0, init, config, rng);
    EXPECT_GE(best.value, mf_ucb(init, 0.5, model, 1.0));
    EXPECT_TRUE((best.x.array() >= 0.0).all() && (best.x.array() <= 1.0).all());
    EXPECT_DOUBLE_EQ(best.value, mf_ucb(best.x, 0.5, model, 1.0));
  }
}

TEST(MaximizeAcquisition, FlatSurrogateTerminates) {
  const GpModel model(hyper(3, 1.0, 0.3, 0.5, kNoiseFloor), {});
  AcquisitionConfig config;
  std::mt19937_64 rng(8);
  const auto best = maximize_acquisition(model, 0.0, 0.0, std::nullopt, config, rng);
  EXPECT_EQ(best.x.size(), 3);
  EXPECT_TRUE((best.x.array() >= 0.0).all() && (best.x.array() <= 1.0).all());
}

TEST(ProgressiveAcquisition, PriorModelStaysAtLowestFidelity) {
  const GpModel model(hyper(2, 1.0, 0.3, 0.5, 0.05), {});
  std::mt19937_64 rng(9);
  const auto r = progressive_acquisition(model, 1, 0.5, AcquisitionConfig{}, rng);
  EXPECT_EQ(r.z, 0.0);
  ASSERT_EQ(r.fidelity_path.size(), 1u);
  EXPECT_NEAR(r.beta, beta_schedule(2, 1), 1e-15);
}

namespace {

// Dense noise-floor data on a smooth function: latent std is tiny everywhere.
GpModel certain_model(double lz) {
  std::vector<Observation> data;
  for (int i = 0; i <= 10; ++i)
    for (int k = 0; k <= 8; ++k) {
      const double x = i / 10.0, z = k / 8.0;
      data.push_back(obs(Eigen::VectorXd::Constant(1, x), z, std::sin(2.0 * x) + 0.3 * z));
    }
  return GpModel(hyper(1, 1.0, 0.6, lz, kNoiseFloor), data);
}

}  // namespace

TEST(ProgressiveAcquisition, CertainModelClimbsToTopFidelity) {
  const auto model = certain_model(0.3);
  std::mt19937_64 rng(10);
  const auto r = progressive_acquisition(model, 3, 0.3, AcquisitionConfig{}, rng);
  EXPECT_EQ(r.z, kTopFidelity);
  ASSERT_EQ(r.fidelity_path.size(), 5u);  // 0, 0.3, 0.6, 0.9, 1
  EXPECT_NEAR(r.fidelity_path[1].z, 0.3, 1e-15);
  for (const auto& step : r.fidelity_path) EXPECT_LT(step.sigma, 0.02);
}

TEST(ProgressiveAcquisition, LargeStepJumpsStraightToTop) {
  const auto model = certain_model(1.5);
  std::mt19937_64 rng(11);
  const auto r = progressive_acquisition(model, 3, 1.5, AcquisitionConfig{}, rng);
  ASSERT_EQ(r.fidelity_path.size(), 2u);
  EXPECT_EQ(r.z, kTopFidelity);
}

TEST(ProgressiveAcquisition, PathInvariantsAndDeterminism) {
  std::mt19937_64 data_rng(12);
  AcquisitionConfig config;
  config.lbfgs_restarts = 5;
  for (int trial = 0; trial < 10; ++trial) {
    const auto h = oracle::random_hyper(2, data_rng);
    auto data = oracle::random_data(30, 2, data_rng);
    auto tight = h;
    tight.noise_std = kNoiseFloor;
    const GpModel model(tight, data);
    std::mt19937_64 a(trial), b(trial);
    const auto ra = progressive_acquisition(model, 5, 0.25, config, a);
    const auto rb = progressive_acquisition(model, 5, 0.25, config, b);
    EXPECT_EQ(ra.x, rb.x);
    EXPECT_EQ(ra.z, rb.z);
    ASSERT_FALSE(ra.fidelity_path.empty());
    EXPECT_EQ(ra.fidelity_path.front().z, 0.0);
    for (std::size_t i = 1; i < ra.fidelity_path.size(); ++i) {
      EXPECT_GT(ra.fidelity_path[i].z, ra.fidelity_path[i - 1].z);
      EXPECT_LT(ra.fidelity_path[i - 1].sigma, config.epsilon);
    }
    EXPECT_LE(ra.z, kTopFidelity);
    EXPECT_TRUE((ra.x.array() >= 0.0).all() && (ra.x.array() <= 1.0).all());
    // Stopped either at the top or because the gate opened.
    EXPECT_TRUE(ra.z == kTopFidelity || ra.fidelity_path.back().sigma >= config.epsilon);
  }
}

TEST(GateSigma, LatentStdExcludesNoise) {
  const GpModel model(hyper(1, 1.0, 0.3, 0.5, 0.5), {}, false);
  AcquisitionConfig config;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_NEAR(gate_sigma(model, x, 0.0, config), 1.0, 1e-12);
  config.gate_on_latent_std = false;
  EXPECT_NEAR(gate_sigma(model, x, 0.0, config), std::sqrt(1.25), 1e-12);
}
