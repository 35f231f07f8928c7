#pragma once

#include <optional>
#include <random>
#include <vector>

#include <Eigen/Core>

#include "cmfbo/gp.hpp"

namespace cmfbo {

/// Normalized top fidelity. Every point handled by the acquisition layer is
/// in the unit hypercube, so z_min = 0 and z_max = 1.
inline constexpr double kTopFidelity = 1.0;

struct AcquisitionConfig {
  double beta_coefficient = 0.2;
  /// Uncertainty gate of the progressive procedure, in standardized target units.
  double epsilon = 0.02;
  int lbfgs_restarts = 20;
  int lbfgs_max_iters = 200;
  double grad_tolerance = 1e-6;
  /// Extra Gaussian-perturbed starts added around the warm-start point.
  int warm_perturbations = 2;
  double warm_perturbation_std = 0.05;
  /// Gate on the latent-function std (noise term removed) instead of the
  /// predictive std.
  bool gate_on_latent_std = true;

  void validate() const;
};

/// beta_t = coefficient * d * ln(2 t).
double beta_schedule(int d, int t, double coefficient = 0.2);

/// mu(x) + sqrt(beta) sigma(x) at the top fidelity, in target units.
double ucb(const Eigen::Ref<const Eigen::VectorXd>& x, const GpModel& model, double beta);

/// mu(x, z_target) + sqrt(beta) sigma(x, z_max), in target units.
double mf_ucb(const Eigen::Ref<const Eigen::VectorXd>& x, double z_target, const GpModel& model,
              double beta);

/// Gradient of mf_ucb with respect to x. The exploration term contributes
/// nothing where sigma(x, z_max) < 1e-12.
Eigen::VectorXd acquisition_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double z_target,
                                     const GpModel& model, double beta);

struct AcquisitionMaximum {
  Eigen::VectorXd x;
  double value = 0.0;  // mf_ucb(x, z_target) in target units
};

/// Maximizes mf_ucb over [0,1]^d. Without `init`, runs lbfgs_restarts ascents
/// from uniform random starts; with `init`, runs from init and
/// warm_perturbations perturbed copies. Never returns a point worse than the
/// best start.
AcquisitionMaximum maximize_acquisition(const GpModel& model, double z_target, double beta,
                                        const std::optional<Eigen::VectorXd>& init,
                                        const AcquisitionConfig& config, std::mt19937_64& rng);

struct FidelityStep {
  double z = 0.0;
  Eigen::VectorXd x;
  double sigma = 0.0;  // gate std at (x, z), standardized units
};

struct ProgressiveResult {
  Eigen::VectorXd x;
  double z = 0.0;
  double beta = 0.0;
  std::vector<FidelityStep> fidelity_path;
};

/// Std used by the progressive gate at (x, z), standardized units.
double gate_sigma(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                  const AcquisitionConfig& config);

/// Starts at z_min with a cold maximization, then raises z by l_z (capped at
/// z_max) and re-maximizes from the previous x while the gate std stays
/// below epsilon.
ProgressiveResult progressive_acquisition(const GpModel& model, int t, double l_z,
                                          const AcquisitionConfig& config, std::mt19937_64& rng);

}  // namespace cmfbo
