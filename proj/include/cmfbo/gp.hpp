#pragma once

#include <memory>
#include <random>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "cmfbo/kernel.hpp"

namespace cmfbo {

/// Opaque warm-start payload produced by an objective evaluation (a trained
/// policy, a Q-table, ...). Objectives downcast their own artifacts.
struct Artifact {
  virtual ~Artifact() = default;
};
using ArtifactPtr = std::shared_ptr<const Artifact>;

/// One evaluated point. x and z live in the unit hypercube.
struct Observation {
  Eigen::VectorXd x;
  double z = 0.0;
  double y = 0.0;
  double cost = 0.0;
  ArtifactPtr artifact;
};

struct Prediction {
  double mean = 0.0;
  double std = 0.0;
};

/// Affine map between raw targets and the zero-mean unit-variance targets the
/// GP is fitted on.
struct TargetScaling {
  double offset = 0.0;
  double scale = 1.0;

  static TargetScaling fit(const std::vector<Observation>& data);
  double to_standard(double y) const { return (y - offset) / scale; }
  double from_standard(double y) const { return offset + scale * y; }
};

/// K(i, j) = mf_kernel(p_i, p_j), without the noise term.
Eigen::MatrixXd kernel_matrix(const std::vector<Observation>& data, const KernelHyper& hyper);

/// GP posterior over the joint (x, z) space with a cached Cholesky factor of
/// K + eta^2 I. Immutable once constructed; refitting builds a new model.
class GpModel {
 public:
  /// An empty data set gives the prior. With standardize = false targets are
  /// used as given (identity scaling).
  GpModel(KernelHyper hyper, std::vector<Observation> data, bool standardize = true);

  /// Posterior in target units (noise variance included, as in the predictive
  /// distribution of a new observation).
  Prediction posterior(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  /// Same in standardized target units.
  Prediction posterior_standardized(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;

  /// Standardized posterior mean and variance together with their gradients
  /// with respect to x.
  struct Derivatives {
    double mean = 0.0;
    double variance = 0.0;
    Eigen::VectorXd mean_grad;
    Eigen::VectorXd variance_grad;
  };
  Derivatives posterior_derivatives(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;

  const KernelHyper& hyper() const { return hyper_; }
  const std::vector<Observation>& data() const { return data_; }
  const TargetScaling& scaling() const { return scaling_; }
  Eigen::Index dim() const { return hyper_.dim(); }
  bool empty() const { return data_.empty(); }
  /// Lower-triangular factor L with L L^T = K + (eta^2 + jitter) I.
  Eigen::MatrixXd chol() const;
  const Eigen::VectorXd& alpha() const { return alpha_; }
  double jitter() const { return jitter_; }

 private:
  Eigen::VectorXd cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  double clamp_variance(double var) const;

  KernelHyper hyper_;
  std::vector<Observation> data_;
  TargetScaling scaling_;
  Eigen::MatrixXd x_;  // n x d
  Eigen::VectorXd z_;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
  double jitter_ = 0.0;
};

/// Cholesky of A with diagonal jitter escalated 1e-10 -> 1e-6 on failure.
/// Throws NumericalError if A is still not positive definite.
struct Factorization {
  Eigen::LLT<Eigen::MatrixXd> llt;
  double jitter = 0.0;
};
Factorization factorize_with_jitter(const Eigen::MatrixXd& a);

/// Log marginal likelihood of the targets as given (no standardization).
double log_marginal_likelihood(const std::vector<Observation>& data, const KernelHyper& hyper);

/// Hyperparameters in log space: [log sf2, log lambda_1..d, log l_z, log eta].
Eigen::VectorXd to_log_params(const KernelHyper& hyper);
KernelHyper from_log_params(const Eigen::Ref<const Eigen::VectorXd>& theta);

struct LmlWithGradient {
  double value = 0.0;
  Eigen::VectorXd gradient;  // d/d log-params, ordering as to_log_params
};
LmlWithGradient log_marginal_likelihood_with_gradient(const std::vector<Observation>& data,
                                                      const KernelHyper& hyper);

struct FitOptions {
  int restarts = 5;
  int max_iters = 100;
  double signal_variance_min = 1e-4, signal_variance_max = 1e2;
  double length_scale_min = 1e-2, length_scale_max = 10.0;
  double fidelity_length_scale_min = 5e-2, fidelity_length_scale_max = 10.0;
  double noise_std_min = kNoiseFloor, noise_std_max = 2.0;
};

struct FitResult {
  KernelHyper hyper;
  double log_likelihood = 0.0;  // on standardized targets
  /// True when every restart failed numerically and hyper holds the defaults.
  bool fallback = false;
};

/// Maximizes the log marginal likelihood of the standardized targets with
/// multi-restart bound-constrained L-BFGS in log-parameter space. The first
/// restart starts from `start` (or the defaults), the rest from uniform draws
/// in the log box. Requires at least two observations.
FitResult fit_hyperparameters(const std::vector<Observation>& data, const FitOptions& options,
                              std::mt19937_64& rng, const KernelHyper* start = nullptr);

}  // namespace cmfbo
