#pragma once

#include <Eigen/Core>

namespace cmfbo {

/// Lower bound on the observation noise standard deviation.
inline constexpr double kNoiseFloor = 1e-4;

/// Hyperparameters of the product kernel k_x(x, x') * k_z(z, z').
/// The fidelity factor has unit signal variance.
struct KernelHyper {
  double signal_variance = 1.0;
  Eigen::VectorXd length_scales;
  double fidelity_length_scale = 1.0;
  double noise_std = 0.1;

  Eigen::Index dim() const { return length_scales.size(); }

  /// Throws std::invalid_argument unless all fields are positive and finite
  /// and noise_std >= kNoiseFloor.
  void validate() const;

  static KernelHyper defaults(Eigen::Index dim);
};

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& u,
                 const Eigen::Ref<const Eigen::VectorXd>& v, double signal_variance,
                 const Eigen::Ref<const Eigen::VectorXd>& length_scales);

double mf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                 const Eigen::Ref<const Eigen::VectorXd>& x2, double z2,
                 const KernelHyper& hyper);

}  // namespace cmfbo
