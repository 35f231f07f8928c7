#include "cmfbo/kernel.hpp"

#include <cmath>
#include <stdexcept>

namespace cmfbo {

namespace {
bool positive(double v) { return std::isfinite(v) && v > 0.0; }
}  // namespace

void KernelHyper::validate() const {
  if (!positive(signal_variance))
    throw std::invalid_argument("KernelHyper: signal_variance must be > 0");
  if (length_scales.size() == 0)
    throw std::invalid_argument("KernelHyper: empty length_scales");
  for (Eigen::Index i = 0; i < length_scales.size(); ++i) {
    if (!positive(length_scales[i]))
      throw std::invalid_argument("KernelHyper: length scales must be > 0");
  }
  if (!positive(fidelity_length_scale))
    throw std::invalid_argument("KernelHyper: fidelity_length_scale must be > 0");
  if (!(std::isfinite(noise_std) && noise_std >= kNoiseFloor))
    throw std::invalid_argument("KernelHyper: noise_std below the noise floor");
}

KernelHyper KernelHyper::defaults(Eigen::Index dim) {
  KernelHyper h;
  h.signal_variance = 1.0;
  h.length_scales = Eigen::VectorXd::Constant(dim, 0.3);
  h.fidelity_length_scale = 0.5;
  h.noise_std = 0.05;
  return h;
}

double se_kernel(const Eigen::Ref<const Eigen::VectorXd>& u,
                 const Eigen::Ref<const Eigen::VectorXd>& v, double signal_variance,
                 const Eigen::Ref<const Eigen::VectorXd>& length_scales) {
  if (u.size() != v.size() || u.size() != length_scales.size())
    throw std::invalid_argument("se_kernel: dimension mismatch");
  const double r2 = ((u - v).array() / length_scales.array()).square().sum();
  return signal_variance * std::exp(-0.5 * r2);
}

double mf_kernel(const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                 const Eigen::Ref<const Eigen::VectorXd>& x2, double z2,
                 const KernelHyper& hyper) {
  const double dz = (z - z2) / hyper.fidelity_length_scale;
  return se_kernel(x, x2, hyper.signal_variance, hyper.length_scales) *
         std::exp(-0.5 * dz * dz);
}

}  // namespace cmfbo
