#include "cmfbo/acquisition.hpp"

#include <cmath>
#include <stdexcept>

#include "cmfbo/box_lbfgs.hpp"

namespace cmfbo {

namespace {

constexpr double kMinSigmaForGradient = 1e-12;

// mf_ucb in standardized units together with its gradient.
double standardized_acquisition(const GpModel& model, const Eigen::VectorXd& x, double z_target,
                                double beta, Eigen::VectorXd* grad) {
  const double sqrt_beta = std::sqrt(beta);
  const auto at_target = model.posterior_derivatives(x, z_target);
  const auto at_top =
      z_target == kTopFidelity ? at_target : model.posterior_derivatives(x, kTopFidelity);
  const double sigma = std::sqrt(at_top.variance);
  if (grad != nullptr) {
    *grad = at_target.mean_grad;
    if (sigma >= kMinSigmaForGradient && beta > 0.0)
      *grad += sqrt_beta * at_top.variance_grad / (2.0 * sigma);
  }
  return at_target.mean + sqrt_beta * sigma;
}

}  // namespace

void AcquisitionConfig::validate() const {
  if (!(epsilon > 0.0)) throw std::invalid_argument("AcquisitionConfig: epsilon must be > 0");
  if (lbfgs_restarts < 1) throw std::invalid_argument("AcquisitionConfig: restarts must be >= 1");
  if (lbfgs_max_iters < 1) throw std::invalid_argument("AcquisitionConfig: max iters must be >= 1");
  if (beta_coefficient < 0.0) throw std::invalid_argument("AcquisitionConfig: beta coefficient < 0");
  if (warm_perturbations < 0) throw std::invalid_argument("AcquisitionConfig: warm perturbations < 0");
}

double beta_schedule(int d, int t, double coefficient) {
  if (d < 1 || t < 1) throw std::invalid_argument("beta_schedule: need d >= 1 and t >= 1");
  return coefficient * static_cast<double>(d) * std::log(2.0 * static_cast<double>(t));
}

double ucb(const Eigen::Ref<const Eigen::VectorXd>& x, const GpModel& model, double beta) {
  return mf_ucb(x, kTopFidelity, model, beta);
}

double mf_ucb(const Eigen::Ref<const Eigen::VectorXd>& x, double z_target, const GpModel& model,
              double beta) {
  if (beta < 0.0) throw std::invalid_argument("mf_ucb: beta must be >= 0");
  const double mean = model.posterior(x, z_target).mean;
  const double sigma = model.posterior(x, kTopFidelity).std;
  return mean + std::sqrt(beta) * sigma;
}

Eigen::VectorXd acquisition_gradient(const Eigen::Ref<const Eigen::VectorXd>& x, double z_target,
                                     const GpModel& model, double beta) {
  if (beta < 0.0) throw std::invalid_argument("acquisition_gradient: beta must be >= 0");
  Eigen::VectorXd grad;
  standardized_acquisition(model, x, z_target, beta, &grad);
  return model.scaling().scale * grad;
}

AcquisitionMaximum maximize_acquisition(const GpModel& model, double z_target, double beta,
                                        const std::optional<Eigen::VectorXd>& init,
                                        const AcquisitionConfig& config, std::mt19937_64& rng) {
  config.validate();
  const Eigen::Index d = model.dim();

  std::vector<Eigen::VectorXd> starts;
  if (init) {
    if (init->size() != d) throw std::invalid_argument("maximize_acquisition: init dimension");
    starts.push_back(init->cwiseMax(0.0).cwiseMin(1.0));
    std::normal_distribution<double> noise(0.0, config.warm_perturbation_std);
    for (int k = 0; k < config.warm_perturbations; ++k) {
      Eigen::VectorXd p = starts.front();
      for (Eigen::Index i = 0; i < d; ++i) p[i] += noise(rng);
      starts.push_back(p.cwiseMax(0.0).cwiseMin(1.0));
    }
  } else {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < config.lbfgs_restarts; ++k) {
      Eigen::VectorXd p(d);
      for (Eigen::Index i = 0; i < d; ++i) p[i] = unit(rng);
      starts.push_back(std::move(p));
    }
  }

  const ValueAndGradient negated = [&](const Eigen::VectorXd& x, Eigen::VectorXd& grad) {
    const double v = standardized_acquisition(model, x, z_target, beta, &grad);
    grad = -grad;
    return -v;
  };
  BoxLbfgsOptions opts;
  opts.max_iters = config.lbfgs_max_iters;
  opts.grad_tolerance = config.grad_tolerance;
  const Eigen::VectorXd lower = Eigen::VectorXd::Zero(d);
  const Eigen::VectorXd upper = Eigen::VectorXd::Ones(d);

  Eigen::VectorXd best_x = starts.front();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const double start_value = standardized_acquisition(model, s, z_target, beta, nullptr);
    if (start_value > best) {
      best = start_value;
      best_x = s;
    }
    const auto r = minimize_box(negated, s, lower, upper, opts);
    if (std::isfinite(r.f) && -r.f > best) {
      best = -r.f;
      best_x = r.x;
    }
  }
  return {best_x, model.scaling().from_standard(best)};
}

double gate_sigma(const GpModel& model, const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                  const AcquisitionConfig& config) {
  const double sigma = model.posterior_standardized(x, z).std;
  if (!config.gate_on_latent_std) return sigma;
  const double noise = model.hyper().noise_std;
  return std::sqrt(std::max(0.0, sigma * sigma - noise * noise));
}

ProgressiveResult progressive_acquisition(const GpModel& model, int t, double l_z,
                                          const AcquisitionConfig& config, std::mt19937_64& rng) {
  if (!(l_z > 0.0)) throw std::invalid_argument("progressive_acquisition: l_z must be > 0");
  ProgressiveResult out;
  out.beta = beta_schedule(static_cast<int>(model.dim()), t, config.beta_coefficient);

  double z = 0.0;
  Eigen::VectorXd x = maximize_acquisition(model, z, out.beta, std::nullopt, config, rng).x;
  double sigma = gate_sigma(model, x, z, config);
  out.fidelity_path.push_back({z, x, sigma});
  while (z < kTopFidelity && sigma < config.epsilon) {
    z = std::min(z + l_z, kTopFidelity);
    x = maximize_acquisition(model, z, out.beta, x, config, rng).x;
    sigma = gate_sigma(model, x, z, config);
    out.fidelity_path.push_back({z, x, sigma});
  }
  out.x = x;
  out.z = z;
  return out;
}

}  // namespace cmfbo
