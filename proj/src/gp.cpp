#include "cmfbo/gp.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "cmfbo/box_lbfgs.hpp"
#include "cmfbo/errors.hpp"

namespace cmfbo {

namespace {

constexpr double kNegativeVarianceTolerance = 1e-8;

void check_data(const std::vector<Observation>& data, Eigen::Index dim) {
  for (const auto& o : data) {
    if (o.x.size() != dim)
      throw std::invalid_argument("GP: observation dimension does not match kernel");
  }
}

}  // namespace

TargetScaling TargetScaling::fit(const std::vector<Observation>& data) {
  TargetScaling s;
  if (data.empty()) return s;
  double mean = 0.0;
  for (const auto& o : data) mean += o.y;
  mean /= static_cast<double>(data.size());
  double ss = 0.0;
  for (const auto& o : data) ss += (o.y - mean) * (o.y - mean);
  const double sd = std::sqrt(ss / static_cast<double>(data.size()));
  s.offset = mean;
  s.scale = sd > 1e-12 * std::max(1.0, std::abs(mean)) ? sd : 1.0;
  return s;
}

Eigen::MatrixXd kernel_matrix(const std::vector<Observation>& data, const KernelHyper& hyper) {
  const auto n = static_cast<Eigen::Index>(data.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& a = data[static_cast<std::size_t>(i)];
    k(i, i) = hyper.signal_variance;
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& b = data[static_cast<std::size_t>(j)];
      k(i, j) = k(j, i) = mf_kernel(a.x, a.z, b.x, b.z, hyper);
    }
  }
  return k;
}

Factorization factorize_with_jitter(const Eigen::MatrixXd& a) {
  Factorization f;
  f.llt.compute(a);
  if (f.llt.info() == Eigen::Success) return f;
  const Eigen::Index n = a.rows();
  for (double jitter = 1e-10; jitter <= 1e-6 * 1.0001; jitter *= 10.0) {
    f.llt.compute(a + jitter * Eigen::MatrixXd::Identity(n, n));
    if (f.llt.info() == Eigen::Success) {
      f.jitter = jitter;
      return f;
    }
  }
  std::ostringstream msg;
  msg << "Cholesky failed after jitter escalation to 1e-6 (n=" << n
      << ", min diag=" << (n > 0 ? a.diagonal().minCoeff() : 0.0)
      << ", max |offdiag|=" << (n > 1 ? (a - Eigen::MatrixXd(a.diagonal().asDiagonal())).cwiseAbs().maxCoeff() : 0.0)
      << ")";
  throw NumericalError(msg.str());
}

GpModel::GpModel(KernelHyper hyper, std::vector<Observation> data, bool standardize)
    : hyper_(std::move(hyper)), data_(std::move(data)) {
  hyper_.validate();
  check_data(data_, hyper_.dim());
  if (standardize) scaling_ = TargetScaling::fit(data_);

  const auto n = static_cast<Eigen::Index>(data_.size());
  x_.resize(n, hyper_.dim());
  z_.resize(n);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& o = data_[static_cast<std::size_t>(i)];
    x_.row(i) = o.x.transpose();
    z_[i] = o.z;
    y[i] = scaling_.to_standard(o.y);
  }
  if (n == 0) return;

  Eigen::MatrixXd ky = kernel_matrix(data_, hyper_);
  ky.diagonal().array() += hyper_.noise_std * hyper_.noise_std;
  auto fac = factorize_with_jitter(ky);
  llt_ = std::move(fac.llt);
  jitter_ = fac.jitter;
  alpha_ = llt_.solve(y);
}

Eigen::MatrixXd GpModel::chol() const {
  if (data_.empty()) return {};
  return llt_.matrixL();
}

Eigen::VectorXd GpModel::cross_covariance(const Eigen::Ref<const Eigen::VectorXd>& x,
                                          double z) const {
  if (x.size() != dim()) throw std::invalid_argument("GpModel: query dimension mismatch");
  const auto n = x_.rows();
  Eigen::VectorXd k(n);
  const Eigen::ArrayXd inv_ls = hyper_.length_scales.array().inverse();
  for (Eigen::Index i = 0; i < n; ++i) {
    const double r2 = ((x.transpose() - x_.row(i)).array() * inv_ls.transpose()).square().sum();
    const double dz = (z - z_[i]) / hyper_.fidelity_length_scale;
    k[i] = hyper_.signal_variance * std::exp(-0.5 * (r2 + dz * dz));
  }
  return k;
}

double GpModel::clamp_variance(double var) const {
  if (var >= 0.0) return var;
  if (var >= -kNegativeVarianceTolerance) return 0.0;
  std::ostringstream msg;
  msg << "posterior variance " << var << " below tolerance (n=" << data_.size()
      << ", jitter=" << jitter_ << ")";
  throw NumericalError(msg.str());
}

Prediction GpModel::posterior_standardized(const Eigen::Ref<const Eigen::VectorXd>& x,
                                           double z) const {
  const double prior_var = hyper_.signal_variance + hyper_.noise_std * hyper_.noise_std;
  if (data_.empty()) {
    if (x.size() != dim()) throw std::invalid_argument("GpModel: query dimension mismatch");
    return {0.0, std::sqrt(prior_var)};
  }
  const Eigen::VectorXd k = cross_covariance(x, z);
  const Eigen::VectorXd v = llt_.matrixL().solve(k);
  return {k.dot(alpha_), std::sqrt(clamp_variance(prior_var - v.squaredNorm()))};
}

Prediction GpModel::posterior(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const {
  const Prediction p = posterior_standardized(x, z);
  return {scaling_.from_standard(p.mean), scaling_.scale * p.std};
}

GpModel::Derivatives GpModel::posterior_derivatives(const Eigen::Ref<const Eigen::VectorXd>& x,
                                                    double z) const {
  Derivatives out;
  const Eigen::Index d = dim();
  const double prior_var = hyper_.signal_variance + hyper_.noise_std * hyper_.noise_std;
  out.mean_grad = Eigen::VectorXd::Zero(d);
  out.variance_grad = Eigen::VectorXd::Zero(d);
  if (data_.empty()) {
    out.variance = prior_var;
    return out;
  }
  const Eigen::VectorXd k = cross_covariance(x, z);
  // dk_i/dx_j = -k_i (x_j - X_ij) / lambda_j^2
  const Eigen::ArrayXd inv_ls2 = hyper_.length_scales.array().square().inverse();
  Eigen::MatrixXd jac = (x_.rowwise() - x.transpose()).array().rowwise() * inv_ls2.transpose();
  jac = jac.array().colwise() * k.array();

  out.mean = k.dot(alpha_);
  out.mean_grad = jac.transpose() * alpha_;
  const Eigen::VectorXd w = llt_.solve(k);
  out.variance = clamp_variance(prior_var - k.dot(w));
  out.variance_grad = -2.0 * jac.transpose() * w;
  return out;
}

double log_marginal_likelihood(const std::vector<Observation>& data, const KernelHyper& hyper) {
  return log_marginal_likelihood_with_gradient(data, hyper).value;
}

Eigen::VectorXd to_log_params(const KernelHyper& hyper) {
  const Eigen::Index d = hyper.dim();
  Eigen::VectorXd theta(d + 3);
  theta[0] = std::log(hyper.signal_variance);
  theta.segment(1, d) = hyper.length_scales.array().log().matrix();
  theta[d + 1] = std::log(hyper.fidelity_length_scale);
  theta[d + 2] = std::log(hyper.noise_std);
  return theta;
}

KernelHyper from_log_params(const Eigen::Ref<const Eigen::VectorXd>& theta) {
  const Eigen::Index d = theta.size() - 3;
  if (d < 1) throw std::invalid_argument("from_log_params: too few parameters");
  KernelHyper h;
  h.signal_variance = std::exp(theta[0]);
  h.length_scales = theta.segment(1, d).array().exp().matrix();
  h.fidelity_length_scale = std::exp(theta[d + 1]);
  h.noise_std = std::exp(theta[d + 2]);
  return h;
}

LmlWithGradient log_marginal_likelihood_with_gradient(const std::vector<Observation>& data,
                                                      const KernelHyper& hyper) {
  if (data.empty()) throw std::invalid_argument("log_marginal_likelihood: no observations");
  check_data(data, hyper.dim());
  const auto n = static_cast<Eigen::Index>(data.size());
  const Eigen::Index d = hyper.dim();

  const Eigen::MatrixXd k = kernel_matrix(data, hyper);
  Eigen::MatrixXd ky = k;
  const double noise_var = hyper.noise_std * hyper.noise_std;
  ky.diagonal().array() += noise_var;
  const auto fac = factorize_with_jitter(ky);

  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) y[i] = data[static_cast<std::size_t>(i)].y;
  const Eigen::VectorXd alpha = fac.llt.solve(y);
  const Eigen::MatrixXd l = fac.llt.matrixL();
  const double log_det = 2.0 * l.diagonal().array().log().sum();

  LmlWithGradient out;
  out.value = -0.5 * y.dot(alpha) - 0.5 * log_det -
              0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

  // dL/dtheta = 0.5 tr((alpha alpha^T - Ky^-1) dK/dtheta)
  const Eigen::MatrixXd ky_inv = fac.llt.solve(Eigen::MatrixXd::Identity(n, n));
  const Eigen::MatrixXd w = alpha * alpha.transpose() - ky_inv;
  out.gradient.resize(d + 3);
  out.gradient[0] = 0.5 * (w.array() * k.array()).sum();
  for (Eigen::Index j = 0; j < d; ++j) {
    const double ls2 = hyper.length_scales[j] * hyper.length_scales[j];
    double acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        const double diff = data[static_cast<std::size_t>(a)].x[j] - data[static_cast<std::size_t>(b)].x[j];
        acc += w(a, b) * k(a, b) * diff * diff / ls2;
      }
    }
    out.gradient[1 + j] = acc;  // symmetric off-diagonal pairs counted once, times 2, times 0.5
  }
  {
    const double lz2 = hyper.fidelity_length_scale * hyper.fidelity_length_scale;
    double acc = 0.0;
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < a; ++b) {
        const double diff = data[static_cast<std::size_t>(a)].z - data[static_cast<std::size_t>(b)].z;
        acc += w(a, b) * k(a, b) * diff * diff / lz2;
      }
    }
    out.gradient[d + 1] = acc;
  }
  out.gradient[d + 2] = w.trace() * noise_var;  // 0.5 tr(W * 2 eta^2 I)
  return out;
}

FitResult fit_hyperparameters(const std::vector<Observation>& data, const FitOptions& options,
                              std::mt19937_64& rng, const KernelHyper* start) {
  if (data.size() < 2) throw std::invalid_argument("fit_hyperparameters: need >= 2 observations");
  if (options.restarts < 1) throw std::invalid_argument("fit_hyperparameters: restarts >= 1");
  const Eigen::Index d = data.front().x.size();
  check_data(data, d);

  const TargetScaling scaling = TargetScaling::fit(data);
  std::vector<Observation> standardized;
  standardized.reserve(data.size());
  for (const auto& o : data) {
    Observation s;
    s.x = o.x;
    s.z = o.z;
    s.y = scaling.to_standard(o.y);
    standardized.push_back(std::move(s));
  }

  Eigen::VectorXd lower(d + 3), upper(d + 3);
  lower[0] = std::log(options.signal_variance_min);
  upper[0] = std::log(options.signal_variance_max);
  lower.segment(1, d).setConstant(std::log(options.length_scale_min));
  upper.segment(1, d).setConstant(std::log(options.length_scale_max));
  lower[d + 1] = std::log(options.fidelity_length_scale_min);
  upper[d + 1] = std::log(options.fidelity_length_scale_max);
  lower[d + 2] = std::log(options.noise_std_min);
  upper[d + 2] = std::log(options.noise_std_max);

  const KernelHyper defaults = KernelHyper::defaults(d);
  std::vector<Eigen::VectorXd> starts;
  starts.push_back(to_log_params(start != nullptr ? *start : defaults));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int r = 1; r < options.restarts; ++r) {
    Eigen::VectorXd theta(d + 3);
    for (Eigen::Index i = 0; i < d + 3; ++i)
      theta[i] = lower[i] + unit(rng) * (upper[i] - lower[i]);
    starts.push_back(std::move(theta));
  }

  const ValueAndGradient negative_lml = [&](const Eigen::VectorXd& theta, Eigen::VectorXd& grad) {
    try {
      const auto r = log_marginal_likelihood_with_gradient(standardized, from_log_params(theta));
      grad = -r.gradient;
      return -r.value;
    } catch (const NumericalError&) {
      grad = Eigen::VectorXd::Zero(theta.size());
      return std::numeric_limits<double>::infinity();
    }
  };

  BoxLbfgsOptions lbfgs;
  lbfgs.max_iters = options.max_iters;
  lbfgs.grad_tolerance = 1e-5;
  lbfgs.rel_f_tolerance = 1e-10;

  FitResult best;
  best.fallback = true;
  best.log_likelihood = -std::numeric_limits<double>::infinity();
  for (const auto& s : starts) {
    const auto r = minimize_box(negative_lml, s, lower, upper, lbfgs);
    if (r.status == BoxLbfgsStatus::kNonFiniteStart || !std::isfinite(r.f)) continue;
    if (-r.f > best.log_likelihood) {
      best.log_likelihood = -r.f;
      best.hyper = from_log_params(r.x);
      best.fallback = false;
    }
  }
  if (best.fallback) best.hyper = defaults;
  best.hyper.noise_std = std::max(best.hyper.noise_std, kNoiseFloor);
  return best;
}

}  // namespace cmfbo
