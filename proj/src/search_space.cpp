#include "cmfbo/search_space.hpp"

#include <cmath>
#include <stdexcept>

namespace cmfbo {

SearchSpace::SearchSpace(std::vector<Dimension> dims, double z_min, double z_max)
    : dims_(std::move(dims)), z_min_(z_min), z_max_(z_max) {
  if (dims_.empty())
    throw std::invalid_argument("SearchSpace: at least one dimension required");
  for (const auto& d : dims_) {
    if (!(std::isfinite(d.lower) && std::isfinite(d.upper) && d.lower < d.upper))
      throw std::invalid_argument("SearchSpace: dimension '" + d.name +
                                  "' needs finite lower < upper");
  }
  if (!(std::isfinite(z_min) && std::isfinite(z_max) && z_min < z_max))
    throw std::invalid_argument("SearchSpace: fidelity range needs z_min < z_max");
}

Eigen::VectorXd SearchSpace::normalize(const Eigen::Ref<const Eigen::VectorXd>& x) const {
  if (x.size() != dim())
    throw std::invalid_argument("SearchSpace::normalize: dimension mismatch");
  Eigen::VectorXd u(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const auto& d = dims_[static_cast<std::size_t>(i)];
    u[i] = (x[i] - d.lower) / (d.upper - d.lower);
  }
  return u;
}

Eigen::VectorXd SearchSpace::denormalize(const Eigen::Ref<const Eigen::VectorXd>& u) const {
  if (u.size() != dim())
    throw std::invalid_argument("SearchSpace::denormalize: dimension mismatch");
  Eigen::VectorXd x(dim());
  for (Eigen::Index i = 0; i < dim(); ++i) {
    const auto& d = dims_[static_cast<std::size_t>(i)];
    x[i] = d.lower + u[i] * (d.upper - d.lower);
  }
  return x;
}

double SearchSpace::normalize_fidelity(double z) const {
  return (z - z_min_) / (z_max_ - z_min_);
}

double SearchSpace::denormalize_fidelity(double u) const {
  // endpoints exact so objectives see the true z_min / z_max
  if (u == 0.0) return z_min_;
  if (u == 1.0) return z_max_;
  return z_min_ + u * (z_max_ - z_min_);
}

}  // namespace cmfbo
