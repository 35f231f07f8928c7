#pragma once

#include <string>
#include <vector>

#include <Eigen/Core>

namespace cmfbo {

struct Dimension {
  std::string name;
  double lower = 0.0;
  double upper = 1.0;
};

/// Box-bounded hyperparameter space plus the fidelity interval. The
/// optimizer and the GP work on the unit hypercube; objectives receive
/// denormalized values.
class SearchSpace {
 public:
  SearchSpace(std::vector<Dimension> dims, double z_min, double z_max);

  Eigen::Index dim() const { return static_cast<Eigen::Index>(dims_.size()); }
  const std::vector<Dimension>& dims() const { return dims_; }
  double z_min() const { return z_min_; }
  double z_max() const { return z_max_; }

  Eigen::VectorXd normalize(const Eigen::Ref<const Eigen::VectorXd>& x) const;
  Eigen::VectorXd denormalize(const Eigen::Ref<const Eigen::VectorXd>& u) const;
  double normalize_fidelity(double z) const;
  double denormalize_fidelity(double u) const;

 private:
  std::vector<Dimension> dims_;
  double z_min_;
  double z_max_;
};

}  // namespace cmfbo
