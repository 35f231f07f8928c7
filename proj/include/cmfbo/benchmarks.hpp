#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Core>

#include "cmfbo/optimizer.hpp"

namespace cmfbo {

/// Isotropic Gaussian bump h * exp(-|x - c|^2 / (2 w^2)).
struct Bump {
  Eigen::VectorXd center;
  double height = 1.0;
  double width = 0.1;
};

double bump_sum(const std::vector<Bump>& bumps, const Eigen::Ref<const Eigen::VectorXd>& x,
                Eigen::VectorXd* grad = nullptr);

struct CostModel {
  double c_lo = 100.0;
  double c_hi = 1000.0;
  double operator()(double z) const { return c_lo + (c_hi - c_lo) * z; }
};

/// Synthetic multi-fidelity function on [0,1]^d x [0,1].
///
/// Curriculum axis:  f(x, z) = (a + (1 - a) z) base(x) + A (1 - z) drift(x)
/// Iteration axis:   g(x, z) = z^p base(x) + (1 - z^p) early(x)
///
/// Both axes coincide with base(x) at z = 1. The iteration axis exists only
/// when `early` is non-empty.
class SyntheticMfFunction {
 public:
  SyntheticMfFunction(Eigen::Index dim, std::vector<Bump> base, std::vector<Bump> drift,
                      double drift_amplitude, double low_fidelity_scale, CostModel cost,
                      double noise_std = 0.0, std::vector<Bump> early = {},
                      double iteration_exponent = 2.0);

  Eigen::Index dim() const { return dim_; }
  double value(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  double iteration_value(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const;
  bool has_iteration_axis() const { return !early_.empty(); }
  double cost(double z) const { return cost_(z); }
  double noise_std() const { return noise_std_; }
  double drift_amplitude() const { return drift_amplitude_; }

  /// Best point of the top-fidelity slice (grid search refined by L-BFGS).
  struct Optimum {
    Eigen::VectorXd x;
    double value = 0.0;
  };
  Optimum top_optimum() const;
  /// Argmax of the curriculum slice at fidelity z on a regular grid with
  /// `resolution` points per axis (d <= 3).
  Optimum grid_argmax(double z, int resolution) const;

  /// Objective with a unit-box search space, fidelity range [0, 1]. Noise is
  /// drawn from the evaluation seed.
  ObjectiveSpec objective(std::string description) const;

 private:
  Eigen::Index dim_;
  std::vector<Bump> base_;
  std::vector<Bump> drift_;
  double drift_amplitude_;
  double low_fidelity_scale_;
  CostModel cost_;
  double noise_std_;
  std::vector<Bump> early_;
  double iteration_exponent_;
};

struct OverlapOptions {
  CostModel cost;
  double noise_std = 0.0;
  /// Fidelities at which the argmax certificate is checked.
  std::vector<double> certificate_fidelities = {0.0, 0.25, 0.5, 0.75, 1.0};
};

/// Smooth multimodal function whose per-fidelity argmaxes stay within rho of
/// the top-fidelity argmax (grid-certified for d <= 3). The drift is
/// resampled up to 50 times; throws std::runtime_error if no draw passes.
SyntheticMfFunction make_overlap_benchmark(int d, double rho, std::uint64_t seed,
                                           const OverlapOptions& options = {});

/// Two-dimensional objective whose iteration-fraction axis ranks a decoy
/// region above the true optimum at low fidelity. The curriculum axis keeps
/// the optimum in place.
struct DeceptiveBenchmark {
  SyntheticMfFunction function;
  Eigen::VectorXd x_true;       // top-fidelity optimum
  Eigen::VectorXd x_deceptive;  // local optimum favored early in training
  double value_range = 0.0;     // max - min of the top-fidelity slice
};
DeceptiveBenchmark make_deceptive_iteration_benchmark(std::uint64_t seed,
                                                      const CostModel& cost = {});

}  // namespace cmfbo
