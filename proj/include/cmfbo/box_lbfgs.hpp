#pragma once

#include <functional>

#include <Eigen/Core>

namespace cmfbo {

struct BoxLbfgsOptions {
  int max_iters = 200;
  int memory = 8;
  double grad_tolerance = 1e-6;
  double rel_f_tolerance = 1e-12;
  int max_backtracks = 40;
};

enum class BoxLbfgsStatus {
  kConverged,          // projected gradient below tolerance
  kStalled,            // no further progress possible (tiny step or f change)
  kMaxIterations,
  kLineSearchFailed,   // could not decrease f even along the projected gradient
  kNonFiniteStart,
};

struct BoxLbfgsResult {
  Eigen::VectorXd x;
  double f = 0.0;
  int iterations = 0;
  int evaluations = 0;
  BoxLbfgsStatus status = BoxLbfgsStatus::kMaxIterations;
};

/// f(x, grad) returns the objective value and writes its gradient.
using ValueAndGradient = std::function<double(const Eigen::VectorXd&, Eigen::VectorXd&)>;

/// Minimizes f over the box [lower, upper] with a projected limited-memory
/// BFGS method. Variables sitting on a bound with the gradient pushing
/// outward are frozen for the quasi-Newton step; trial points are projected
/// back into the box and accepted on an Armijo decrease along the projected
/// path. The returned point is always feasible and f(result.x) <= f(clamp(x0))
/// whenever the start is finite.
BoxLbfgsResult minimize_box(const ValueAndGradient& f, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const BoxLbfgsOptions& options = {});

}  // namespace cmfbo
