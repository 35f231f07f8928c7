#pragma once

#include <stdexcept>
#include <string>

namespace cmfbo {

/// Raised when a linear-algebra step cannot be completed (non-PSD kernel
/// matrix after jitter escalation, strongly negative posterior variance).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed experiment configuration or unknown registry names.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Objectives throw this to report a failed evaluation. The cost is still
/// charged against the optimization budget.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, double cost)
      : std::runtime_error(what), cost_(cost) {}

  double cost() const noexcept { return cost_; }

 private:
  double cost_;
};

/// report_best() on a trace with no top-fidelity evaluation.
class NoIncumbentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace cmfbo
