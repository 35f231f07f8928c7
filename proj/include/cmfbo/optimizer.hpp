#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmfbo/acquisition.hpp"
#include "cmfbo/gp.hpp"
#include "cmfbo/search_space.hpp"

namespace cmfbo {

struct EvalResult {
  double y = 0.0;
  double cost = 0.0;
  ArtifactPtr artifact;
};

/// Evaluates the objective at a denormalized point x and denormalized
/// fidelity z. `warm_start` may be null. Must be reproducible for identical
/// (x, z, warm_start, seed). Throw EvaluationError to report a failure.
using EvaluateFn = std::function<EvalResult(const Eigen::VectorXd& x, double z,
                                            const Artifact* warm_start, std::uint64_t seed)>;

struct ObjectiveSpec {
  SearchSpace space;
  /// Curriculum (task difficulty) fidelity.
  EvaluateFn evaluate;
  /// Optional training-iteration-fraction fidelity, same top-fidelity slice.
  EvaluateFn evaluate_iteration;
  std::string description;
};

enum class IncumbentRule {
  kTopFidelity,  // only evaluations of the original objective count
  kAnyFidelity,  // literal argmax over every evaluation
};

/// Per-iteration diagnostics of the model-based optimizers.
struct IterationInfo {
  int t = 0;
  KernelHyper hyper;
  bool fit_fallback = false;
  ProgressiveResult proposal;  // single-fidelity baselines fill x, z only
  int query_index = -1;
};

struct OptimizerOptions {
  AcquisitionConfig acquisition;
  FitOptions fit;
  /// Initial design size; 0 selects 2d + 1.
  int n_init = 0;
  bool warm_start_transfer = true;
  IncumbentRule incumbent_rule = IncumbentRule::kTopFidelity;
  /// Wall-clock timing breaks byte-identical traces, so it is opt-in.
  bool record_wall_time = false;
  std::function<void(const IterationInfo&)> on_iteration;
};

struct QueryRecord {
  Eigen::VectorXd x;  // normalized
  double z = 0.0;     // normalized
  double y = 0.0;     // imputed when failed
  double cost = 0.0;
  double cumulative_cost = 0.0;
  int warm_start_source = -1;  // query index the warm start came from
  double wall_ms = 0.0;
  bool failed = false;

  bool operator==(const QueryRecord&) const = default;
};

struct IncumbentPoint {
  double cumulative_cost = 0.0;
  double best_y = 0.0;
  int query_index = -1;

  bool operator==(const IncumbentPoint&) const = default;
};

struct OptimizationTrace {
  std::string method;
  std::uint64_t seed = 0;
  double budget = 0.0;
  std::vector<Dimension> dims;
  double z_min = 0.0;
  double z_max = 1.0;
  IncumbentRule incumbent_rule = IncumbentRule::kTopFidelity;
  /// JSON text of the options the run used.
  std::string config_snapshot = "{}";

  std::vector<QueryRecord> queries;
  double cumulative_cost = 0.0;
  std::vector<IncumbentPoint> incumbent_history;

  /// Appends a query, updating cumulative cost and the incumbent history.
  void append(QueryRecord q);

  bool operator==(const OptimizationTrace& other) const;
};

/// Trace queries as GP observations (failed queries keep their imputed y).
std::vector<Observation> observations(const OptimizationTrace& trace);

struct WarmStartEntry {
  Eigen::VectorXd x;
  double z = 0.0;
  ArtifactPtr artifact;
  int query_index = -1;
};

class WarmStartRegistry {
 public:
  void add(WarmStartEntry entry) { entries_.push_back(std::move(entry)); }
  const std::vector<WarmStartEntry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

 private:
  std::vector<WarmStartEntry> entries_;
};

struct WarmStart {
  ArtifactPtr artifact;
  int source_index = -1;
};

/// Entry maximizing mf_kernel((x, z), entry); ties go to the most recent.
/// Nothing is returned at z <= z_min or for an empty registry.
std::optional<WarmStart> nearest_warm_start(const WarmStartRegistry& registry,
                                            const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                                            const KernelHyper& hyper, double z_min = 0.0);

struct BestPoint {
  Eigen::VectorXd x;  // normalized
  double y = 0.0;
  int query_index = -1;
};

/// Best top-fidelity evaluation (earliest on ties). Throws NoIncumbentError
/// if the trace has none. With kAnyFidelity every successful query counts.
BestPoint report_best(const OptimizationTrace& trace,
                      IncumbentRule rule = IncumbentRule::kTopFidelity);

/// Latin hypercube sample of n points in [0,1]^d.
std::vector<Eigen::VectorXd> latin_hypercube(int n, Eigen::Index d, std::mt19937_64& rng);

/// Per-query evaluation seed derived from the run seed.
std::uint64_t query_seed(std::uint64_t run_seed, std::size_t query_index);

OptimizationTrace run_cmfbo(const ObjectiveSpec& objective, double budget,
                            const OptimizerOptions& options, std::uint64_t seed);

OptimizationTrace run_gp_ucb_baseline(const ObjectiveSpec& objective, double budget,
                                      const OptimizerOptions& options, std::uint64_t seed);

/// CMFBO machinery driven through the objective's iteration-fraction axis.
OptimizationTrace run_iteration_fidelity_baseline(const ObjectiveSpec& objective, double budget,
                                                  const OptimizerOptions& options,
                                                  std::uint64_t seed);

OptimizationTrace run_random_baseline(const ObjectiveSpec& objective, double budget,
                                      std::uint64_t seed);

}  // namespace cmfbo
