#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cmfbo/optimizer.hpp"

namespace cmfbo {

/// Name plus free-form JSON parameters (kept as compact JSON text so this
/// header does not depend on the JSON library).
struct NamedParams {
  std::string name;
  std::string params = "{}";
  /// Label used in file names and tables; defaults to name.
  std::string label;

  const std::string& display() const { return label.empty() ? name : label; }
};

/// Experiment configuration file (JSON):
///
///   {
///     "benchmark": {"name": "overlap", "params": {"dim": 2, "rho": 0.1}},
///     "methods": [{"name": "cmfbo"}, {"name": "gp_ucb", "label": "gp-ucb"}],
///     "budget": 50000,
///     "seeds": [0, 1, 2],          // optional, defaults to 0..9
///     "output_dir": "results"      // optional
///   }
struct ExperimentConfig {
  NamedParams benchmark;
  std::vector<NamedParams> methods;
  double budget = 0.0;
  std::vector<std::uint64_t> seeds;
  std::filesystem::path output_dir;

  /// Checks invariants and that every name is registered. Throws ConfigError.
  void validate() const;
};

inline constexpr int kDefaultSeedCount = 10;

ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON (sorted keys, compact) of everything except output_dir.
std::string canonical_config(const ExperimentConfig& config);
/// Hex SHA-256 of a byte string.
std::string sha256_hex(const std::string& bytes);
std::string config_hash(const ExperimentConfig& config);

struct BenchmarkInstance {
  ObjectiveSpec objective;
  /// Best top-fidelity value when known, for regret.
  std::optional<double> optimum;
};

/// Registered benchmarks: "overlap", "deceptive", "gridworld".
BenchmarkInstance make_benchmark(const NamedParams& spec);
/// Registered methods: "cmfbo", "gp_ucb", "iteration_fidelity", "random".
OptimizationTrace run_method(const NamedParams& method, const ObjectiveSpec& objective,
                             double budget, std::uint64_t seed);
std::vector<std::string> benchmark_names();
std::vector<std::string> method_names();

struct RunRecord {
  std::string method;  // display label
  std::uint64_t seed = 0;
  OptimizationTrace trace;
  double wall_time_s = 0.0;
  std::string config_hash;
};

/// Output files inside an experiment directory.
std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& method,
                                 std::uint64_t seed);
std::filesystem::path summary_path(const std::filesystem::path& dir, const std::string& method,
                                   std::uint64_t seed);

/// Runs every (method, seed) pair, persisting each trace (and a JSON summary)
/// as soon as it completes. Pairs whose trace already exists are loaded
/// instead of rerun. Writes config.json, whose SHA-256 is the config hash;
/// a directory holding a different configuration is rejected.
std::vector<RunRecord> run_experiment(const ExperimentConfig& config);

/// Loads every persisted (method, seed) pair of the configuration. Throws if
/// any trace is missing.
std::vector<RunRecord> load_experiment(const ExperimentConfig& config);

struct ComparisonRow {
  std::string method;
  double cost = 0.0;
  /// Empty when some run has no top-fidelity incumbent by this cost.
  std::optional<double> median, min, max;
  int runs = 0;
};

/// Median and min/max across seeds of the incumbent best y at each cost
/// checkpoint (step function, last incumbent carried forward). Rows are
/// ordered by method label, then checkpoint order.
std::vector<ComparisonRow> emit_comparison(const std::vector<RunRecord>& records,
                                           const std::vector<double>& checkpoints);
/// Evenly spaced checkpoints budget/n, 2 budget/n, ..., budget.
std::vector<double> default_checkpoints(double budget, int n = 50);
/// Columns: method,cost,median,min,max,runs; missing cells are "NA".
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

struct FidelityAllocation {
  std::size_t queries = 0;
  double cost_top = 0.0;
  double cost_low = 0.0;
};

FidelityAllocation emit_fidelity_allocation(const RunRecord& record);
/// Columns: method,seed,queries,cost_top,cost_low,low_share.
std::string allocation_csv(const std::vector<RunRecord>& records);

/// Incumbent best y at a cost (step function); empty before the first
/// top-fidelity query.
std::optional<double> incumbent_at(const OptimizationTrace& trace, double cost);

/// Cumulative cost at which the incumbent first reaches `threshold`; empty
/// if it never does.
std::optional<double> cost_to_reach(const OptimizationTrace& trace, double threshold);

}  // namespace cmfbo
