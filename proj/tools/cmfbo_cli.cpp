// Experiment driver: run, compare, allocation.
#include <cstdlib>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "cmfbo/errors.hpp"
#include "cmfbo/harness.hpp"
#include "cmfbo/trace_io.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<double> budget;
};

void add_common(CLI::App* cmd, CommonFlags& flags) {
  cmd->add_option("--config", flags.config, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  cmd->add_option("--out", flags.out, "Output directory (overrides config and CMFBO_OUTPUT_DIR)");
  cmd->add_option("--seed-override", flags.seed, "Run only this seed");
  cmd->add_option("--budget-override", flags.budget, "Replace the configured budget");
}

cmfbo::ExperimentConfig resolve(const CommonFlags& flags) {
  auto config = cmfbo::load_config(flags.config);
  if (flags.seed) config.seeds = {*flags.seed};
  if (flags.budget) config.budget = *flags.budget;
  if (!flags.out.empty()) {
    config.output_dir = flags.out;
  } else if (config.output_dir.empty()) {
    const char* env = std::getenv("CMFBO_OUTPUT_DIR");
    config.output_dir = env != nullptr && *env != '\0' ? env : "cmfbo_results";
  }
  config.validate();
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Curriculum multi-fidelity Bayesian optimization experiments"};
  app.require_subcommand(1);

  CommonFlags run_flags, compare_flags, alloc_flags;
  int checkpoints = 50;
  auto* run = app.add_subcommand("run", "Run every (method, seed) pair, resuming finished ones");
  add_common(run, run_flags);
  auto* compare = app.add_subcommand("compare", "Write comparison.csv (best y versus cost)");
  add_common(compare, compare_flags);
  compare->add_option("--checkpoints", checkpoints, "Number of evenly spaced cost checkpoints")
      ->check(CLI::PositiveNumber);
  auto* allocation = app.add_subcommand("allocation", "Write allocation.csv (cost per fidelity)");
  add_common(allocation, alloc_flags);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto config = resolve(run_flags);
      const auto records = cmfbo::run_experiment(config);
      for (const auto& r : records) {
        std::cout << r.method << " seed " << r.seed << ": " << r.trace.queries.size()
                  << " queries, cost " << r.trace.cumulative_cost;
        if (!r.trace.incumbent_history.empty())
          std::cout << ", best " << r.trace.incumbent_history.back().best_y;
        std::cout << '\n';
      }
      std::cout << "results in " << config.output_dir.string() << '\n';
    } else if (compare->parsed()) {
      const auto config = resolve(compare_flags);
      const auto rows = cmfbo::emit_comparison(cmfbo::load_experiment(config),
                                               cmfbo::default_checkpoints(config.budget, checkpoints));
      const auto csv = cmfbo::comparison_csv(rows);
      cmfbo::write_file_atomic(config.output_dir / "comparison.csv", csv);
      std::cout << csv;
    } else if (allocation->parsed()) {
      const auto config = resolve(alloc_flags);
      const auto csv = cmfbo::allocation_csv(cmfbo::load_experiment(config));
      cmfbo::write_file_atomic(config.output_dir / "allocation.csv", csv);
      std::cout << csv;
    }
  } catch (const cmfbo::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const cmfbo::NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << '\n';
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
