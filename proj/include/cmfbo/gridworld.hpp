#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "cmfbo/optimizer.hpp"

namespace cmfbo {

/// kp(z) = 200 - 200 z, the assistance-gain curriculum.
double assistance_schedule(double z);
/// T(z) = 30 + 570 z, the episode-length curriculum.
double episode_length_schedule(double z);

enum class CurriculumMode {
  kAssistance,  // environment pushes the agent toward the goal with p = kp(z) / 200
  kHorizon,     // training episodes capped by T(z), rescaled to grid steps
};

/// Deterministic gridworld learned by tabular Q-learning. Layout characters:
/// 'S' start, 'G' goal, 'X' hazard, '.' free.
struct GridworldCurriculumTask {
  std::vector<std::string> layout = {
      "S.........",
      "XXXXXXXX..",
      "..........",
      "..XXXXXXXX",
      "..........",
      "XXXXXXXX..",
      "..........",
      "..XXXXXXXX",
      "..........",
      ".........G",
  };
  CurriculumMode mode = CurriculumMode::kAssistance;
  int eval_horizon = 100;
  /// Reward of every non-terminal step; goal +1, hazard -1.
  double step_reward = -0.01;
  /// Training budget(z) = budget_base + budget_slope * z environment steps.
  double budget_base = 2000.0;
  double budget_slope = 18000.0;
  /// Training episode cap; in horizon mode T(z) is rescaled so T(1) maps here.
  int max_episode_steps = 100;
  /// Fidelity range exposed through objective().
  double z_min = 0.0;
  double z_max = 1.0;

  void validate() const;
};

/// Learner hyperparameters x = (learning rate, exploration rate, discount).
struct LearnerHyper {
  double learning_rate = 0.5;
  double exploration_rate = 0.1;
  double discount = 0.95;
};

/// Q-table warm-start payload. trained_fidelity is the curriculum level the
/// table was trained to.
struct QTableArtifact : Artifact {
  std::vector<double> q;  // cells * 4 actions
  double trained_fidelity = 0.0;
};

/// Training steps for a cold run at fidelity z.
double training_budget(const GridworldCurriculumTask& task, double z);

/// Trains Q-learning at curriculum level z (from `warm_start` when given) and
/// returns the greedy policy's normalized return at the same difficulty
/// (assistance p(z) also acts during evaluation) averaged over all
/// non-terminal start cells, the training steps consumed as cost, and the
/// final Q-table as artifact. Training episodes begin at a uniformly drawn
/// start cell. A warm start from a table trained to z_src continues the
/// curriculum and needs max(budget(z) - budget(z_src), budget_base) steps.
EvalResult evaluate_gridworld(const GridworldCurriculumTask& task, const LearnerHyper& x, double z,
                              const QTableArtifact* warm_start, std::uint64_t seed);

/// Best achievable normalized return at fidelity z = 1 (shortest paths from
/// every start).
double gridworld_optimal_return(const GridworldCurriculumTask& task);

/// Search space: learning_rate [0.01, 1], exploration_rate [0.01, 0.5],
/// discount [0.5, 0.999]; fidelity [task.z_min, task.z_max].
ObjectiveSpec gridworld_objective(const GridworldCurriculumTask& task);

/// Multiplies y by exp(-cost / scale): a sample-efficiency-aware objective.
ObjectiveSpec with_cost_discount(ObjectiveSpec objective, double scale);

}  // namespace cmfbo
