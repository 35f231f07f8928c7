#include "cmfbo/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <random>
#include <stdexcept>

namespace cmfbo {

namespace {

constexpr int kActions = 4;
constexpr int kRowStep[kActions] = {-1, 0, 1, 0};  // up, right, down, left
constexpr int kColStep[kActions] = {0, 1, 0, -1};

struct Transition {
  int next = 0;
  double reward = 0.0;
  bool terminal = false;
};

class Grid {
 public:
  Grid(const std::vector<std::string>& layout, double step_reward) : step_reward_(step_reward) {
    rows_ = static_cast<int>(layout.size());
    cols_ = rows_ > 0 ? static_cast<int>(layout.front().size()) : 0;
    if (rows_ < 2 || cols_ < 2 || rows_ > 10 || cols_ > 10)
      throw std::invalid_argument("gridworld: layout must be between 2x2 and 10x10");
    cells_.resize(static_cast<std::size_t>(rows_ * cols_));
    for (int r = 0; r < rows_; ++r) {
      if (static_cast<int>(layout[static_cast<std::size_t>(r)].size()) != cols_)
        throw std::invalid_argument("gridworld: ragged layout");
      for (int c = 0; c < cols_; ++c) {
        const char ch = layout[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
        if (ch != 'S' && ch != 'G' && ch != 'X' && ch != '.')
          throw std::invalid_argument("gridworld: unknown layout character");
        cells_[static_cast<std::size_t>(index(r, c))] = ch;
        if (ch == 'S') start_ = index(r, c);
        if (ch == 'G') goal_ = index(r, c);
      }
    }
    if (start_ < 0 || goal_ < 0) throw std::invalid_argument("gridworld: needs one S and one G");
    compute_distances();
    if (distance_[static_cast<std::size_t>(start_)] < 0)
      throw std::invalid_argument("gridworld: goal unreachable from start");
  }

  int size() const { return rows_ * cols_; }
  int start() const { return start_; }
  bool hazard(int s) const { return cells_[static_cast<std::size_t>(s)] == 'X'; }
  bool goal(int s) const { return s == goal_; }
  int distance(int s) const { return distance_[static_cast<std::size_t>(s)]; }
  int assist_action(int s) const { return assist_[static_cast<std::size_t>(s)]; }

  /// Non-terminal cells from which the goal is reachable.
  std::vector<int> start_cells() const {
    std::vector<int> out;
    for (int s = 0; s < size(); ++s)
      if (!hazard(s) && !goal(s) && distance(s) > 0) out.push_back(s);
    return out;
  }

  Transition step(int s, int a) const {
    const int r = s / cols_ + kRowStep[a];
    const int c = s % cols_ + kColStep[a];
    Transition t;
    t.next = (r < 0 || r >= rows_ || c < 0 || c >= cols_) ? s : index(r, c);
    t.reward = step_reward_;
    if (hazard(t.next)) {
      t.reward = -1.0;
      t.terminal = true;
    } else if (goal(t.next)) {
      t.reward = 1.0;
      t.terminal = true;
    }
    return t;
  }

 private:
  int index(int r, int c) const { return r * cols_ + c; }

  void compute_distances() {
    distance_.assign(static_cast<std::size_t>(size()), -1);
    assist_.assign(static_cast<std::size_t>(size()), 0);
    std::deque<int> queue{goal_};
    distance_[static_cast<std::size_t>(goal_)] = 0;
    while (!queue.empty()) {
      const int s = queue.front();
      queue.pop_front();
      for (int a = 0; a < kActions; ++a) {
        const int r = s / cols_ + kRowStep[a];
        const int c = s % cols_ + kColStep[a];
        if (r < 0 || r >= rows_ || c < 0 || c >= cols_) continue;
        const int n = index(r, c);
        if (hazard(n) || distance_[static_cast<std::size_t>(n)] >= 0) continue;
        distance_[static_cast<std::size_t>(n)] = distance_[static_cast<std::size_t>(s)] + 1;
        queue.push_back(n);
      }
    }
    for (int s = 0; s < size(); ++s) {
      for (int a = 0; a < kActions; ++a) {
        const Transition t = step(s, a);
        if (t.next != s && !hazard(t.next) &&
            distance_[static_cast<std::size_t>(t.next)] == distance_[static_cast<std::size_t>(s)] - 1) {
          assist_[static_cast<std::size_t>(s)] = a;
          break;
        }
      }
    }
  }

  double step_reward_ = 0.0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<char> cells_;
  int start_ = -1;
  int goal_ = -1;
  std::vector<int> distance_;
  std::vector<int> assist_;
};

double assistance_probability(double z) { return assistance_schedule(z) / 200.0; }

void check_fidelity(double z, const char* who) {
  if (!(z >= 0.0 && z <= 1.0)) throw std::invalid_argument(std::string(who) + ": z must be in [0, 1]");
}

int greedy_action(const std::vector<double>& q, int s) {
  const auto* row = &q[static_cast<std::size_t>(s * kActions)];
  return static_cast<int>(std::max_element(row, row + kActions) - row);
}

int greedy_action_random_ties(const std::vector<double>& q, int s, std::mt19937_64& rng) {
  const auto* row = &q[static_cast<std::size_t>(s * kActions)];
  const double best = *std::max_element(row, row + kActions);
  int ties[kActions];
  int n = 0;
  for (int a = 0; a < kActions; ++a)
    if (row[a] == best) ties[n++] = a;
  return n == 1 ? ties[0] : ties[std::uniform_int_distribution<int>(0, n - 1)(rng)];
}

double max_q(const std::vector<double>& q, int s) {
  const auto* row = &q[static_cast<std::size_t>(s * kActions)];
  return *std::max_element(row, row + kActions);
}

}  // namespace

double assistance_schedule(double z) {
  check_fidelity(z, "assistance_schedule");
  return 200.0 - 200.0 * z;
}

double episode_length_schedule(double z) {
  check_fidelity(z, "episode_length_schedule");
  return 30.0 + 570.0 * z;
}

void GridworldCurriculumTask::validate() const {
  Grid grid(layout, step_reward);
  if (!(step_reward <= 0.0 && step_reward > -1.0))
    throw std::invalid_argument("gridworld: step_reward must be in (-1, 0]");
  if (eval_horizon < 1) throw std::invalid_argument("gridworld: eval_horizon must be >= 1");
  if (!(budget_base >= 1.0 && budget_slope >= 0.0))
    throw std::invalid_argument("gridworld: invalid training budget");
  if (max_episode_steps < 1) throw std::invalid_argument("gridworld: max_episode_steps >= 1");
  if (!(z_min >= 0.0 && z_min < z_max && z_max <= 1.0))
    throw std::invalid_argument("gridworld: fidelity range must satisfy 0 <= z_min < z_max <= 1");
}

double training_budget(const GridworldCurriculumTask& task, double z) {
  check_fidelity(z, "training_budget");
  return std::round(task.budget_base + task.budget_slope * z);
}

EvalResult evaluate_gridworld(const GridworldCurriculumTask& task, const LearnerHyper& x, double z,
                              const QTableArtifact* warm_start, std::uint64_t seed) {
  check_fidelity(z, "evaluate_gridworld");
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_unit(x.learning_rate) || !in_unit(x.exploration_rate) || !in_unit(x.discount))
    throw std::invalid_argument("evaluate_gridworld: learner hyperparameters must be in [0, 1]");
  const Grid grid(task.layout, task.step_reward);
  const auto n_q = static_cast<std::size_t>(grid.size() * kActions);
  if (warm_start != nullptr && warm_start->q.size() != n_q)
    throw std::invalid_argument("evaluate_gridworld: warm-start table has wrong size");

  auto table = std::make_shared<QTableArtifact>();
  table->q = warm_start != nullptr ? warm_start->q : std::vector<double>(n_q, 0.0);
  table->trained_fidelity = z;
  auto& q = table->q;

  double steps = training_budget(task, z);
  double p_start = 1.0;  // training starts at kp(0) for a cold run
  if (warm_start != nullptr) {
    steps = std::max(steps - training_budget(task, std::min(warm_start->trained_fidelity, z)),
                     task.budget_base);
    p_start = assistance_probability(std::min(warm_start->trained_fidelity, z));
  }
  const bool assisted = task.mode == CurriculumMode::kAssistance;
  const double p_end = assisted ? assistance_probability(z) : 0.0;
  if (!assisted) p_start = 0.0;
  const int episode_cap =
      assisted ? task.max_episode_steps
               : std::max(1, static_cast<int>(std::lround(episode_length_schedule(z) *
                                                          task.max_episode_steps / 600.0)));

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::vector<int> starts = grid.start_cells();
  // Exploring starts: evaluation covers every start cell, so training does too.
  auto episode_start = [&]() {
    return starts[std::uniform_int_distribution<std::size_t>(0, starts.size() - 1)(rng)];
  };

  const auto total = static_cast<long>(steps);
  const double anneal = 0.5 * static_cast<double>(total);
  int s = episode_start();
  int episode_steps = 0;
  for (long k = 0; k < total; ++k) {
    const double p = p_end + (p_start - p_end) * std::max(0.0, 1.0 - static_cast<double>(k) / anneal);
    int a = unit(rng) < x.exploration_rate ? std::uniform_int_distribution<int>(0, kActions - 1)(rng)
                                           : greedy_action_random_ties(q, s, rng);
    if (p > 0.0 && unit(rng) < p) a = grid.assist_action(s);
    const Transition t = grid.step(s, a);
    const double target = t.reward + (t.terminal ? 0.0 : x.discount * max_q(q, t.next));
    auto& qa = q[static_cast<std::size_t>(s * kActions + a)];
    qa += x.learning_rate * (target - qa);
    if (t.terminal || ++episode_steps >= episode_cap) {
      s = episode_start();
      episode_steps = 0;
    } else {
      s = t.next;
    }
  }

  // Greedy evaluation at difficulty z over every start cell.
  std::mt19937_64 eval_rng(seed ^ 0x5851f42d4c957f2dULL);
  const double p_eval = assisted ? assistance_probability(z) : 0.0;
  double total_return = 0.0;
  for (int s0 : starts) {
    int cur = s0;
    double ret = 0.0;
    for (int h = 0; h < task.eval_horizon; ++h) {
      int a = greedy_action(q, cur);
      if (p_eval > 0.0 && unit(eval_rng) < p_eval) a = grid.assist_action(cur);
      const Transition t = grid.step(cur, a);
      ret += t.reward;
      cur = t.terminal ? s0 : t.next;
    }
    total_return += ret / task.eval_horizon;
  }
  return {total_return / static_cast<double>(starts.size()), static_cast<double>(total), table};
}

double gridworld_optimal_return(const GridworldCurriculumTask& task) {
  const Grid grid(task.layout, task.step_reward);
  const auto starts = grid.start_cells();
  double sum = 0.0;
  for (int s0 : starts) {
    int cur = s0;
    double ret = 0.0;
    for (int h = 0; h < task.eval_horizon; ++h) {
      const Transition t = grid.step(cur, grid.assist_action(cur));
      ret += t.reward;
      cur = t.terminal ? s0 : t.next;
    }
    sum += ret / task.eval_horizon;
  }
  return sum / static_cast<double>(starts.size());
}

ObjectiveSpec gridworld_objective(const GridworldCurriculumTask& task) {
  task.validate();
  SearchSpace space({{"learning_rate", 0.01, 1.0},
                     {"exploration_rate", 0.01, 0.5},
                     {"discount", 0.5, 0.999}},
                    task.z_min, task.z_max);
  ObjectiveSpec spec{std::move(space), {}, {},
                     task.mode == CurriculumMode::kAssistance ? "gridworld (assistance curriculum)"
                                                              : "gridworld (horizon curriculum)"};
  spec.evaluate = [task](const Eigen::VectorXd& x, double z, const Artifact* warm,
                         std::uint64_t seed) {
    const LearnerHyper h{x[0], x[1], x[2]};
    return evaluate_gridworld(task, h, z, dynamic_cast<const QTableArtifact*>(warm), seed);
  };
  return spec;
}

ObjectiveSpec with_cost_discount(ObjectiveSpec objective, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("with_cost_discount: scale must be > 0");
  auto wrap = [scale](EvaluateFn inner) -> EvaluateFn {
    if (!inner) return {};
    return [inner = std::move(inner), scale](const Eigen::VectorXd& x, double z,
                                              const Artifact* warm, std::uint64_t seed) {
      EvalResult r = inner(x, z, warm, seed);
      r.y *= std::exp(-r.cost / scale);
      return r;
    };
  };
  objective.evaluate = wrap(std::move(objective.evaluate));
  objective.evaluate_iteration = wrap(std::move(objective.evaluate_iteration));
  objective.description += " (cost-discounted)";
  return objective;
}

}  // namespace cmfbo
