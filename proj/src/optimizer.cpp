#include "cmfbo/optimizer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <nlohmann/json.hpp>

#include "cmfbo/errors.hpp"

namespace cmfbo {

namespace {

bool is_top(double z) { return z == kTopFidelity; }

std::string snapshot(const std::string& method, const OptimizerOptions& o, int n_init,
                     double budget) {
  const auto& a = o.acquisition;
  const auto& f = o.fit;
  nlohmann::json j = {
      {"method", method},
      {"budget", budget},
      {"n_init", n_init},
      {"warm_start_transfer", o.warm_start_transfer},
      {"incumbent_rule", o.incumbent_rule == IncumbentRule::kTopFidelity ? "top_fidelity" : "any_fidelity"},
      {"acquisition",
       {{"beta_coefficient", a.beta_coefficient},
        {"epsilon", a.epsilon},
        {"lbfgs_restarts", a.lbfgs_restarts},
        {"lbfgs_max_iters", a.lbfgs_max_iters},
        {"grad_tolerance", a.grad_tolerance},
        {"warm_perturbations", a.warm_perturbations},
        {"warm_perturbation_std", a.warm_perturbation_std},
        {"gate_on_latent_std", a.gate_on_latent_std}}},
      {"fit",
       {{"restarts", f.restarts},
        {"max_iters", f.max_iters},
        {"signal_variance", {f.signal_variance_min, f.signal_variance_max}},
        {"length_scale", {f.length_scale_min, f.length_scale_max}},
        {"fidelity_length_scale", {f.fidelity_length_scale_min, f.fidelity_length_scale_max}},
        {"noise_std", {f.noise_std_min, f.noise_std_max}}}},
  };
  return j.dump();
}

double imputed_failure_value(const OptimizationTrace& trace) {
  std::vector<double> ys;
  for (const auto& q : trace.queries)
    if (!q.failed) ys.push_back(q.y);
  if (ys.empty()) return -1.0;
  const double mean = std::accumulate(ys.begin(), ys.end(), 0.0) / static_cast<double>(ys.size());
  double ss = 0.0;
  for (double y : ys) ss += (y - mean) * (y - mean);
  const double sd = std::sqrt(ss / static_cast<double>(ys.size()));
  return *std::min_element(ys.begin(), ys.end()) - (sd > 0.0 ? sd : 1.0);
}

// Shared state of one optimization run: evaluation, cost accounting, trace.
class RunContext {
 public:
  RunContext(const ObjectiveSpec& objective, const EvaluateFn& evaluate, std::string method,
             double budget, std::uint64_t seed, const OptimizerOptions& options, int n_init)
      : objective_(objective), evaluate_(evaluate), options_(options) {
    if (!(budget > 0.0)) throw std::invalid_argument(method + ": budget must be > 0");
    if (!evaluate_) throw std::invalid_argument(method + ": objective lacks this fidelity axis");
    trace_.method = std::move(method);
    trace_.seed = seed;
    trace_.budget = budget;
    trace_.dims = objective.space.dims();
    trace_.z_min = objective.space.z_min();
    trace_.z_max = objective.space.z_max();
    trace_.incumbent_rule = options.incumbent_rule;
    trace_.config_snapshot = snapshot(trace_.method, options, n_init, budget);
  }

  bool exhausted() const { return trace_.cumulative_cost >= trace_.budget; }

  /// Evaluates at normalized (x, z); returns the new query index.
  int evaluate(const Eigen::VectorXd& x, double z, const std::optional<WarmStart>& warm) {
    const std::size_t index = trace_.queries.size();
    const Eigen::VectorXd raw_x = objective_.space.denormalize(x);
    const double raw_z = objective_.space.denormalize_fidelity(z);
    const Artifact* warm_ptr = warm ? warm->artifact.get() : nullptr;

    QueryRecord q;
    q.x = x;
    q.z = z;
    q.warm_start_source = warm ? warm->source_index : -1;
    const auto start = std::chrono::steady_clock::now();
    EvalResult r;
    try {
      r = evaluate_(raw_x, raw_z, warm_ptr, query_seed(trace_.seed, index));
      if (!std::isfinite(r.y)) throw EvaluationError("non-finite objective value", r.cost);
      q.y = r.y;
    } catch (const EvaluationError& e) {
      q.failed = true;
      q.y = imputed_failure_value(trace_);
      r.cost = e.cost();
      r.artifact.reset();
    }
    if (!(r.cost > 0.0) || !std::isfinite(r.cost))
      throw std::runtime_error("objective reported a non-positive evaluation cost");
    q.cost = r.cost;
    if (options_.record_wall_time) {
      q.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
                      .count();
    }
    trace_.append(std::move(q));
    if (r.artifact) registry_.add({x, z, r.artifact, static_cast<int>(index)});
    return static_cast<int>(index);
  }

  OptimizationTrace& trace() { return trace_; }
  const WarmStartRegistry& registry() const { return registry_; }

 private:
  const ObjectiveSpec& objective_;
  const EvaluateFn& evaluate_;
  const OptimizerOptions& options_;
  OptimizationTrace trace_;
  WarmStartRegistry registry_;
};

int resolve_n_init(const OptimizerOptions& options, Eigen::Index d) {
  const int n = options.n_init > 0 ? options.n_init : static_cast<int>(2 * d + 1);
  if (n < 2) throw std::invalid_argument("n_init must be >= 2");
  return n;
}

// Progressive multi-fidelity loop shared by CMFBO and the iteration-fidelity
// baseline; they differ only in which fidelity axis is evaluated.
OptimizationTrace run_progressive(const ObjectiveSpec& objective, const EvaluateFn& evaluate,
                                  const std::string& method, double budget,
                                  const OptimizerOptions& options, std::uint64_t seed) {
  options.acquisition.validate();
  const Eigen::Index d = objective.space.dim();
  const int n_init = resolve_n_init(options, d);
  RunContext ctx(objective, evaluate, method, budget, seed, options, n_init);
  std::mt19937_64 rng(seed);

  for (const auto& x : latin_hypercube(n_init, d, rng)) {
    ctx.evaluate(x, 0.0, std::nullopt);
    if (ctx.exhausted()) return std::move(ctx.trace());
  }

  std::optional<KernelHyper> previous;
  for (int t = 1;; ++t) {
    const auto data = observations(ctx.trace());
    const FitResult fit =
        fit_hyperparameters(data, options.fit, rng, previous ? &*previous : nullptr);
    previous = fit.hyper;
    const GpModel model(fit.hyper, data);
    ProgressiveResult proposal = progressive_acquisition(
        model, t, fit.hyper.fidelity_length_scale, options.acquisition, rng);

    std::optional<WarmStart> warm;
    if (options.warm_start_transfer)
      warm = nearest_warm_start(ctx.registry(), proposal.x, proposal.z, fit.hyper);
    const int index = ctx.evaluate(proposal.x, proposal.z, warm);
    if (options.on_iteration)
      options.on_iteration({t, fit.hyper, fit.fallback, std::move(proposal), index});
    if (ctx.exhausted()) break;
  }
  return std::move(ctx.trace());
}

}  // namespace

void OptimizationTrace::append(QueryRecord q) {
  cumulative_cost += q.cost;
  q.cumulative_cost = cumulative_cost;
  const int index = static_cast<int>(queries.size());
  const bool counts = !q.failed && (incumbent_rule == IncumbentRule::kAnyFidelity || is_top(q.z));
  if (counts) {
    double best = q.y;
    if (!incumbent_history.empty()) best = std::max(best, incumbent_history.back().best_y);
    incumbent_history.push_back({cumulative_cost, best, index});
  }
  queries.push_back(std::move(q));
}

bool OptimizationTrace::operator==(const OptimizationTrace& o) const {
  if (dims.size() != o.dims.size()) return false;
  for (std::size_t i = 0; i < dims.size(); ++i) {
    if (dims[i].name != o.dims[i].name || dims[i].lower != o.dims[i].lower ||
        dims[i].upper != o.dims[i].upper)
      return false;
  }
  return method == o.method && seed == o.seed && budget == o.budget && z_min == o.z_min &&
         z_max == o.z_max && incumbent_rule == o.incumbent_rule &&
         config_snapshot == o.config_snapshot && queries == o.queries &&
         cumulative_cost == o.cumulative_cost && incumbent_history == o.incumbent_history;
}

std::vector<Observation> observations(const OptimizationTrace& trace) {
  std::vector<Observation> out;
  out.reserve(trace.queries.size());
  for (const auto& q : trace.queries) out.push_back({q.x, q.z, q.y, q.cost, nullptr});
  return out;
}

std::optional<WarmStart> nearest_warm_start(const WarmStartRegistry& registry,
                                            const Eigen::Ref<const Eigen::VectorXd>& x, double z,
                                            const KernelHyper& hyper, double z_min) {
  if (z <= z_min || registry.empty()) return std::nullopt;
  const WarmStartEntry* best = nullptr;
  double best_k = -1.0;
  for (const auto& e : registry.entries()) {
    const double k = mf_kernel(x, z, e.x, e.z, hyper);
    if (k >= best_k) {
      best_k = k;
      best = &e;
    }
  }
  return WarmStart{best->artifact, best->query_index};
}

BestPoint report_best(const OptimizationTrace& trace, IncumbentRule rule) {
  BestPoint best;
  for (std::size_t i = 0; i < trace.queries.size(); ++i) {
    const auto& q = trace.queries[i];
    if (q.failed || (rule == IncumbentRule::kTopFidelity && !is_top(q.z))) continue;
    if (best.query_index < 0 || q.y > best.y) best = {q.x, q.y, static_cast<int>(i)};
  }
  if (best.query_index < 0)
    throw NoIncumbentError("trace has no evaluation of the original objective");
  return best;
}

std::vector<Eigen::VectorXd> latin_hypercube(int n, Eigen::Index d, std::mt19937_64& rng) {
  if (n < 1 || d < 1) throw std::invalid_argument("latin_hypercube: n and d must be >= 1");
  std::vector<Eigen::VectorXd> pts(static_cast<std::size_t>(n), Eigen::VectorXd(d));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (Eigen::Index j = 0; j < d; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i)
      pts[static_cast<std::size_t>(i)][j] = (perm[static_cast<std::size_t>(i)] + unit(rng)) / n;
  }
  return pts;
}

std::uint64_t query_seed(std::uint64_t run_seed, std::size_t query_index) {
  // splitmix64 finalizer
  std::uint64_t z = run_seed + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(query_index) + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

OptimizationTrace run_cmfbo(const ObjectiveSpec& objective, double budget,
                            const OptimizerOptions& options, std::uint64_t seed) {
  return run_progressive(objective, objective.evaluate, "cmfbo", budget, options, seed);
}

OptimizationTrace run_iteration_fidelity_baseline(const ObjectiveSpec& objective, double budget,
                                                  const OptimizerOptions& options,
                                                  std::uint64_t seed) {
  return run_progressive(objective, objective.evaluate_iteration, "iteration_fidelity", budget,
                         options, seed);
}

OptimizationTrace run_gp_ucb_baseline(const ObjectiveSpec& objective, double budget,
                                      const OptimizerOptions& options, std::uint64_t seed) {
  options.acquisition.validate();
  const Eigen::Index d = objective.space.dim();
  const int n_init = resolve_n_init(options, d);
  RunContext ctx(objective, objective.evaluate, "gp_ucb", budget, seed, options, n_init);
  std::mt19937_64 rng(seed);

  for (const auto& x : latin_hypercube(n_init, d, rng)) {
    ctx.evaluate(x, kTopFidelity, std::nullopt);
    if (ctx.exhausted()) return std::move(ctx.trace());
  }
  std::optional<KernelHyper> previous;
  for (int t = 1;; ++t) {
    const auto data = observations(ctx.trace());
    const FitResult fit =
        fit_hyperparameters(data, options.fit, rng, previous ? &*previous : nullptr);
    previous = fit.hyper;
    const GpModel model(fit.hyper, data);
    const double beta = beta_schedule(static_cast<int>(d), t, options.acquisition.beta_coefficient);
    const auto best = maximize_acquisition(model, kTopFidelity, beta, std::nullopt,
                                           options.acquisition, rng);
    const int index = ctx.evaluate(best.x, kTopFidelity, std::nullopt);
    if (options.on_iteration) {
      ProgressiveResult p;
      p.x = best.x;
      p.z = kTopFidelity;
      p.beta = beta;
      options.on_iteration({t, fit.hyper, fit.fallback, std::move(p), index});
    }
    if (ctx.exhausted()) break;
  }
  return std::move(ctx.trace());
}

OptimizationTrace run_random_baseline(const ObjectiveSpec& objective, double budget,
                                      std::uint64_t seed) {
  const OptimizerOptions options;
  RunContext ctx(objective, objective.evaluate, "random", budget, seed, options, 0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const Eigen::Index d = objective.space.dim();
  while (!ctx.exhausted()) {
    Eigen::VectorXd x(d);
    for (Eigen::Index i = 0; i < d; ++i) x[i] = unit(rng);
    ctx.evaluate(x, kTopFidelity, std::nullopt);
  }
  return std::move(ctx.trace());
}

}  // namespace cmfbo
