#include <gtest/gtest.h>

#include <cmath>
#include <memory>

#include "cmfbo/errors.hpp"
#include "cmfbo/optimizer.hpp"

using namespace cmfbo;

namespace {

struct Marker : Artifact {
  explicit Marker(int id) : id(id) {}
  int id;
};

// Concave in x with the optimum at 0.3 for every fidelity; cost 1 + 9z.
ObjectiveSpec concave_objective(std::shared_ptr<int> calls = nullptr) {
  ObjectiveSpec spec{SearchSpace({{"x", 0.0, 1.0}}, 0.0, 1.0), nullptr, nullptr, "concave"};
  spec.evaluate = [calls](const Eigen::VectorXd& x, double z, const Artifact*, std::uint64_t) {
    if (calls) ++*calls;
    const double dx = x[0] - 0.3;
    return EvalResult{-(1.0 + 0.5 * z) * dx * dx + 0.1 * z, 1.0 + 9.0 * z,
                      std::make_shared<Marker>(0)};
  };
  spec.evaluate_iteration = spec.evaluate;
  return spec;
}

OptimizerOptions fast_options() {
  OptimizerOptions o;
  o.acquisition.lbfgs_restarts = 5;
  o.fit.restarts = 2;
  return o;
}

QueryRecord record(double z, double y, double cost = 1.0) {
  QueryRecord q;
  q.x = Eigen::VectorXd::Constant(1, 0.5);
  q.z = z;
  q.y = y;
  q.cost = cost;
  return q;
}

}  // namespace

TEST(QuerySeed, DistinctAndStable) {
  EXPECT_EQ(query_seed(1, 0), query_seed(1, 0));
  EXPECT_NE(query_seed(1, 0), query_seed(1, 1));
  EXPECT_NE(query_seed(1, 0), query_seed(2, 0));
}

TEST(LatinHypercube, OnePointPerStratumInEveryAxis) {
  std::mt19937_64 rng(1);
  const int n = 7;
  const auto pts = latin_hypercube(n, 3, rng);
  ASSERT_EQ(pts.size(), 7u);
  for (Eigen::Index j = 0; j < 3; ++j) {
    std::vector<int> seen(n, 0);
    for (const auto& p : pts) {
      ASSERT_GE(p[j], 0.0);
      ASSERT_LT(p[j], 1.0);
      ++seen[static_cast<int>(p[j] * n)];
    }
    for (int s : seen) EXPECT_EQ(s, 1);
  }
}

TEST(NearestWarmStart, GatedAtLowestFidelityAndEmptyRegistry) {
  KernelHyper h = KernelHyper::defaults(1);
  WarmStartRegistry reg;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5);
  EXPECT_FALSE(nearest_warm_start(reg, x, 0.5, h));
  reg.add({x, 0.5, std::make_shared<Marker>(1), 0});
  EXPECT_FALSE(nearest_warm_start(reg, x, 0.0, h));
  EXPECT_TRUE(nearest_warm_start(reg, x, 0.5, h));
}

TEST(NearestWarmStart, PicksMostCorrelatedEntry) {
  KernelHyper h = KernelHyper::defaults(1);
  WarmStartRegistry reg;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.5);
  reg.add({x, 0.8, std::make_shared<Marker>(1), 0});  // distance 0.3
  reg.add({x, 0.6, std::make_shared<Marker>(2), 1});  // distance 0.1
  reg.add({Eigen::VectorXd::Constant(1, 0.9), 0.5, std::make_shared<Marker>(3), 2});
  const auto w = nearest_warm_start(reg, x, 0.5, h);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->source_index, 1);
  // Brute-force check over the registry.
  int best = -1;
  double best_k = -1.0;
  for (const auto& e : reg.entries()) {
    const double k = mf_kernel(x, 0.5, e.x, e.z, h);
    if (k > best_k) best_k = k, best = e.query_index;
  }
  EXPECT_EQ(w->source_index, best);
}

TEST(NearestWarmStart, ExactMatchAndTieGoesToMostRecent) {
  KernelHyper h = KernelHyper::defaults(1);
  WarmStartRegistry reg;
  const Eigen::VectorXd x = Eigen::VectorXd::Constant(1, 0.4);
  reg.add({Eigen::VectorXd::Constant(1, 0.1), 0.7, std::make_shared<Marker>(1), 0});
  reg.add({x, 0.7, std::make_shared<Marker>(2), 1});
  reg.add({x, 0.7, std::make_shared<Marker>(3), 2});
  const auto w = nearest_warm_start(reg, x, 0.7, h);
  ASSERT_TRUE(w);
  EXPECT_EQ(w->source_index, 2);
  EXPECT_EQ(dynamic_cast<const Marker&>(*w->artifact).id, 3);
}

TEST(ReportBest, IgnoresLowFidelityAndBreaksTiesEarly) {
  OptimizationTrace t;
  t.append(record(0.0, 10.0));
  EXPECT_THROW(report_best(t), NoIncumbentError);
  t.append(record(1.0, 2.0));
  t.append(record(0.5, 9.0));
  t.append(record(1.0, 3.0));
  t.append(record(1.0, 3.0));
  const auto best = report_best(t);
  EXPECT_EQ(best.query_index, 3);
  EXPECT_EQ(best.y, 3.0);
  EXPECT_EQ(report_best(t, IncumbentRule::kAnyFidelity).query_index, 0);
}

TEST(OptimizationTrace, AppendTracksCostAndIncumbent) {
  OptimizationTrace t;
  t.append(record(0.0, 5.0, 2.0));
  t.append(record(1.0, 1.0, 3.0));
  t.append(record(1.0, 0.5, 1.0));
  t.append(record(1.0, 4.0, 1.0));
  EXPECT_EQ(t.cumulative_cost, 7.0);
  EXPECT_EQ(t.queries[1].cumulative_cost, 5.0);
  ASSERT_EQ(t.incumbent_history.size(), 3u);
  EXPECT_EQ(t.incumbent_history[1].best_y, 1.0);
  EXPECT_EQ(t.incumbent_history[2].best_y, 4.0);
  EXPECT_EQ(t.incumbent_history[2].cumulative_cost, 7.0);
}

TEST(RunCmfbo, TinyBudgetStopsAfterFirstEvaluation) {
  auto calls = std::make_shared<int>(0);
  const auto trace = run_cmfbo(concave_objective(calls), 0.5, fast_options(), 1);
  EXPECT_EQ(trace.queries.size(), 1u);
  EXPECT_EQ(*calls, 1);
  EXPECT_TRUE(trace.incumbent_history.empty());
}

TEST(RunCmfbo, FindsConcaveOptimumAndRespectsInvariants) {
  std::vector<IterationInfo> infos;
  auto options = fast_options();
  options.on_iteration = [&](const IterationInfo& info) { infos.push_back(info); };
  const auto trace = run_cmfbo(concave_objective(), 150.0, options, 3);
  const auto best = report_best(trace);
  EXPECT_NEAR(best.x[0], 0.3, 0.05);

  // Budget overshoot by at most one query.
  double max_cost = 0.0;
  for (const auto& q : trace.queries) max_cost = std::max(max_cost, q.cost);
  EXPECT_GE(trace.cumulative_cost, 150.0);
  EXPECT_LE(trace.cumulative_cost - 150.0, max_cost);

  // Initial design at the lowest fidelity.
  for (int i = 0; i < 3; ++i) EXPECT_EQ(trace.queries[static_cast<std::size_t>(i)].z, 0.0);

  // Every queried z sits on the progressive lattice of that iteration.
  ASSERT_FALSE(infos.empty());
  for (const auto& info : infos) {
    const auto& q = trace.queries[static_cast<std::size_t>(info.query_index)];
    EXPECT_EQ(q.z, info.proposal.z);
    double z = 0.0;
    const double lz = info.hyper.fidelity_length_scale;
    for (const auto& step : info.proposal.fidelity_path) {
      EXPECT_EQ(step.z, z);
      z = std::min(z + lz, kTopFidelity);
    }
    // Warm starts only above the lowest fidelity.
    if (q.z == 0.0) EXPECT_EQ(q.warm_start_source, -1);
  }

  // Incumbent history is non-decreasing and only moves on top-fidelity queries.
  for (std::size_t i = 0; i < trace.incumbent_history.size(); ++i) {
    const auto& p = trace.incumbent_history[i];
    EXPECT_EQ(trace.queries[static_cast<std::size_t>(p.query_index)].z, kTopFidelity);
    if (i > 0) EXPECT_GE(p.best_y, trace.incumbent_history[i - 1].best_y);
  }
}

TEST(RunCmfbo, SameSeedGivesIdenticalTrace) {
  const auto a = run_cmfbo(concave_objective(), 60.0, fast_options(), 7);
  const auto b = run_cmfbo(concave_objective(), 60.0, fast_options(), 7);
  EXPECT_TRUE(a == b);
}

TEST(RunCmfbo, LargerBudgetExtendsSmallerRun) {
  const auto small = run_cmfbo(concave_objective(), 40.0, fast_options(), 8);
  const auto large = run_cmfbo(concave_objective(), 80.0, fast_options(), 8);
  ASSERT_LE(small.queries.size(), large.queries.size());
  for (std::size_t i = 0; i < small.queries.size(); ++i) EXPECT_EQ(small.queries[i], large.queries[i]);
}

TEST(RunCmfbo, FailedEvaluationsAreImputedAndCharged) {
  auto spec = concave_objective();
  auto inner = spec.evaluate;
  spec.evaluate = [inner](const Eigen::VectorXd& x, double z, const Artifact* w, std::uint64_t s) {
    if (x[0] > 0.8) throw EvaluationError("diverged", 2.5);
    return inner(x, z, w, s);
  };
  auto options = fast_options();
  options.n_init = 10;
  const auto trace = run_cmfbo(spec, 40.0, options, 2);
  int failed = 0;
  for (std::size_t i = 0; i < trace.queries.size(); ++i) {
    const auto& q = trace.queries[i];
    if (!q.failed) continue;
    ++failed;
    EXPECT_EQ(q.cost, 2.5);
    double lowest = 1e300;
    for (std::size_t j = 0; j < i; ++j)
      if (!trace.queries[j].failed) lowest = std::min(lowest, trace.queries[j].y);
    EXPECT_LT(q.y, lowest);
  }
  EXPECT_GE(failed, 1);  // the LHS design covers x > 0.8
}

TEST(RunCmfbo, RejectsBadArguments) {
  EXPECT_THROW(run_cmfbo(concave_objective(), 0.0, fast_options(), 1), std::invalid_argument);
  auto options = fast_options();
  options.n_init = 1;
  EXPECT_THROW(run_cmfbo(concave_objective(), 10.0, options, 1), std::invalid_argument);
}

TEST(GpUcbBaseline, EvaluatesOnlyTopFidelityAndConverges) {
  const auto trace = run_gp_ucb_baseline(concave_objective(), 200.0, fast_options(), 4);
  for (const auto& q : trace.queries) EXPECT_EQ(q.z, kTopFidelity);
  EXPECT_NEAR(report_best(trace).x[0], 0.3, 0.05);
  EXPECT_TRUE(trace == run_gp_ucb_baseline(concave_objective(), 200.0, fast_options(), 4));
}

TEST(IterationFidelityBaseline, UsesIterationAxis) {
  auto spec = concave_objective();
  auto iteration_calls = std::make_shared<int>(0);
  auto inner = spec.evaluate_iteration;
  spec.evaluate_iteration = [inner, iteration_calls](const Eigen::VectorXd& x, double z,
                                                     const Artifact* w, std::uint64_t s) {
    ++*iteration_calls;
    return inner(x, z, w, s);
  };
  spec.evaluate = nullptr;
  const auto trace = run_iteration_fidelity_baseline(spec, 40.0, fast_options(), 5);
  EXPECT_EQ(static_cast<std::size_t>(*iteration_calls), trace.queries.size());
  EXPECT_EQ(trace.method, "iteration_fidelity");
  spec.evaluate_iteration = nullptr;
  EXPECT_THROW(run_iteration_fidelity_baseline(spec, 40.0, fast_options(), 5), std::invalid_argument);
}

TEST(RandomBaseline, SpendsBudgetAtTopFidelity) {
  const auto trace = run_random_baseline(concave_objective(), 55.0, 6);
  EXPECT_GE(trace.cumulative_cost, 55.0);
  EXPECT_EQ(trace.queries.size(), 6u);
  for (const auto& q : trace.queries) EXPECT_EQ(q.z, kTopFidelity);
  EXPECT_TRUE(trace == run_random_baseline(concave_objective(), 55.0, 6));
}
