#include "cmfbo/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iomanip>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include "cmfbo/benchmarks.hpp"
#include "cmfbo/errors.hpp"
#include "cmfbo/gridworld.hpp"
#include "cmfbo/trace_io.hpp"

namespace cmfbo {

namespace {

using nlohmann::json;

// Reads typed keys from a params object and rejects keys nobody asked for.
class ParamReader {
 public:
  ParamReader(const std::string& text, std::string context) : context_(std::move(context)) {
    try {
      params_ = json::parse(text);
    } catch (const json::exception& e) {
      throw ConfigError(context_ + ": params are not valid JSON: " + e.what());
    }
    if (!params_.is_object()) throw ConfigError(context_ + ": params must be an object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!params_.contains(key)) return fallback;
    try {
      return params_.at(key).get<T>();
    } catch (const json::exception&) {
      throw ConfigError(context_ + ": parameter '" + key + "' has the wrong type");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return params_.contains(key);
  }

  void finish() const {
    for (const auto& [key, value] : params_.items()) {
      if (!seen_.count(key)) throw ConfigError(context_ + ": unknown parameter '" + key + "'");
    }
  }

 private:
  json params_;
  std::string context_;
  std::set<std::string> seen_;
};

NamedParams parse_named(const json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("name") || !j.at("name").is_string())
    throw ConfigError(context + ": expected an object with a string 'name'");
  NamedParams out;
  out.name = j.at("name").get<std::string>();
  if (j.contains("params")) {
    if (!j.at("params").is_object()) throw ConfigError(context + ": 'params' must be an object");
    out.params = j.at("params").dump();
  }
  if (j.contains("label")) {
    if (!j.at("label").is_string()) throw ConfigError(context + ": 'label' must be a string");
    out.label = j.at("label").get<std::string>();
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "name" && key != "params" && key != "label")
      throw ConfigError(context + ": unknown key '" + key + "'");
  }
  return out;
}

json named_to_json(const NamedParams& p) {
  json j = {{"name", p.name}, {"params", json::parse(p.params)}};
  if (!p.label.empty()) j["label"] = p.label;
  return j;
}

struct MethodSetup {
  OptimizerOptions options;
  bool model_based = true;
};

MethodSetup parse_method(const NamedParams& method) {
  const auto names = method_names();
  if (std::find(names.begin(), names.end(), method.name) == names.end())
    throw ConfigError("unknown method '" + method.name + "'");
  ParamReader r(method.params, "method " + method.display());
  MethodSetup setup;
  if (method.name == "random") {
    setup.model_based = false;
    r.finish();
    return setup;
  }
  auto& o = setup.options;
  o.n_init = r.get("n_init", o.n_init);
  o.warm_start_transfer = r.get("warm_start_transfer", o.warm_start_transfer);
  o.record_wall_time = r.get("record_wall_time", o.record_wall_time);
  const auto rule = r.get<std::string>("incumbent_rule", "top_fidelity");
  if (rule == "top_fidelity") {
    o.incumbent_rule = IncumbentRule::kTopFidelity;
  } else if (rule == "any_fidelity") {
    o.incumbent_rule = IncumbentRule::kAnyFidelity;
  } else {
    throw ConfigError("method " + method.display() + ": unknown incumbent_rule '" + rule + "'");
  }
  auto& a = o.acquisition;
  a.beta_coefficient = r.get("beta_coefficient", a.beta_coefficient);
  a.epsilon = r.get("epsilon", a.epsilon);
  a.lbfgs_restarts = r.get("lbfgs_restarts", a.lbfgs_restarts);
  a.lbfgs_max_iters = r.get("lbfgs_max_iters", a.lbfgs_max_iters);
  a.warm_perturbations = r.get("warm_perturbations", a.warm_perturbations);
  a.gate_on_latent_std = r.get("gate_on_latent_std", a.gate_on_latent_std);
  o.fit.restarts = r.get("fit_restarts", o.fit.restarts);
  o.fit.max_iters = r.get("fit_max_iters", o.fit.max_iters);
  r.finish();
  try {
    a.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("method " + method.display() + ": " + e.what());
  }
  if (o.n_init < 0 || o.n_init == 1)
    throw ConfigError("method " + method.display() + ": n_init must be 0 (auto) or >= 2");
  if (o.fit.restarts < 1) throw ConfigError("method " + method.display() + ": fit_restarts >= 1");
  return setup;
}

std::string seed_file_stem(const std::string& method, std::uint64_t seed) {
  return method + "_seed" + std::to_string(seed);
}

json summary_json(const RunRecord& record, const std::optional<double>& optimum) {
  json incumbent = nullptr;
  try {
    const BestPoint best = report_best(record.trace, record.trace.incumbent_rule);
    const SearchSpace space(record.trace.dims, record.trace.z_min, record.trace.z_max);
    const Eigen::VectorXd raw = space.denormalize(best.x);
    incumbent = {{"y", best.y},
                 {"x", std::vector<double>(raw.data(), raw.data() + raw.size())},
                 {"query_index", best.query_index}};
  } catch (const NoIncumbentError&) {
  }
  return {{"method", record.method},
          {"seed", record.seed},
          {"config_hash", record.config_hash},
          {"wall_time_s", record.wall_time_s},
          {"queries", record.trace.queries.size()},
          {"total_cost", record.trace.cumulative_cost},
          {"incumbent", incumbent},
          {"benchmark_optimum", optimum ? json(*optimum) : json(nullptr)}};
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::filesystem::path config_file(const std::filesystem::path& dir) { return dir / "config.json"; }

}  // namespace

void ExperimentConfig::validate() const {
  if (methods.empty()) throw ConfigError("config: at least one method is required");
  if (seeds.empty()) throw ConfigError("config: at least one seed is required");
  if (!(budget > 0.0) || !std::isfinite(budget)) throw ConfigError("config: budget must be > 0");
  std::set<std::string> labels;
  for (const auto& m : methods) {
    parse_method(m);
    const std::string& label = m.display();
    if (label.empty() || label.find_first_of("/\\ ,") != std::string::npos)
      throw ConfigError("config: method label '" + label + "' is not usable in file names");
    if (!labels.insert(label).second)
      throw ConfigError("config: duplicate method label '" + label + "' (set \"label\")");
  }
  std::set<std::uint64_t> unique(seeds.begin(), seeds.end());
  if (unique.size() != seeds.size()) throw ConfigError("config: duplicate seeds");
  make_benchmark(benchmark);
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: invalid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  for (const auto& [key, value] : j.items()) {
    static const std::set<std::string> known = {"benchmark", "methods", "budget", "seeds",
                                                "output_dir"};
    if (!known.count(key)) throw ConfigError("config: unknown key '" + key + "'");
  }
  ExperimentConfig c;
  if (!j.contains("benchmark")) throw ConfigError("config: missing 'benchmark'");
  c.benchmark = parse_named(j.at("benchmark"), "benchmark");
  if (!j.contains("methods") || !j.at("methods").is_array())
    throw ConfigError("config: 'methods' must be a list");
  for (const auto& m : j.at("methods")) c.methods.push_back(parse_named(m, "methods"));
  if (!j.contains("budget") || !j.at("budget").is_number())
    throw ConfigError("config: 'budget' must be a number");
  c.budget = j.at("budget").get<double>();
  if (j.contains("seeds")) {
    if (!j.at("seeds").is_array()) throw ConfigError("config: 'seeds' must be a list");
    for (const auto& s : j.at("seeds")) {
      if (!s.is_number_unsigned()) throw ConfigError("config: seeds must be non-negative integers");
      c.seeds.push_back(s.get<std::uint64_t>());
    }
  } else {
    for (int s = 0; s < kDefaultSeedCount; ++s) c.seeds.push_back(static_cast<std::uint64_t>(s));
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("config: 'output_dir' must be a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::string text;
  try {
    text = read_file(path);
  } catch (const std::runtime_error& e) {
    throw ConfigError(e.what());
  }
  return parse_config(text);
}

std::string canonical_config(const ExperimentConfig& config) {
  json methods = json::array();
  for (const auto& m : config.methods) methods.push_back(named_to_json(m));
  const json j = {{"benchmark", named_to_json(config.benchmark)},
                  {"methods", methods},
                  {"budget", config.budget},
                  {"seeds", config.seeds}};
  return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 failed");
  std::ostringstream out;
  out << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < len; ++i) out << std::setw(2) << static_cast<int>(digest[i]);
  return out.str();
}

std::string config_hash(const ExperimentConfig& config) {
  return sha256_hex(canonical_config(config) + "\n");
}

std::vector<std::string> benchmark_names() { return {"deceptive", "gridworld", "overlap"}; }

std::vector<std::string> method_names() {
  return {"cmfbo", "gp_ucb", "iteration_fidelity", "random"};
}

BenchmarkInstance make_benchmark(const NamedParams& spec) {
  ParamReader r(spec.params, "benchmark " + spec.name);
  try {
    if (spec.name == "overlap") {
      const int dim = r.get("dim", 2);
      const double rho = r.get("rho", 0.1);
      const auto seed = r.get<std::uint64_t>("seed", 0);
      OverlapOptions options;
      options.noise_std = r.get("noise_std", 0.0);
      options.cost.c_lo = r.get("c_lo", options.cost.c_lo);
      options.cost.c_hi = r.get("c_hi", options.cost.c_hi);
      r.finish();
      const auto f = make_overlap_benchmark(dim, rho, seed, options);
      std::ostringstream desc;
      desc << "overlap d=" << dim << " rho=" << rho << " seed=" << seed;
      return {f.objective(desc.str()), f.top_optimum().value};
    }
    if (spec.name == "deceptive") {
      const auto seed = r.get<std::uint64_t>("seed", 0);
      CostModel cost;
      cost.c_lo = r.get("c_lo", cost.c_lo);
      cost.c_hi = r.get("c_hi", cost.c_hi);
      r.finish();
      const auto b = make_deceptive_iteration_benchmark(seed, cost);
      return {b.function.objective("deceptive seed=" + std::to_string(seed)),
              b.function.top_optimum().value};
    }
    if (spec.name == "gridworld") {
      GridworldCurriculumTask task;
      const auto mode = r.get<std::string>("mode", "assistance");
      if (mode == "assistance") {
        task.mode = CurriculumMode::kAssistance;
      } else if (mode == "horizon") {
        task.mode = CurriculumMode::kHorizon;
      } else {
        throw ConfigError("benchmark gridworld: unknown mode '" + mode + "'");
      }
      if (r.has("layout")) task.layout = r.get<std::vector<std::string>>("layout", {});
      task.eval_horizon = r.get("eval_horizon", task.eval_horizon);
      task.step_reward = r.get("step_reward", task.step_reward);
      task.budget_base = r.get("budget_base", task.budget_base);
      task.budget_slope = r.get("budget_slope", task.budget_slope);
      task.max_episode_steps = r.get("max_episode_steps", task.max_episode_steps);
      task.z_min = r.get("z_min", task.z_min);
      task.z_max = r.get("z_max", task.z_max);
      const double discount_scale = r.get("cost_discount_scale", 0.0);
      r.finish();
      BenchmarkInstance out{gridworld_objective(task), gridworld_optimal_return(task)};
      if (discount_scale > 0.0) {
        out.objective = with_cost_discount(std::move(out.objective), discount_scale);
        out.optimum.reset();
      }
      return out;
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError("benchmark " + spec.name + ": " + e.what());
  }
  throw ConfigError("unknown benchmark '" + spec.name + "'");
}

OptimizationTrace run_method(const NamedParams& method, const ObjectiveSpec& objective,
                             double budget, std::uint64_t seed) {
  const MethodSetup setup = parse_method(method);
  OptimizationTrace trace;
  if (method.name == "cmfbo") {
    trace = run_cmfbo(objective, budget, setup.options, seed);
  } else if (method.name == "gp_ucb") {
    trace = run_gp_ucb_baseline(objective, budget, setup.options, seed);
  } else if (method.name == "iteration_fidelity") {
    if (!objective.evaluate_iteration)
      throw ConfigError("method iteration_fidelity: benchmark has no iteration-fraction axis");
    trace = run_iteration_fidelity_baseline(objective, budget, setup.options, seed);
  } else {
    trace = run_random_baseline(objective, budget, seed);
  }
  trace.method = method.display();
  return trace;
}

std::filesystem::path trace_path(const std::filesystem::path& dir, const std::string& method,
                                 std::uint64_t seed) {
  return dir / (seed_file_stem(method, seed) + ".trace.csv");
}

std::filesystem::path summary_path(const std::filesystem::path& dir, const std::string& method,
                                   std::uint64_t seed) {
  return dir / (seed_file_stem(method, seed) + ".summary.json");
}

std::vector<RunRecord> run_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.output_dir.empty()) throw ConfigError("config: no output directory");
  for (const auto& m : config.methods) {
    if (m.name == "iteration_fidelity" && !make_benchmark(config.benchmark).objective.evaluate_iteration)
      throw ConfigError("method iteration_fidelity: benchmark has no iteration-fraction axis");
  }

  const std::string canonical = canonical_config(config) + "\n";
  const std::string hash = sha256_hex(canonical);
  const auto dir = config.output_dir;
  std::filesystem::create_directories(dir);
  if (std::filesystem::exists(config_file(dir))) {
    if (sha256_hex(read_file(config_file(dir))) != hash)
      throw ConfigError("output directory " + dir.string() +
                        " holds results of a different configuration");
  } else {
    write_file_atomic(config_file(dir), canonical);
  }

  const BenchmarkInstance bench = make_benchmark(config.benchmark);
  std::vector<RunRecord> records;
  for (const auto& method : config.methods) {
    for (const auto seed : config.seeds) {
      RunRecord record;
      record.method = method.display();
      record.seed = seed;
      record.config_hash = hash;
      const auto tpath = trace_path(dir, record.method, seed);
      if (std::filesystem::exists(tpath)) {
        record.trace = read_trace(tpath);
        const auto spath = summary_path(dir, record.method, seed);
        if (std::filesystem::exists(spath))
          record.wall_time_s = json::parse(read_file(spath)).value("wall_time_s", 0.0);
        records.push_back(std::move(record));
        continue;
      }
      const auto start = std::chrono::steady_clock::now();
      record.trace = run_method(method, bench.objective, config.budget, seed);
      record.wall_time_s =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      // The trace is the commit point for resume, so it goes last.
      write_file_atomic(summary_path(dir, record.method, seed), summary_json(record, bench.optimum).dump(2) + "\n");
      write_trace(tpath, record.trace);
      records.push_back(std::move(record));
    }
  }
  return records;
}

std::vector<RunRecord> load_experiment(const ExperimentConfig& config) {
  config.validate();
  const std::string hash = config_hash(config);
  std::vector<RunRecord> records;
  for (const auto& method : config.methods) {
    for (const auto seed : config.seeds) {
      RunRecord record;
      record.method = method.display();
      record.seed = seed;
      record.config_hash = hash;
      record.trace = read_trace(trace_path(config.output_dir, record.method, seed));
      records.push_back(std::move(record));
    }
  }
  return records;
}

std::optional<double> incumbent_at(const OptimizationTrace& trace, double cost) {
  std::optional<double> best;
  for (const auto& p : trace.incumbent_history) {
    if (p.cumulative_cost > cost) break;
    best = p.best_y;
  }
  return best;
}

std::optional<double> cost_to_reach(const OptimizationTrace& trace, double threshold) {
  for (const auto& p : trace.incumbent_history) {
    if (p.best_y >= threshold) return p.cumulative_cost;
  }
  return std::nullopt;
}

std::vector<ComparisonRow> emit_comparison(const std::vector<RunRecord>& records,
                                           const std::vector<double>& checkpoints) {
  std::map<std::string, std::vector<const RunRecord*>> by_method;
  for (const auto& r : records) by_method[r.method].push_back(&r);
  std::vector<ComparisonRow> rows;
  for (const auto& [method, runs] : by_method) {
    for (const double c : checkpoints) {
      ComparisonRow row;
      row.method = method;
      row.cost = c;
      row.runs = static_cast<int>(runs.size());
      std::vector<double> values;
      for (const auto* r : runs) {
        const auto v = incumbent_at(r->trace, c);
        if (!v) break;
        values.push_back(*v);
      }
      if (values.size() == runs.size()) {
        row.median = median_of(values);
        row.min = *std::min_element(values.begin(), values.end());
        row.max = *std::max_element(values.begin(), values.end());
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

std::vector<double> default_checkpoints(double budget, int n) {
  if (n < 1) throw std::invalid_argument("default_checkpoints: n must be >= 1");
  std::vector<double> out;
  for (int i = 1; i <= n; ++i) out.push_back(budget * i / n);
  return out;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
  std::ostringstream out;
  out << "method,cost,median,min,max,runs\n";
  for (const auto& r : rows) {
    out << r.method << ',' << format_double(r.cost) << ',' << cell(r.median) << ',' << cell(r.min)
        << ',' << cell(r.max) << ',' << r.runs << '\n';
  }
  return out.str();
}

FidelityAllocation emit_fidelity_allocation(const RunRecord& record) {
  FidelityAllocation a;
  a.queries = record.trace.queries.size();
  for (const auto& q : record.trace.queries) {
    if (q.z == kTopFidelity) {
      a.cost_top += q.cost;
    } else {
      a.cost_low += q.cost;
    }
  }
  return a;
}

std::string allocation_csv(const std::vector<RunRecord>& records) {
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(), [](const RunRecord* a, const RunRecord* b) {
    return a->method != b->method ? a->method < b->method : a->seed < b->seed;
  });
  std::ostringstream out;
  out << "method,seed,queries,cost_top,cost_low,low_share\n";
  for (const auto* r : sorted) {
    const auto a = emit_fidelity_allocation(*r);
    const double total = a.cost_top + a.cost_low;
    out << r->method << ',' << r->seed << ',' << a.queries << ',' << format_double(a.cost_top)
        << ',' << format_double(a.cost_low) << ','
        << (total > 0.0 ? format_double(a.cost_low / total) : std::string("NA")) << '\n';
  }
  return out.str();
}

}  // namespace cmfbo
