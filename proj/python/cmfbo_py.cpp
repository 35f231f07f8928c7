// Python bindings for the main operations: GP surrogate, acquisition,
// optimizers, benchmarks and the experiment harness.
#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "cmfbo/acquisition.hpp"
#include "cmfbo/benchmarks.hpp"
#include "cmfbo/errors.hpp"
#include "cmfbo/gp.hpp"
#include "cmfbo/gridworld.hpp"
#include "cmfbo/harness.hpp"
#include "cmfbo/optimizer.hpp"
#include "cmfbo/trace_io.hpp"

namespace py = pybind11;
using namespace cmfbo;

namespace {

std::vector<Observation> to_observations(const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                                         const Eigen::VectorXd& y) {
  if (x.rows() != z.size() || x.rows() != y.size())
    throw std::invalid_argument("x, z and y must have the same number of rows");
  std::vector<Observation> data;
  for (Eigen::Index i = 0; i < x.rows(); ++i) data.push_back({x.row(i).transpose(), z[i], y[i], 1.0, nullptr});
  return data;
}

py::dict trace_dict(const OptimizationTrace& t) {
  const auto n = static_cast<Eigen::Index>(t.queries.size());
  const Eigen::Index d = static_cast<Eigen::Index>(t.dims.size());
  Eigen::MatrixXd x(n, d);
  Eigen::VectorXd z(n), y(n), cost(n), cumulative(n);
  std::vector<int> warm(static_cast<std::size_t>(n));
  std::vector<bool> failed(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& q = t.queries[static_cast<std::size_t>(i)];
    x.row(i) = q.x.transpose();
    z[i] = q.z;
    y[i] = q.y;
    cost[i] = q.cost;
    cumulative[i] = q.cumulative_cost;
    warm[static_cast<std::size_t>(i)] = q.warm_start_source;
    failed[static_cast<std::size_t>(i)] = q.failed;
  }
  py::dict out;
  out["method"] = t.method;
  out["seed"] = t.seed;
  out["budget"] = t.budget;
  out["x"] = x;
  out["z"] = z;
  out["y"] = y;
  out["cost"] = cost;
  out["cumulative_cost"] = cumulative;
  out["warm_start_source"] = warm;
  out["failed"] = failed;
  out["total_cost"] = t.cumulative_cost;
  py::list history;
  for (const auto& p : t.incumbent_history) history.append(py::make_tuple(p.cumulative_cost, p.best_y, p.query_index));
  out["incumbent_history"] = history;
  out["text"] = serialize_trace(t);
  return out;
}

// Wraps a Python callable f(x, z, seed) -> (y, cost) as an objective on the
// unit box. No warm-start artifacts cross the language boundary.
ObjectiveSpec python_objective(py::function f, int dim) {
  std::vector<Dimension> dims;
  for (int i = 0; i < dim; ++i) dims.push_back({"x" + std::to_string(i), 0.0, 1.0});
  ObjectiveSpec spec{SearchSpace(std::move(dims), 0.0, 1.0), {}, {}, "python objective"};
  spec.evaluate = [f](const Eigen::VectorXd& x, double z, const Artifact*, std::uint64_t seed) {
    const auto r = f(x, z, seed).cast<std::pair<double, double>>();
    return EvalResult{r.first, r.second, nullptr};
  };
  spec.evaluate_iteration = spec.evaluate;
  return spec;
}

OptimizerOptions options_from(const AcquisitionConfig& acquisition, int n_init, bool transfer) {
  OptimizerOptions o;
  o.acquisition = acquisition;
  o.n_init = n_init;
  o.warm_start_transfer = transfer;
  return o;
}

}  // namespace

PYBIND11_MODULE(cmfbo, m) {
  m.doc() = "Curriculum-based multi-fidelity Bayesian optimization";

  py::register_exception<NumericalError>(m, "NumericalError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<NoIncumbentError>(m, "NoIncumbentError");

  py::class_<KernelHyper>(m, "KernelHyper")
      .def(py::init([](double signal_variance, Eigen::VectorXd length_scales, double fidelity_length_scale,
                       double noise_std) {
             KernelHyper h{signal_variance, std::move(length_scales), fidelity_length_scale, noise_std};
             h.validate();
             return h;
           }),
           py::arg("signal_variance"), py::arg("length_scales"), py::arg("fidelity_length_scale"),
           py::arg("noise_std"))
      .def_static("defaults", &KernelHyper::defaults, py::arg("dim"))
      .def_readonly("signal_variance", &KernelHyper::signal_variance)
      .def_readonly("length_scales", &KernelHyper::length_scales)
      .def_readonly("fidelity_length_scale", &KernelHyper::fidelity_length_scale)
      .def_readonly("noise_std", &KernelHyper::noise_std)
      .def("__repr__", [](const KernelHyper& h) {
        return "KernelHyper(signal_variance=" + std::to_string(h.signal_variance) +
               ", fidelity_length_scale=" + std::to_string(h.fidelity_length_scale) +
               ", noise_std=" + std::to_string(h.noise_std) + ")";
      });

  m.def("mf_kernel",
        [](const Eigen::VectorXd& x, double z, const Eigen::VectorXd& x2, double z2, const KernelHyper& h) {
          return mf_kernel(x, z, x2, z2, h);
        },
        py::arg("x"), py::arg("z"), py::arg("x2"), py::arg("z2"), py::arg("hyper"));

  py::class_<GpModel>(m, "GpModel")
      .def(py::init([](const KernelHyper& h, const Eigen::MatrixXd& x, const Eigen::VectorXd& z,
                       const Eigen::VectorXd& y, bool standardize) {
             return GpModel(h, to_observations(x, z, y), standardize);
           }),
           py::arg("hyper"), py::arg("x"), py::arg("z"), py::arg("y"), py::arg("standardize") = true)
      .def("posterior",
           [](const GpModel& g, const Eigen::VectorXd& x, double z) {
             const auto p = g.posterior(x, z);
             return py::make_tuple(p.mean, p.std);
           },
           py::arg("x"), py::arg("z"), "Predictive (mean, std) in target units")
      .def_property_readonly("hyper", &GpModel::hyper)
      .def_property_readonly("jitter", &GpModel::jitter);

  m.def("log_marginal_likelihood",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& y, const KernelHyper& h) {
          return log_marginal_likelihood(to_observations(x, z, y), h);
        },
        py::arg("x"), py::arg("z"), py::arg("y"), py::arg("hyper"));

  m.def("fit_hyperparameters",
        [](const Eigen::MatrixXd& x, const Eigen::VectorXd& z, const Eigen::VectorXd& y, std::uint64_t seed,
           int restarts) {
          FitOptions o;
          o.restarts = restarts;
          std::mt19937_64 rng(seed);
          const auto fit = fit_hyperparameters(to_observations(x, z, y), o, rng);
          return py::make_tuple(fit.hyper, fit.log_likelihood, fit.fallback);
        },
        py::arg("x"), py::arg("z"), py::arg("y"), py::arg("seed") = 0, py::arg("restarts") = 5,
        "Returns (hyper, log_likelihood on standardized targets, fallback flag)");

  py::class_<AcquisitionConfig>(m, "AcquisitionConfig")
      .def(py::init<>())
      .def_readwrite("beta_coefficient", &AcquisitionConfig::beta_coefficient)
      .def_readwrite("epsilon", &AcquisitionConfig::epsilon)
      .def_readwrite("lbfgs_restarts", &AcquisitionConfig::lbfgs_restarts)
      .def_readwrite("lbfgs_max_iters", &AcquisitionConfig::lbfgs_max_iters)
      .def_readwrite("warm_perturbations", &AcquisitionConfig::warm_perturbations)
      .def_readwrite("gate_on_latent_std", &AcquisitionConfig::gate_on_latent_std);

  m.def("beta_schedule", &beta_schedule, py::arg("d"), py::arg("t"), py::arg("coefficient") = 0.2);
  m.def("ucb", [](const Eigen::VectorXd& x, const GpModel& g, double beta) { return ucb(x, g, beta); },
        py::arg("x"), py::arg("model"), py::arg("beta"));
  m.def("mf_ucb",
        [](const Eigen::VectorXd& x, double z, const GpModel& g, double beta) { return mf_ucb(x, z, g, beta); },
        py::arg("x"), py::arg("z_target"), py::arg("model"), py::arg("beta"));
  m.def("acquisition_gradient",
        [](const Eigen::VectorXd& x, double z, const GpModel& g, double beta) {
          return acquisition_gradient(x, z, g, beta);
        },
        py::arg("x"), py::arg("z_target"), py::arg("model"), py::arg("beta"));
  m.def("progressive_acquisition",
        [](const GpModel& g, int t, double l_z, const AcquisitionConfig& config, std::uint64_t seed) {
          std::mt19937_64 rng(seed);
          const auto r = progressive_acquisition(g, t, l_z, config, rng);
          py::list path;
          for (const auto& s : r.fidelity_path) path.append(py::make_tuple(s.z, s.x, s.sigma));
          py::dict out;
          out["x"] = r.x;
          out["z"] = r.z;
          out["beta"] = r.beta;
          out["path"] = path;
          return out;
        },
        py::arg("model"), py::arg("t"), py::arg("l_z"), py::arg("config") = AcquisitionConfig{},
        py::arg("seed") = 0);

  m.def("assistance_schedule", &assistance_schedule, py::arg("z"));
  m.def("episode_length_schedule", &episode_length_schedule, py::arg("z"));

  m.def("benchmark_optimum",
        [](const std::string& name, const std::string& params) { return make_benchmark({name, params, ""}).optimum; },
        py::arg("name"), py::arg("params") = "{}");
  m.def("evaluate_benchmark",
        [](const std::string& name, const Eigen::VectorXd& x, double z, std::uint64_t seed, const std::string& params) {
          const auto b = make_benchmark({name, params, ""});
          const auto r = b.objective.evaluate(b.objective.space.denormalize(x),
                                              b.objective.space.denormalize_fidelity(z), nullptr, seed);
          return py::make_tuple(r.y, r.cost);
        },
        py::arg("name"), py::arg("x"), py::arg("z"), py::arg("seed") = 0, py::arg("params") = "{}",
        "Cold evaluation at normalized (x, z); returns (y, cost)");

  m.def("run_benchmark",
        [](const std::string& method, const std::string& benchmark, double budget, std::uint64_t seed,
           const std::string& method_params, const std::string& benchmark_params) {
          const auto b = make_benchmark({benchmark, benchmark_params, ""});
          return trace_dict(run_method({method, method_params, ""}, b.objective, budget, seed));
        },
        py::arg("method"), py::arg("benchmark"), py::arg("budget"), py::arg("seed") = 0,
        py::arg("method_params") = "{}", py::arg("benchmark_params") = "{}");

  m.def("optimize",
        [](py::function f, int dim, double budget, std::uint64_t seed, const std::string& method,
           const AcquisitionConfig& config, int n_init, bool transfer) {
          const auto spec = python_objective(std::move(f), dim);
          const auto options = options_from(config, n_init, transfer);
          if (method == "cmfbo") return trace_dict(run_cmfbo(spec, budget, options, seed));
          if (method == "gp_ucb") return trace_dict(run_gp_ucb_baseline(spec, budget, options, seed));
          if (method == "random") return trace_dict(run_random_baseline(spec, budget, seed));
          throw ConfigError("unknown method '" + method + "'");
        },
        py::arg("objective"), py::arg("dim"), py::arg("budget"), py::arg("seed") = 0,
        py::arg("method") = "cmfbo", py::arg("config") = AcquisitionConfig{}, py::arg("n_init") = 0,
        py::arg("warm_start_transfer") = true,
        "Optimizes objective(x, z, seed) -> (y, cost) over [0,1]^dim x [0,1]");

  m.def("run_experiment",
        [](const std::string& config_json, const std::filesystem::path& output_dir) {
          auto config = parse_config(config_json);
          if (!output_dir.empty()) config.output_dir = output_dir;
          py::list out;
          for (const auto& r : run_experiment(config)) {
            py::dict d = trace_dict(r.trace);
            d["label"] = r.method;
            d["config_hash"] = r.config_hash;
            out.append(d);
          }
          return out;
        },
        py::arg("config_json"), py::arg("output_dir") = std::filesystem::path());
  m.def("config_hash", [](const std::string& json) { return config_hash(parse_config(json)); },
        py::arg("config_json"));
  m.def("read_trace", [](const std::filesystem::path& p) { return trace_dict(read_trace(p)); }, py::arg("path"));
}
