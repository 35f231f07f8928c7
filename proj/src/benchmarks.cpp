#include "cmfbo/benchmarks.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cmfbo/box_lbfgs.hpp"

namespace cmfbo {

namespace {

Eigen::VectorXd uniform_point(Eigen::Index d, double lo, double hi, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(lo, hi);
  Eigen::VectorXd p(d);
  for (Eigen::Index i = 0; i < d; ++i) p[i] = u(rng);
  return p;
}

double uniform(double lo, double hi, std::mt19937_64& rng) {
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

int default_grid_resolution(Eigen::Index d) {
  switch (d) {
    case 1: return 2001;
    case 2: return 201;
    case 3: return 41;
    default: return 0;
  }
}

// Calls fn(point) for every node of a regular grid on [0,1]^d.
template <typename Fn>
void for_each_grid_point(Eigen::Index d, int resolution, Fn&& fn) {
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  Eigen::VectorXd p(d);
  const double h = 1.0 / (resolution - 1);
  while (true) {
    for (Eigen::Index i = 0; i < d; ++i) p[i] = idx[static_cast<std::size_t>(i)] * h;
    fn(p);
    Eigen::Index k = 0;
    while (k < d && ++idx[static_cast<std::size_t>(k)] == resolution) idx[static_cast<std::size_t>(k++)] = 0;
    if (k == d) break;
  }
}

// Local maximum of the top-fidelity slice (which is base(x)) from `start`.
Eigen::VectorXd refine_top(const std::vector<Bump>& base, const Eigen::VectorXd& start) {
  const Eigen::Index d = start.size();
  const ValueAndGradient neg = [&](const Eigen::VectorXd& x, Eigen::VectorXd& g) {
    const double v = bump_sum(base, x, &g);
    g = -g;
    return -v;
  };
  BoxLbfgsOptions opts;
  opts.grad_tolerance = 1e-10;
  opts.max_iters = 500;
  return minimize_box(neg, start, Eigen::VectorXd::Zero(d), Eigen::VectorXd::Ones(d), opts).x;
}

}  // namespace

double bump_sum(const std::vector<Bump>& bumps, const Eigen::Ref<const Eigen::VectorXd>& x,
                Eigen::VectorXd* grad) {
  double v = 0.0;
  if (grad != nullptr) *grad = Eigen::VectorXd::Zero(x.size());
  for (const auto& b : bumps) {
    const Eigen::VectorXd diff = x - b.center;
    const double w2 = b.width * b.width;
    const double term = b.height * std::exp(-0.5 * diff.squaredNorm() / w2);
    v += term;
    if (grad != nullptr) *grad -= term * diff / w2;
  }
  return v;
}

SyntheticMfFunction::SyntheticMfFunction(Eigen::Index dim, std::vector<Bump> base,
                                         std::vector<Bump> drift, double drift_amplitude,
                                         double low_fidelity_scale, CostModel cost,
                                         double noise_std, std::vector<Bump> early,
                                         double iteration_exponent)
    : dim_(dim),
      base_(std::move(base)),
      drift_(std::move(drift)),
      drift_amplitude_(drift_amplitude),
      low_fidelity_scale_(low_fidelity_scale),
      cost_(cost),
      noise_std_(noise_std),
      early_(std::move(early)),
      iteration_exponent_(iteration_exponent) {
  if (dim_ < 1) throw std::invalid_argument("SyntheticMfFunction: dim must be >= 1");
  if (base_.empty()) throw std::invalid_argument("SyntheticMfFunction: empty base");
  if (!(cost_.c_lo > 0.0 && cost_.c_hi > cost_.c_lo))
    throw std::invalid_argument("SyntheticMfFunction: need 0 < c_lo < c_hi");
  if (noise_std_ < 0.0) throw std::invalid_argument("SyntheticMfFunction: noise_std < 0");
}

double SyntheticMfFunction::value(const Eigen::Ref<const Eigen::VectorXd>& x, double z) const {
  const double scale = low_fidelity_scale_ + (1.0 - low_fidelity_scale_) * z;
  double v = scale * bump_sum(base_, x);
  if (drift_amplitude_ != 0.0) v += drift_amplitude_ * (1.0 - z) * bump_sum(drift_, x);
  return v;
}

double SyntheticMfFunction::iteration_value(const Eigen::Ref<const Eigen::VectorXd>& x,
                                            double z) const {
  if (early_.empty()) throw std::logic_error("SyntheticMfFunction: no iteration axis");
  const double w = std::pow(z, iteration_exponent_);
  return w * bump_sum(base_, x) + (1.0 - w) * bump_sum(early_, x);
}

SyntheticMfFunction::Optimum SyntheticMfFunction::grid_argmax(double z, int resolution) const {
  if (dim_ > 3) throw std::invalid_argument("grid_argmax: d <= 3 only");
  if (resolution < 2) throw std::invalid_argument("grid_argmax: resolution >= 2");
  Optimum best{Eigen::VectorXd::Zero(dim_), -std::numeric_limits<double>::infinity()};
  for_each_grid_point(dim_, resolution, [&](const Eigen::VectorXd& p) {
    const double v = value(p, z);
    if (v > best.value) best = {p, v};
  });
  return best;
}

SyntheticMfFunction::Optimum SyntheticMfFunction::top_optimum() const {
  std::vector<Eigen::VectorXd> starts;
  if (dim_ <= 3) starts.push_back(grid_argmax(1.0, default_grid_resolution(dim_)).x);
  for (const auto& b : base_) starts.push_back(b.center.cwiseMax(0.0).cwiseMin(1.0));
  Optimum best{starts.front(), -std::numeric_limits<double>::infinity()};
  for (const auto& s : starts) {
    const Eigen::VectorXd x = refine_top(base_, s);
    const double v = value(x, 1.0);
    if (v > best.value) best = {x, v};
  }
  return best;
}

ObjectiveSpec SyntheticMfFunction::objective(std::string description) const {
  std::vector<Dimension> dims;
  for (Eigen::Index i = 0; i < dim_; ++i) dims.push_back({"x" + std::to_string(i), 0.0, 1.0});
  ObjectiveSpec spec{SearchSpace(std::move(dims), 0.0, 1.0), {}, {}, std::move(description)};
  const SyntheticMfFunction self = *this;
  auto noisy = [self](double v, std::uint64_t seed) {
    if (self.noise_std_ == 0.0) return v;
    std::mt19937_64 rng(seed);
    return v + std::normal_distribution<double>(0.0, self.noise_std_)(rng);
  };
  spec.evaluate = [self, noisy](const Eigen::VectorXd& x, double z, const Artifact*,
                                std::uint64_t seed) {
    return EvalResult{noisy(self.value(x, z), seed), self.cost(z), nullptr};
  };
  if (has_iteration_axis()) {
    spec.evaluate_iteration = [self, noisy](const Eigen::VectorXd& x, double z, const Artifact*,
                                            std::uint64_t seed) {
      return EvalResult{noisy(self.iteration_value(x, z), seed), self.cost(z), nullptr};
    };
  }
  return spec;
}

SyntheticMfFunction make_overlap_benchmark(int d, double rho, std::uint64_t seed,
                                           const OverlapOptions& options) {
  if (d < 1 || d > 6) throw std::invalid_argument("make_overlap_benchmark: d must be in 1..6");
  if (!(rho > 0.0 && rho <= 0.2))
    throw std::invalid_argument("make_overlap_benchmark: rho must be in (0, 0.2]");
  std::mt19937_64 rng(seed);
  const double s = std::sqrt(static_cast<double>(d));

  std::vector<Bump> base;
  base.push_back({uniform_point(d, 0.15, 0.85, rng), 1.0, 0.1 * s});
  for (int k = 0; k < 4 + 2 * d; ++k)
    base.push_back({uniform_point(d, 0.0, 1.0, rng), uniform(0.3, 0.7, rng), uniform(0.05, 0.15, rng) * s});

  const double amplitude = 1.5 * rho;
  constexpr double kLowFidelityScale = 0.5;
  const int resolution = default_grid_resolution(d);
  for (int attempt = 0; attempt < 50; ++attempt) {
    std::vector<Bump> drift;
    for (int k = 0; k < 3; ++k)
      drift.push_back({uniform_point(d, 0.0, 1.0, rng), uniform(-1.0, 1.0, rng), uniform(0.25, 0.5, rng) * s});
    SyntheticMfFunction f(d, base, std::move(drift), amplitude, kLowFidelityScale, options.cost,
                          options.noise_std);
    if (d > 3) return f;
    const Eigen::VectorXd top = f.grid_argmax(1.0, resolution).x;
    bool ok = true;
    for (double z : options.certificate_fidelities) {
      if ((f.grid_argmax(z, resolution).x - top).norm() > rho) {
        ok = false;
        break;
      }
    }
    if (ok) return f;
  }
  throw std::runtime_error("make_overlap_benchmark: argmax certificate failed after 50 draws");
}

DeceptiveBenchmark make_deceptive_iteration_benchmark(std::uint64_t seed, const CostModel& cost) {
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd c_true = uniform_point(2, 0.65, 0.85, rng);
  const Eigen::VectorXd c_dec = uniform_point(2, 0.15, 0.35, rng);

  std::vector<Bump> base = {{c_true, 1.0, 0.1}, {c_dec, 0.6, 0.12}};
  for (int k = 0; k < 2; ++k)
    base.push_back({uniform_point(2, 0.0, 1.0, rng), uniform(0.05, 0.15, rng), uniform(0.15, 0.25, rng)});
  std::vector<Bump> early = {{c_dec, 1.0, 0.15}, {c_true, 0.25, 0.1}};
  std::vector<Bump> drift;
  for (int k = 0; k < 2; ++k)
    drift.push_back({uniform_point(2, 0.0, 1.0, rng), uniform(-1.0, 1.0, rng), uniform(0.3, 0.5, rng)});

  SyntheticMfFunction f(2, base, std::move(drift), 0.05, 0.5, cost, 0.0, std::move(early), 2.0);
  DeceptiveBenchmark out{f, refine_top(base, c_true), refine_top(base, c_dec), 0.0};

  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for_each_grid_point(2, 201, [&](const Eigen::VectorXd& p) {
    const double v = f.value(p, 1.0);
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  });
  out.value_range = hi - lo;

  const bool inverted_early =
      f.iteration_value(out.x_deceptive, 0.0) > f.iteration_value(out.x_true, 0.0);
  const bool margin =
      f.value(out.x_true, 1.0) - f.value(out.x_deceptive, 1.0) >= 0.2 * out.value_range;
  if (!inverted_early || !margin)
    throw std::logic_error("make_deceptive_iteration_benchmark: inversion certificate failed");
  return out;
}

}  // namespace cmfbo
