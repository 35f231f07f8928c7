#include "cmfbo/box_lbfgs.hpp"

#include <cmath>
#include <deque>
#include <stdexcept>

namespace cmfbo {

namespace {

Eigen::VectorXd project(const Eigen::VectorXd& x, const Eigen::VectorXd& lower,
                        const Eigen::VectorXd& upper) {
  return x.cwiseMax(lower).cwiseMin(upper);
}

// 1 for free variables, 0 for variables pinned at a bound by the gradient.
Eigen::VectorXd free_mask(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                          const Eigen::VectorXd& lower, const Eigen::VectorXd& upper) {
  Eigen::VectorXd mask = Eigen::VectorXd::Ones(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0))
      mask[i] = 0.0;
  }
  return mask;
}

struct CorrectionPair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
};

Eigen::VectorXd two_loop(const std::deque<CorrectionPair>& pairs,
                         const Eigen::VectorXd& g, const Eigen::VectorXd& mask) {
  Eigen::VectorXd q = g.cwiseProduct(mask);
  std::vector<double> alpha(pairs.size());
  std::vector<double> rho(pairs.size());
  for (std::size_t k = pairs.size(); k-- > 0;) {
    const Eigen::VectorXd s = pairs[k].s.cwiseProduct(mask);
    const Eigen::VectorXd y = pairs[k].y.cwiseProduct(mask);
    const double sy = s.dot(y);
    rho[k] = sy > 0.0 ? 1.0 / sy : 0.0;
    alpha[k] = rho[k] * s.dot(q);
    q -= alpha[k] * y;
  }
  double gamma = 1.0;
  if (!pairs.empty()) {
    const Eigen::VectorXd s = pairs.back().s.cwiseProduct(mask);
    const Eigen::VectorXd y = pairs.back().y.cwiseProduct(mask);
    const double yy = y.squaredNorm();
    if (yy > 0.0 && s.dot(y) > 0.0) gamma = s.dot(y) / yy;
  }
  Eigen::VectorXd r = gamma * q;
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const Eigen::VectorXd s = pairs[k].s.cwiseProduct(mask);
    const Eigen::VectorXd y = pairs[k].y.cwiseProduct(mask);
    const double beta = rho[k] * y.dot(r);
    r += s * (alpha[k] - beta);
  }
  return -r.cwiseProduct(mask);
}

}  // namespace

BoxLbfgsResult minimize_box(const ValueAndGradient& f, const Eigen::VectorXd& x0,
                            const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                            const BoxLbfgsOptions& options) {
  const Eigen::Index n = x0.size();
  if (lower.size() != n || upper.size() != n)
    throw std::invalid_argument("minimize_box: bound dimension mismatch");
  if ((lower.array() > upper.array()).any())
    throw std::invalid_argument("minimize_box: lower > upper");

  BoxLbfgsResult res;
  res.x = project(x0, lower, upper);
  Eigen::VectorXd g(n);
  res.f = f(res.x, g);
  res.evaluations = 1;
  if (!std::isfinite(res.f) || !g.allFinite()) {
    res.status = BoxLbfgsStatus::kNonFiniteStart;
    return res;
  }

  std::deque<CorrectionPair> pairs;
  Eigen::VectorXd g_new(n);
  for (res.iterations = 0; res.iterations < options.max_iters; ++res.iterations) {
    const Eigen::VectorXd mask = free_mask(res.x, g, lower, upper);
    const Eigen::VectorXd pg = g.cwiseProduct(mask);
    if (pg.lpNorm<Eigen::Infinity>() <= options.grad_tolerance) {
      res.status = BoxLbfgsStatus::kConverged;
      return res;
    }

    Eigen::VectorXd d = two_loop(pairs, g, mask);
    if (!(d.dot(g) < 0.0) || !d.allFinite()) {
      pairs.clear();
      d = -pg;
    }

    bool accepted = false;
    Eigen::VectorXd x_new;
    double f_new = 0.0;
    // two attempts: quasi-Newton direction, then steepest descent from scratch
    for (int attempt = 0; attempt < 2 && !accepted; ++attempt) {
      double step = pairs.empty() ? std::min(1.0, 1.0 / d.norm()) : 1.0;
      for (int k = 0; k < options.max_backtracks; ++k, step *= 0.5) {
        x_new = project(res.x + step * d, lower, upper);
        const Eigen::VectorXd delta = x_new - res.x;
        if (delta.lpNorm<Eigen::Infinity>() == 0.0) break;
        f_new = f(x_new, g_new);
        ++res.evaluations;
        if (std::isfinite(f_new) && g_new.allFinite() &&
            f_new <= res.f + 1e-4 * g.dot(delta) && f_new <= res.f) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (pairs.empty()) break;
        pairs.clear();
        d = -pg;
      }
    }
    if (!accepted) {
      res.status = BoxLbfgsStatus::kLineSearchFailed;
      return res;
    }

    CorrectionPair cp{x_new - res.x, g_new - g};
    const double sy = cp.s.dot(cp.y);
    if (sy > 1e-10 * cp.s.norm() * cp.y.norm()) {
      pairs.push_back(std::move(cp));
      if (static_cast<int>(pairs.size()) > options.memory) pairs.pop_front();
    }

    const double f_old = res.f;
    res.x = x_new;
    res.f = f_new;
    g = g_new;
    if (std::abs(f_old - f_new) <= options.rel_f_tolerance * std::max(1.0, std::abs(f_old))) {
      res.status = BoxLbfgsStatus::kStalled;
      return res;
    }
  }
  res.status = BoxLbfgsStatus::kMaxIterations;
  return res;
}

}  // namespace cmfbo
