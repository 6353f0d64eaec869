#include "spreadlab/optimize.hpp"

#include <cmath>
#include <future>
#include <limits>
#include <stdexcept>
#include <string>

#include "spreadlab/closed_form.hpp"
#include "spreadlab/losses.hpp"
#include "spreadlab/metrics.hpp"

namespace spreadlab {

void validate(const OptProblem& p) {
  validate(p.weights);
  if (p.K < 2) throw std::invalid_argument("domain: K must be at least 2");
  if (p.d < 2) throw std::invalid_argument("invalid-dimension: d must be at least 2");
  if (p.n_y < 1) throw std::invalid_argument("domain: n_y must be at least 1");
  if (p.restarts < 1) throw std::invalid_argument("domain: restarts must be at least 1");
  if (p.max_iters < 1) throw std::invalid_argument("domain: max_iters must be at least 1");
  if (!(p.initial_step > 0.0)) throw std::invalid_argument("domain: step must be positive");
  if (!(p.step_decay > 0.0 && p.step_decay < 1.0))
    throw std::invalid_argument("domain: step decay must lie in (0,1)");
  if (!(p.tolerance > 0.0)) throw std::invalid_argument("domain: tolerance must be positive");
  if (p.patience < 1) throw std::invalid_argument("domain: patience must be at least 1");
}

namespace {

struct RestartResult {
  EmbeddingConfig config;
  double loss = 0.0;
  int iterations = 0;
  std::vector<double> trace;
};

constexpr int kMaxBacktracks = 60;

RestartResult run_restart(const OptProblem& p, std::uint64_t seed) {
  RestartResult r;
  r.config = make_uniform(p.K, p.d, p.n_y, seed);
  r.loss = asymptotic_empirical(r.config, p.weights);
  if (!std::isfinite(r.loss))
    throw std::runtime_error("numerical-failure: non-finite loss at restart seed " +
                             std::to_string(seed) + " iteration 0");
  r.trace.push_back(r.loss);

  double step = p.initial_step;
  for (int iter = 1; iter <= p.max_iters; ++iter) {
    auto grad = tangent_project(asymptotic_gradient(r.config, p.weights), r.config);

    EmbeddingConfig trial = r.config;
    double trial_loss = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int bt = 0; bt <= kMaxBacktracks; ++bt) {
      for (int i = 0; i < r.config.size(); ++i) {
        Vec v = r.config.points[static_cast<std::size_t>(i)];
        for (int c = 0; c < p.d; ++c)
          v[static_cast<std::size_t>(c)] -= step * grad[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        trial.points[static_cast<std::size_t>(i)] = normalized(v);
      }
      trial_loss = asymptotic_empirical(trial, p.weights);
      if (!std::isfinite(trial_loss))
        throw std::runtime_error("numerical-failure: non-finite loss at restart seed " +
                                 std::to_string(seed) + " iteration " + std::to_string(iter));
      if (trial_loss < r.loss) {
        accepted = true;
        break;
      }
      step *= p.step_decay;
    }
    if (!accepted) break;  // no descent direction at shrinking steps: done

    r.config = trial;
    r.loss = trial_loss;
    r.trace.push_back(trial_loss);
    r.iterations = iter;
    step = std::min(step * 2.0, p.initial_step);

    std::size_t t = r.trace.size();
    if (t > static_cast<std::size_t>(p.patience) &&
        r.trace[t - 1 - static_cast<std::size_t>(p.patience)] - r.trace[t - 1] < p.tolerance)
      break;
  }
  return r;
}

}  // namespace

SphereOptResult optimize_config(const OptProblem& p) {
  validate(p);
  if (p.K * p.n_y < 2) throw std::invalid_argument("domain: need at least two points");

  SphereOptResult result;
  result.best_loss = std::numeric_limits<double>::infinity();
  for (int r = 0; r < p.restarts; ++r) {
    std::uint64_t seed = p.base_seed + static_cast<std::uint64_t>(r);
    RestartResult run = run_restart(p, seed);
    result.per_restart.push_back({seed, run.loss});
    if (run.loss < result.best_loss) {  // strict: ties keep the lowest seed
      result.best_loss = run.loss;
      result.best_seed = seed;
      result.best_config = run.config;
      result.iterations = run.iterations;
      result.trace = run.trace;
    }
  }
  return result;
}

namespace {

SweepCell run_cell(const OptProblem& tmpl, double alpha, std::size_t index) {
  OptProblem p = tmpl;
  p.weights.alpha = alpha;
  p.base_seed = tmpl.base_seed + index * static_cast<std::uint64_t>(tmpl.restarts);

  SweepCell cell;
  cell.alpha = alpha;
  cell.tau = p.weights.tau;
  cell.K = p.K;
  cell.d = p.d;
  cell.n_y = p.n_y;

  const double nan = std::numeric_limits<double>::quiet_NaN();
  cell.loss_collapsed = loss_collapsed(p.weights, p.K);
  cell.loss_uniform = loss_uniform(p.weights, p.d);
  cell.loss_mu_theta_star = nan;
  if (p.K == 2) {
    try {
      cell.loss_mu_theta_star = loss_mu_theta(theta_star(p.weights), p.weights);
    } catch (const std::exception&) {
      // outside the two-atom window: column stays NaN
    }
  }

  try {
    SphereOptResult opt = optimize_config(p);
    cell.seed = opt.best_seed;
    cell.loss = opt.best_loss;
    cell.spread = class_spread(opt.best_config).mean;
  } catch (const std::exception& e) {
    cell.failed = true;
    cell.error = e.what();
    cell.seed = p.base_seed;
    cell.loss = nan;
    cell.spread = nan;
  }
  return cell;
}

}  // namespace

std::vector<SweepCell> alpha_sweep(const OptProblem& tmpl, const std::vector<double>& alphas,
                                   bool parallel) {
  validate(tmpl);
  if (alphas.empty()) throw std::invalid_argument("domain: alpha list is empty");
  for (double a : alphas)
    if (!(a >= 0.0 && a <= 1.0))
      throw std::invalid_argument("domain: alpha must lie in [0,1]");

  std::vector<SweepCell> rows(alphas.size());
  if (parallel) {
    std::vector<std::future<SweepCell>> futures;
    futures.reserve(alphas.size());
    for (std::size_t i = 0; i < alphas.size(); ++i)
      futures.push_back(std::async(std::launch::async, run_cell, std::cref(tmpl), alphas[i], i));
    for (std::size_t i = 0; i < alphas.size(); ++i) rows[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < alphas.size(); ++i) rows[i] = run_cell(tmpl, alphas[i], i);
  }
  return rows;
}

}  // namespace spreadlab
