#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spreadlab/embedding.hpp"
#include "spreadlab/weights.hpp"

namespace spreadlab {

/// Multi-restart projected gradient descent over unit-vector configurations,
/// minimizing the empirical asymptotic spread loss for K balanced classes of
/// n_y points on S^{d-1}.
struct OptProblem {
  int K = 2;
  int d = 2;
  int n_y = 8;
  LossWeights weights;
  int restarts = 5;
  int max_iters = 5000;
  double initial_step = 0.5;
  double step_decay = 0.5;   // backtracking shrink factor on a failed step
  double tolerance = 1e-10;  // loss change over `patience` accepted steps
  int patience = 20;
  std::uint64_t base_seed = 0;  // restart r initializes with base_seed + r
};

void validate(const OptProblem& problem);

struct RestartOutcome {
  std::uint64_t seed = 0;
  double final_loss = 0.0;
};

struct SphereOptResult {
  EmbeddingConfig best_config;
  double best_loss = 0.0;
  std::uint64_t best_seed = 0;
  int iterations = 0;  // accepted steps taken by the best restart
  std::vector<RestartOutcome> per_restart;
  std::vector<double> trace;  // accepted losses of the best restart, non-increasing
};

/// Each restart starts from seeded uniform points, takes tangent-projected
/// gradient steps with renormalization, backtracks (multiplying the step by
/// step_decay) whenever the trial loss does not improve, and stops when the
/// loss change over `patience` accepted steps falls below the tolerance.
/// The restart with the lowest final loss wins; exact ties keep the lowest
/// seed. A non-finite loss raises a numerical-failure error naming the
/// restart seed and iteration.
SphereOptResult optimize_config(const OptProblem& problem);

/// One sweep row: the optimizer outcome for one alpha next to the closed-form
/// reference values. loss_mu_theta_star is NaN outside the two-atom window
/// (and for K != 2); failed cells carry the error text and NaN numerics.
struct SweepCell {
  double alpha = 0.0;
  double tau = 0.0;
  int K = 0;
  int d = 0;
  int n_y = 0;
  std::uint64_t seed = 0;  // winning restart's seed
  double loss = 0.0;
  double spread = 0.0;  // mean class spread of the best configuration
  double loss_collapsed = 0.0;
  double loss_uniform = 0.0;
  double loss_mu_theta_star = 0.0;
  bool failed = false;
  std::string error;
};

/// One optimize_config per alpha; cell i draws seeds
/// base_seed + i*restarts .. base_seed + (i+1)*restarts - 1 so cells are
/// independent. Optimizer errors are caught per cell and flagged, not
/// propagated. With parallel=true cells run on separate threads and are
/// reduced in cell order, so the result is identical either way.
std::vector<SweepCell> alpha_sweep(const OptProblem& tmpl, const std::vector<double>& alphas,
                                   bool parallel = false);

}  // namespace spreadlab
