#pragma once

#include <stdexcept>

namespace spreadlab {

/// The (alpha, tau) pair weighting the spread loss family:
/// alpha interpolates between the supervised contrastive part (alpha=0) and
/// the class-conditional InfoNCE part (alpha=1); tau is the temperature.
struct LossWeights {
  double alpha = 0.0;
  double tau = 1.0;
};

inline void validate(const LossWeights& w) {
  if (!(w.alpha >= 0.0 && w.alpha <= 1.0))
    throw std::invalid_argument("domain: alpha must lie in [0,1]");
  if (!(w.tau > 0.0)) throw std::invalid_argument("domain: tau must be positive");
}

}  // namespace spreadlab
