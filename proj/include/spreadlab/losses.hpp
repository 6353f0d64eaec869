#pragma once

#include <vector>

#include "spreadlab/embedding.hpp"
#include "spreadlab/weights.hpp"

namespace spreadlab {

/// Anchor -> augmentation pairing inside one configuration. The augmentation
/// embeddings are ordinary config points; they carry the anchor's class and
/// appear only in the class-conditional InfoNCE numerators. Every point that
/// is not referenced as an augmentation is an anchor.
struct AugmentationMap {
  std::vector<std::pair<int, int>> pairs;  // (anchor index, augmentation index)
};

/// Structural checks: indices in range, augmentation shares the anchor's
/// class, augmentation indices distinct from each other and from anchors.
void validate(const AugmentationMap& map, const EmbeddingConfig& config);

/// Indices of the anchor points (everything not referenced as an
/// augmentation), ascending.
std::vector<int> anchor_indices(const AugmentationMap& map, const EmbeddingConfig& config);

/// Supervised contrastive batch loss with per-positive denominators: for each
/// anchor, each positive contributes -log of its kernel value over (that one
/// positive + all negatives). Every config point is treated as a batch
/// member. Errors: a class with a single member (no positive), or a batch
/// with one class (no negative).
double supcon_batch(const EmbeddingConfig& config, double tau);

/// Ambient gradient of supcon_batch with respect to every point.
std::vector<Vec> supcon_batch_gradient(const EmbeddingConfig& config, double tau);

/// Class-conditional InfoNCE batch loss: for each anchor i,
/// -log[ sigma(x_i, a(x_i)) / sum_{same-class anchors j != i} sigma(x_i, x_j) ].
/// Anchors are the non-augmentation points; each must have an augmentation
/// (incomplete-map error) and at least one same-class fellow anchor.
double cnce_batch(const EmbeddingConfig& config, const AugmentationMap& map, double tau);

std::vector<Vec> cnce_batch_gradient(const EmbeddingConfig& config, const AugmentationMap& map,
                                     double tau);

/// (1-alpha) * supcon over the anchor subset + alpha * cnce.
double spread_batch(const EmbeddingConfig& config, const AugmentationMap& map,
                    const LossWeights& w);

std::vector<Vec> spread_batch_gradient(const EmbeddingConfig& config, const AugmentationMap& map,
                                       const LossWeights& w);

/// Empirical three-term estimator of the asymptotic spread loss on a
/// class-balanced configuration without augmentation points:
///   (1-alpha) mean_i log[ mean_{j: other class} k(i,j) ]
/// + alpha     mean_i log[ mean_{j: same class, incl j=i} k(i,j) ]
/// + (1-alpha) (1/(K n_y^2)) sum_{same-class ordered pairs} ||u_i-u_j||^2/(2 tau)
/// with k(i,j) = exp(-||u_i-u_j||^2/(2 tau)). Self pairs contribute the
/// constants k=1 and 0. Unbalanced classes raise a balance error.
double asymptotic_empirical(const EmbeddingConfig& config, const LossWeights& w);

/// Ambient gradient of asymptotic_empirical with respect to every point
/// (of the function exactly as implemented, so central differences match).
std::vector<Vec> asymptotic_gradient(const EmbeddingConfig& config, const LossWeights& w);

/// Companion tangent form: subtracts (g . u) u per point.
std::vector<Vec> tangent_project(const std::vector<Vec>& grad, const EmbeddingConfig& config);

}  // namespace spreadlab
