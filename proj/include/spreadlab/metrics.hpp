#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "spreadlab/embedding.hpp"
#include "spreadlab/losses.hpp"
#include "spreadlab/weights.hpp"

namespace spreadlab {

/// Per-class spread s_f(y): mean distance of the class's points to their
/// class centroid. Zero exactly when the class is collapsed.
struct SpreadReport {
  std::vector<double> per_class;  // indexed by class label
  double mean = 0.0;              // unweighted mean over classes
};

SpreadReport class_spread(const EmbeddingConfig& config);

/// sigma_f(z): mean distance of subclass z's points to the subclass centroid.
/// Indexed like subclass_ids(config). Requires subclass labels.
std::vector<double> subclass_sigma(const EmbeddingConfig& config);

/// Var_f(z): mean squared distance to the subclass centroid. Always at least
/// sigma_f(z)^2.
std::vector<double> subclass_var(const EmbeddingConfig& config);

/// Separation between two subclasses of the same class y:
///   (1/(p(z|y) p(z'|y))) (s_f(y) - p(z|y)^2 sigma_f(z) - p(z'|y)^2 sigma_f(z'))
/// with p(.|y) taken from empirical counts. Throws a mismatch error when the
/// subclasses belong to different classes.
double delta_separation(const EmbeddingConfig& config, int z, int z_prime);

/// Mean classifier: one weight vector per distinct label, the arithmetic mean
/// of that label's embeddings. Works on arbitrary (not necessarily unit)
/// vectors so composite representations can be scored too.
struct MeanClassifier {
  std::vector<int> labels;   // ascending distinct labels
  std::vector<Vec> weights;  // aligned with labels

  const Vec& weight_for(int label) const;
};

MeanClassifier mean_classifier(const std::vector<Vec>& points, const std::vector<int>& labels);

/// Fraction of the given subclass-z points x with x . (w_z - w_other) below
/// log(gamma): the logit form of "the correct softmax score is at least gamma
/// times the rival's". gamma must exceed 1.
double gamma_margin_error(const std::vector<Vec>& points_of_z, const Vec& w_z, const Vec& w_other,
                          double gamma);

/// Coarse-to-fine transfer report: mean classifiers per subclass built from
/// the train split, margin errors and plain subclass accuracy on the eval
/// split. Rivals of a subclass are the other subclasses of the same coarse
/// class; a point passes the margin test only against all of its rivals, and
/// accuracy uses argmax over the point's own class's subclasses (ties go to
/// the lowest subclass id). Every eval subclass must appear in the train
/// split (insufficient-data error otherwise).
struct TransferReport {
  double gamma = 0.0;
  std::vector<int> subclasses;       // ascending ids seen in the train split
  std::vector<Vec> weights;          // W_z per subclass
  std::vector<int> counts;           // m_z: train-split counts
  std::vector<double> margin_error;  // per-subclass error on the eval split
  double mean_margin_error = 0.0;    // eval-count-weighted mean
  double accuracy = 0.0;             // plain subclass accuracy on the eval split
};

TransferReport coarse_to_fine(const std::vector<Vec>& train_points,
                              const std::vector<int>& train_classes,
                              const std::vector<int>& train_subclasses,
                              const std::vector<Vec>& eval_points,
                              const std::vector<int>& eval_classes,
                              const std::vector<int>& eval_subclasses, double gamma);

/// Within-class k-means recovery of hidden subclasses. Clusters each class
/// separately (k-means++ style seeding, 10 restarts, 100-iteration cap, best
/// inertia, ties to the earliest restart), matches clusters to the true
/// subclasses by the best label permutation (k <= 8), and reports macro F1
/// per class plus the class-size-weighted overall value.
struct RecoveryReport {
  std::vector<int> classes;          // ascending class labels
  std::vector<double> f1_per_class;  // best-permutation macro F1
  double overall = 0.0;
};

RecoveryReport subclass_recovery(const std::vector<Vec>& points,
                                 const std::vector<int>& class_labels,
                                 const std::vector<int>& subclass_labels, int k_per_class,
                                 std::uint64_t seed);

/// Tangent-from-origin slope of a distance scatter: the largest
/// output/input ratio over pairs whose input distance exceeds the cutoff.
enum class LipschitzMode { encoder, decoder_reverse, augmentation };

struct LipschitzEstimate {
  double constant = 0.0;
  LipschitzMode mode = LipschitzMode::encoder;
  int pair_count = 0;  // pairs retained above the cutoff
  double cutoff = 0.0;
};

LipschitzEstimate estimate_lipschitz(LipschitzMode mode,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double cutoff = 1e-6);

/// Numerical invariance of the batch losses under class-fixing permutations:
/// shuffles the (anchor, augmentation) embedding pairs within each class and
/// reports the largest absolute loss change over the trials. The math is
/// exactly invariant, so this measures summation-order noise only.
/// The spread gap needs a non-empty augmentation map (otherwise 0); the
/// asymptotic gap needs a class-balanced configuration (otherwise 0).
struct PermutationGap {
  double spread_gap = 0.0;
  double asymptotic_gap = 0.0;
};

PermutationGap permutation_gap(const EmbeddingConfig& config, const AugmentationMap& map,
                               const LossWeights& w, int trials, std::uint64_t seed);

/// The transfer-governing ratio sigma_f(z)/s_f(y), per subclass, restricted
/// to classes whose spread exceeds the cutoff (the ratio is 0/0 under
/// collapse). Throws a degenerate-sample error when no class qualifies.
struct RatioReport {
  std::vector<int> subclasses;  // subclasses with a defined ratio
  std::vector<double> ratio;
  double mean = 0.0;
};

RatioReport transfer_ratio(const EmbeddingConfig& config, double cutoff = 1e-6);

}  // namespace spreadlab
