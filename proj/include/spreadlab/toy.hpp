#pragma once

#include <cstdint>
#include <iosfwd>
#include <utility>
#include <vector>

#include "spreadlab/metrics.hpp"
#include "spreadlab/vecmath.hpp"
#include "spreadlab/weights.hpp"

namespace spreadlab::toy {

/// Synthetic subclass data: K coarse classes, two Gaussian subclasses each
/// (subclass z = 2y + j for class y), sampled z ~ proportions then
/// x ~ N(center_z, spread_z^2 I).
struct DataSpec {
  int num_classes = 2;
  int input_dim = 8;
  std::vector<Vec> centers;         // 2K subclass centers
  std::vector<double> spreads;      // per-subclass sigma
  std::vector<double> proportions;  // per-subclass, sums to 1
  int n = 2000;
  std::uint64_t seed = 1;
};

void validate(const DataSpec& spec);

/// The acceptance dataset: 2 classes x 2 subclasses in R^8, subclass sigma
/// 0.25, within-class center separation 1.0 (4 sigma), cross-class separation
/// 3.0, balanced proportions, n=2000.
DataSpec standard_spec(std::uint64_t seed);

struct ToyDataset {
  DataSpec spec;
  std::vector<Vec> inputs;
  std::vector<int> class_labels;
  std::vector<int> subclass_labels;

  int size() const { return static_cast<int>(inputs.size()); }
};

/// Deterministic per spec.seed; n=0 gives an empty dataset.
ToyDataset gen_subclass_data(const DataSpec& spec);

/// Uniform jitter in the epsilon-ball around x; epsilon=0 returns x exactly
/// and consumes no randomness (so paired runs share their sampling stream).
Vec augment(const Vec& x, double epsilon, Rng& rng);
Vec augment(const Vec& x, double epsilon, std::uint64_t seed);

/// One dense layer y = W x + b, W row-major rows x cols.
struct Layer {
  int rows = 0;
  int cols = 0;
  std::vector<double> w;
  Vec b;
};

/// Fixed-depth MLP encoder: input -> tanh(hidden) -> tanh(hidden) -> linear
/// output, renormalized onto the unit sphere.
struct EncoderParams {
  int input_dim = 0;
  int output_dim = 0;
  std::vector<Layer> layers;
};

EncoderParams init_encoder(int input_dim, int hidden, int output_dim, std::uint64_t seed);

/// Sphere-normalized encoder output.
Vec encode(const EncoderParams& p, const Vec& x);
std::vector<Vec> encode_all(const EncoderParams& p, const std::vector<Vec>& xs);

enum class TrainMode { supcon, spread };

struct TrainOptions {
  TrainMode mode = TrainMode::spread;
  LossWeights weights{0.7, 0.5};
  int epochs = 30;
  int batch_size = 64;  // split evenly across classes; needs >= 2 per class
  double lr = 0.05;
  double epsilon = 0.1;  // augmentation radius, spread mode only
  int hidden = 32;
  int output_dim = 8;
  std::uint64_t seed = 0;
};

/// Loss and exact parameter gradient of one batch. `augmented` must be empty
/// in supcon mode and pair up with `inputs` index-by-index in spread mode;
/// gradients flow through the sphere normalization. grads mirrors the
/// parameter shapes.
struct BatchGradient {
  double loss = 0.0;
  EncoderParams grads;
};

BatchGradient encoder_batch_gradient(const EncoderParams& p, const std::vector<Vec>& inputs,
                                     const std::vector<int>& classes,
                                     const std::vector<Vec>& augmented, TrainMode mode,
                                     const LossWeights& w);

/// Mini-batch SGD on the batch loss, stratified so every batch holds the same
/// number of points from each class (one augmentation per anchor appended in
/// spread mode). history holds the per-epoch mean batch loss. A non-finite
/// loss raises a training-failure error naming the epoch.
struct TrainedEncoder {
  EncoderParams params;
  std::vector<double> history;
};

TrainedEncoder train_encoder(const ToyDataset& data, const TrainOptions& opt);

/// Bottleneck autoencoder: input -> tanh(hidden) -> linear bottleneck ->
/// tanh(hidden) -> linear reconstruction.
struct Autoencoder {
  int input_dim = 0;
  int bottleneck = 0;
  std::vector<Layer> enc;
  std::vector<Layer> dec;
};

struct AeOptions {
  int bottleneck = 1;
  int hidden = 16;
  int epochs = 150;
  int batch_size = 50;
  double lr = 0.02;
  std::uint64_t seed = 0;
};

Vec ae_bottleneck(const Autoencoder& ae, const Vec& x);
Vec ae_reconstruct(const Autoencoder& ae, const Vec& x);

/// One autoencoder per coarse class, each trained by SGD on the mean squared
/// reconstruction error of its own class's points only. final_loss is the
/// closing full-pass reconstruction error per class.
struct ClassAutoencoders {
  std::vector<Autoencoder> per_class;
  std::vector<double> final_loss;
};

ClassAutoencoders train_class_autoencoder(const ToyDataset& data, const AeOptions& opt);

/// Ablation baseline: a single autoencoder of the same shape trained on all
/// points regardless of class.
struct GenericAutoencoder {
  Autoencoder ae;
  double final_loss = 0.0;
};

GenericAutoencoder train_generic_autoencoder(const ToyDataset& data, const AeOptions& opt);

/// Concatenation of the sphere-normalized encoder output with the bottleneck
/// of the point's class's autoencoder (class routing uses the given coarse
/// label). Output dimension d + bottleneck.
Vec composite_embedding(const EncoderParams& enc, const ClassAutoencoders& cae, const Vec& x,
                        int class_label);
Vec composite_embedding(const EncoderParams& enc, const Autoencoder& ae, const Vec& x);

/// Deterministic train/eval split by index parity (even -> train).
struct Split {
  std::vector<int> train;
  std::vector<int> eval;
};

Split split_even_odd(const ToyDataset& data);

/// Coarse-to-fine transfer scoring of per-point embeddings (indexed like the
/// dataset) on the parity split.
TransferReport transfer_eval(const std::vector<Vec>& embeddings, const ToyDataset& data,
                             double gamma);

/// Distance scatters for the tangent-slope estimators, as (input distance,
/// output distance) pairs. encoder_pairs samples random input pairs against
/// their embedding distances; augmentation_pairs draws per_anchor jitters per
/// anchor and keeps the one with the smallest input-to-embedding distance
/// ratio (the worst pair for Lipschitzness); decoder_pairs compares
/// reconstruction distances to bottleneck distances.
std::vector<std::pair<double, double>> encoder_pairs(const EncoderParams& p,
                                                     const std::vector<Vec>& inputs,
                                                     int max_pairs, std::uint64_t seed);
std::vector<std::pair<double, double>> augmentation_pairs(const EncoderParams& p,
                                                          const std::vector<Vec>& inputs,
                                                          double epsilon, int per_anchor,
                                                          std::uint64_t seed);
std::vector<std::pair<double, double>> decoder_pairs(const Autoencoder& ae,
                                                     const std::vector<Vec>& inputs,
                                                     int max_pairs, std::uint64_t seed);

/// Plain-text parameter blocks: `layer r c` then r row-major rows, `bias r`
/// then the bias row, 17-significant-digit floats, LF endings.
void write_encoder(std::ostream& out, const EncoderParams& p);
EncoderParams read_encoder(std::istream& in);
void write_autoencoder(std::ostream& out, const Autoencoder& ae);
Autoencoder read_autoencoder(std::istream& in);
void write_autoencoders(std::ostream& out, const ClassAutoencoders& cae);
ClassAutoencoders read_autoencoders(std::istream& in);

}  // namespace spreadlab::toy
