#include "spreadlab/toy.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <string>

#include "spreadlab/losses.hpp"

namespace spreadlab::toy {

namespace {

std::invalid_argument bad(const std::string& msg) { return std::invalid_argument(msg); }

}  // namespace

void validate(const DataSpec& spec) {
  if (spec.num_classes < 1) throw bad("domain: need at least one class");
  if (spec.input_dim < 1) throw bad("invalid-dimension: input dim must be positive");
  std::size_t m = static_cast<std::size_t>(2 * spec.num_classes);
  if (spec.centers.size() != m) throw bad("shape: expected 2K subclass centers");
  if (spec.spreads.size() != m) throw bad("shape: expected 2K subclass spreads");
  if (spec.proportions.size() != m) throw bad("domain: expected 2K subclass proportions");
  for (const auto& c : spec.centers)
    if (c.size() != static_cast<std::size_t>(spec.input_dim))
      throw bad("shape: center dimension differs from input dim");
  for (double s : spec.spreads)
    if (!(s >= 0.0)) throw bad("domain: spreads must be non-negative");
  KahanSum total;
  for (double p : spec.proportions) {
    if (!(p >= 0.0)) throw bad("domain: proportions must be non-negative");
    total.add(p);
  }
  if (std::fabs(total.value() - 1.0) > 1e-9) throw bad("domain: proportions must sum to 1");
  if (spec.n < 0) throw bad("domain: n must be non-negative");
}

DataSpec standard_spec(std::uint64_t seed) {
  DataSpec spec;
  spec.num_classes = 2;
  spec.input_dim = 8;
  spec.n = 2000;
  spec.seed = seed;
  // class centers symmetric at -1.5/+1.5 on axis 0 (3.0 apart); subclass
  // offsets +-0.5 on axis 2, so within-class centers sit 1.0 = 4 sigma apart
  for (int y = 0; y < 2; ++y)
    for (int j = 0; j < 2; ++j) {
      Vec c(8, 0.0);
      c[0] = y == 0 ? -1.5 : 1.5;
      c[2] = j == 0 ? 0.5 : -0.5;
      spec.centers.push_back(c);
      spec.spreads.push_back(0.25);
      spec.proportions.push_back(0.25);
    }
  return spec;
}

ToyDataset gen_subclass_data(const DataSpec& spec) {
  validate(spec);
  ToyDataset data;
  data.spec = spec;
  Rng rng(spec.seed);
  const std::size_t m = spec.proportions.size();
  for (int i = 0; i < spec.n; ++i) {
    double r = rng.uniform();
    std::size_t z = m - 1;
    double acc = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      acc += spec.proportions[t];
      if (r < acc) {
        z = t;
        break;
      }
    }
    Vec x(static_cast<std::size_t>(spec.input_dim));
    for (int k = 0; k < spec.input_dim; ++k)
      x[static_cast<std::size_t>(k)] =
          spec.centers[z][static_cast<std::size_t>(k)] + spec.spreads[z] * rng.normal();
    data.inputs.push_back(std::move(x));
    data.class_labels.push_back(static_cast<int>(z) / 2);
    data.subclass_labels.push_back(static_cast<int>(z));
  }
  return data;
}

Vec augment(const Vec& x, double epsilon, Rng& rng) {
  if (!(epsilon >= 0.0)) throw bad("domain: epsilon must be non-negative");
  if (epsilon == 0.0) return x;
  int d = static_cast<int>(x.size());
  Vec dir = rng.unit_vector(d);
  double radius = epsilon * std::pow(rng.uniform(), 1.0 / d);
  Vec out = x;
  for (int k = 0; k < d; ++k) out[static_cast<std::size_t>(k)] += radius * dir[static_cast<std::size_t>(k)];
  return out;
}

Vec augment(const Vec& x, double epsilon, std::uint64_t seed) {
  Rng rng(seed);
  return augment(x, epsilon, rng);
}

namespace {

Layer init_layer(int rows, int cols, Rng& rng) {
  Layer l;
  l.rows = rows;
  l.cols = cols;
  l.w.resize(static_cast<std::size_t>(rows) * cols);
  double scale = 1.0 / std::sqrt(static_cast<double>(cols));
  for (auto& x : l.w) x = scale * rng.normal();
  l.b.assign(static_cast<std::size_t>(rows), 0.0);
  return l;
}

Layer zero_like(const Layer& l) {
  Layer z;
  z.rows = l.rows;
  z.cols = l.cols;
  z.w.assign(l.w.size(), 0.0);
  z.b.assign(l.b.size(), 0.0);
  return z;
}

Vec affine(const Layer& l, const Vec& x) {
  Vec y(static_cast<std::size_t>(l.rows));
  for (int r = 0; r < l.rows; ++r) {
    KahanSum s;
    for (int c = 0; c < l.cols; ++c)
      s.add(l.w[static_cast<std::size_t>(r) * l.cols + c] * x[static_cast<std::size_t>(c)]);
    s.add(l.b[static_cast<std::size_t>(r)]);
    y[static_cast<std::size_t>(r)] = s.value();
  }
  return y;
}

Vec tanh_vec(const Vec& x) {
  Vec y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = std::tanh(x[i]);
  return y;
}

/// delta flows back through y = W x + b: accumulates dW, db, returns dx.
Vec affine_backward(const Layer& l, const Vec& x, const Vec& delta, Layer& grad) {
  for (int r = 0; r < l.rows; ++r) {
    double dr = delta[static_cast<std::size_t>(r)];
    grad.b[static_cast<std::size_t>(r)] += dr;
    for (int c = 0; c < l.cols; ++c)
      grad.w[static_cast<std::size_t>(r) * l.cols + c] += dr * x[static_cast<std::size_t>(c)];
  }
  Vec dx(static_cast<std::size_t>(l.cols), 0.0);
  for (int r = 0; r < l.rows; ++r) {
    double dr = delta[static_cast<std::size_t>(r)];
    for (int c = 0; c < l.cols; ++c)
      dx[static_cast<std::size_t>(c)] += l.w[static_cast<std::size_t>(r) * l.cols + c] * dr;
  }
  return dx;
}

Vec tanh_backward(const Vec& activated, const Vec& delta) {
  Vec out(delta.size());
  for (std::size_t i = 0; i < delta.size(); ++i) out[i] = delta[i] * (1.0 - activated[i] * activated[i]);
  return out;
}

/// Cached encoder forward pass: activations after each tanh, the raw output
/// z, its norm, and the unit output u.
struct EncoderTrace {
  Vec a0, a1, z, u;
  double znorm = 0.0;
};

EncoderTrace encoder_forward(const EncoderParams& p, const Vec& x) {
  EncoderTrace t;
  t.a0 = tanh_vec(affine(p.layers[0], x));
  t.a1 = tanh_vec(affine(p.layers[1], t.a0));
  t.z = affine(p.layers[2], t.a1);
  t.znorm = norm(t.z);
  if (!(t.znorm > 0.0) || !std::isfinite(t.znorm))
    throw std::runtime_error("numerical-failure: encoder output collapsed to zero");
  t.u.resize(t.z.size());
  for (std::size_t i = 0; i < t.z.size(); ++i) t.u[i] = t.z[i] / t.znorm;
  return t;
}

/// Backpropagates an ambient gradient on the unit output through the
/// normalization and the three layers.
void encoder_backward(const EncoderParams& p, const Vec& x, const EncoderTrace& t,
                      const Vec& grad_u, EncoderParams& grads) {
  Vec gz(t.z.size());
  double radial = dot(grad_u, t.u);
  for (std::size_t i = 0; i < gz.size(); ++i) gz[i] = (grad_u[i] - radial * t.u[i]) / t.znorm;

  Vec ga1 = affine_backward(p.layers[2], t.a1, gz, grads.layers[2]);
  Vec d1 = tanh_backward(t.a1, ga1);
  Vec ga0 = affine_backward(p.layers[1], t.a0, d1, grads.layers[1]);
  Vec d0 = tanh_backward(t.a0, ga0);
  affine_backward(p.layers[0], x, d0, grads.layers[0]);
}

EncoderParams zero_grads(const EncoderParams& p) {
  EncoderParams g;
  g.input_dim = p.input_dim;
  g.output_dim = p.output_dim;
  for (const auto& l : p.layers) g.layers.push_back(zero_like(l));
  return g;
}

}  // namespace

EncoderParams init_encoder(int input_dim, int hidden, int output_dim, std::uint64_t seed) {
  if (input_dim < 1 || hidden < 1 || output_dim < 2)
    throw bad("invalid-dimension: encoder needs positive dims and output dim >= 2");
  Rng rng(seed);
  EncoderParams p;
  p.input_dim = input_dim;
  p.output_dim = output_dim;
  p.layers.push_back(init_layer(hidden, input_dim, rng));
  p.layers.push_back(init_layer(hidden, hidden, rng));
  p.layers.push_back(init_layer(output_dim, hidden, rng));
  return p;
}

Vec encode(const EncoderParams& p, const Vec& x) {
  if (x.size() != static_cast<std::size_t>(p.input_dim))
    throw bad("shape: input dimension differs from the encoder's");
  return encoder_forward(p, x).u;
}

std::vector<Vec> encode_all(const EncoderParams& p, const std::vector<Vec>& xs) {
  std::vector<Vec> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(encode(p, x));
  return out;
}

BatchGradient encoder_batch_gradient(const EncoderParams& p, const std::vector<Vec>& inputs,
                                     const std::vector<int>& classes,
                                     const std::vector<Vec>& augmented, TrainMode mode,
                                     const LossWeights& w) {
  if (inputs.size() != classes.size()) throw bad("shape: inputs and classes differ in length");
  if (mode == TrainMode::supcon && !augmented.empty())
    throw bad("label: supcon mode takes no augmentations");
  if (mode == TrainMode::spread && augmented.size() != inputs.size())
    throw bad("incomplete-map: spread mode needs one augmentation per input");

  const std::size_t n = inputs.size();
  std::vector<EncoderTrace> traces;
  traces.reserve(n + augmented.size());
  for (const auto& x : inputs) traces.push_back(encoder_forward(p, x));
  for (const auto& x : augmented) traces.push_back(encoder_forward(p, x));

  EmbeddingConfig config;
  config.dim = p.output_dim;
  config.num_classes = 1 + *std::max_element(classes.begin(), classes.end());
  for (const auto& t : traces) config.points.push_back(t.u);
  config.class_labels = classes;
  for (std::size_t i = 0; i < augmented.size(); ++i) config.class_labels.push_back(classes[i]);

  BatchGradient bg;
  std::vector<Vec> point_grads;
  if (mode == TrainMode::supcon) {
    bg.loss = supcon_batch(config, w.tau);
    point_grads = supcon_batch_gradient(config, w.tau);
  } else {
    AugmentationMap map;
    for (std::size_t i = 0; i < n; ++i)
      map.pairs.push_back({static_cast<int>(i), static_cast<int>(n + i)});
    bg.loss = spread_batch(config, map, w);
    point_grads = spread_batch_gradient(config, map, w);
  }

  bg.grads = zero_grads(p);
  for (std::size_t i = 0; i < traces.size(); ++i) {
    const Vec& x = i < n ? inputs[i] : augmented[i - n];
    encoder_backward(p, x, traces[i], point_grads[i], bg.grads);
  }
  return bg;
}

TrainedEncoder train_encoder(const ToyDataset& data, const TrainOptions& opt) {
  validate(opt.weights);
  const int K = data.spec.num_classes;
  if (opt.epochs < 1) throw bad("domain: epochs must be at least 1");
  if (!(opt.lr > 0.0)) throw bad("domain: learning rate must be positive");
  if (!(opt.epsilon >= 0.0)) throw bad("domain: epsilon must be non-negative");
  if (opt.batch_size % K != 0) throw bad("domain: batch size must split evenly across classes");
  const int per_class = opt.batch_size / K;
  if (per_class < 2) throw bad("no-positive: need at least two batch points per class");

  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(K));
  for (int i = 0; i < data.size(); ++i)
    by_class[static_cast<std::size_t>(data.class_labels[static_cast<std::size_t>(i)])].push_back(i);
  for (int y = 0; y < K; ++y)
    if (static_cast<int>(by_class[static_cast<std::size_t>(y)].size()) < per_class)
      throw bad("insufficient-data: class " + std::to_string(y) + " cannot fill a batch");

  Rng rng(opt.seed);
  TrainedEncoder trained;
  trained.params = init_encoder(data.spec.input_dim, opt.hidden, opt.output_dim, rng.next_u64());

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    for (auto& idx : by_class) rng.shuffle(idx);
    int num_batches = std::numeric_limits<int>::max();
    for (const auto& idx : by_class)
      num_batches = std::min(num_batches, static_cast<int>(idx.size()) / per_class);

    KahanSum epoch_loss;
    for (int b = 0; b < num_batches; ++b) {
      std::vector<Vec> inputs;
      std::vector<int> classes;
      for (int y = 0; y < K; ++y)
        for (int s = 0; s < per_class; ++s) {
          int i = by_class[static_cast<std::size_t>(y)][static_cast<std::size_t>(b * per_class + s)];
          inputs.push_back(data.inputs[static_cast<std::size_t>(i)]);
          classes.push_back(y);
        }
      std::vector<Vec> augs;
      if (opt.mode == TrainMode::spread)
        for (const auto& x : inputs) augs.push_back(augment(x, opt.epsilon, rng));

      BatchGradient bg =
          encoder_batch_gradient(trained.params, inputs, classes, augs, opt.mode, opt.weights);
      if (!std::isfinite(bg.loss))
        throw std::runtime_error("training-failure: non-finite loss at epoch " +
                                 std::to_string(epoch));
      epoch_loss.add(bg.loss);
      for (std::size_t l = 0; l < trained.params.layers.size(); ++l) {
        auto& layer = trained.params.layers[l];
        const auto& g = bg.grads.layers[l];
        for (std::size_t t = 0; t < layer.w.size(); ++t) layer.w[t] -= opt.lr * g.w[t];
        for (std::size_t t = 0; t < layer.b.size(); ++t) layer.b[t] -= opt.lr * g.b[t];
      }
    }
    trained.history.push_back(epoch_loss.value() / num_batches);
  }
  return trained;
}

namespace {

struct AeTrace {
  Vec e0, bott, d0, recon;
};

AeTrace ae_forward(const Autoencoder& ae, const Vec& x) {
  AeTrace t;
  t.e0 = tanh_vec(affine(ae.enc[0], x));
  t.bott = affine(ae.enc[1], t.e0);
  t.d0 = tanh_vec(affine(ae.dec[0], t.bott));
  t.recon = affine(ae.dec[1], t.d0);
  return t;
}

double recon_loss(const AeTrace& t, const Vec& x) {
  KahanSum s;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double d = t.recon[i] - x[i];
    s.add(d * d);
  }
  return s.value();
}

struct AeGrads {
  std::vector<Layer> enc, dec;
};

AeGrads ae_zero_grads(const Autoencoder& ae) {
  AeGrads g;
  for (const auto& l : ae.enc) g.enc.push_back(zero_like(l));
  for (const auto& l : ae.dec) g.dec.push_back(zero_like(l));
  return g;
}

void ae_backward(const Autoencoder& ae, const Vec& x, const AeTrace& t, double loss_scale,
                 AeGrads& g) {
  Vec drecon(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) drecon[i] = loss_scale * 2.0 * (t.recon[i] - x[i]);
  Vec gd0 = affine_backward(ae.dec[1], t.d0, drecon, g.dec[1]);
  Vec dd0 = tanh_backward(t.d0, gd0);
  Vec gbott = affine_backward(ae.dec[0], t.bott, dd0, g.dec[0]);
  Vec ge0 = affine_backward(ae.enc[1], t.e0, gbott, g.enc[1]);
  Vec de0 = tanh_backward(t.e0, ge0);
  affine_backward(ae.enc[0], x, de0, g.enc[0]);
}

Autoencoder init_autoencoder(int input_dim, int hidden, int bottleneck, Rng& rng) {
  Autoencoder ae;
  ae.input_dim = input_dim;
  ae.bottleneck = bottleneck;
  ae.enc.push_back(init_layer(hidden, input_dim, rng));
  ae.enc.push_back(init_layer(bottleneck, hidden, rng));
  ae.dec.push_back(init_layer(hidden, bottleneck, rng));
  ae.dec.push_back(init_layer(input_dim, hidden, rng));
  return ae;
}

/// The bottleneck code carries a gauge freedom: shifting it by a constant and
/// compensating in the decoder's first pre-activation leaves reconstruction
/// unchanged, yet mini-batch descent parks the offset arbitrarily. Fix the
/// gauge by centering the code over the training points, folding the shift
/// into the bottleneck bias and its exact compensation into the decoder bias.
void center_bottleneck(Autoencoder& ae, const std::vector<const Vec*>& points) {
  if (points.empty()) return;
  std::vector<KahanSum> mean(static_cast<std::size_t>(ae.bottleneck));
  for (const Vec* x : points) {
    Vec code = ae_bottleneck(ae, *x);
    for (std::size_t i = 0; i < code.size(); ++i) mean[i].add(code[i]);
  }
  Vec m(static_cast<std::size_t>(ae.bottleneck));
  for (std::size_t i = 0; i < m.size(); ++i) {
    m[i] = mean[i].value() / static_cast<double>(points.size());
  }
  Layer& bott = ae.enc.back();
  for (std::size_t i = 0; i < bott.b.size(); ++i) bott.b[i] -= m[i];
  Layer& dec0 = ae.dec.front();
  for (int r = 0; r < dec0.rows; ++r) {
    KahanSum comp;
    for (int c = 0; c < dec0.cols; ++c) {
      comp.add(dec0.w[static_cast<std::size_t>(r * dec0.cols + c)] * m[static_cast<std::size_t>(c)]);
    }
    dec0.b[static_cast<std::size_t>(r)] += comp.value();
  }
}

/// SGD on mean squared reconstruction error over the given points.
/// Returns the closing full-pass loss.
double train_one_ae(Autoencoder& ae, const std::vector<const Vec*>& points, const AeOptions& opt,
                    Rng& rng) {
  const int n = static_cast<int>(points.size());
  const int batch = std::min(opt.batch_size, n);
  std::vector<int> order(points.size());
  for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;

  for (int epoch = 0; epoch < opt.epochs; ++epoch) {
    rng.shuffle(order);
    int num_batches = n / batch;
    for (int b = 0; b < num_batches; ++b) {
      AeGrads g = ae_zero_grads(ae);
      KahanSum batch_loss;
      for (int s = 0; s < batch; ++s) {
        const Vec& x = *points[static_cast<std::size_t>(order[static_cast<std::size_t>(b * batch + s)])];
        AeTrace t = ae_forward(ae, x);
        batch_loss.add(recon_loss(t, x));
        ae_backward(ae, x, t, 1.0 / batch, g);
      }
      if (!std::isfinite(batch_loss.value()))
        throw std::runtime_error("training-failure: non-finite reconstruction loss at epoch " +
                                 std::to_string(epoch));
      auto step = [&](std::vector<Layer>& layers, const std::vector<Layer>& grads) {
        for (std::size_t l = 0; l < layers.size(); ++l) {
          for (std::size_t t = 0; t < layers[l].w.size(); ++t)
            layers[l].w[t] -= opt.lr * grads[l].w[t];
          for (std::size_t t = 0; t < layers[l].b.size(); ++t)
            layers[l].b[t] -= opt.lr * grads[l].b[t];
        }
      };
      step(ae.enc, g.enc);
      step(ae.dec, g.dec);
    }
  }

  center_bottleneck(ae, points);
  KahanSum total;
  for (const Vec* x : points) total.add(recon_loss(ae_forward(ae, *x), *x));
  return total.value() / n;
}

void check_ae_options(const AeOptions& opt, int input_dim) {
  if (opt.bottleneck < 1 || opt.bottleneck > input_dim)
    throw bad("invalid-dimension: bottleneck must lie in [1, input dim]");
  if (opt.hidden < 1) throw bad("invalid-dimension: hidden width must be positive");
  if (opt.epochs < 1) throw bad("domain: epochs must be at least 1");
  if (opt.batch_size < 1) throw bad("domain: batch size must be at least 1");
  if (!(opt.lr > 0.0)) throw bad("domain: learning rate must be positive");
}

}  // namespace

Vec ae_bottleneck(const Autoencoder& ae, const Vec& x) {
  if (x.size() != static_cast<std::size_t>(ae.input_dim))
    throw bad("shape: input dimension differs from the autoencoder's");
  AeTrace t;
  t.e0 = tanh_vec(affine(ae.enc[0], x));
  return affine(ae.enc[1], t.e0);
}

Vec ae_reconstruct(const Autoencoder& ae, const Vec& x) {
  if (x.size() != static_cast<std::size_t>(ae.input_dim))
    throw bad("shape: input dimension differs from the autoencoder's");
  return ae_forward(ae, x).recon;
}

ClassAutoencoders train_class_autoencoder(const ToyDataset& data, const AeOptions& opt) {
  check_ae_options(opt, data.spec.input_dim);
  ClassAutoencoders cae;
  for (int y = 0; y < data.spec.num_classes; ++y) {
    std::vector<const Vec*> points;
    for (int i = 0; i < data.size(); ++i)
      if (data.class_labels[static_cast<std::size_t>(i)] == y)
        points.push_back(&data.inputs[static_cast<std::size_t>(i)]);
    if (points.empty()) throw bad("insufficient-data: class " + std::to_string(y) + " is empty");

    Rng rng(opt.seed + static_cast<std::uint64_t>(y));
    Autoencoder ae = init_autoencoder(data.spec.input_dim, opt.hidden, opt.bottleneck, rng);
    double final_loss = train_one_ae(ae, points, opt, rng);
    cae.per_class.push_back(std::move(ae));
    cae.final_loss.push_back(final_loss);
  }
  return cae;
}

GenericAutoencoder train_generic_autoencoder(const ToyDataset& data, const AeOptions& opt) {
  check_ae_options(opt, data.spec.input_dim);
  if (data.size() == 0) throw bad("insufficient-data: empty dataset");
  std::vector<const Vec*> points;
  for (const auto& x : data.inputs) points.push_back(&x);
  Rng rng(opt.seed);
  GenericAutoencoder g;
  g.ae = init_autoencoder(data.spec.input_dim, opt.hidden, opt.bottleneck, rng);
  g.final_loss = train_one_ae(g.ae, points, opt, rng);
  return g;
}

Vec composite_embedding(const EncoderParams& enc, const ClassAutoencoders& cae, const Vec& x,
                        int class_label) {
  if (class_label < 0 || class_label >= static_cast<int>(cae.per_class.size()))
    throw bad("label: no autoencoder for class " + std::to_string(class_label));
  Vec u = encode(enc, x);
  Vec bott = ae_bottleneck(cae.per_class[static_cast<std::size_t>(class_label)], x);
  u.insert(u.end(), bott.begin(), bott.end());
  return u;
}

Vec composite_embedding(const EncoderParams& enc, const Autoencoder& ae, const Vec& x) {
  Vec u = encode(enc, x);
  Vec bott = ae_bottleneck(ae, x);
  u.insert(u.end(), bott.begin(), bott.end());
  return u;
}

Split split_even_odd(const ToyDataset& data) {
  Split split;
  for (int i = 0; i < data.size(); ++i)
    (i % 2 == 0 ? split.train : split.eval).push_back(i);
  return split;
}

TransferReport transfer_eval(const std::vector<Vec>& embeddings, const ToyDataset& data,
                             double gamma) {
  if (embeddings.size() != static_cast<std::size_t>(data.size()))
    throw bad("shape: one embedding per dataset point required");
  Split split = split_even_odd(data);
  auto gather = [&](const std::vector<int>& idx, std::vector<Vec>& pts, std::vector<int>& cls,
                    std::vector<int>& sub) {
    for (int i : idx) {
      pts.push_back(embeddings[static_cast<std::size_t>(i)]);
      cls.push_back(data.class_labels[static_cast<std::size_t>(i)]);
      sub.push_back(data.subclass_labels[static_cast<std::size_t>(i)]);
    }
  };
  std::vector<Vec> train_pts, eval_pts;
  std::vector<int> train_cls, train_sub, eval_cls, eval_sub;
  gather(split.train, train_pts, train_cls, train_sub);
  gather(split.eval, eval_pts, eval_cls, eval_sub);
  return coarse_to_fine(train_pts, train_cls, train_sub, eval_pts, eval_cls, eval_sub, gamma);
}

std::vector<std::pair<double, double>> encoder_pairs(const EncoderParams& p,
                                                     const std::vector<Vec>& inputs,
                                                     int max_pairs, std::uint64_t seed) {
  if (inputs.size() < 2) throw bad("insufficient-data: need at least two points");
  if (max_pairs < 1) throw bad("domain: max_pairs must be at least 1");
  auto embedded = encode_all(p, inputs);
  Rng rng(seed);
  std::vector<std::pair<double, double>> pairs;
  for (int t = 0; t < max_pairs; ++t) {
    std::size_t i = rng.below(inputs.size());
    std::size_t j = rng.below(inputs.size() - 1);
    if (j >= i) ++j;
    pairs.push_back({euclid_dist(inputs[i], inputs[j]), euclid_dist(embedded[i], embedded[j])});
  }
  return pairs;
}

std::vector<std::pair<double, double>> augmentation_pairs(const EncoderParams& p,
                                                          const std::vector<Vec>& inputs,
                                                          double epsilon, int per_anchor,
                                                          std::uint64_t seed) {
  if (inputs.empty()) throw bad("insufficient-data: need at least one anchor");
  if (per_anchor < 1) throw bad("domain: per_anchor must be at least 1");
  Rng rng(seed);
  std::vector<std::pair<double, double>> selected;
  for (const auto& x : inputs) {
    Vec u = encode(p, x);
    double best_ratio = std::numeric_limits<double>::infinity();
    std::pair<double, double> best{0.0, 0.0};
    bool have = false;
    for (int t = 0; t < per_anchor; ++t) {
      Vec a = augment(x, epsilon, rng);
      double din = euclid_dist(a, x);
      double dout = euclid_dist(encode(p, a), u);
      double ratio = dout > 0.0 ? din / dout : std::numeric_limits<double>::infinity();
      if (!have || ratio < best_ratio) {
        best_ratio = ratio;
        best = {din, dout};
        have = true;
      }
    }
    selected.push_back(best);
  }
  return selected;
}

std::vector<std::pair<double, double>> decoder_pairs(const Autoencoder& ae,
                                                     const std::vector<Vec>& inputs,
                                                     int max_pairs, std::uint64_t seed) {
  if (inputs.size() < 2) throw bad("insufficient-data: need at least two points");
  if (max_pairs < 1) throw bad("domain: max_pairs must be at least 1");
  std::vector<Vec> bott, recon;
  for (const auto& x : inputs) {
    AeTrace t = ae_forward(ae, x);
    bott.push_back(t.bott);
    recon.push_back(t.recon);
  }
  Rng rng(seed);
  std::vector<std::pair<double, double>> pairs;
  for (int t = 0; t < max_pairs; ++t) {
    std::size_t i = rng.below(inputs.size());
    std::size_t j = rng.below(inputs.size() - 1);
    if (j >= i) ++j;
    pairs.push_back({euclid_dist(recon[i], recon[j]), euclid_dist(bott[i], bott[j])});
  }
  return pairs;
}

namespace {

void write_layer(std::ostream& out, const Layer& l) {
  out << "layer " << l.rows << " " << l.cols << "\n";
  for (int r = 0; r < l.rows; ++r) {
    for (int c = 0; c < l.cols; ++c) {
      if (c) out << " ";
      out << g17(l.w[static_cast<std::size_t>(r) * l.cols + c]);
    }
    out << "\n";
  }
  out << "bias " << l.rows << "\n";
  for (int r = 0; r < l.rows; ++r) {
    if (r) out << " ";
    out << g17(l.b[static_cast<std::size_t>(r)]);
  }
  out << "\n";
}

void expect_word(std::istream& in, const std::string& word) {
  std::string got;
  if (!(in >> got) || got != word)
    throw bad("parse: expected '" + word + "'" + (got.empty() ? "" : ", got '" + got + "'"));
}

Layer read_layer(std::istream& in) {
  expect_word(in, "layer");
  Layer l;
  if (!(in >> l.rows >> l.cols) || l.rows < 1 || l.cols < 1)
    throw bad("parse: bad layer shape");
  l.w.resize(static_cast<std::size_t>(l.rows) * l.cols);
  for (auto& x : l.w)
    if (!(in >> x)) throw bad("parse: truncated layer weights");
  expect_word(in, "bias");
  int rows = 0;
  if (!(in >> rows) || rows != l.rows) throw bad("parse: bias size differs from layer rows");
  l.b.resize(static_cast<std::size_t>(rows));
  for (auto& x : l.b)
    if (!(in >> x)) throw bad("parse: truncated bias");
  return l;
}

}  // namespace

void write_encoder(std::ostream& out, const EncoderParams& p) {
  out << "encoder " << p.layers.size() << " " << p.input_dim << " " << p.output_dim << "\n";
  for (const auto& l : p.layers) write_layer(out, l);
}

EncoderParams read_encoder(std::istream& in) {
  expect_word(in, "encoder");
  std::size_t nlayers = 0;
  EncoderParams p;
  if (!(in >> nlayers >> p.input_dim >> p.output_dim)) throw bad("parse: bad encoder header");
  for (std::size_t l = 0; l < nlayers; ++l) p.layers.push_back(read_layer(in));
  if (p.layers.empty() || p.layers.front().cols != p.input_dim ||
      p.layers.back().rows != p.output_dim)
    throw bad("parse: encoder layer shapes disagree with the header");
  return p;
}

void write_autoencoder(std::ostream& out, const Autoencoder& ae) {
  out << "autoencoder " << ae.input_dim << " " << ae.bottleneck << " " << ae.enc.size() << " "
      << ae.dec.size() << "\n";
  for (const auto& l : ae.enc) write_layer(out, l);
  for (const auto& l : ae.dec) write_layer(out, l);
}

Autoencoder read_autoencoder(std::istream& in) {
  expect_word(in, "autoencoder");
  Autoencoder ae;
  std::size_t ne = 0, nd = 0;
  if (!(in >> ae.input_dim >> ae.bottleneck >> ne >> nd))
    throw bad("parse: bad autoencoder header");
  for (std::size_t l = 0; l < ne; ++l) ae.enc.push_back(read_layer(in));
  for (std::size_t l = 0; l < nd; ++l) ae.dec.push_back(read_layer(in));
  if (ae.enc.empty() || ae.dec.empty() || ae.enc.back().rows != ae.bottleneck ||
      ae.dec.back().rows != ae.input_dim)
    throw bad("parse: autoencoder layer shapes disagree with the header");
  return ae;
}

void write_autoencoders(std::ostream& out, const ClassAutoencoders& cae) {
  out << "autoencoders " << cae.per_class.size() << "\n";
  for (const auto& ae : cae.per_class) write_autoencoder(out, ae);
}

ClassAutoencoders read_autoencoders(std::istream& in) {
  expect_word(in, "autoencoders");
  std::size_t count = 0;
  if (!(in >> count) || count < 1) throw bad("parse: bad autoencoder count");
  ClassAutoencoders cae;
  for (std::size_t i = 0; i < count; ++i) cae.per_class.push_back(read_autoencoder(in));
  return cae;
}

}  // namespace spreadlab::toy
