#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "spreadlab/embedding.hpp"
#include "spreadlab/losses.hpp"
#include "spreadlab/metrics.hpp"
#include "spreadlab/toy.hpp"

using namespace spreadlab;
using spreadlab::testing::rotate_config;
using spreadlab::testing::throws_prefix;

namespace {

// two-atom configuration with per-point angular jitter, so subclass scatter
// is strictly positive while every point stays on the sphere
EmbeddingConfig jittered_two_atom(double theta, int m, std::uint64_t seed) {
  EmbeddingConfig c = make_mu_theta(2, 3, theta, m);
  Rng rng(seed);
  for (auto& p : c.points) {
    p = rotate_in_plane(p, 0, 2, 0.05 * rng.normal());
    p = rotate_in_plane(p, 1, 2, 0.03 * rng.normal());
  }
  return c;
}

AugmentationMap consecutive_pairs(int n) {
  AugmentationMap map;
  for (int i = 0; i + 1 < n; i += 2) map.pairs.push_back({i, i + 1});
  return map;
}

}  // namespace

TEST_CASE("class spread: collapse, two-atom geometry, uniform mass") {
  SpreadReport collapsed = class_spread(make_collapsed(3, 3, 4));
  CHECK(collapsed.mean == 0.0);
  for (double s : collapsed.per_class) CHECK(s == 0.0);

  for (int d : {2, 3}) {
    SpreadReport rep = class_spread(make_mu_theta(2, d, 0.35, 5));
    CHECK(rep.per_class.size() == 2);
    for (double s : rep.per_class) CHECK(std::fabs(s - std::sin(0.35)) < 1e-9);
  }

  // on S^1 the centroid of a large uniform sample is near the origin, so the
  // mean distance to it approaches the unit radius
  SpreadReport uni = class_spread(make_uniform(2, 2, 2000, 9));
  for (double s : uni.per_class) CHECK(std::fabs(s - 1.0) < 0.05);
}

TEST_CASE("subclass scatter: atoms, antipodal pair, Jensen") {
  EmbeddingConfig atoms = make_mu_theta(2, 2, 0.4, 6);
  for (double s : subclass_sigma(atoms)) CHECK(std::fabs(s) < 1e-12);
  for (double v : subclass_var(atoms)) CHECK(std::fabs(v) < 1e-12);

  EmbeddingConfig anti;
  anti.dim = 2;
  anti.num_classes = 2;
  anti.points = {{1.0, 0.0}, {-1.0, 0.0}, {0.0, 1.0}};
  anti.class_labels = {0, 0, 1};
  anti.subclass_labels = {0, 0, 1};
  CHECK(std::fabs(subclass_sigma(anti)[0] - 1.0) < 1e-12);
  CHECK(std::fabs(subclass_var(anti)[0] - 1.0) < 1e-12);
  CHECK(subclass_sigma(anti)[1] == 0.0);

  EmbeddingConfig jit = jittered_two_atom(0.4, 6, 21);
  auto sig = subclass_sigma(jit);
  auto var = subclass_var(jit);
  for (std::size_t z = 0; z < sig.size(); ++z) {
    CHECK(sig[z] > 0.0);
    CHECK(var[z] + 1e-12 >= sig[z] * sig[z]);
  }

  CHECK(throws_prefix([] { subclass_sigma(make_uniform(2, 2, 3, 1)); }, "label:"));
  CHECK(throws_prefix([] { subclass_var(make_uniform(2, 2, 3, 1)); }, "label:"));
}

TEST_CASE("delta separation: two-atom value, collapse, sign, class mismatch") {
  EmbeddingConfig c = make_mu_theta(2, 2, 0.3, 5);
  // balanced atoms: p = 1/2 each and zero subclass scatter leave 4 s_f(y)
  CHECK(std::fabs(delta_separation(c, 0, 1) - 4.0 * std::sin(0.3)) < 1e-9);
  CHECK(std::fabs(delta_separation(c, 2, 3) - 4.0 * std::sin(0.3)) < 1e-9);

  EmbeddingConfig flat;
  flat.dim = 2;
  flat.num_classes = 2;
  flat.points = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}, {-1.0, 0.0}};
  flat.class_labels = {0, 0, 0, 0, 1};
  flat.subclass_labels = {0, 0, 1, 1, 2};
  CHECK(std::fabs(delta_separation(flat, 0, 1)) < 1e-12);

  // the scatter terms can never outweigh the class spread: the separation
  // stays non-negative however wide the subclasses are made
  Rng rng(40);
  for (int trial = 0; trial < 300; ++trial) {
    int d = 2 + static_cast<int>(rng.below(4));
    int na = 1 + static_cast<int>(rng.below(12));
    int nb = 1 + static_cast<int>(rng.below(12));
    EmbeddingConfig adv;
    adv.dim = d;
    adv.num_classes = 2;
    for (int i = 0; i < na; ++i) {
      adv.points.push_back(rng.unit_vector(d));
      adv.class_labels.push_back(0);
      adv.subclass_labels.push_back(0);
    }
    for (int i = 0; i < nb; ++i) {
      adv.points.push_back(rng.unit_vector(d));
      adv.class_labels.push_back(0);
      adv.subclass_labels.push_back(1);
    }
    adv.points.push_back(rng.unit_vector(d));
    adv.class_labels.push_back(1);
    adv.subclass_labels.push_back(2);
    CHECK(delta_separation(adv, 0, 1) >= -1e-12);
  }

  CHECK(throws_prefix([&] { delta_separation(c, 0, 2); }, "mismatch:"));
}

TEST_CASE("mean classifier: averages, label order, lookups") {
  std::vector<Vec> pts = {{2.0, 0.0}, {0.0, 4.0}, {1.0, 1.0}};
  std::vector<int> labels = {5, 2, 2};
  MeanClassifier mc = mean_classifier(pts, labels);
  CHECK(mc.labels == std::vector<int>{2, 5});
  CHECK(mc.weight_for(2) == Vec{0.5, 2.5});
  CHECK(mc.weight_for(5) == Vec{2.0, 0.0});

  // linearity: scaling the embeddings scales the weights
  std::vector<Vec> scaled = pts;
  for (auto& p : scaled)
    for (auto& x : p) x *= 3.0;
  MeanClassifier mc3 = mean_classifier(scaled, labels);
  for (std::size_t i = 0; i < mc.weights.size(); ++i)
    for (std::size_t k = 0; k < mc.weights[i].size(); ++k)
      CHECK(std::fabs(mc3.weights[i][k] - 3.0 * mc.weights[i][k]) < 1e-12);

  CHECK(throws_prefix([&] { mc.weight_for(7); }, "insufficient-data:"));
  CHECK(throws_prefix([] { mean_classifier({}, {}); }, "insufficient-data:"));
  CHECK(throws_prefix([&] { mean_classifier(pts, {1, 2}); }, "shape:"));
}

TEST_CASE("margin error: collapse ceiling, separated atoms, brute force, monotone") {
  std::vector<Vec> same = {{1.0, 0.0}, {1.0, 0.0}, {1.0, 0.0}};
  CHECK(gamma_margin_error(same, {1.0, 0.0}, {1.0, 0.0}, 1.1) == 1.0);
  CHECK(gamma_margin_error(same, {1.0, 0.0}, {-1.0, 0.0}, 2.0) == 0.0);

  Rng rng(55);
  std::vector<Vec> pts;
  for (int i = 0; i < 50; ++i) {
    Vec p(3);
    for (auto& x : p) x = rng.normal();
    pts.push_back(p);
  }
  Vec wz = rng.unit_vector(3);
  Vec wo = rng.unit_vector(3);
  double gamma = 1.7;
  int below = 0;
  for (const auto& p : pts) {
    double logit = dot(p, wz) - dot(p, wo);
    if (logit < std::log(gamma)) ++below;
  }
  CHECK(gamma_margin_error(pts, wz, wo, gamma) == static_cast<double>(below) / 50.0);

  double prev = 0.0;
  for (double g : {1.1, 1.5, 2.5, 5.0, 20.0}) {
    double err = gamma_margin_error(pts, wz, wo, g);
    CHECK(err >= prev);
    CHECK(err >= 0.0);
    CHECK(err <= 1.0);
    prev = err;
  }

  CHECK(throws_prefix([&] { gamma_margin_error(pts, wz, wo, 1.0); }, "domain:"));
  CHECK(throws_prefix([&] { gamma_margin_error({}, wz, wo, 1.5); }, "insufficient-data:"));
}

TEST_CASE("margin error grows as a subclass spreads around its atom") {
  // five settings of angular scatter around the atom [1,0]; the rival weight
  // stays put, so the error can only step upward
  Vec rival = {-1.0, 0.0};
  double gamma = std::exp(0.5);
  std::vector<double> errors;
  for (double t : {0.0, 0.3, 0.55, 0.7, 0.85}) {
    std::vector<Vec> pts;
    for (double a : {t, -t, 2 * t, -2 * t, 3 * t, -3 * t})
      pts.push_back({std::cos(a), std::sin(a)});
    MeanClassifier mc = mean_classifier(pts, std::vector<int>(pts.size(), 0));
    errors.push_back(gamma_margin_error(pts, mc.weight_for(0), rival, gamma));
  }
  CHECK(errors.front() == 0.0);
  for (std::size_t i = 1; i < errors.size(); ++i) CHECK(errors[i] >= errors[i - 1] - 1e-12);
  CHECK(errors.back() > 0.6);
}

TEST_CASE("subclass recovery: separable clouds, collapse coin flip, relabeling") {
  // two tight clouds per class, separated by far more than their radii
  Rng rng(66);
  std::vector<Vec> pts;
  std::vector<int> cls, sub;
  std::vector<Vec> centers = {{1.0, 0.0}, {0.0, 1.0}, {-1.0, 0.0}, {0.0, -1.0}};
  for (int z = 0; z < 4; ++z)
    for (int i = 0; i < 20; ++i) {
      Vec p = centers[static_cast<std::size_t>(z)];
      for (auto& x : p) x += 0.01 * rng.normal();
      pts.push_back(p);
      cls.push_back(z / 2);
      sub.push_back(z);
    }
  RecoveryReport rep = subclass_recovery(pts, cls, sub, 2, 0);
  CHECK(rep.classes == std::vector<int>{0, 1});
  CHECK(rep.overall == 1.0);
  for (double f1 : rep.f1_per_class) CHECK(f1 == 1.0);

  SUBCASE("subclass ids can be renamed freely") {
    std::vector<int> renamed = sub;
    for (auto& z : renamed) z = (z == 0 ? 7 : z == 1 ? 3 : z);
    RecoveryReport alt = subclass_recovery(pts, cls, renamed, 2, 0);
    CHECK(alt.overall == rep.overall);
    CHECK(alt.f1_per_class == rep.f1_per_class);
  }

  SUBCASE("collapsed embeddings split like a coin flip") {
    int n = 200;
    std::vector<Vec> flat(static_cast<std::size_t>(n), Vec{1.0, 0.0});
    std::vector<int> one_class(static_cast<std::size_t>(n), 0);
    std::vector<int> truth(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) truth[static_cast<std::size_t>(i)] = i % 2;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      double f1 = subclass_recovery(flat, one_class, truth, 2, seed).overall;
      CHECK(f1 > 0.4);
      CHECK(f1 < 0.6);
    }
  }

  CHECK(throws_prefix([&] { subclass_recovery(pts, cls, sub, 50, 0); }, "domain:"));
  CHECK(throws_prefix([&] { subclass_recovery(pts, cls, sub, 9, 0); }, "domain:"));
}

TEST_CASE("tangent slope estimator: identity, scaling, cutoff") {
  auto est = estimate_lipschitz(LipschitzMode::encoder, {{0.1, 0.1}, {0.5, 0.5}, {2.0, 2.0}});
  CHECK(std::fabs(est.constant - 1.0) < 1e-12);
  CHECK(est.pair_count == 3);
  CHECK(est.mode == LipschitzMode::encoder);
  CHECK(est.cutoff == 1e-6);

  est = estimate_lipschitz(LipschitzMode::decoder_reverse, {{0.1, 0.2}, {1.0, 2.0}});
  CHECK(std::fabs(est.constant - 2.0) < 1e-12);

  est = estimate_lipschitz(LipschitzMode::augmentation, {{1.0, 0.5}, {2.0, 5.0}});
  CHECK(std::fabs(est.constant - 2.5) < 1e-12);

  // pairs under the cutoff are dropped, never divided by
  est = estimate_lipschitz(LipschitzMode::encoder, {{1e-9, 5.0}, {1.0, 0.3}});
  CHECK(std::fabs(est.constant - 0.3) < 1e-12);
  CHECK(est.pair_count == 1);

  CHECK(throws_prefix(
      [] { estimate_lipschitz(LipschitzMode::encoder, {{1e-9, 5.0}}); }, "degenerate-sample:"));
}

TEST_CASE("tangent slope estimator: trained invariance pulls the augmentation slope down") {
  // encoder trained with jitter comparable to the subclass gaps; the selected
  // worst-case augmentation pairs then slope lower than random input pairs
  toy::DataSpec spec = toy::standard_spec(100);
  std::fill(spec.spreads.begin(), spec.spreads.end(), 0.05);
  spec.n = 1000;
  toy::ToyDataset data = toy::gen_subclass_data(spec);

  toy::TrainOptions opt;
  opt.epsilon = 0.5;
  toy::TrainedEncoder enc = toy::train_encoder(data, opt);

  auto k_enc = estimate_lipschitz(LipschitzMode::encoder,
                                  toy::encoder_pairs(enc.params, data.inputs, 2000, 7));
  auto k_aug = estimate_lipschitz(LipschitzMode::augmentation,
                                  toy::augmentation_pairs(enc.params, data.inputs, 0.5, 10, 8));
  CHECK(k_enc.pair_count > 0);
  CHECK(k_aug.pair_count > 0);
  CHECK(k_enc.constant > 0.6);
  CHECK(k_enc.constant < 1.3);
  CHECK(k_aug.constant > 0.6);
  CHECK(k_aug.constant < 1.3);
  CHECK(k_aug.constant < k_enc.constant - 0.01);
}

TEST_CASE("permutation gap: class-fixing shuffles leave both losses in place") {
  EmbeddingConfig c = make_uniform(2, 3, 6, 17);
  AugmentationMap map = consecutive_pairs(c.size());
  PermutationGap gap = permutation_gap(c, map, {0.7, 0.5}, 50, 5);
  CHECK(gap.spread_gap <= 1e-10);
  CHECK(gap.asymptotic_gap <= 1e-10);

  // duplicated points make every class-fixing shuffle bit-identical
  EmbeddingConfig flat = make_collapsed(2, 2, 4);
  PermutationGap zero = permutation_gap(flat, consecutive_pairs(flat.size()), {0.7, 0.5}, 20, 3);
  CHECK(zero.spread_gap == 0.0);
  CHECK(zero.asymptotic_gap == 0.0);

  // no augmentation map: only the asymptotic loss is exercised
  PermutationGap no_map = permutation_gap(c, AugmentationMap{}, {0.7, 0.5}, 20, 3);
  CHECK(no_map.spread_gap == 0.0);
  CHECK(no_map.asymptotic_gap <= 1e-10);

  // a cross-class swap is not class-fixing and moves the loss visibly
  EmbeddingConfig atoms = make_mu_theta(2, 2, 0.3, 4);
  AugmentationMap atom_map = consecutive_pairs(atoms.size());
  EmbeddingConfig swapped = atoms;
  std::swap(swapped.points[0], swapped.points[8]);
  std::swap(swapped.points[1], swapped.points[9]);
  CHECK(std::fabs(spread_batch(atoms, atom_map, {0.7, 0.5}) -
                  spread_batch(swapped, atom_map, {0.7, 0.5})) > 1e-3);

  CHECK(throws_prefix([&] { permutation_gap(c, map, {0.7, 0.5}, 0, 5); }, "domain:"));
}

TEST_CASE("transfer ratio: atoms give zero, collapse is undefined, mixed scatter") {
  RatioReport atoms = transfer_ratio(make_mu_theta(2, 3, 0.4, 4));
  CHECK(atoms.subclasses == std::vector<int>{0, 1, 2, 3});
  for (double r : atoms.ratio) CHECK(std::fabs(r) < 1e-12);
  CHECK(std::fabs(atoms.mean) < 1e-12);

  EmbeddingConfig flat = make_collapsed(2, 2, 4);
  flat.subclass_labels = {0, 0, 1, 1, 2, 2, 3, 3};
  CHECK(throws_prefix([&] { transfer_ratio(flat); }, "degenerate-sample:"));

  // class 0 has two spread-1 antipodal subclasses; class 1 has two atoms
  EmbeddingConfig mixed;
  mixed.dim = 3;
  mixed.num_classes = 2;
  mixed.points = {{1.0, 0.0, 0.0}, {-1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, -1.0, 0.0},
                  {0.0, 0.0, 1.0}, {0.0, 0.0, -1.0}};
  mixed.class_labels = {0, 0, 0, 0, 1, 1};
  mixed.subclass_labels = {0, 0, 1, 1, 2, 3};
  RatioReport rep = transfer_ratio(mixed);
  CHECK(rep.subclasses == std::vector<int>{0, 1, 2, 3});
  CHECK(std::fabs(rep.ratio[0] - 1.0) < 1e-12);
  CHECK(std::fabs(rep.ratio[1] - 1.0) < 1e-12);
  CHECK(std::fabs(rep.ratio[2]) < 1e-12);
  CHECK(std::fabs(rep.ratio[3]) < 1e-12);
  CHECK(std::fabs(rep.mean - 0.5) < 1e-12);
}

TEST_CASE("representation metrics are invariant under global rotation") {
  EmbeddingConfig c = jittered_two_atom(0.4, 6, 77);
  std::vector<std::tuple<int, int, double>> rot = {{0, 1, 0.9}, {1, 2, -0.35}, {0, 2, 2.0}};
  EmbeddingConfig r = rotate_config(c, rot);

  SpreadReport s1 = class_spread(c);
  SpreadReport s2 = class_spread(r);
  CHECK(std::fabs(s1.mean - s2.mean) < 1e-10);
  for (std::size_t y = 0; y < s1.per_class.size(); ++y)
    CHECK(std::fabs(s1.per_class[y] - s2.per_class[y]) < 1e-10);

  auto sig1 = subclass_sigma(c);
  auto sig2 = subclass_sigma(r);
  auto var1 = subclass_var(c);
  auto var2 = subclass_var(r);
  for (std::size_t z = 0; z < sig1.size(); ++z) {
    CHECK(std::fabs(sig1[z] - sig2[z]) < 1e-10);
    CHECK(std::fabs(var1[z] - var2[z]) < 1e-10);
  }

  CHECK(std::fabs(delta_separation(c, 0, 1) - delta_separation(r, 0, 1)) < 1e-10);
  CHECK(std::fabs(transfer_ratio(c).mean - transfer_ratio(r).mean) < 1e-10);

  // rotating points and classifier weights together preserves every logit
  MeanClassifier mc = mean_classifier(c.points, c.subclass_labels);
  MeanClassifier mr = mean_classifier(r.points, r.subclass_labels);
  std::vector<Vec> z0(c.points.begin(), c.points.begin() + 6);
  std::vector<Vec> z0r(r.points.begin(), r.points.begin() + 6);
  CHECK(std::fabs(gamma_margin_error(z0, mc.weight_for(0), mc.weight_for(1), 1.3) -
                  gamma_margin_error(z0r, mr.weight_for(0), mr.weight_for(1), 1.3)) < 1e-12);
}

TEST_CASE("coarse-to-fine transfer: atoms score perfectly, gaps in coverage are rejected") {
  std::vector<Vec> atoms = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {-1.0, 0.0, 0.0}, {0.0, -1.0, 0.0}};
  std::vector<Vec> train_pts;
  std::vector<int> train_cls, train_sub;
  for (int z = 0; z < 4; ++z)
    for (int copy = 0; copy < 2; ++copy) {
      train_pts.push_back(atoms[static_cast<std::size_t>(z)]);
      train_cls.push_back(z / 2);
      train_sub.push_back(z);
    }
  std::vector<Vec> eval_pts = atoms;
  std::vector<int> eval_cls = {0, 0, 1, 1};
  std::vector<int> eval_sub = {0, 1, 2, 3};

  TransferReport rep =
      coarse_to_fine(train_pts, train_cls, train_sub, eval_pts, eval_cls, eval_sub, 1.2);
  CHECK(rep.subclasses == std::vector<int>{0, 1, 2, 3});
  CHECK(rep.counts == std::vector<int>{2, 2, 2, 2});
  CHECK(rep.accuracy == 1.0);
  CHECK(rep.mean_margin_error == 0.0);
  for (double e : rep.margin_error) CHECK(e == 0.0);
  for (int z = 0; z < 4; ++z)
    for (int k = 0; k < 3; ++k)
      CHECK(rep.weights[static_cast<std::size_t>(z)][static_cast<std::size_t>(k)] ==
            atoms[static_cast<std::size_t>(z)][static_cast<std::size_t>(k)]);

  SUBCASE("eval subclass missing from the train split") {
    std::vector<int> bad_sub = {0, 1, 2, 9};
    CHECK(throws_prefix(
        [&] { coarse_to_fine(train_pts, train_cls, train_sub, eval_pts, eval_cls, bad_sub, 1.2); },
        "insufficient-data:"));
  }
  SUBCASE("a subclass cannot span two coarse classes") {
    std::vector<int> bad_cls = train_cls;
    bad_cls[0] = 1;
    CHECK(throws_prefix(
        [&] { coarse_to_fine(train_pts, bad_cls, train_sub, eval_pts, eval_cls, eval_sub, 1.2); },
        "label:"));
  }
  SUBCASE("gamma and shape guards") {
    CHECK(throws_prefix(
        [&] { coarse_to_fine(train_pts, train_cls, train_sub, eval_pts, eval_cls, eval_sub, 1.0); },
        "domain:"));
    std::vector<int> short_cls = {0};
    CHECK(throws_prefix(
        [&] { coarse_to_fine(train_pts, short_cls, train_sub, eval_pts, eval_cls, eval_sub, 1.2); },
        "shape:"));
  }
}
