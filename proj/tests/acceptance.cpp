// Acceptance gate: one criterion per invocation, one PASS/FAIL line on
// stdout. Every tolerance is pinned here; a failing criterion exits nonzero.
//
// Usage: acceptance --criterion N [--cli PATH]
// The CLI path is needed only by criterion 11 (byte-identical re-runs).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "spreadlab/closed_form.hpp"
#include "spreadlab/embedding.hpp"
#include "spreadlab/losses.hpp"
#include "spreadlab/metrics.hpp"
#include "spreadlab/optimize.hpp"
#include "spreadlab/runio.hpp"
#include "spreadlab/toy.hpp"
#include "spreadlab/vecmath.hpp"

using namespace spreadlab;

namespace {

namespace fs = std::filesystem;

constexpr double kPi = 3.14159265358979323846;

struct Failure {
  std::string detail;
};

void require(bool ok, const std::string& detail) {
  if (!ok) throw Failure{detail};
}

std::string num(double v, int digits = 6) {
  std::ostringstream out;
  out.precision(digits);
  out << v;
  return out.str();
}

double median5(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  return v[2];
}

/// Pairs up each class block (j, j+1), (j+2, j+3), ... so every point is an
/// anchor or an augmentation.
AugmentationMap class_pairs(const EmbeddingConfig& cfg) {
  AugmentationMap map;
  std::vector<std::vector<int>> by_class(static_cast<std::size_t>(cfg.num_classes));
  for (int i = 0; i < cfg.size(); ++i)
    by_class[static_cast<std::size_t>(cfg.class_labels[static_cast<std::size_t>(i)])].push_back(i);
  for (const auto& cls : by_class)
    for (std::size_t j = 0; j + 1 < cls.size(); j += 2) map.pairs.emplace_back(cls[j], cls[j + 1]);
  return map;
}

EmbeddingConfig labeled_config(const std::vector<Vec>& points, const toy::ToyDataset& data) {
  EmbeddingConfig c;
  c.dim = static_cast<int>(points.front().size());
  c.num_classes = data.spec.num_classes;
  c.points = points;
  c.class_labels = data.class_labels;
  c.subclass_labels = data.subclass_labels;
  return c;
}

// ------------------------------------------------------------- criterion 1

std::string crit_collapsed_identity() {
  double worst = 0.0;
  for (double alpha : {0.0, 0.5, 0.7, 1.0}) {
    for (double tau : {0.25, 0.5, 1.0}) {
      LossWeights w{alpha, tau};
      double g2 = std::fabs(asymptotic_empirical(make_collapsed(2, 3, 4), w) -
                            (-2.0 * (1.0 - alpha) / tau));
      double g3 = std::fabs(asymptotic_empirical(make_collapsed(3, 3, 4), w) -
                            (-1.5 * (1.0 - alpha) / tau));
      worst = std::max({worst, g2, g3});
    }
  }
  require(worst <= 1e-9, "collapsed identity gap " + num(worst, 3) + " exceeds 1e-9");
  return "K=2 and K=3 collapsed identities hold, worst gap " + num(worst, 3);
}

// ------------------------------------------------------------- criterion 2

std::string crit_mu_theta_grid() {
  double worst2 = 0.0;
  double worst3 = 0.0;
  for (int ti = 0; ti < 20; ++ti) {
    double theta = (kPi / 2.0) * (ti + 1) / 20.0;
    for (double alpha : {0.0, 0.25, 0.5, 0.75, 1.0}) {
      for (double tau : {0.25, 0.5, 1.0}) {
        LossWeights w{alpha, tau};
        worst2 = std::max(worst2, std::fabs(loss_mu_theta(theta, w) -
                                            asymptotic_empirical(make_mu_theta(2, 3, theta, 4), w)));
        worst3 = std::max(worst3, std::fabs(k3_loss_mu_theta(theta, w) -
                                            asymptotic_empirical(make_mu_theta(3, 3, theta, 4), w)));
      }
    }
  }
  require(worst2 <= 1e-9, "K=2 closed form vs empirical gap " + num(worst2, 3));
  require(worst3 <= 1e-9, "K=3 closed form vs empirical gap " + num(worst3, 3));
  return "20x5x3 grid, worst gaps K=2 " + num(worst2, 3) + ", K=3 " + num(worst3, 3);
}

// ------------------------------------------------------------- criterion 3

std::string crit_theta_star() {
  double worst_diff = 0.0;
  for (double alpha : {0.68, 0.70, 0.72, 0.74}) {
    for (double tau : {0.25, 0.5}) {
      LossWeights w{alpha, tau};
      double best_t = 0.0;
      double best_v = loss_mu_theta(0.0, w);
      for (double t = 1e-4; t <= 1.5707; t += 1e-4) {
        double v = loss_mu_theta(t, w);
        if (v < best_v) {
          best_v = v;
          best_t = t;
        }
      }
      double ts = theta_star(w);
      double diff = std::fabs(best_t - ts);
      worst_diff = std::max(worst_diff, diff);
      require(diff <= 2e-3, "grid argmin " + num(best_t) + " vs theta_star " + num(ts) +
                                " differ by " + num(diff, 3) + " at alpha=" + num(alpha) +
                                " tau=" + num(tau));
      double lm = loss_mu_theta(ts, w);
      require(lm <= loss_collapsed(w, 2),
              "mu_theta loss above collapsed at alpha=" + num(alpha) + " tau=" + num(tau));
      for (int d : {2, 3})
        require(lm <= loss_uniform(w, d), "mu_theta loss above uniform (d=" + std::to_string(d) +
                                              ") at alpha=" + num(alpha) + " tau=" + num(tau));
    }
  }
  return "argmin agrees with theta_star (worst " + num(worst_diff, 3) +
         " rad) and beats collapsed and uniform on the window grid";
}

// ------------------------------------------------------------- criterion 4

std::string crit_wiener() {
  Rng rng(2024);
  const int kSamples = 1000000;
  double worst_rel = 0.0;
  for (int d : {2, 3, 8, 32}) {
    KahanSum sums[3];
    for (int i = 0; i < kSamples; ++i) {
      Vec u = rng.unit_vector(d);
      Vec v = rng.unit_vector(d);
      double dist2 = unit_dist2(u, v);
      sums[0].add(std::exp(-dist2 / 0.5));   // tau 0.25
      sums[1].add(std::exp(-dist2 / 1.0));   // tau 0.5
      sums[2].add(std::exp(-dist2 / 2.0));   // tau 1
    }
    const double taus[3] = {0.25, 0.5, 1.0};
    for (int t = 0; t < 3; ++t) {
      double mc = sums[t].value() / kSamples;
      double quad = wiener_constant(d, taus[t]);
      double rel = std::fabs(quad - mc) / quad;
      worst_rel = std::max(worst_rel, rel);
      require(rel <= 0.01, "quadrature vs Monte Carlo rel error " + num(rel, 3) +
                               " at d=" + std::to_string(d) + " tau=" + num(taus[t]));
    }
  }
  double min_c = 1e300;
  for (double tau : {0.1, 0.25, 0.5, 1.0, 2.0})
    for (int d = 2; d <= 128; ++d) min_c = std::min(min_c, c_tau_d(tau, d));
  require(min_c > 2.0 / 3.0, "window edge c dips to " + num(min_c, 8) + ", not above 2/3");
  return "quadrature within " + num(worst_rel, 3) + " of 1e6-sample Monte Carlo; min c " +
         num(min_c, 8) + " > 2/3";
}

// ------------------------------------------------------------- criterion 5

std::string crit_gradient() {
  Rng dir_rng(99);
  LossWeights w{0.6, 0.5};
  const double h = 1e-5;
  double worst_rel = 0.0;
  int cfg_i = 0;
  for (int K : {2, 3}) {
    for (int d : {2, 3, 8}) {
      for (int rep = 0; rep < 4 && cfg_i < 20; ++rep, ++cfg_i) {
        EmbeddingConfig cfg = make_uniform(K, d, 4, 1000 + static_cast<std::uint64_t>(cfg_i));
        auto grad = asymptotic_gradient(cfg, w);
        for (int trial = 0; trial < 5; ++trial) {
          // random tangent field; the directional derivative is grad . field
          std::vector<Vec> field;
          double directional = 0.0;
          for (int i = 0; i < cfg.size(); ++i) {
            Vec t(static_cast<std::size_t>(d));
            for (auto& c : t) c = dir_rng.normal();
            double r = dot(t, cfg.points[static_cast<std::size_t>(i)]);
            for (int c = 0; c < d; ++c)
              t[static_cast<std::size_t>(c)] -=
                  r * cfg.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            field.push_back(t);
            directional += dot(grad[static_cast<std::size_t>(i)], t);
          }
          EmbeddingConfig hi = cfg;
          EmbeddingConfig lo = cfg;
          for (int i = 0; i < cfg.size(); ++i)
            for (int c = 0; c < d; ++c) {
              hi.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] +=
                  h * field[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
              lo.points[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] -=
                  h * field[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
            }
          double fd = (asymptotic_empirical(hi, w) - asymptotic_empirical(lo, w)) / (2.0 * h);
          double rel = std::fabs(fd - directional) / std::max(1.0, std::fabs(directional));
          worst_rel = std::max(worst_rel, rel);
          require(rel <= 1e-5, "gradient vs central differences rel error " + num(rel, 3) +
                                   " at K=" + std::to_string(K) + " d=" + std::to_string(d));
        }
      }
    }
  }
  return std::to_string(cfg_i) + " random configurations, worst directional rel error " +
         num(worst_rel, 3);
}

// ------------------------------------------------------------- criterion 6

std::string crit_optimizer_regimes() {
  auto run = [](double alpha) {
    OptProblem p;
    p.weights = LossWeights{alpha, 0.5};
    SphereOptResult res = optimize_config(p);
    return class_spread(res.best_config).mean;
  };
  double low = run(0.5);
  double mid = run(0.7);
  double high = run(0.9);
  require(low < 1e-2, "alpha=0.5 spread " + num(low) + " not below 1e-2");
  require(std::fabs(mid - 0.224) <= 0.15 * 0.224,
          "alpha=0.7 spread " + num(mid) + " not within 15% of 0.224");
  require(high > 0.5, "alpha=0.9 spread " + num(high) + " not above 0.5");

  OptProblem tmpl;
  tmpl.weights.tau = 0.5;
  std::vector<double> alphas{0.5, 0.6, 0.67, 0.69, 0.71, 0.73, 0.75, 0.8, 0.9};
  auto cells = alpha_sweep(tmpl, alphas, false);
  double first_alpha = -1.0;
  for (const auto& cell : cells) {
    require(!cell.failed, "sweep cell alpha=" + num(cell.alpha) + " failed: " + cell.error);
    if (first_alpha < 0.0 && cell.spread > 0.05) first_alpha = cell.alpha;
  }
  require(first_alpha >= 0.67 && first_alpha <= 0.71,
          "first nonzero spread at alpha=" + num(first_alpha) + ", outside [0.67, 0.71]");
  return "spreads " + num(low, 3) + " / " + num(mid, 4) + " / " + num(high, 4) +
         "; sweep spread first exceeds 0.05 at alpha=" + num(first_alpha);
}

// ------------------------------------------------------------- criterion 7

std::string crit_permutation() {
  LossWeights w{0.7, 0.5};
  double worst_spread = 0.0;
  double worst_asym = 0.0;
  for (int c = 0; c < 10; ++c) {
    int K = c % 2 == 0 ? 2 : 3;
    EmbeddingConfig cfg = make_uniform(K, 3, 4, 100 + static_cast<std::uint64_t>(c));
    PermutationGap gap =
        permutation_gap(cfg, class_pairs(cfg), w, 100, 500 + static_cast<std::uint64_t>(c));
    worst_spread = std::max(worst_spread, gap.spread_gap);
    worst_asym = std::max(worst_asym, gap.asymptotic_gap);
  }
  require(worst_spread <= 1e-10, "class-fixing spread-loss gap " + num(worst_spread, 3));
  require(worst_asym <= 1e-10, "class-fixing asymptotic-loss gap " + num(worst_asym, 3));

  EmbeddingConfig cfg = make_mu_theta(2, 2, 0.3, 4);
  AugmentationMap map = class_pairs(cfg);
  EmbeddingConfig swapped = cfg;
  std::swap(swapped.points[0], swapped.points[8]);
  std::swap(swapped.points[1], swapped.points[9]);
  double ds = std::fabs(spread_batch(cfg, map, w) - spread_batch(swapped, map, w));
  double da = std::fabs(asymptotic_empirical(cfg, w) - asymptotic_empirical(swapped, w));
  require(ds > 1e-3, "cross-class swap moved the batch loss by only " + num(ds, 3));
  require(da > 1e-3, "cross-class swap moved the asymptotic loss by only " + num(da, 3));
  return "1000 class-fixing permutations invariant (worst " +
         num(std::max(worst_spread, worst_asym), 3) + "); cross-class swap shifts losses by " +
         num(ds, 3) + " / " + num(da, 3);
}

// ------------------------------------------------------------- criterion 8

struct MarginCase {
  std::vector<Vec> train_pts, eval_pts;
  std::vector<int> train_cls, train_sub, eval_cls, eval_sub;
};

MarginCase split_config(const EmbeddingConfig& cfg) {
  MarginCase mc;
  for (int i = 0; i < cfg.size(); ++i) {
    auto idx = static_cast<std::size_t>(i);
    if (i % 2 == 0) {
      mc.train_pts.push_back(cfg.points[idx]);
      mc.train_cls.push_back(cfg.class_labels[idx]);
      mc.train_sub.push_back(cfg.subclass_labels[idx]);
    } else {
      mc.eval_pts.push_back(cfg.points[idx]);
      mc.eval_cls.push_back(cfg.class_labels[idx]);
      mc.eval_sub.push_back(cfg.subclass_labels[idx]);
    }
  }
  return mc;
}

/// Re-derives the margin errors from scratch: mean weights from the train
/// split, then for each eval point the logit gap against every rival subclass
/// of the same class. Mirrors the library's arithmetic exactly (plain
/// ascending-order sums for the means, difference-of-dots for the gap) so the
/// comparison can demand bitwise equality.
struct BruteMargins {
  std::vector<double> errors;
  double mean = 0.0;
};

BruteMargins brute_margin_errors(const MarginCase& mc, const TransferReport& rep, double gamma) {
  std::map<int, Vec> weights;
  std::map<int, int> counts;
  std::map<int, int> cls_of;
  for (std::size_t i = 0; i < mc.train_pts.size(); ++i) {
    int z = mc.train_sub[i];
    cls_of[z] = mc.train_cls[i];
    if (!weights.count(z)) weights[z] = Vec(mc.train_pts[i].size(), 0.0);
    for (std::size_t c = 0; c < mc.train_pts[i].size(); ++c) weights[z][c] += mc.train_pts[i][c];
    counts[z] += 1;
  }
  for (auto& [z, wv] : weights)
    for (auto& c : wv) c /= static_cast<double>(counts[z]);

  BruteMargins out;
  KahanSum total_fails;
  int total_points = 0;
  for (std::size_t zi = 0; zi < rep.subclasses.size(); ++zi) {
    int z = rep.subclasses[zi];
    int fails = 0;
    int total = 0;
    for (std::size_t i = 0; i < mc.eval_pts.size(); ++i) {
      if (mc.eval_sub[i] != z) continue;
      ++total;
      bool ok = true;
      for (const auto& [r, wv] : weights) {
        if (r == z || cls_of.at(r) != cls_of.at(z)) continue;
        double gap = dot(mc.eval_pts[i], weights.at(z)) - dot(mc.eval_pts[i], wv);
        if (gap < std::log(gamma)) ok = false;
      }
      if (!ok) ++fails;
    }
    out.errors.push_back(total == 0 ? 0.0 : static_cast<double>(fails) / total);
    total_fails.add(static_cast<double>(fails));
    total_points += total;
  }
  out.mean = total_points > 0 ? total_fails.value() / total_points : 0.0;
  return out;
}

std::string crit_margin_extremes() {
  // collapsed: every class on one point, two nominal subclasses each, in
  // blocks of two so the parity split sees every subclass on both sides
  EmbeddingConfig collapsed;
  collapsed.dim = 3;
  collapsed.num_classes = 2;
  for (int y = 0; y < 2; ++y) {
    Vec atom(3, 0.0);
    atom[static_cast<std::size_t>(y)] = 1.0;
    for (int i = 0; i < 8; ++i) {
      collapsed.points.push_back(atom);
      collapsed.class_labels.push_back(y);
      collapsed.subclass_labels.push_back(2 * y + (i / 2) % 2);
    }
  }
  MarginCase mc = split_config(collapsed);
  TransferReport rep = coarse_to_fine(mc.train_pts, mc.train_cls, mc.train_sub, mc.eval_pts,
                                      mc.eval_cls, mc.eval_sub, 1.1);
  for (double e : rep.margin_error)
    require(e == 1.0, "collapsed margin error " + num(e) + " is not exactly 1 at gamma=1.1");
  BruteMargins brute = brute_margin_errors(mc, rep, 1.1);
  require(brute.errors == rep.margin_error && brute.mean == rep.mean_margin_error,
          "brute-force errors disagree on the collapsed case");

  // atom-separated: logit gaps are positive; any log gamma below them gives 0
  EmbeddingConfig atoms = make_mu_theta(2, 3, 0.55, 6);
  MarginCase ma = split_config(atoms);
  TransferReport probe = coarse_to_fine(ma.train_pts, ma.train_cls, ma.train_sub, ma.eval_pts,
                                        ma.eval_cls, ma.eval_sub, 1.000001);
  double min_gap = 1e300;
  for (std::size_t i = 0; i < ma.eval_pts.size(); ++i) {
    int z = ma.eval_sub[i];
    int rival = z % 2 == 0 ? z + 1 : z - 1;
    std::size_t zi = 0;
    std::size_t ri = 0;
    for (std::size_t k = 0; k < probe.subclasses.size(); ++k) {
      if (probe.subclasses[k] == z) zi = k;
      if (probe.subclasses[k] == rival) ri = k;
    }
    min_gap = std::min(min_gap, dot(ma.eval_pts[i], probe.weights[zi]) -
                                    dot(ma.eval_pts[i], probe.weights[ri]));
  }
  require(min_gap > 0.0, "atom-separated logit gaps are not positive");
  double gamma = std::exp(0.5 * min_gap);
  TransferReport sep = coarse_to_fine(ma.train_pts, ma.train_cls, ma.train_sub, ma.eval_pts,
                                      ma.eval_cls, ma.eval_sub, gamma);
  for (double e : sep.margin_error)
    require(e == 0.0, "atom-separated margin error " + num(e) + " is not exactly 0");
  BruteMargins bsep = brute_margin_errors(ma, sep, gamma);
  require(bsep.errors == sep.margin_error && bsep.mean == sep.mean_margin_error,
          "brute-force errors disagree on the separated case");

  // a jittered configuration with mixed errors must also match exactly
  EmbeddingConfig jitter = make_mu_theta(2, 3, 0.35, 6);
  Rng rng(31);
  for (auto& p : jitter.points) p = rotate_in_plane(p, 0, 2, 0.15 * rng.normal());
  MarginCase mj = split_config(jitter);
  TransferReport mixed = coarse_to_fine(mj.train_pts, mj.train_cls, mj.train_sub, mj.eval_pts,
                                        mj.eval_cls, mj.eval_sub, 1.3);
  BruteMargins bmix = brute_margin_errors(mj, mixed, 1.3);
  require(bmix.errors == mixed.margin_error && bmix.mean == mixed.mean_margin_error,
          "brute-force errors disagree on the jittered case");
  return "collapsed error 1 at gamma=1.1, separated error 0 at gamma=" + num(gamma, 4) +
         ", brute force matches on all three cases";
}

// ------------------------------------------------------------- criterion 9

struct ToyRun {
  toy::ToyDataset data;
  toy::TrainedEncoder sup, spr, spr0;
  toy::ClassAutoencoders cae;
  toy::GenericAutoencoder gae;
};

toy::TrainedEncoder train_mode(const toy::ToyDataset& data, toy::TrainMode mode, double alpha,
                               int epochs, double epsilon, std::uint64_t seed) {
  toy::TrainOptions opt;
  opt.mode = mode;
  opt.weights = LossWeights{alpha, 0.5};
  opt.epochs = epochs;
  opt.lr = 0.05;
  opt.epsilon = epsilon;
  opt.seed = seed;
  return toy::train_encoder(data, opt);
}

std::string crit_toy_transfer() {
  std::vector<double> gaps, ratio_sup, ratio_spr;
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    toy::ToyDataset data = toy::gen_subclass_data(toy::standard_spec(seed));
    toy::TrainedEncoder sup = train_mode(data, toy::TrainMode::supcon, 0.0, 100, 0.15, seed);
    toy::TrainedEncoder spr = train_mode(data, toy::TrainMode::spread, 0.7, 80, 0.15, seed);
    toy::AeOptions aeo;
    aeo.epochs = 300;
    aeo.seed = seed;
    toy::ClassAutoencoders cae = toy::train_class_autoencoder(data, aeo);

    auto sup_emb = toy::encode_all(sup.params, data.inputs);
    auto spr_emb = toy::encode_all(spr.params, data.inputs);
    std::vector<Vec> comp;
    for (int i = 0; i < data.size(); ++i)
      comp.push_back(toy::composite_embedding(spr.params, cae, data.inputs[static_cast<std::size_t>(i)],
                                              data.class_labels[static_cast<std::size_t>(i)]));

    gaps.push_back(toy::transfer_eval(comp, data, 1.1).accuracy -
                   toy::transfer_eval(sup_emb, data, 1.1).accuracy);
    ratio_sup.push_back(transfer_ratio(labeled_config(sup_emb, data)).mean);
    ratio_spr.push_back(transfer_ratio(labeled_config(spr_emb, data)).mean);
  }
  double gap = median5(gaps);
  double rs = median5(ratio_sup);
  double rp = median5(ratio_spr);
  require(gap >= 0.10, "median transfer-accuracy gap " + num(gap) + " below 10 points");
  require(rp < rs, "spread ratio " + num(rp) + " not below supcon ratio " + num(rs));
  return "median accuracy gap " + num(gap, 3) + " (>= 0.10); sigma/spread ratio " + num(rp, 3) +
         " (spread) < " + num(rs, 3) + " (supcon)";
}

// ------------------------------------------------------------ criterion 10

std::string crit_ablations() {
  std::vector<double> f1_aug, f1_none, acc_cae, acc_gae;
  for (std::uint64_t seed = 100; seed < 105; ++seed) {
    toy::ToyDataset data = toy::gen_subclass_data(toy::standard_spec(seed));
    toy::TrainedEncoder spr = train_mode(data, toy::TrainMode::spread, 0.7, 80, 0.15, seed);
    toy::TrainedEncoder spr0 = train_mode(data, toy::TrainMode::spread, 0.7, 80, 0.0, seed);
    toy::AeOptions aeo;
    aeo.epochs = 300;
    aeo.seed = seed;
    toy::ClassAutoencoders cae = toy::train_class_autoencoder(data, aeo);
    toy::GenericAutoencoder gae = toy::train_generic_autoencoder(data, aeo);

    auto spr_emb = toy::encode_all(spr.params, data.inputs);
    auto spr0_emb = toy::encode_all(spr0.params, data.inputs);
    f1_aug.push_back(
        subclass_recovery(spr_emb, data.class_labels, data.subclass_labels, 2, seed).overall);
    f1_none.push_back(
        subclass_recovery(spr0_emb, data.class_labels, data.subclass_labels, 2, seed).overall);

    std::vector<Vec> comp_cae, comp_gae;
    for (int i = 0; i < data.size(); ++i) {
      auto idx = static_cast<std::size_t>(i);
      comp_cae.push_back(
          toy::composite_embedding(spr.params, cae, data.inputs[idx], data.class_labels[idx]));
      comp_gae.push_back(toy::composite_embedding(spr.params, gae.ae, data.inputs[idx]));
    }
    acc_cae.push_back(toy::transfer_eval(comp_cae, data, 1.1).accuracy);
    acc_gae.push_back(toy::transfer_eval(comp_gae, data, 1.1).accuracy);
  }
  double fa = median5(f1_aug);
  double fn = median5(f1_none);
  double ac = median5(acc_cae);
  double ag = median5(acc_gae);
  require(fn < fa, "median recovery F1 without augmentation " + num(fn) + " not below " + num(fa));
  require(ag <= ac, "generic-autoencoder accuracy " + num(ag) + " above class-conditional " + num(ac));
  return "median F1 " + num(fa, 3) + " (eps 0.15) > " + num(fn, 3) + " (eps 0); accuracy " +
         num(ag, 3) + " (generic) <= " + num(ac, 3) + " (class-conditional)";
}

// ------------------------------------------------------------ criterion 11

int run_command(const std::string& cli, const std::string& args, const fs::path& out_dir) {
  std::string cmd = "\"" + cli + "\" " + args + " --serial --out \"" + out_dir.string() +
                    "\" > /dev/null 2>&1";
  return std::system(cmd.c_str());
}

std::string crit_reproducibility(const std::string& cli) {
  require(!cli.empty(), "no --cli path given");
  fs::path root = fs::temp_directory_path() / "spreadlab_acceptance_c11";
  fs::remove_all(root);
  fs::create_directories(root);

  const std::vector<std::pair<std::string, std::string>> runs = {
      {"closed-forms", "closed-forms --alpha 0.5,0.68,0.7,0.9 --tau 0.25,0.5 --d 2,3,8"},
      {"sweep-alpha", "sweep-alpha --alpha 0.5,0.7,0.9 --tau 0.5 --restarts 3 --max-iters 1500 --seed 0"},
      {"perm-test", "perm-test --configs 5 --trials 50 --seed 0"},
      {"optimize", "optimize --alpha 0.7 --tau 0.5 --restarts 3 --max-iters 1500 --seed 0"},
      {"toy-train", "toy-train --mode spread --epochs 5 --n 400 --ae-epochs 40 --seed 100"},
  };

  std::size_t files_compared = 0;
  for (const auto& [name, args] : runs) {
    fs::path a = root / (name + "_a");
    fs::path b = root / (name + "_b");
    require(run_command(cli, args, a) == 0, name + " (first run) exited nonzero");
    require(run_command(cli, args, b) == 0, name + " (second run) exited nonzero");

    std::vector<std::string> names_a, names_b;
    for (const auto& entry : fs::directory_iterator(a)) names_a.push_back(entry.path().filename());
    for (const auto& entry : fs::directory_iterator(b)) names_b.push_back(entry.path().filename());
    std::sort(names_a.begin(), names_a.end());
    std::sort(names_b.begin(), names_b.end());
    require(!names_a.empty(), name + " wrote no files");
    require(names_a == names_b, name + " re-run produced a different file set");
    for (const std::string& f : names_a) {
      require(read_text_file(a / f) == read_text_file(b / f),
              name + " re-run differs in " + f);
      ++files_compared;
    }
  }
  fs::remove_all(root);
  return "5 subcommands re-run under --serial, " + std::to_string(files_compared) +
         " files byte-identical";
}

}  // namespace

int main(int argc, char** argv) {
  int criterion = 0;
  std::string cli;
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      criterion = std::atoi(argv[++i]);
    } else if (arg == "--cli" && i + 1 < argc) {
      cli = argv[++i];
    } else {
      std::fprintf(stderr, "usage: acceptance --criterion N [--cli PATH]\n");
      return 2;
    }
  }

  const std::map<int, std::function<std::string()>> criteria = {
      {1, crit_collapsed_identity},
      {2, crit_mu_theta_grid},
      {3, crit_theta_star},
      {4, crit_wiener},
      {5, crit_gradient},
      {6, crit_optimizer_regimes},
      {7, crit_permutation},
      {8, crit_margin_extremes},
      {9, crit_toy_transfer},
      {10, crit_ablations},
      {11, [&cli] { return crit_reproducibility(cli); }},
  };
  auto it = criteria.find(criterion);
  if (it == criteria.end()) {
    std::fprintf(stderr, "unknown criterion %d (valid: 1..11)\n", criterion);
    return 2;
  }
  try {
    std::string detail = it->second();
    std::printf("criterion %d PASS: %s\n", criterion, detail.c_str());
    return 0;
  } catch (const Failure& f) {
    std::printf("criterion %d FAIL: %s\n", criterion, f.detail.c_str());
    return 1;
  } catch (const std::exception& e) {
    std::printf("criterion %d FAIL: unexpected error: %s\n", criterion, e.what());
    return 1;
  }
}
