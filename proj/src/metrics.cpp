#include "spreadlab/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace spreadlab {

namespace {

Vec centroid(const std::vector<Vec>& points, const std::vector<int>& members, int dim) {
  Vec c(static_cast<std::size_t>(dim), 0.0);
  for (int i : members)
    for (int k = 0; k < dim; ++k) c[static_cast<std::size_t>(k)] += points[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
  for (auto& x : c) x /= static_cast<double>(members.size());
  return c;
}

double mean_dist_to(const std::vector<Vec>& points, const std::vector<int>& members, const Vec& c,
                    bool squared) {
  KahanSum s;
  for (int i : members) {
    double d = euclid_dist(points[static_cast<std::size_t>(i)], c);
    s.add(squared ? d * d : d);
  }
  return s.value() / static_cast<double>(members.size());
}

}  // namespace

SpreadReport class_spread(const EmbeddingConfig& config) {
  validate(config);
  auto by_class = indices_by_class(config);
  SpreadReport rep;
  KahanSum total;
  for (const auto& members : by_class) {
    Vec c = centroid(config.points, members, config.dim);
    double s = mean_dist_to(config.points, members, c, false);
    rep.per_class.push_back(s);
    total.add(s);
  }
  rep.mean = total.value() / static_cast<double>(rep.per_class.size());
  return rep;
}

std::vector<double> subclass_sigma(const EmbeddingConfig& config) {
  validate(config);
  if (!config.has_subclasses()) throw std::invalid_argument("label: subclass labels required");
  std::vector<double> out;
  for (int z : subclass_ids(config)) {
    auto members = indices_of_subclass(config, z);
    Vec c = centroid(config.points, members, config.dim);
    out.push_back(mean_dist_to(config.points, members, c, false));
  }
  return out;
}

std::vector<double> subclass_var(const EmbeddingConfig& config) {
  validate(config);
  if (!config.has_subclasses()) throw std::invalid_argument("label: subclass labels required");
  std::vector<double> out;
  for (int z : subclass_ids(config)) {
    auto members = indices_of_subclass(config, z);
    Vec c = centroid(config.points, members, config.dim);
    out.push_back(mean_dist_to(config.points, members, c, true));
  }
  return out;
}

double delta_separation(const EmbeddingConfig& config, int z, int z_prime) {
  validate(config);
  if (!config.has_subclasses()) throw std::invalid_argument("label: subclass labels required");
  auto mz = indices_of_subclass(config, z);
  auto mzp = indices_of_subclass(config, z_prime);
  int y = config.class_labels[static_cast<std::size_t>(mz[0])];
  int yp = config.class_labels[static_cast<std::size_t>(mzp[0])];
  if (y != yp)
    throw std::invalid_argument("mismatch: subclasses " + std::to_string(z) + " and " +
                                std::to_string(z_prime) + " belong to different classes");
  auto class_members = indices_by_class(config)[static_cast<std::size_t>(y)];
  double n_y = static_cast<double>(class_members.size());
  double pz = static_cast<double>(mz.size()) / n_y;
  double pzp = static_cast<double>(mzp.size()) / n_y;

  Vec cy = centroid(config.points, class_members, config.dim);
  double s_y = mean_dist_to(config.points, class_members, cy, false);
  Vec cz = centroid(config.points, mz, config.dim);
  double sig_z = mean_dist_to(config.points, mz, cz, false);
  Vec czp = centroid(config.points, mzp, config.dim);
  double sig_zp = mean_dist_to(config.points, mzp, czp, false);

  return (s_y - pz * pz * sig_z - pzp * pzp * sig_zp) / (pz * pzp);
}

const Vec& MeanClassifier::weight_for(int label) const {
  auto it = std::lower_bound(labels.begin(), labels.end(), label);
  if (it == labels.end() || *it != label)
    throw std::invalid_argument("insufficient-data: no classifier for label " +
                                std::to_string(label));
  return weights[static_cast<std::size_t>(it - labels.begin())];
}

MeanClassifier mean_classifier(const std::vector<Vec>& points, const std::vector<int>& labels) {
  if (points.size() != labels.size())
    throw std::invalid_argument("shape: points and labels differ in length");
  if (points.empty()) throw std::invalid_argument("insufficient-data: no labeled points");
  std::map<int, std::vector<int>> groups;
  for (std::size_t i = 0; i < labels.size(); ++i) groups[labels[i]].push_back(static_cast<int>(i));
  MeanClassifier mc;
  int dim = static_cast<int>(points[0].size());
  for (const auto& [label, members] : groups) {
    mc.labels.push_back(label);
    mc.weights.push_back(centroid(points, members, dim));
  }
  return mc;
}

double gamma_margin_error(const std::vector<Vec>& points_of_z, const Vec& w_z, const Vec& w_other,
                          double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("domain: gamma must exceed 1");
  if (points_of_z.empty()) throw std::invalid_argument("insufficient-data: no points to score");
  double lg = std::log(gamma);
  Vec diff(w_z.size());
  for (std::size_t k = 0; k < diff.size(); ++k) diff[k] = w_z[k] - w_other[k];
  int failures = 0;
  for (const auto& x : points_of_z)
    if (dot(x, diff) < lg) ++failures;
  return static_cast<double>(failures) / static_cast<double>(points_of_z.size());
}

TransferReport coarse_to_fine(const std::vector<Vec>& train_points,
                              const std::vector<int>& train_classes,
                              const std::vector<int>& train_subclasses,
                              const std::vector<Vec>& eval_points,
                              const std::vector<int>& eval_classes,
                              const std::vector<int>& eval_subclasses, double gamma) {
  if (!(gamma > 1.0)) throw std::invalid_argument("domain: gamma must exceed 1");
  if (train_points.size() != train_classes.size() || train_points.size() != train_subclasses.size())
    throw std::invalid_argument("shape: train split arrays differ in length");
  if (eval_points.size() != eval_classes.size() || eval_points.size() != eval_subclasses.size())
    throw std::invalid_argument("shape: eval split arrays differ in length");

  MeanClassifier mc = mean_classifier(train_points, train_subclasses);

  // subclass -> class map and per-class subclass lists, from the train split
  std::map<int, int> class_of;
  for (std::size_t i = 0; i < train_subclasses.size(); ++i) {
    auto [it, fresh] = class_of.insert({train_subclasses[i], train_classes[i]});
    if (!fresh && it->second != train_classes[i])
      throw std::invalid_argument("label: subclass " + std::to_string(train_subclasses[i]) +
                                  " spans two classes");
  }
  std::map<int, std::vector<int>> class_subclasses;
  for (const auto& [z, y] : class_of) class_subclasses[y].push_back(z);

  TransferReport rep;
  rep.gamma = gamma;
  rep.subclasses = mc.labels;
  rep.weights = mc.weights;
  rep.counts.assign(mc.labels.size(), 0);
  for (int z : train_subclasses) {
    auto it = std::lower_bound(mc.labels.begin(), mc.labels.end(), z);
    ++rep.counts[static_cast<std::size_t>(it - mc.labels.begin())];
  }

  const double lg = std::log(gamma);
  std::vector<int> eval_count(mc.labels.size(), 0);
  std::vector<int> eval_fail(mc.labels.size(), 0);
  int correct = 0;
  for (std::size_t i = 0; i < eval_points.size(); ++i) {
    int z = eval_subclasses[i];
    auto it = std::lower_bound(mc.labels.begin(), mc.labels.end(), z);
    if (it == mc.labels.end() || *it != z)
      throw std::invalid_argument("insufficient-data: eval subclass " + std::to_string(z) +
                                  " absent from the train split");
    std::size_t zi = static_cast<std::size_t>(it - mc.labels.begin());
    auto co = class_of.find(z);
    if (co->second != eval_classes[i])
      throw std::invalid_argument("label: subclass " + std::to_string(z) +
                                  " spans two classes");
    const auto& rivals = class_subclasses[co->second];

    ++eval_count[zi];
    const Vec& x = eval_points[i];
    double own_logit = dot(x, mc.weight_for(z));
    bool margin_ok = true;
    // argmax over the point's class's subclasses; ties go to the lowest id
    // (rivals ascend and only a strictly larger logit replaces the incumbent)
    int arg_best = rivals[0];
    double best_logit = dot(x, mc.weight_for(rivals[0]));
    for (std::size_t r = 0; r < rivals.size(); ++r) {
      int zp = rivals[r];
      double logit = r == 0 ? best_logit : dot(x, mc.weight_for(zp));
      if (zp != z && own_logit - logit < lg) margin_ok = false;
      if (logit > best_logit) {
        best_logit = logit;
        arg_best = zp;
      }
    }
    if (!margin_ok) ++eval_fail[zi];
    if (arg_best == z) ++correct;
  }

  rep.margin_error.assign(mc.labels.size(), 0.0);
  KahanSum weighted;
  int eval_total = 0;
  for (std::size_t zi = 0; zi < mc.labels.size(); ++zi) {
    if (eval_count[zi] > 0)
      rep.margin_error[zi] = static_cast<double>(eval_fail[zi]) / eval_count[zi];
    weighted.add(static_cast<double>(eval_fail[zi]));
    eval_total += eval_count[zi];
  }
  rep.mean_margin_error = eval_total > 0 ? weighted.value() / eval_total : 0.0;
  rep.accuracy =
      eval_total > 0 ? static_cast<double>(correct) / static_cast<double>(eval_total) : 0.0;
  return rep;
}

namespace {

struct KmeansRun {
  std::vector<int> assignment;
  double inertia = 0.0;
};

double dist2(const Vec& a, const Vec& b) {
  double d = euclid_dist(a, b);
  return d * d;
}

KmeansRun kmeans_once(const std::vector<Vec>& pts, int k, Rng& rng) {
  const int n = static_cast<int>(pts.size());
  const int dim = static_cast<int>(pts[0].size());
  std::vector<Vec> centers;
  std::vector<int> chosen;

  // k-means++ seeding; degenerate (zero total weight) falls back to a
  // uniform pick among indices not already chosen.
  chosen.push_back(static_cast<int>(rng.below(static_cast<std::size_t>(n))));
  centers.push_back(pts[static_cast<std::size_t>(chosen[0])]);
  std::vector<double> w(static_cast<std::size_t>(n));
  while (static_cast<int>(centers.size()) < k) {
    double total = 0.0;
    for (int i = 0; i < n; ++i) {
      double best = dist2(pts[static_cast<std::size_t>(i)], centers[0]);
      for (std::size_t c = 1; c < centers.size(); ++c)
        best = std::min(best, dist2(pts[static_cast<std::size_t>(i)], centers[c]));
      w[static_cast<std::size_t>(i)] = best;
      total += best;
    }
    int pick = -1;
    if (total > 0.0) {
      double r = rng.uniform() * total;
      double acc = 0.0;
      for (int i = 0; i < n; ++i) {
        acc += w[static_cast<std::size_t>(i)];
        if (r < acc) {
          pick = i;
          break;
        }
      }
      if (pick < 0) pick = n - 1;
    } else {
      std::vector<int> remaining;
      for (int i = 0; i < n; ++i)
        if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) remaining.push_back(i);
      pick = remaining.empty() ? static_cast<int>(rng.below(static_cast<std::size_t>(n)))
                               : remaining[rng.below(remaining.size())];
    }
    chosen.push_back(pick);
    centers.push_back(pts[static_cast<std::size_t>(pick)]);
  }

  std::vector<int> assign(static_cast<std::size_t>(n), -1);
  std::vector<int> argmins;
  for (int iter = 0; iter < 100; ++iter) {
    bool changed = false;
    for (int i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      argmins.clear();
      for (int c = 0; c < k; ++c) {
        double d = dist2(pts[static_cast<std::size_t>(i)], centers[static_cast<std::size_t>(c)]);
        if (d < best) {
          best = d;
          argmins.assign(1, c);
        } else if (d == best) {
          argmins.push_back(c);
        }
      }
      int cur = assign[static_cast<std::size_t>(i)];
      int next;
      if (cur >= 0 && std::find(argmins.begin(), argmins.end(), cur) != argmins.end()) {
        next = cur;  // sticky ties keep converged states converged
      } else if (argmins.size() == 1) {
        next = argmins[0];
      } else {
        next = argmins[rng.below(argmins.size())];
      }
      if (next != cur) {
        assign[static_cast<std::size_t>(i)] = next;
        changed = true;
      }
    }
    if (!changed) break;

    std::vector<Vec> sums(static_cast<std::size_t>(k), Vec(static_cast<std::size_t>(dim), 0.0));
    std::vector<int> counts(static_cast<std::size_t>(k), 0);
    for (int i = 0; i < n; ++i) {
      int c = assign[static_cast<std::size_t>(i)];
      ++counts[static_cast<std::size_t>(c)];
      for (int t = 0; t < dim; ++t)
        sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] +=
            pts[static_cast<std::size_t>(i)][static_cast<std::size_t>(t)];
    }
    for (int c = 0; c < k; ++c)
      if (counts[static_cast<std::size_t>(c)] > 0) {
        for (int t = 0; t < dim; ++t)
          centers[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] =
              sums[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] /
              counts[static_cast<std::size_t>(c)];
      }  // empty clusters keep their previous center
  }

  KmeansRun run;
  run.assignment = assign;
  KahanSum inertia;
  for (int i = 0; i < n; ++i)
    inertia.add(dist2(pts[static_cast<std::size_t>(i)],
                      centers[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])]));
  run.inertia = inertia.value();
  return run;
}

std::vector<int> kmeans(const std::vector<Vec>& pts, int k, std::uint64_t seed) {
  KmeansRun best;
  best.inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < 10; ++r) {
    Rng rng(seed + static_cast<std::uint64_t>(r));
    KmeansRun run = kmeans_once(pts, k, rng);
    if (run.inertia < best.inertia) best = run;  // ties keep the earlier restart
  }
  return best.assignment;
}

/// Macro F1 of the best cluster-to-subclass permutation.
double matched_f1(const std::vector<int>& clusters, const std::vector<int>& truth, int k) {
  std::vector<std::vector<int>> confusion(static_cast<std::size_t>(k),
                                          std::vector<int>(static_cast<std::size_t>(k), 0));
  for (std::size_t i = 0; i < clusters.size(); ++i)
    ++confusion[static_cast<std::size_t>(clusters[i])][static_cast<std::size_t>(truth[i])];
  std::vector<int> truth_total(static_cast<std::size_t>(k), 0),
      cluster_total(static_cast<std::size_t>(k), 0);
  for (int c = 0; c < k; ++c)
    for (int s = 0; s < k; ++s) {
      truth_total[static_cast<std::size_t>(s)] += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
      cluster_total[static_cast<std::size_t>(c)] += confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
    }

  std::vector<int> perm(static_cast<std::size_t>(k));
  std::iota(perm.begin(), perm.end(), 0);
  double best = 0.0;
  do {
    KahanSum f1_sum;
    for (int s = 0; s < k; ++s) {
      int c = perm[static_cast<std::size_t>(s)];  // cluster c plays subclass s
      int tp = confusion[static_cast<std::size_t>(c)][static_cast<std::size_t>(s)];
      int fp = cluster_total[static_cast<std::size_t>(c)] - tp;
      int fn = truth_total[static_cast<std::size_t>(s)] - tp;
      double denom = static_cast<double>(2 * tp + fp + fn);
      f1_sum.add(denom > 0.0 ? 2.0 * tp / denom : 0.0);
    }
    best = std::max(best, f1_sum.value() / k);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

}  // namespace

RecoveryReport subclass_recovery(const std::vector<Vec>& points,
                                 const std::vector<int>& class_labels,
                                 const std::vector<int>& subclass_labels, int k_per_class,
                                 std::uint64_t seed) {
  if (points.size() != class_labels.size() || points.size() != subclass_labels.size())
    throw std::invalid_argument("shape: points and labels differ in length");
  if (k_per_class < 1) throw std::invalid_argument("domain: k must be at least 1");
  if (k_per_class > 8)
    throw std::invalid_argument("domain: permutation matching supports k <= 8");

  std::map<int, std::vector<int>> by_class;
  for (std::size_t i = 0; i < class_labels.size(); ++i)
    by_class[class_labels[i]].push_back(static_cast<int>(i));

  RecoveryReport rep;
  KahanSum weighted;
  std::size_t total = 0;
  std::uint64_t class_stride = 0;
  for (const auto& [y, members] : by_class) {
    if (static_cast<int>(members.size()) < k_per_class)
      throw std::invalid_argument("domain: class " + std::to_string(y) + " has fewer than k points");

    std::vector<Vec> pts;
    std::vector<int> truth_raw;
    for (int i : members) {
      pts.push_back(points[static_cast<std::size_t>(i)]);
      truth_raw.push_back(subclass_labels[static_cast<std::size_t>(i)]);
    }
    // relabel true subclasses to 0..m-1 (ascending id order)
    std::vector<int> ids = truth_raw;
    std::sort(ids.begin(), ids.end());
    ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
    if (static_cast<int>(ids.size()) > k_per_class)
      throw std::invalid_argument("domain: class " + std::to_string(y) +
                                  " holds more subclasses than k");
    std::vector<int> truth;
    for (int z : truth_raw)
      truth.push_back(static_cast<int>(std::lower_bound(ids.begin(), ids.end(), z) - ids.begin()));

    auto clusters = kmeans(pts, k_per_class, seed + class_stride * 1000003ull);
    double f1 = matched_f1(clusters, truth, k_per_class);
    rep.classes.push_back(y);
    rep.f1_per_class.push_back(f1);
    weighted.add(f1 * static_cast<double>(members.size()));
    total += members.size();
    ++class_stride;
  }
  rep.overall = weighted.value() / static_cast<double>(total);
  return rep;
}

LipschitzEstimate estimate_lipschitz(LipschitzMode mode,
                                     const std::vector<std::pair<double, double>>& pairs,
                                     double cutoff) {
  LipschitzEstimate est;
  est.mode = mode;
  est.cutoff = cutoff;
  for (const auto& [in, out] : pairs) {
    if (!(in > cutoff)) continue;
    est.constant = std::max(est.constant, out / in);
    ++est.pair_count;
  }
  if (est.pair_count == 0)
    throw std::invalid_argument("degenerate-sample: every pair sits below the distance cutoff");
  return est;
}

PermutationGap permutation_gap(const EmbeddingConfig& config, const AugmentationMap& map,
                               const LossWeights& w, int trials, std::uint64_t seed) {
  validate(w);
  validate(config);
  validate(map, config);
  if (trials < 1) throw std::invalid_argument("domain: trials must be at least 1");

  const bool do_spread = !map.pairs.empty();
  const bool do_asym = is_class_balanced(config) && config.num_classes >= 2;

  std::vector<int> aug_of(config.points.size(), -1);
  for (auto [i, a] : map.pairs) aug_of[static_cast<std::size_t>(i)] = a;
  auto anchors = anchor_indices(map, config);
  std::map<int, std::vector<int>> anchors_by_class;
  for (int i : anchors) anchors_by_class[config.class_labels[static_cast<std::size_t>(i)]].push_back(i);

  double base_spread = do_spread ? spread_batch(config, map, w) : 0.0;
  double base_asym = do_asym ? asymptotic_empirical(config, w) : 0.0;

  PermutationGap gap;
  Rng rng(seed);
  for (int t = 0; t < trials; ++t) {
    EmbeddingConfig perm = config;
    for (auto& [y, slots] : anchors_by_class) {
      std::vector<int> source = slots;
      rng.shuffle(source);
      for (std::size_t s = 0; s < slots.size(); ++s) {
        perm.points[static_cast<std::size_t>(slots[s])] =
            config.points[static_cast<std::size_t>(source[s])];
        int dst_aug = aug_of[static_cast<std::size_t>(slots[s])];
        int src_aug = aug_of[static_cast<std::size_t>(source[s])];
        if (dst_aug >= 0 && src_aug >= 0)
          perm.points[static_cast<std::size_t>(dst_aug)] =
              config.points[static_cast<std::size_t>(src_aug)];
      }
    }
    if (do_spread)
      gap.spread_gap = std::max(gap.spread_gap, std::fabs(spread_batch(perm, map, w) - base_spread));
    if (do_asym)
      gap.asymptotic_gap =
          std::max(gap.asymptotic_gap, std::fabs(asymptotic_empirical(perm, w) - base_asym));
  }
  return gap;
}

RatioReport transfer_ratio(const EmbeddingConfig& config, double cutoff) {
  auto spread = class_spread(config);
  auto sigma = subclass_sigma(config);
  auto ids = subclass_ids(config);
  RatioReport rep;
  KahanSum total;
  for (std::size_t zi = 0; zi < ids.size(); ++zi) {
    auto members = indices_of_subclass(config, ids[zi]);
    int y = config.class_labels[static_cast<std::size_t>(members[0])];
    double s = spread.per_class[static_cast<std::size_t>(y)];
    if (!(s > cutoff)) continue;
    rep.subclasses.push_back(ids[zi]);
    rep.ratio.push_back(sigma[zi] / s);
    total.add(sigma[zi] / s);
  }
  if (rep.ratio.empty())
    throw std::invalid_argument("degenerate-sample: every class spread sits below the cutoff");
  rep.mean = total.value() / static_cast<double>(rep.ratio.size());
  return rep;
}

}  // namespace spreadlab
