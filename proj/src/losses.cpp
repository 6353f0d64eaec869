#include "spreadlab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <stdexcept>
#include <string>

namespace spreadlab {

namespace {

std::invalid_argument bad(const std::string& msg) { return std::invalid_argument(msg); }

double kernel_exponent(const Vec& a, const Vec& b, double tau) {
  return -unit_dist2(a, b) / (2.0 * tau);
}

// Supervised contrastive loss over an explicit batch subset, with gradient
// accumulation into full-config slots when grad != nullptr.
double supcon_over(const EmbeddingConfig& config, const std::vector<int>& batch, double tau,
                   std::vector<Vec>* grad) {
  if (!(tau > 0.0)) throw bad("domain: tau must be positive");
  const auto& pts = config.points;
  const std::size_t nb = batch.size();

  // per-anchor positives and negatives within the batch
  std::vector<std::vector<int>> positives(nb), negatives(nb);
  for (std::size_t a = 0; a < nb; ++a) {
    int i = batch[a];
    int yi = config.class_labels[static_cast<std::size_t>(i)];
    for (std::size_t b = 0; b < nb; ++b) {
      if (a == b) continue;
      int j = batch[b];
      if (config.class_labels[static_cast<std::size_t>(j)] == yi)
        positives[a].push_back(j);
      else
        negatives[a].push_back(j);
    }
    if (positives[a].empty())
      throw bad("no-positive: class " + std::to_string(yi) + " has a single batch member");
    if (negatives[a].empty()) throw bad("no-negative: batch contains a single class");
  }

  KahanSum loss;
  std::vector<double> terms;
  for (std::size_t a = 0; a < nb; ++a) {
    int i = batch[a];
    const Vec& ui = pts[static_cast<std::size_t>(i)];
    const double inv_count = 1.0 / (static_cast<double>(nb) * positives[a].size());
    // negatives' exponents are shared across this anchor's positives
    std::vector<double> tneg(negatives[a].size());
    for (std::size_t m = 0; m < negatives[a].size(); ++m)
      tneg[m] = dot(ui, pts[static_cast<std::size_t>(negatives[a][m])]) / tau;

    for (int p : positives[a]) {
      double tp = dot(ui, pts[static_cast<std::size_t>(p)]) / tau;
      terms.clear();
      terms.push_back(tp);
      terms.insert(terms.end(), tneg.begin(), tneg.end());
      double lse = logsumexp(terms);
      loss.add(inv_count * (lse - tp));

      if (grad) {
        auto add = [&](int row, const Vec& dir, double coeff) {
          Vec& g = (*grad)[static_cast<std::size_t>(row)];
          for (int c = 0; c < config.dim; ++c) g[static_cast<std::size_t>(c)] += coeff * dir[static_cast<std::size_t>(c)];
        };
        double qp = std::exp(tp - lse);
        double cp = inv_count * (qp - 1.0) / tau;
        add(i, pts[static_cast<std::size_t>(p)], cp);
        add(p, ui, cp);
        for (std::size_t m = 0; m < negatives[a].size(); ++m) {
          int jm = negatives[a][m];
          double cm = inv_count * std::exp(tneg[m] - lse) / tau;
          add(i, pts[static_cast<std::size_t>(jm)], cm);
          add(jm, ui, cm);
        }
      }
    }
  }
  return loss.value();
}

// Class-conditional InfoNCE over the anchor set, gradient optional.
double cnce_over(const EmbeddingConfig& config, const std::vector<int>& anchors,
                 const AugmentationMap& map, double tau, std::vector<Vec>* grad) {
  if (!(tau > 0.0)) throw bad("domain: tau must be positive");
  const auto& pts = config.points;

  std::vector<int> aug_of(config.points.size(), -1);
  for (auto [i, a] : map.pairs) aug_of[static_cast<std::size_t>(i)] = a;

  KahanSum loss;
  std::vector<double> terms;
  std::vector<int> pos;
  const double inv_n = 1.0 / static_cast<double>(anchors.size());
  for (int i : anchors) {
    int a = aug_of[static_cast<std::size_t>(i)];
    if (a < 0)
      throw bad("incomplete-map: anchor " + std::to_string(i) + " has no augmentation");
    int yi = config.class_labels[static_cast<std::size_t>(i)];
    const Vec& ui = pts[static_cast<std::size_t>(i)];

    pos.clear();
    for (int j : anchors)
      if (j != i && config.class_labels[static_cast<std::size_t>(j)] == yi) pos.push_back(j);
    if (pos.empty())
      throw bad("no-positive: anchor " + std::to_string(i) + " has no same-class fellow anchor");

    terms.clear();
    for (int j : pos) terms.push_back(dot(ui, pts[static_cast<std::size_t>(j)]) / tau);
    double lse = logsumexp(terms);
    double ta = dot(ui, pts[static_cast<std::size_t>(a)]) / tau;
    loss.add(inv_n * (lse - ta));

    if (grad) {
      auto add = [&](int row, const Vec& dir, double coeff) {
        Vec& g = (*grad)[static_cast<std::size_t>(row)];
        for (int c = 0; c < config.dim; ++c) g[static_cast<std::size_t>(c)] += coeff * dir[static_cast<std::size_t>(c)];
      };
      add(i, pts[static_cast<std::size_t>(a)], -inv_n / tau);
      add(a, ui, -inv_n / tau);
      for (std::size_t m = 0; m < pos.size(); ++m) {
        double q = std::exp(terms[m] - lse);
        add(i, pts[static_cast<std::size_t>(pos[m])], inv_n * q / tau);
        add(pos[m], ui, inv_n * q / tau);
      }
    }
  }
  return loss.value();
}

std::vector<Vec> zero_grad(const EmbeddingConfig& config) {
  return std::vector<Vec>(config.points.size(), Vec(static_cast<std::size_t>(config.dim), 0.0));
}

std::vector<int> all_indices(const EmbeddingConfig& config) {
  std::vector<int> idx(config.points.size());
  for (int i = 0; i < config.size(); ++i) idx[static_cast<std::size_t>(i)] = i;
  return idx;
}

}  // namespace

void validate(const AugmentationMap& map, const EmbeddingConfig& config) {
  std::set<int> anchors, augs;
  for (auto [i, a] : map.pairs) {
    if (i < 0 || i >= config.size() || a < 0 || a >= config.size())
      throw bad("label: augmentation pair index out of range");
    if (i == a) throw bad("label: a point cannot be its own augmentation");
    if (!anchors.insert(i).second)
      throw bad("label: anchor " + std::to_string(i) + " listed twice");
    if (!augs.insert(a).second)
      throw bad("label: augmentation index " + std::to_string(a) + " reused");
    if (config.class_labels[static_cast<std::size_t>(i)] != config.class_labels[static_cast<std::size_t>(a)])
      throw bad("label: augmentation class differs from its anchor");
  }
  for (int i : anchors)
    if (augs.count(i)) throw bad("label: index " + std::to_string(i) + " is both anchor and augmentation");
}

std::vector<int> anchor_indices(const AugmentationMap& map, const EmbeddingConfig& config) {
  std::vector<char> is_aug(config.points.size(), 0);
  for (auto [i, a] : map.pairs) {
    (void)i;
    is_aug[static_cast<std::size_t>(a)] = 1;
  }
  std::vector<int> anchors;
  for (int i = 0; i < config.size(); ++i)
    if (!is_aug[static_cast<std::size_t>(i)]) anchors.push_back(i);
  return anchors;
}

double supcon_batch(const EmbeddingConfig& config, double tau) {
  validate(config);
  return supcon_over(config, all_indices(config), tau, nullptr);
}

std::vector<Vec> supcon_batch_gradient(const EmbeddingConfig& config, double tau) {
  validate(config);
  auto grad = zero_grad(config);
  supcon_over(config, all_indices(config), tau, &grad);
  return grad;
}

double cnce_batch(const EmbeddingConfig& config, const AugmentationMap& map, double tau) {
  validate(config);
  validate(map, config);
  return cnce_over(config, anchor_indices(map, config), map, tau, nullptr);
}

std::vector<Vec> cnce_batch_gradient(const EmbeddingConfig& config, const AugmentationMap& map,
                                     double tau) {
  validate(config);
  validate(map, config);
  auto grad = zero_grad(config);
  cnce_over(config, anchor_indices(map, config), map, tau, &grad);
  return grad;
}

double spread_batch(const EmbeddingConfig& config, const AugmentationMap& map,
                    const LossWeights& w) {
  validate(w);
  validate(config);
  validate(map, config);
  auto anchors = anchor_indices(map, config);
  double sup = supcon_over(config, anchors, w.tau, nullptr);
  double cn = cnce_over(config, anchors, map, w.tau, nullptr);
  return (1.0 - w.alpha) * sup + w.alpha * cn;
}

std::vector<Vec> spread_batch_gradient(const EmbeddingConfig& config, const AugmentationMap& map,
                                       const LossWeights& w) {
  validate(w);
  validate(config);
  validate(map, config);
  auto anchors = anchor_indices(map, config);
  auto gs = zero_grad(config);
  supcon_over(config, anchors, w.tau, &gs);
  auto gc = zero_grad(config);
  cnce_over(config, anchors, map, w.tau, &gc);
  for (std::size_t i = 0; i < gs.size(); ++i)
    for (std::size_t c = 0; c < gs[i].size(); ++c)
      gs[i][c] = (1.0 - w.alpha) * gs[i][c] + w.alpha * gc[i][c];
  return gs;
}

double asymptotic_empirical(const EmbeddingConfig& config, const LossWeights& w) {
  validate(w);
  validate(config);
  if (config.num_classes < 2) throw bad("no-negative: estimator needs K >= 2");
  require_class_balanced(config);
  const int n = config.size();
  const int n_y = n / config.num_classes;
  const double tau = w.tau;
  const auto& pts = config.points;
  const auto& cls = config.class_labels;

  KahanSum mean_diff, mean_same;
  std::vector<double> tdiff, tsame;
  for (int i = 0; i < n; ++i) {
    const Vec& ui = pts[static_cast<std::size_t>(i)];
    tdiff.clear();
    tsame.clear();
    for (int j = 0; j < n; ++j) {
      if (j == i) {
        tsame.push_back(0.0);  // self pair: exact zero distance
        continue;
      }
      double t = kernel_exponent(ui, pts[static_cast<std::size_t>(j)], tau);
      if (cls[static_cast<std::size_t>(j)] == cls[static_cast<std::size_t>(i)])
        tsame.push_back(t);
      else
        tdiff.push_back(t);
    }
    mean_diff.add(logsumexp(tdiff) - std::log(static_cast<double>(tdiff.size())));
    mean_same.add(logsumexp(tsame) - std::log(static_cast<double>(n_y)));
  }

  KahanSum align;  // unordered same-class pairs, doubled afterwards
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (cls[static_cast<std::size_t>(i)] == cls[static_cast<std::size_t>(j)])
        align.add(unit_dist2(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)]));

  double a = w.alpha;
  double inv_n = 1.0 / static_cast<double>(n);
  double align_term = 2.0 * align.value() / (static_cast<double>(config.num_classes) * n_y * n_y * 2.0 * tau);
  return (1.0 - a) * mean_diff.value() * inv_n + a * mean_same.value() * inv_n +
         (1.0 - a) * align_term;
}

std::vector<Vec> asymptotic_gradient(const EmbeddingConfig& config, const LossWeights& w) {
  validate(w);
  validate(config);
  if (config.num_classes < 2) throw bad("no-negative: estimator needs K >= 2");
  require_class_balanced(config);
  const int n = config.size();
  const int n_y = n / config.num_classes;
  const double tau = w.tau;
  const auto& pts = config.points;
  const auto& cls = config.class_labels;

  // first pass: per-row log-sum-exps of the cross-class and same-class terms
  std::vector<double> lse_diff(static_cast<std::size_t>(n)), lse_same(static_cast<std::size_t>(n));
  {
    std::vector<double> tdiff, tsame;
    for (int i = 0; i < n; ++i) {
      tdiff.clear();
      tsame.clear();
      for (int j = 0; j < n; ++j) {
        if (j == i) {
          tsame.push_back(0.0);
          continue;
        }
        double t = kernel_exponent(pts[static_cast<std::size_t>(i)], pts[static_cast<std::size_t>(j)], tau);
        if (cls[static_cast<std::size_t>(j)] == cls[static_cast<std::size_t>(i)])
          tsame.push_back(t);
        else
          tdiff.push_back(t);
      }
      lse_diff[static_cast<std::size_t>(i)] = logsumexp(tdiff);
      lse_same[static_cast<std::size_t>(i)] = logsumexp(tsame);
    }
  }

  const double a = w.alpha;
  const double diff_coeff = (1.0 - a) / (static_cast<double>(n) * tau);
  const double same_coeff = a / (static_cast<double>(n) * tau);
  const double align_coeff =
      -2.0 * (1.0 - a) / (static_cast<double>(config.num_classes) * n_y * n_y * tau);

  auto grad = zero_grad(config);
  for (int k = 0; k < n; ++k) {
    Vec& g = grad[static_cast<std::size_t>(k)];
    const Vec& uk = pts[static_cast<std::size_t>(k)];
    for (int j = 0; j < n; ++j) {
      if (j == k) continue;
      double t = kernel_exponent(uk, pts[static_cast<std::size_t>(j)], tau);
      double coeff;
      if (cls[static_cast<std::size_t>(j)] != cls[static_cast<std::size_t>(k)]) {
        coeff = diff_coeff * (std::exp(t - lse_diff[static_cast<std::size_t>(k)]) +
                              std::exp(t - lse_diff[static_cast<std::size_t>(j)]));
      } else {
        coeff = same_coeff * (std::exp(t - lse_same[static_cast<std::size_t>(k)]) +
                              std::exp(t - lse_same[static_cast<std::size_t>(j)])) +
                align_coeff;
      }
      const Vec& uj = pts[static_cast<std::size_t>(j)];
      for (int c = 0; c < config.dim; ++c) g[static_cast<std::size_t>(c)] += coeff * uj[static_cast<std::size_t>(c)];
    }
  }
  return grad;
}

std::vector<Vec> tangent_project(const std::vector<Vec>& grad, const EmbeddingConfig& config) {
  std::vector<Vec> out = grad;
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Vec& u = config.points[i];
    double radial = dot(out[i], u);
    for (std::size_t c = 0; c < out[i].size(); ++c) out[i][c] -= radial * u[c];
  }
  return out;
}

}  // namespace spreadlab
