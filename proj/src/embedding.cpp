#include "spreadlab/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>

namespace spreadlab {

namespace {

constexpr double kUnitNormTol = 1e-9;

std::invalid_argument bad(const std::string& msg) { return std::invalid_argument(msg); }

}  // namespace

void validate(const EmbeddingConfig& config) {
  if (config.dim < 2) throw bad("invalid-dimension: dim must be >= 2");
  if (config.num_classes < 1) throw bad("label: num_classes must be >= 1");
  const std::size_t n = config.points.size();
  if (n == 0) throw bad("label: configuration has no points");
  if (config.class_labels.size() != n)
    throw bad("label: class_labels size does not match point count");
  if (!config.subclass_labels.empty() && config.subclass_labels.size() != n)
    throw bad("label: subclass_labels size does not match point count");

  std::vector<int> class_count(static_cast<std::size_t>(config.num_classes), 0);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec& p = config.points[i];
    if (static_cast<int>(p.size()) != config.dim)
      throw bad("invalid-dimension: point dimension mismatch");
    if (std::fabs(norm(p) - 1.0) > kUnitNormTol)
      throw bad("label: point " + std::to_string(i) + " is not unit norm within 1e-9");
    int y = config.class_labels[i];
    if (y < 0 || y >= config.num_classes)
      throw bad("label: class label out of range at point " + std::to_string(i));
    ++class_count[static_cast<std::size_t>(y)];
  }
  for (int y = 0; y < config.num_classes; ++y)
    if (class_count[static_cast<std::size_t>(y)] == 0)
      throw bad("label: class " + std::to_string(y) + " is empty");

  if (config.has_subclasses()) {
    // each subclass id must appear under exactly one class
    std::map<int, int> owner;
    for (std::size_t i = 0; i < n; ++i) {
      int z = config.subclass_labels[i];
      if (z < 0) throw bad("label: negative subclass id at point " + std::to_string(i));
      auto [it, inserted] = owner.emplace(z, config.class_labels[i]);
      if (!inserted && it->second != config.class_labels[i])
        throw bad("label: subclass " + std::to_string(z) + " spans more than one class");
    }
  }
}

bool is_class_balanced(const EmbeddingConfig& config) {
  std::vector<int> count(static_cast<std::size_t>(config.num_classes), 0);
  for (int y : config.class_labels) ++count[static_cast<std::size_t>(y)];
  for (int c : count)
    if (c != count[0]) return false;
  return true;
}

void require_class_balanced(const EmbeddingConfig& config) {
  if (!is_class_balanced(config))
    throw bad("balance: configuration is not class-balanced");
}

std::vector<std::vector<int>> indices_by_class(const EmbeddingConfig& config) {
  std::vector<std::vector<int>> groups(static_cast<std::size_t>(config.num_classes));
  for (int i = 0; i < config.size(); ++i)
    groups[static_cast<std::size_t>(config.class_labels[static_cast<std::size_t>(i)])].push_back(i);
  return groups;
}

std::vector<int> subclass_ids(const EmbeddingConfig& config) {
  if (!config.has_subclasses()) throw bad("label: configuration has no subclass labels");
  std::vector<int> ids(config.subclass_labels);
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  return ids;
}

std::vector<int> indices_of_subclass(const EmbeddingConfig& config, int subclass) {
  if (!config.has_subclasses()) throw bad("label: configuration has no subclass labels");
  std::vector<int> idx;
  for (int i = 0; i < config.size(); ++i)
    if (config.subclass_labels[static_cast<std::size_t>(i)] == subclass) idx.push_back(i);
  return idx;
}

namespace {

// K unit vertices in R^{K-1}: v_0 = e_0, the rest recurse on a scaled
// (K-1)-vertex simplex occupying the remaining coordinates.
std::vector<Vec> simplex_canonical(int K) {
  if (K == 2) return {{1.0}, {-1.0}};
  std::vector<Vec> sub = simplex_canonical(K - 1);
  double c = -1.0 / (K - 1);
  double s = std::sqrt(1.0 - c * c);
  std::vector<Vec> verts;
  verts.emplace_back(Vec(static_cast<std::size_t>(K - 1), 0.0));
  verts[0][0] = 1.0;
  for (int i = 0; i < K - 1; ++i) {
    Vec v(static_cast<std::size_t>(K - 1), 0.0);
    v[0] = c;
    for (int j = 0; j < K - 2; ++j)
      v[static_cast<std::size_t>(j + 1)] = s * sub[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    verts.push_back(std::move(v));
  }
  return verts;
}

}  // namespace

SimplexFrame regular_simplex(int K, int d) {
  if (K < 2) throw bad("invalid-dimension: simplex needs K >= 2");
  if (d < 2) throw bad("invalid-dimension: simplex needs d >= 2");
  if (K > d + 1) throw bad("invalid-dimension: regular K-simplex needs K <= d+1");

  std::vector<Vec> verts = simplex_canonical(K);

  SimplexFrame frame;
  frame.dim = d;
  frame.pairwise_dot = -1.0 / (K - 1);
  for (auto& v : verts) {
    Vec p(static_cast<std::size_t>(d), 0.0);
    for (std::size_t j = 0; j < v.size(); ++j) p[j] = v[j];
    frame.vertices.push_back(std::move(p));
  }

  // K=3 with room to spare spans coordinates {0,2}, keeping coordinate 1
  // free as the rotation plane used by the two-atom family.
  if (K == 3 && d >= 3)
    for (auto& v : frame.vertices) std::swap(v[1], v[2]);

  return frame;
}

Vec rotate_in_plane(const Vec& v, int i, int j, double theta) {
  int d = static_cast<int>(v.size());
  if (i == j) throw bad("invalid-plane: rotation plane needs two distinct axes");
  if (i < 0 || j < 0 || i >= d || j >= d)
    throw bad("invalid-plane: axis index out of range");
  if (std::fabs(norm(v) - 1.0) > kUnitNormTol)
    throw bad("label: rotate_in_plane expects a unit vector");
  Vec r = v;
  double c = std::cos(theta);
  double s = std::sin(theta);
  r[static_cast<std::size_t>(i)] = c * v[static_cast<std::size_t>(i)] - s * v[static_cast<std::size_t>(j)];
  r[static_cast<std::size_t>(j)] = s * v[static_cast<std::size_t>(i)] + c * v[static_cast<std::size_t>(j)];
  return r;
}

EmbeddingConfig make_collapsed(int K, int d, int n_y) {
  if (n_y < 1) throw bad("label: n_y must be >= 1");
  SimplexFrame frame = regular_simplex(K, d);
  EmbeddingConfig config;
  config.dim = d;
  config.num_classes = K;
  for (int y = 0; y < K; ++y)
    for (int r = 0; r < n_y; ++r) {
      config.points.push_back(frame.vertices[static_cast<std::size_t>(y)]);
      config.class_labels.push_back(y);
    }
  validate(config);
  return config;
}

EmbeddingConfig make_mu_theta(int K, int d, double theta, int n_per_atom) {
  if (K != 2 && K != 3) throw bad("invalid-dimension: two-atom family is defined for K in {2,3}");
  if (K == 2 && d < 2) throw bad("invalid-dimension: K=2 needs d >= 2");
  if (K == 3 && d < 3) throw bad("invalid-dimension: K=3 needs d >= 3");
  if (!(theta > 0.0 && theta <= 1.5707963267948966))
    throw bad("domain: theta must lie in (0, pi/2]");
  if (n_per_atom < 1) throw bad("label: n_per_atom must be >= 1");

  SimplexFrame frame = regular_simplex(K, d);
  EmbeddingConfig config;
  config.dim = d;
  config.num_classes = K;

  auto push_atom = [&](const Vec& p, int y, int z, int copies) {
    for (int r = 0; r < copies; ++r) {
      config.points.push_back(p);
      config.class_labels.push_back(y);
      config.subclass_labels.push_back(z);
    }
  };

  for (int y = 0; y < K; ++y) {
    const Vec& v = frame.vertices[static_cast<std::size_t>(y)];
    if (K == 2) {
      push_atom(rotate_in_plane(v, 0, 1, theta), y, 2 * y, n_per_atom);
      push_atom(rotate_in_plane(v, 0, 1, -theta), y, 2 * y + 1, n_per_atom);
    } else {
      push_atom(v, y, 2 * y, n_per_atom);
      push_atom(rotate_in_plane(v, 0, 1, theta), y, 2 * y + 1, n_per_atom);
    }
  }
  validate(config);
  return config;
}

EmbeddingConfig make_uniform(int K, int d, int n_y, std::uint64_t seed) {
  if (K < 1) throw bad("label: K must be >= 1");
  if (d < 2) throw bad("invalid-dimension: dim must be >= 2");
  if (n_y < 1) throw bad("label: n_y must be >= 1");
  Rng rng(seed);
  EmbeddingConfig config;
  config.dim = d;
  config.num_classes = K;
  for (int y = 0; y < K; ++y)
    for (int r = 0; r < n_y; ++r) {
      config.points.push_back(rng.unit_vector(d));
      config.class_labels.push_back(y);
    }
  validate(config);
  return config;
}

void write_config(std::ostream& out, const EmbeddingConfig& config) {
  out << config.dim << ' ' << config.num_classes << ' ' << config.size() << '\n';
  for (int i = 0; i < config.size(); ++i) {
    auto iu = static_cast<std::size_t>(i);
    int z = config.has_subclasses() ? config.subclass_labels[iu] : -1;
    out << config.class_labels[iu] << ' ' << z;
    for (double x : config.points[iu]) out << ' ' << g17(x);
    out << '\n';
  }
}

EmbeddingConfig read_config(std::istream& in) {
  EmbeddingConfig config;
  int n = 0;
  if (!(in >> config.dim >> config.num_classes >> n))
    throw std::runtime_error("parse: bad configuration header (want 'd K n')");
  bool any_subclass = false;
  for (int i = 0; i < n; ++i) {
    int y = 0, z = 0;
    if (!(in >> y >> z)) throw std::runtime_error("parse: bad point labels");
    Vec p(static_cast<std::size_t>(config.dim));
    for (auto& x : p)
      if (!(in >> x)) throw std::runtime_error("parse: bad point coordinates");
    config.points.push_back(std::move(p));
    config.class_labels.push_back(y);
    config.subclass_labels.push_back(z);
    if (z >= 0) any_subclass = true;
  }
  if (!any_subclass) config.subclass_labels.clear();
  validate(config);
  return config;
}

std::string config_to_text(const EmbeddingConfig& config) {
  std::ostringstream os;
  write_config(os, config);
  return os.str();
}

EmbeddingConfig config_from_text(const std::string& text) {
  std::istringstream is(text);
  return read_config(is);
}

}  // namespace spreadlab
