#pragma once

#include <cstdint>
#include <iosfwd>
#include <vector>

#include "spreadlab/vecmath.hpp"

namespace spreadlab {

/// A finite labeled point configuration on the unit sphere S^{d-1}: the
/// empirical stand-in for a class-labeled probability measure.
///
/// Invariants (see validate()):
///  - every point has Euclidean norm within 1e-9 of 1;
///  - class labels lie in {0..num_classes-1} and every class is non-empty;
///  - when subclass labels are present, each subclass id appears under
///    exactly one class (the subclasses partition the classes).
struct EmbeddingConfig {
  int dim = 0;          // ambient dimension d >= 2
  int num_classes = 0;  // K
  std::vector<Vec> points;
  std::vector<int> class_labels;
  std::vector<int> subclass_labels;  // empty when absent

  bool has_subclasses() const { return !subclass_labels.empty(); }
  int size() const { return static_cast<int>(points.size()); }
};

/// The K vertices of a regular simplex inscribed in S^{d-1}.
/// Invariants: unit vertices, sum zero, pairwise dot c_K = -1/(K-1).
struct SimplexFrame {
  int dim = 0;
  std::vector<Vec> vertices;
  double pairwise_dot = 0.0;
};

/// Throws std::invalid_argument when any EmbeddingConfig invariant fails.
void validate(const EmbeddingConfig& config);

/// True when every class holds the same number of points.
bool is_class_balanced(const EmbeddingConfig& config);

/// Throws a balance error unless every class holds the same number of points.
void require_class_balanced(const EmbeddingConfig& config);

/// Point indices grouped by class label, each group in ascending index order.
std::vector<std::vector<int>> indices_by_class(const EmbeddingConfig& config);

/// Distinct subclass ids in ascending order (requires subclass labels).
std::vector<int> subclass_ids(const EmbeddingConfig& config);

/// Point indices of one subclass id, ascending.
std::vector<int> indices_of_subclass(const EmbeddingConfig& config, int subclass);

/// Regular K-simplex on S^{d-1}. Requires 2 <= K <= d+1.
/// Convention: K=2 is the antipodal pair on axis 0; K=3 with d >= 3 spans
/// coordinates {0,2} (vertices [1,0,0], [-1/2,0,+sqrt(3)/2],
/// [-1/2,0,-sqrt(3)/2]) leaving coordinate 1 free for in-plane rotations;
/// all other K build recursively in the first K-1 coordinates.
SimplexFrame regular_simplex(int K, int d);

/// Rotates v by theta in the (i,j) coordinate plane; all other coordinates
/// are untouched. Requires i != j, both < dim, and ||v|| = 1.
Vec rotate_in_plane(const Vec& v, int i, int j, double theta);

/// All n_y points of class y sit exactly on simplex vertex v_y.
EmbeddingConfig make_collapsed(int K, int d, int n_y);

/// Two-atom-per-class family. K=2: class y holds n_per_atom copies each of
/// R_theta v_y and R_{-theta} v_y, rotated in the (0,1) plane; K=3 (d >= 3):
/// class y holds copies of v_y and R_theta v_y with the rotation acting on
/// coordinates (0,1). Subclass labels record atom membership (id 2y and
/// 2y+1). Requires theta in (0, pi/2].
EmbeddingConfig make_mu_theta(int K, int d, double theta, int n_per_atom);

/// n_y i.i.d. uniform points per class (normalized Gaussians), seeded.
EmbeddingConfig make_uniform(int K, int d, int n_y, std::uint64_t seed);

/// Plain-text serialization: header "d K n", then one line per point
/// "class subclass x_0 ... x_{d-1}" with 17-significant-digit floats and LF
/// endings. A subclass of -1 marks "no subclass label".
void write_config(std::ostream& out, const EmbeddingConfig& config);
EmbeddingConfig read_config(std::istream& in);
std::string config_to_text(const EmbeddingConfig& config);
EmbeddingConfig config_from_text(const std::string& text);

}  // namespace spreadlab
