#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnv/common.hpp"

namespace nnv {

/// Polytope in centered halfspace form:
///   { x : n_i^T (x - center) + offset_i >= 0  for every facet i }.
/// The defining sets of the verification problems use offset 1 on every
/// facet; reachable-set approximations carry optimized offsets gamma.
class Polytope {
 public:
  Polytope(Eigen::MatrixXd normals, Eigen::VectorXd center,
           Eigen::VectorXd offsets);

  /// All offsets equal to 1.
  Polytope(Eigen::MatrixXd normals, Eigen::VectorXd center);

  /// Axis-aligned box |x_j - center_j| <= halfwidth_j, offsets 1.
  static Polytope box(const Eigen::VectorXd& center,
                      const Eigen::VectorXd& halfwidth);

  Eigen::Index dim() const { return center_.size(); }
  Eigen::Index facets() const { return normals_.rows(); }
  const Eigen::MatrixXd& normals() const { return normals_; }
  const Eigen::VectorXd& center() const { return center_; }
  const Eigen::VectorXd& offsets() const { return offsets_; }

  /// Same normals and center, new offsets.
  Polytope with_offsets(const Eigen::VectorXd& offsets) const;

  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;

  /// Signed margin min_i n_i^T (x - center) + offset_i; >= 0 iff x inside.
  double margin(const Eigen::VectorXd& x) const;

  /// Vertex enumeration by facet intersection; intended for the desk-scale
  /// oracles (dim <= 4 or so). Throws if the polytope is unbounded or empty.
  std::vector<Eigen::VectorXd> vertices() const;

  /// max_{x in P} dir^T x, computed over the vertex set.
  double support(const Eigen::VectorXd& dir) const;

  /// Uniform samples via rejection from the vertex bounding box.
  std::vector<Eigen::VectorXd> sample(Eigen::Index count,
                                      std::mt19937_64& rng) const;

 private:
  Eigen::MatrixXd normals_;  // facets x dim
  Eigen::VectorXd center_;
  Eigen::VectorXd offsets_;
};

/// Checks inner \subseteq outer by comparing the support of inner against
/// every facet of outer (vertex enumeration on inner).
bool contains_polytope(const Polytope& outer, const Polytope& inner,
                       double tol = 1e-9);

/// Sets file: {"input_set":{"normals":[[..]],"center":[..]}, "safe_set":{...},
/// "invariant_set":{...}} — any subset of the three keys may be present.
struct ProblemSets {
  std::optional<Polytope> input_set;
  std::optional<Polytope> safe_set;
  std::optional<Polytope> invariant_set;
};

ProblemSets load_sets(const std::string& path);

}  // namespace nnv
