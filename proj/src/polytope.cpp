#include "nnv/polytope.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "json_util.hpp"

namespace nnv {
namespace {

/// Visits every k-subset of {0, ..., n-1}.
void for_each_subset(Eigen::Index n, Eigen::Index k,
                     const std::function<void(const std::vector<Eigen::Index>&)>& fn) {
  if (k < 0 || k > n) return;
  std::vector<Eigen::Index> idx(k);
  std::iota(idx.begin(), idx.end(), 0);
  if (k == 0) {
    fn(idx);
    return;
  }
  while (true) {
    fn(idx);
    Eigen::Index i = k - 1;
    while (i >= 0 && idx[i] == n - k + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (Eigen::Index j = i + 1; j < k; ++j) idx[j] = idx[j - 1] + 1;
  }
}

}  // namespace

Polytope::Polytope(Eigen::MatrixXd normals, Eigen::VectorXd center,
                   Eigen::VectorXd offsets)
    : normals_(std::move(normals)),
      center_(std::move(center)),
      offsets_(std::move(offsets)) {
  if (normals_.cols() != center_.size()) {
    throw Error(ErrorKind::kDimensionMismatch, "normals width != center length");
  }
  if (offsets_.size() != normals_.rows()) {
    throw Error(ErrorKind::kDimensionMismatch, "one offset per facet required");
  }
  if (normals_.rows() == 0) {
    throw Error(ErrorKind::kInvalidInput, "polytope needs at least one facet");
  }
}

Polytope::Polytope(Eigen::MatrixXd normals, Eigen::VectorXd center)
    : Polytope(std::move(normals), std::move(center),
               Eigen::VectorXd::Ones(normals.rows())) {}

Polytope Polytope::box(const Eigen::VectorXd& center,
                       const Eigen::VectorXd& halfwidth) {
  const Eigen::Index n = center.size();
  if (halfwidth.size() != n || (halfwidth.array() <= 0.0).any()) {
    throw Error(ErrorKind::kInvalidInput, "box halfwidths must be positive");
  }
  Eigen::MatrixXd normals = Eigen::MatrixXd::Zero(2 * n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    normals(2 * i, i) = 1.0 / halfwidth[i];
    normals(2 * i + 1, i) = -1.0 / halfwidth[i];
  }
  return Polytope(std::move(normals), center);
}

Polytope Polytope::with_offsets(const Eigen::VectorXd& offsets) const {
  return Polytope(normals_, center_, offsets);
}

bool Polytope::contains(const Eigen::VectorXd& x, double tol) const {
  return margin(x) >= -tol;
}

double Polytope::margin(const Eigen::VectorXd& x) const {
  if (x.size() != dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "point dimension mismatch");
  }
  return (normals_ * (x - center_) + offsets_).minCoeff();
}

std::vector<Eigen::VectorXd> Polytope::vertices() const {
  const Eigen::Index n = dim();
  const Eigen::Index p = facets();

  // Unbounded iff the recession cone {d : N d >= 0} has a nonzero ray. Any
  // extreme ray is the null direction of n-1 linearly independent rows.
  auto ray_escapes = [&](const Eigen::VectorXd& d) {
    return d.norm() > 1e-9 && (normals_ * (d / d.norm())).minCoeff() >= -1e-12;
  };
  if (n == 1) {
    Eigen::VectorXd d(1);
    d << 1.0;
    if (ray_escapes(d) || ray_escapes(Eigen::VectorXd(-d))) {
      throw Error(ErrorKind::kInvalidInput, "polytope is unbounded");
    }
  } else {
    bool unbounded = false;
    for_each_subset(p, n - 1, [&](const std::vector<Eigen::Index>& rows) {
      if (unbounded) return;
      Eigen::MatrixXd sub(n - 1, n);
      for (Eigen::Index r = 0; r < n - 1; ++r) sub.row(r) = normals_.row(rows[r]);
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(sub, Eigen::ComputeFullV);
      if (svd.rank() != n - 1) return;
      const Eigen::VectorXd d = svd.matrixV().col(n - 1);
      if (ray_escapes(d) || ray_escapes(Eigen::VectorXd(-d))) unbounded = true;
    });
    if (unbounded) {
      throw Error(ErrorKind::kInvalidInput, "polytope is unbounded");
    }
  }

  std::vector<Eigen::VectorXd> verts;
  for_each_subset(p, n, [&](const std::vector<Eigen::Index>& rows) {
    Eigen::MatrixXd a(n, n);
    Eigen::VectorXd rhs(n);
    for (Eigen::Index r = 0; r < n; ++r) {
      a.row(r) = normals_.row(rows[r]);
      rhs[r] = normals_.row(rows[r]).dot(center_) - offsets_[rows[r]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (!lu.isInvertible()) return;
    const Eigen::VectorXd x = lu.solve(rhs);
    if (!contains(x, 1e-7 * (1.0 + x.norm()))) return;
    for (const auto& v : verts) {
      if ((v - x).norm() <= 1e-9 * (1.0 + x.norm())) return;
    }
    verts.push_back(x);
  });
  if (verts.empty()) {
    throw Error(ErrorKind::kInvalidInput, "polytope has no vertices (empty?)");
  }
  return verts;
}

double Polytope::support(const Eigen::VectorXd& dir) const {
  const auto verts = vertices();
  double best = -std::numeric_limits<double>::infinity();
  for (const auto& v : verts) best = std::max(best, dir.dot(v));
  return best;
}

std::vector<Eigen::VectorXd> Polytope::sample(Eigen::Index count,
                                              std::mt19937_64& rng) const {
  const auto verts = vertices();
  Eigen::VectorXd lo = verts.front(), hi = verts.front();
  for (const auto& v : verts) {
    lo = lo.cwiseMin(v);
    hi = hi.cwiseMax(v);
  }
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<Eigen::VectorXd> points;
  points.reserve(count);
  const Eigen::Index max_attempts = 10000 * count + 10000;
  Eigen::VectorXd x(dim());
  for (Eigen::Index attempt = 0;
       attempt < max_attempts && static_cast<Eigen::Index>(points.size()) < count;
       ++attempt) {
    for (Eigen::Index i = 0; i < dim(); ++i) {
      x[i] = lo[i] + unit(rng) * (hi[i] - lo[i]);
    }
    if (contains(x, 0.0)) points.push_back(x);
  }
  if (static_cast<Eigen::Index>(points.size()) < count) {
    throw Error(ErrorKind::kNumerical,
                "rejection sampling failed; polytope too thin for its box");
  }
  return points;
}

bool contains_polytope(const Polytope& outer, const Polytope& inner, double tol) {
  if (outer.dim() != inner.dim()) {
    throw Error(ErrorKind::kDimensionMismatch, "polytope dimensions differ");
  }
  for (Eigen::Index i = 0; i < outer.facets(); ++i) {
    const Eigen::VectorXd n = outer.normals().row(i).transpose();
    // Need n^T (x - c_o) + gamma_i >= 0 on inner, i.e.
    // max_{x in inner} -n^T x <= gamma_i - n^T c_o.
    const double worst = inner.support(-n);
    if (worst > outer.offsets()[i] - n.dot(outer.center()) + tol) return false;
  }
  return true;
}

namespace {

Polytope polytope_from_json(const detail::json& j) {
  Eigen::MatrixXd normals = detail::matrix_from_json(j.at("normals"));
  Eigen::VectorXd center = detail::vector_from_json(j.at("center"));
  if (j.contains("offsets")) {
    return Polytope(std::move(normals), std::move(center),
                    detail::vector_from_json(j["offsets"]));
  }
  return Polytope(std::move(normals), std::move(center));
}

}  // namespace

ProblemSets load_sets(const std::string& path) {
  const auto j = detail::load_json_file(path);
  ProblemSets sets;
  if (j.contains("input_set")) sets.input_set = polytope_from_json(j["input_set"]);
  if (j.contains("safe_set")) sets.safe_set = polytope_from_json(j["safe_set"]);
  if (j.contains("invariant_set")) {
    sets.invariant_set = polytope_from_json(j["invariant_set"]);
  }
  return sets;
}

}  // namespace nnv
