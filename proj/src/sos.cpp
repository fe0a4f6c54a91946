#include "nnv/sos.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <sstream>

namespace nnv {

namespace {

std::string monomial_string(const Monomial& m) {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (i) os << " ";
    os << m[i];
  }
  os << "]";
  return os.str();
}

Monomial monomial_product(const Monomial& a, const Monomial& b) {
  Monomial m(a.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = a[i] + b[i];
  return m;
}

}  // namespace

SosConstraint compile_sos(ConicProgram& program, const ParamPolynomial& p,
                          const std::vector<Monomial>& basis,
                          const std::string& name) {
  if (basis.empty()) {
    throw Error(ErrorKind::kInvalidInput, "empty SOS basis");
  }
  for (const auto& b : basis) {
    if (static_cast<int>(b.size()) != p.n_vars()) {
      throw Error(ErrorKind::kDimensionMismatch,
                  "basis monomial variable count mismatch");
    }
  }

  const int k = static_cast<int>(basis.size());
  SosConstraint out;
  out.name = name;
  out.basis = basis;
  out.polynomial = p;
  out.gram_block = program.add_psd_block(name + ".gram", k);

  // Gram contribution to every product monomial: coeff(m) =
  // sum_{i<=j, b_i+b_j=m} (i==j ? Q_ii : 2 Q_ij).
  std::map<Monomial, LinExpr, GradedLex> gram_coeff;
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      const Monomial m = monomial_product(basis[i], basis[j]);
      gram_coeff[m].add(program.var(out.gram_block, i, j), i == j ? 1.0 : 2.0);
    }
  }

  out.first_equality = static_cast<int>(program.equalities().size());
  // Support monomials the Gram cannot reach: a parameter-dependent
  // coefficient is forced to zero by an equality (this is how odd top-degree
  // terms of multiplier products cancel); a fixed nonzero coefficient makes
  // the constraint structurally impossible.
  for (const auto& [m, coeff] : p.terms()) {
    if (gram_coeff.find(m) != gram_coeff.end()) continue;
    if (coeff.is_constant()) {
      if (coeff.constant() != 0.0) {
        throw Error(ErrorKind::kInvalidInput,
                    "SOS basis cannot cover monomial " + monomial_string(m) +
                        " of " + name);
      }
      continue;
    }
    LinExpr expr;
    expr -= coeff;
    program.add_equality(expr, 0.0);
  }

  // One matching equality per reachable product monomial; monomials absent
  // from p are matched against zero.
  for (const auto& [m, gram_expr] : gram_coeff) {
    LinExpr expr = gram_expr;
    auto it = p.terms().find(m);
    if (it != p.terms().end()) expr -= it->second;
    program.add_equality(expr, 0.0);
  }
  out.num_equalities =
      static_cast<int>(program.equalities().size()) - out.first_equality;
  return out;
}

std::vector<Monomial> sos_basis(const ParamPolynomial& p) {
  std::set<int> used;
  for (const auto& [m, e] : p.terms()) {
    for (int i = 0; i < p.n_vars(); ++i) {
      if (m[i] > 0) used.insert(i);
    }
  }
  const int half = (p.degree() + 1) / 2;
  std::vector<int> vars(used.begin(), used.end());
  return monomial_basis(p.n_vars(), vars, half);
}

SosReport verify_sos_certificate(const ConicProgram& program,
                                 const SosConstraint& constraint,
                                 const Eigen::VectorXd& y, int samples,
                                 std::mt19937_64& rng, double radius) {
  SosReport report;
  const Eigen::MatrixXd q = program.block_value(constraint.gram_block, y);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(q);
  report.min_gram_eigenvalue = eig.eigenvalues().minCoeff();

  // Reconstruct m(w)^T Q m(w) and compare with p coefficientwise.
  const int k = static_cast<int>(constraint.basis.size());
  Polynomial reconstruction(constraint.polynomial.n_vars());
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < k; ++j) {
      reconstruction.add_term(
          monomial_product(constraint.basis[i], constraint.basis[j]), q(i, j));
    }
  }
  Polynomial target = constraint.polynomial.eval_params(y);
  Polynomial diff = reconstruction;
  diff -= target;
  for (const auto& [m, c] : diff.terms()) {
    report.max_match_residual = std::max(report.max_match_residual,
                                         std::abs(c));
  }

  std::uniform_real_distribution<double> unif(-radius, radius);
  double min_value = std::numeric_limits<double>::infinity();
  Eigen::VectorXd x(target.n_vars());
  for (int s = 0; s < samples; ++s) {
    for (int i = 0; i < x.size(); ++i) x(i) = unif(rng);
    min_value = std::min(min_value, target.eval(x));
  }
  report.min_sampled_value = samples > 0 ? min_value : 0.0;

  report.accepted = report.min_gram_eigenvalue >= -1e-7 &&
                    report.max_match_residual <= 1e-6;
  return report;
}

}  // namespace nnv
