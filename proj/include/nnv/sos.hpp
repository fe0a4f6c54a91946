#pragma once

#include <random>
#include <string>
#include <vector>

#include "nnv/conic.hpp"
#include "nnv/polynomial.hpp"

namespace nnv {

/// Gram-matrix encoding of the SOS membership p in Sigma[w]. The polynomial
/// identity p == m(w)^T Q m(w) is imposed through exact coefficient-matching
/// equalities added to the owning program; feasibility of (Q >= 0, matching)
/// certifies global nonnegativity of p.
struct SosConstraint {
  std::string name;
  int gram_block = -1;               // PSD block index in the program
  std::vector<Monomial> basis;       // m(w), graded-lex ordered
  ParamPolynomial polynomial{0};     // the matched polynomial
  int first_equality = -1;           // range of matching equalities
  int num_equalities = 0;
};

/// Emits a Gram PSD block plus coefficient-matching equalities for
/// p == m(w)^T Q m(w). Throws if some monomial of p is not a product of two
/// basis monomials (the message names the uncovered monomial).
SosConstraint compile_sos(ConicProgram& program, const ParamPolynomial& p,
                          const std::vector<Monomial>& basis,
                          const std::string& name);

/// Convenience: full monomial basis of degree ceil(deg(p)/2) over the
/// variables actually appearing in p.
std::vector<Monomial> sos_basis(const ParamPolynomial& p);

struct SosReport {
  double min_gram_eigenvalue = 0.0;
  double max_match_residual = 0.0;   // coefficientwise, after fixing params
  double min_sampled_value = 0.0;
  bool accepted = false;
};

/// Post-verification of a solved SOS certificate: recomputes the Gram
/// spectrum, the coefficient-matching residual between p and the Gram
/// reconstruction, and samples p at random points in [-radius, radius]^n.
/// Accepted iff min eig >= -1e-7 and matching residual <= 1e-6.
SosReport verify_sos_certificate(const ConicProgram& program,
                                 const SosConstraint& constraint,
                                 const Eigen::VectorXd& y, int samples,
                                 std::mt19937_64& rng, double radius = 1.0);

}  // namespace nnv
