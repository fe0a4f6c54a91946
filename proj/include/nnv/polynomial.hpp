#pragma once

#include <map>
#include <vector>

#include <Eigen/Dense>

#include "nnv/common.hpp"
#include "nnv/conic.hpp"

namespace nnv {

/// Exponent vector of a monomial; length equals the variable count.
using Monomial = std::vector<int>;

inline int total_degree(const Monomial& m) {
  int d = 0;
  for (int e : m) d += e;
  return d;
}

/// Graded-lexicographic order: lower total degree first, then lex.
struct GradedLex {
  bool operator()(const Monomial& a, const Monomial& b) const {
    const int da = total_degree(a), db = total_degree(b);
    if (da != db) return da < db;
    return a < b;
  }
};

/// Multivariate polynomial with double coefficients. Zero coefficients are
/// never stored; term combination is exact (no fuzzy merging).
class Polynomial {
 public:
  explicit Polynomial(int n_vars) : n_vars_(n_vars) {}
  static Polynomial constant(int n_vars, double c);
  static Polynomial variable(int n_vars, int index, double coeff = 1.0);
  /// Affine polynomial c0 + lin^T x.
  static Polynomial affine(const Eigen::VectorXd& lin, double c0);

  int n_vars() const { return n_vars_; }
  const std::map<Monomial, double, GradedLex>& terms() const { return terms_; }
  int degree() const;
  double coeff(const Monomial& m) const;
  void add_term(const Monomial& m, double c);

  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  Polynomial& operator*=(double s);
  Polynomial operator*(const Polynomial& other) const;

  double eval(const Eigen::VectorXd& x) const;

  /// Replaces variable i by subst[i](y): an affine map x = A y + c into a new
  /// variable space of dimension A.cols().
  Polynomial substitute_affine(const Eigen::MatrixXd& a,
                               const Eigen::VectorXd& c) const;

 private:
  int n_vars_;
  std::map<Monomial, double, GradedLex> terms_;
};

inline Polynomial operator+(Polynomial a, const Polynomial& b) { return a += b; }
inline Polynomial operator-(Polynomial a, const Polynomial& b) { return a -= b; }
inline Polynomial operator*(double s, Polynomial a) { return a *= s; }

/// Polynomial whose coefficients are affine expressions in the decision
/// variables of a ConicProgram.
class ParamPolynomial {
 public:
  explicit ParamPolynomial(int n_vars) : n_vars_(n_vars) {}
  /// Promotion of a constant-coefficient polynomial.
  static ParamPolynomial from(const Polynomial& p);

  int n_vars() const { return n_vars_; }
  const std::map<Monomial, LinExpr, GradedLex>& terms() const { return terms_; }
  int degree() const;

  void add_term(const Monomial& m, const LinExpr& e);
  ParamPolynomial& operator+=(const ParamPolynomial& other);
  ParamPolynomial& operator-=(const ParamPolynomial& other);
  ParamPolynomial& operator+=(const Polynomial& other);
  ParamPolynomial& operator-=(const Polynomial& other);

  /// Adds coeff_expr * p, where the expression multiplies every coefficient.
  void add_scaled(const LinExpr& coeff_expr, const Polynomial& p);

  /// Plain polynomial obtained by fixing the decision variables to y.
  Polynomial eval_params(const Eigen::VectorXd& y) const;

 private:
  int n_vars_;
  std::map<Monomial, LinExpr, GradedLex> terms_;
};

/// All monomials of total degree <= degree over the given variable subset of
/// an n_vars-dimensional space, in graded-lex order.
std::vector<Monomial> monomial_basis(int n_vars, const std::vector<int>& vars,
                                     int degree);

/// Basis over all n_vars variables.
std::vector<Monomial> monomial_basis(int n_vars, int degree);

}  // namespace nnv
