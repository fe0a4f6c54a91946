#include "nnv/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

namespace nnv {

namespace {

constexpr double kDropTol = 0.0;  // exact term combination; drop exact zeros

void check_vars(int n_vars, const Monomial& m) {
  if (static_cast<int>(m.size()) != n_vars) {
    throw Error(ErrorKind::kDimensionMismatch,
                "monomial length does not match variable count");
  }
  for (int e : m) {
    if (e < 0) {
      throw Error(ErrorKind::kInvalidInput, "negative monomial exponent");
    }
  }
}

}  // namespace

Polynomial Polynomial::constant(int n_vars, double c) {
  Polynomial p(n_vars);
  p.add_term(Monomial(n_vars, 0), c);
  return p;
}

Polynomial Polynomial::variable(int n_vars, int index, double coeff) {
  if (index < 0 || index >= n_vars) {
    throw Error(ErrorKind::kInvalidInput, "variable index out of range");
  }
  Polynomial p(n_vars);
  Monomial m(n_vars, 0);
  m[index] = 1;
  p.add_term(m, coeff);
  return p;
}

Polynomial Polynomial::affine(const Eigen::VectorXd& lin, double c0) {
  const int n = static_cast<int>(lin.size());
  Polynomial p(n);
  p.add_term(Monomial(n, 0), c0);
  for (int i = 0; i < n; ++i) {
    Monomial m(n, 0);
    m[i] = 1;
    p.add_term(m, lin(i));
  }
  return p;
}

int Polynomial::degree() const {
  int d = 0;
  for (const auto& [m, c] : terms_) d = std::max(d, total_degree(m));
  return d;
}

double Polynomial::coeff(const Monomial& m) const {
  check_vars(n_vars_, m);
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

void Polynomial::add_term(const Monomial& m, double c) {
  check_vars(n_vars_, m);
  if (c == 0.0) return;
  auto [it, inserted] = terms_.emplace(m, c);
  if (!inserted) {
    it->second += c;
    if (std::abs(it->second) <= kDropTol) terms_.erase(it);
  }
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, c] : other.terms_) add_term(m, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, c] : other.terms_) add_term(m, -c);
  return *this;
}

Polynomial& Polynomial::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& [m, c] : terms_) c *= s;
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  Polynomial out(n_vars_);
  for (const auto& [ma, ca] : terms_) {
    for (const auto& [mb, cb] : other.terms_) {
      Monomial m(n_vars_);
      for (int i = 0; i < n_vars_; ++i) m[i] = ma[i] + mb[i];
      out.add_term(m, ca * cb);
    }
  }
  return out;
}

double Polynomial::eval(const Eigen::VectorXd& x) const {
  if (static_cast<int>(x.size()) != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "eval point dimension mismatch");
  }
  double result = 0.0;
  for (const auto& [m, c] : terms_) {
    double term = c;
    for (int i = 0; i < n_vars_; ++i) {
      for (int e = 0; e < m[i]; ++e) term *= x(i);
    }
    result += term;
  }
  return result;
}

Polynomial Polynomial::substitute_affine(const Eigen::MatrixXd& a,
                                         const Eigen::VectorXd& c) const {
  if (a.rows() != n_vars_ || c.size() != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch,
                "substitution map dimension mismatch");
  }
  const int ny = static_cast<int>(a.cols());
  // x_i as affine polynomial in y.
  std::vector<Polynomial> subst;
  subst.reserve(n_vars_);
  for (int i = 0; i < n_vars_; ++i) {
    subst.push_back(Polynomial::affine(a.row(i).transpose(), c(i)));
  }
  Polynomial out(ny);
  for (const auto& [m, coef] : terms_) {
    Polynomial term = Polynomial::constant(ny, coef);
    for (int i = 0; i < n_vars_; ++i) {
      for (int e = 0; e < m[i]; ++e) term = term * subst[i];
    }
    out += term;
  }
  return out;
}

ParamPolynomial ParamPolynomial::from(const Polynomial& p) {
  ParamPolynomial out(p.n_vars());
  for (const auto& [m, c] : p.terms()) out.add_term(m, LinExpr(c));
  return out;
}

int ParamPolynomial::degree() const {
  int d = 0;
  for (const auto& [m, e] : terms_) d = std::max(d, total_degree(m));
  return d;
}

void ParamPolynomial::add_term(const Monomial& m, const LinExpr& e) {
  check_vars(n_vars_, m);
  auto [it, inserted] = terms_.emplace(m, e);
  if (!inserted) it->second += e;
}

ParamPolynomial& ParamPolynomial::operator+=(const ParamPolynomial& other) {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, e] : other.terms_) add_term(m, e);
  return *this;
}

ParamPolynomial& ParamPolynomial::operator-=(const ParamPolynomial& other) {
  if (other.n_vars_ != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, e] : other.terms_) {
    LinExpr neg = e;
    neg *= -1.0;
    add_term(m, neg);
  }
  return *this;
}

ParamPolynomial& ParamPolynomial::operator+=(const Polynomial& other) {
  if (other.n_vars() != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, c] : other.terms()) add_term(m, LinExpr(c));
  return *this;
}

ParamPolynomial& ParamPolynomial::operator-=(const Polynomial& other) {
  if (other.n_vars() != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, c] : other.terms()) add_term(m, LinExpr(-c));
  return *this;
}

void ParamPolynomial::add_scaled(const LinExpr& coeff_expr,
                                 const Polynomial& p) {
  if (p.n_vars() != n_vars_) {
    throw Error(ErrorKind::kDimensionMismatch, "polynomial variable mismatch");
  }
  for (const auto& [m, c] : p.terms()) {
    LinExpr scaled = coeff_expr;
    scaled *= c;
    add_term(m, scaled);
  }
}

Polynomial ParamPolynomial::eval_params(const Eigen::VectorXd& y) const {
  Polynomial out(n_vars_);
  for (const auto& [m, e] : terms_) out.add_term(m, e.eval(y));
  return out;
}

std::vector<Monomial> monomial_basis(int n_vars, const std::vector<int>& vars,
                                     int degree) {
  if (degree < 0) {
    throw Error(ErrorKind::kInvalidInput, "negative basis degree");
  }
  for (int v : vars) {
    if (v < 0 || v >= n_vars) {
      throw Error(ErrorKind::kInvalidInput, "basis variable index out of range");
    }
  }
  std::vector<Monomial> out;
  Monomial current(n_vars, 0);
  // Enumerate exponent assignments over the subset, then sort graded-lex.
  std::function<void(std::size_t, int)> rec = [&](std::size_t pos, int budget) {
    if (pos == vars.size()) {
      out.push_back(current);
      return;
    }
    for (int e = 0; e <= budget; ++e) {
      current[vars[pos]] = e;
      rec(pos + 1, budget - e);
    }
    current[vars[pos]] = 0;
  };
  rec(0, degree);
  std::sort(out.begin(), out.end(), GradedLex{});
  return out;
}

std::vector<Monomial> monomial_basis(int n_vars, int degree) {
  std::vector<int> vars(n_vars);
  for (int i = 0; i < n_vars; ++i) vars[i] = i;
  return monomial_basis(n_vars, vars, degree);
}

}  // namespace nnv
