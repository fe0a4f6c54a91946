#include "nnv/sectors.hpp"

#include <cmath>

namespace nnv {

SectorBounds default_sector(Activation act, double leaky_slope) {
  switch (act) {
    case Activation::kRelu:
      return {0.0, 1.0, 0.0, 0.0};
    case Activation::kTanh:
      return {0.0, 1.0, 0.0, 0.0};
    case Activation::kSigmoid:
      return {0.0, 0.25, 0.0, 0.5};
    case Activation::kLeakyRelu:
      if (!(leaky_slope > 0.0 && leaky_slope < 1.0)) {
        throw Error(ErrorKind::kUnsupported,
                    "leaky_relu sector requires slope in (0, 1)");
      }
      return {leaky_slope, 1.0, 0.0, 0.0};
  }
  throw Error(ErrorKind::kUnsupported, "unsupported activation kind");
}

SectorData SectorData::uniform(const SectorBounds& s, Eigen::Index n_phi) {
  SectorData d;
  d.alpha = Eigen::VectorXd::Constant(n_phi, s.alpha);
  d.beta = Eigen::VectorXd::Constant(n_phi, s.beta);
  d.v_star = Eigen::VectorXd::Constant(n_phi, s.v_star);
  d.w_star = Eigen::VectorXd::Constant(n_phi, s.w_star);
  d.v_lo = Eigen::VectorXd::Constant(
      n_phi, -std::numeric_limits<double>::infinity());
  d.v_hi = Eigen::VectorXd::Constant(
      n_phi, std::numeric_limits<double>::infinity());
  return d;
}

void SectorData::validate() const {
  const Eigen::Index n = alpha.size();
  if (beta.size() != n || v_star.size() != n || w_star.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sector vectors must all have length n_phi");
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(alpha[i] <= beta[i])) {
      throw Error(ErrorKind::kInvalidSector,
                  "sector has alpha > beta at neuron " + std::to_string(i));
    }
  }
}

void validate_sectors(const SectorData& sectors, Activation act,
                      double leaky_slope, double tol) {
  sectors.validate();
  for (Eigen::Index i = 0; i < sectors.size(); ++i) {
    const double w = activate(act, sectors.v_star[i], leaky_slope);
    if (std::abs(w - sectors.w_star[i]) > tol) {
      throw Error(ErrorKind::kInvalidSector,
                  "w_star != phi(v_star) at neuron " + std::to_string(i));
    }
  }
}

Eigen::MatrixXd sector_quadratic_matrix(const SectorData& sectors,
                                        const Eigen::VectorXd& lambda) {
  sectors.validate();
  const Eigen::Index n = sectors.size();
  if (lambda.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "lambda must have length n_phi");
  }
  if ((lambda.array() < 0.0).any()) {
    throw Error(ErrorKind::kInvalidInput, "lambda must be nonnegative");
  }
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(2 * n, 2 * n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double a = sectors.alpha[i];
    const double b = sectors.beta[i];
    const double l = lambda[i];
    m(i, i) = -2.0 * a * b * l;
    m(i, n + i) = (a + b) * l;
    m(n + i, i) = (a + b) * l;
    m(n + i, n + i) = -2.0 * l;
  }
  return m;
}

double sector_form_value(const SectorData& sectors,
                         const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& w) {
  const Eigen::Index n = sectors.size();
  if (v.size() != n || w.size() != n) {
    throw Error(ErrorKind::kDimensionMismatch, "v, w must have length n_phi");
  }
  Eigen::VectorXd z(2 * n);
  z.head(n) = v - sectors.v_star;
  z.tail(n) = w - sectors.w_star;
  const Eigen::MatrixXd m = sector_quadratic_matrix(sectors, lambda);
  return z.dot(m * z);
}

}  // namespace nnv
