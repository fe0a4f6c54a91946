#pragma once

#include <Eigen/Dense>

#include "nnv/activation.hpp"
#include "nnv/common.hpp"

namespace nnv {

/// Scalar offset-sector parameters for a single activation function:
/// phi lies in the sector [alpha, beta] around the point (v_star, w_star),
/// i.e. ((phi(v)-w_star) - alpha (v-v_star)) (beta (v-v_star) - (phi(v)-w_star)) >= 0.
struct SectorBounds {
  double alpha = 0.0;
  double beta = 0.0;
  double v_star = 0.0;
  double w_star = 0.0;
};

/// Globally valid sector for the given activation.
SectorBounds default_sector(Activation act, double leaky_slope = 0.01);

/// Per-neuron offset-sector parameters for the stacked nonlinearity.
struct SectorData {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;
  Eigen::VectorXd v_star;
  Eigen::VectorXd w_star;

  // Preactivation range on which the sector is claimed to hold. The default
  // (-inf, +inf) means globally valid; finite bounds are an unused hook for
  // local-sector refinements.
  Eigen::VectorXd v_lo;
  Eigen::VectorXd v_hi;

  Eigen::Index size() const { return alpha.size(); }

  /// Uniform sector replicated over n_phi neurons.
  static SectorData uniform(const SectorBounds& s, Eigen::Index n_phi);

  /// Throws if alpha > beta in any coordinate or vector lengths disagree.
  void validate() const;
};

/// Checks w_star == phi(v_star) elementwise against the actual activation.
void validate_sectors(const SectorData& sectors, Activation act,
                      double leaky_slope = 0.01, double tol = 1e-12);

/// Stacked quadratic-constraint matrix
///   M = [ -2 A B Lambda   (A+B) Lambda ]
///       [  (A+B) Lambda   -2 Lambda    ]
/// with A=diag(alpha), B=diag(beta), Lambda=diag(lambda). For any v and
/// w = phi(v), [v - v*; w - w*]^T M [v - v*; w - w*] >= 0 for lambda >= 0.
Eigen::MatrixXd sector_quadratic_matrix(const SectorData& sectors,
                                        const Eigen::VectorXd& lambda);

/// Value of the quadratic form above at a given (v, w) point.
double sector_form_value(const SectorData& sectors,
                         const Eigen::VectorXd& lambda,
                         const Eigen::VectorXd& v, const Eigen::VectorXd& w);

}  // namespace nnv
