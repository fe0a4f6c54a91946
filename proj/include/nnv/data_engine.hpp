#pragma once

#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "nnv/common.hpp"

namespace nnv {

/// Input/state/successor data matrices collected from the open-loop plant.
/// Columns are (input, state, successor) triples; they may come from a single
/// rollout or from independent one-step experiments.
struct TrajectoryData {
  Eigen::MatrixXd U0;  // n_u x K
  Eigen::MatrixXd X0;  // n_x x K
  Eigen::MatrixXd X1;  // n_x x K
  std::string provenance;

  Eigen::Index samples() const { return U0.cols(); }
  Eigen::Index state_dim() const { return X0.rows(); }
  Eigen::Index input_dim() const { return U0.rows(); }

  void validate() const;
};

/// Ground-truth plant used only by data collection, test oracles, and the
/// model-based verifiers. The data-driven verifiers never read it.
struct OraclePlant {
  Eigen::MatrixXd A;  // n_x x n_x
  Eigen::MatrixXd B;  // n_x x n_u

  Eigen::VectorXd step(const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    return A * x + B * u;
  }
};

OraclePlant load_plant(const std::string& path);
void save_plant(const OraclePlant& plant, const std::string& path);

struct RankReport {
  Eigen::Index rank_data = 0;      // rank([U0; X0])
  Eigen::Index required_data = 0;  // n_u + n_x
  Eigen::Index rank_x1 = 0;        // rank(X1)
  Eigen::Index required_x1 = 0;    // n_x
  Eigen::VectorXd singular_values_data;
  Eigen::VectorXd singular_values_x1;
  bool pass = false;
};

/// Numerical rank uses the threshold rel_tol * sigma_max.
RankReport check_excitation(const TrajectoryData& data, double rel_tol = 1e-8);

/// Simulates a single rollout x(k+1) = A x(k) + B u(k) with u drawn uniformly
/// from input_box and x(0) from init_box. Deterministic given the seed.
TrajectoryData collect(const OraclePlant& plant, Eigen::Index samples,
                       const Eigen::VectorXd& input_lo,
                       const Eigen::VectorXd& input_hi,
                       const Eigen::VectorXd& init_lo,
                       const Eigen::VectorXd& init_hi, std::uint64_t seed);

/// Least-squares recovery [B A] = X1 pinv([U0; X0]). Diagnostics and test
/// oracles only; the certificates never depend on it.
struct RecoveredSystem {
  Eigen::MatrixXd A;
  Eigen::MatrixXd B;
  double residual = 0.0;  // ||X1 - [B A][U0;X0]||_F
};

RecoveredSystem recover_system(const TrajectoryData& data);

/// Minimum-Frobenius-norm G with [U0; X0] G = [top; bottom].
/// Throws if the excitation rank condition fails.
Eigen::MatrixXd solve_consistency(const TrajectoryData& data,
                                  const Eigen::MatrixXd& top,
                                  const Eigen::MatrixXd& bottom,
                                  double tol = 1e-10);

/// CSV with header u_0..u_{n_u-1}, x_0..x_{n_x-1}, x1_0..x1_{n_x-1} and one
/// column-triple per row.
TrajectoryData load_trajectory_csv(const std::string& path);
void save_trajectory_csv(const TrajectoryData& data, const std::string& path);

}  // namespace nnv
