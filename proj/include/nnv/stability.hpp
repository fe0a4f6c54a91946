#pragma once

#include <string>
#include <utility>

#include "nnv/conic.hpp"
#include "nnv/data_engine.hpp"
#include "nnv/nn_model.hpp"
#include "nnv/sectors.hpp"

namespace nnv {

enum class StabilityObjective { kFeasibility, kTraceMin, kTraceMax };

StabilityObjective parse_stability_objective(const std::string& text);

struct StabilityOptions {
  StabilityObjective objective = StabilityObjective::kTraceMin;
  double epsilon = 1e-6;        // strictness margin: H - eps I >= 0
  double bias_tol = 1e-9;       // max allowed equilibrium shift at the origin
  SolverSettings solver;
};

/// Lyapunov certificate V(x) = x^T Q1^{-1} x for the closed loop. A verdict
/// of certified=false is "not certified", never a disproof.
struct StabilityCertificate {
  bool certified = false;
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::string message;

  Eigen::MatrixXd Q1;       // n_x x n_x, symmetric positive definite
  Eigen::VectorXd Q2_diag;  // n_phi positive diagonal entries
  Eigen::MatrixXd L1;       // K x n_x (empty for the model-based oracle)
  Eigen::MatrixXd L2;       // K x n_phi
  double epsilon = 0.0;
  double objective_value = 0.0;
  ResidualReport residuals;
};

/// Data-driven stability verification: assembles the block LMI over
/// (Q1, Q2, L1, L2) with the data-consistency equalities binding L1, L2 to
/// the samples, solves it, and post-verifies the certificate.
StabilityCertificate verify_stability(const NeuralNetwork& net,
                                      const SectorData& sectors,
                                      const TrajectoryData& data,
                                      const StabilityOptions& options = {});

/// Model-based oracle: the same LMI with the data blocks replaced by the true
/// (A + B Nt_ux) Q1 and B Nt_uz Q2. Used to cross-validate the data path.
StabilityCertificate verify_stability_model(const NeuralNetwork& net,
                                            const SectorData& sectors,
                                            const OraclePlant& plant,
                                            const StabilityOptions& options = {});

/// Assembles the conic program of the data-driven LMI without solving it
/// (for export and inspection). Block names: Q1, Q2, L1, L2; LMI name H.
ConicProgram build_stability_program(const NeuralNetwork& net,
                                     const SectorData& sectors,
                                     const TrajectoryData& data,
                                     const StabilityOptions& options = {});

/// Boundary polyline of {x : x^T Q1^{-1} x <= 1} sliced to the coordinate
/// plane (axes.first, axes.second) with all other coordinates fixed at 0.
/// Returns grid x 2 points (closed curve; last point equals the first).
Eigen::MatrixXd roa_ellipsoid(const StabilityCertificate& cert,
                              std::pair<Eigen::Index, Eigen::Index> axes,
                              int grid = 256);

/// JSON dump {Q1, Q2_diag, L1, L2, epsilon, residuals, verdict}.
void save_certificate(const StabilityCertificate& cert, const std::string& path);

/// Two-column CSV of a polyline.
void save_polyline_csv(const Eigen::MatrixXd& points, const std::string& path);

}  // namespace nnv
