#pragma once

#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "nnv/conic.hpp"
#include "nnv/data_engine.hpp"
#include "nnv/nn_model.hpp"
#include "nnv/polytope.hpp"
#include "nnv/sectors.hpp"
#include "nnv/sos.hpp"

namespace nnv {

struct ReachOptions {
  // Degree of the facet multipliers g_i(w): 0 (nonnegative scalars) or 2
  // (quadratic SOS). -1 picks 0 for linear controllers and 2 as soon as the
  // network has hidden neurons; scalar multipliers cannot cancel the sector
  // cross terms, so degree 0 is infeasible whenever n_phi > 0.
  int multiplier_degree = -1;
  SolverSettings solver;
  int sos_samples = 256;  // sampling count in certificate post-verification
};

/// Outcome of one per-facet program.
struct FacetResult {
  double gamma = std::numeric_limits<double>::infinity();
  bool certified = false;
  SolveStatus status = SolveStatus::kNumericalFailure;
  std::string message;
  ResidualReport residuals;
  SosReport sos;  // post-verification of the facet's SOS certificate
};

/// One reachability step: offsets gamma of the outer approximation
/// { x : d_i^T (x - x_safe) + gamma_i >= 0 }.
struct StepResult {
  Eigen::VectorXd gamma;
  std::vector<FacetResult> facets;
  bool certified = false;  // every facet certified
};

struct ReachResult {
  std::vector<StepResult> steps;  // k = 1 .. (certified horizon or failure)
  int horizon = 0;                // requested T
  int certified_steps = 0;        // steps with a full certificate
  bool safe = false;              // certified for all k and gamma_i^k <= 1
  std::string message;
};

/// Data-driven one-step outer approximation: for every facet i of
/// safe_template, minimizes gamma_i subject to the per-facet SOS constraint
/// with the data-consistency equalities binding G1, G2, G3. prev is the
/// current outer approximation R^{k-1} (its own normals, center, offsets).
StepResult reach_step(const NeuralNetwork& net, const SectorData& sectors,
                      const TrajectoryData& data, const Polytope& prev,
                      const Polytope& safe_template,
                      const ReachOptions& options = {});

/// Assembles the data-driven program of a single facet without solving it
/// (for export and inspection).
ConicProgram build_reach_facet_program(const NeuralNetwork& net,
                                       const SectorData& sectors,
                                       const TrajectoryData& data,
                                       const Polytope& prev,
                                       const Polytope& safe_template,
                                       Eigen::Index facet,
                                       const ReachOptions& options = {});

/// Model-based oracle: the same per-facet programs with the true (A, B)
/// substituted for the data parameterization.
StepResult reach_step_model(const NeuralNetwork& net, const SectorData& sectors,
                            const OraclePlant& plant, const Polytope& prev,
                            const Polytope& safe_template,
                            const ReachOptions& options = {});

/// Finite-time safety over horizon T: step 1 uses the input set's facets
/// with offsets 1, later steps recurse on the safe-set template. Safe iff
/// every step is certified with gamma_i^k <= 1.
ReachResult verify_safety(const NeuralNetwork& net, const SectorData& sectors,
                          const TrajectoryData& data, const Polytope& input_set,
                          const Polytope& safe_set, int horizon,
                          const ReachOptions& options = {});

/// Model-based oracle of verify_safety.
ReachResult verify_safety_model(const NeuralNetwork& net,
                                const SectorData& sectors,
                                const OraclePlant& plant,
                                const Polytope& input_set,
                                const Polytope& safe_set, int horizon,
                                const ReachOptions& options = {});

struct InvarianceResult {
  StepResult step;
  bool invariant = false;  // certified and gamma_i <= 1 for every facet
  std::string message;
};

/// One-step invariance program on the candidate set B (offsets 1).
InvarianceResult verify_invariance(const NeuralNetwork& net,
                                   const SectorData& sectors,
                                   const TrajectoryData& data,
                                   const Polytope& b_set,
                                   const ReachOptions& options = {});

struct SafetyViaInvariance {
  bool applicable = false;   // X subseteq B subseteq S holds
  bool safe_for_all_time = false;
  std::string message;
};

/// Unbounded-horizon safety through an invariant set:
/// X subseteq B subseteq S and B invariant imply safety for all time.
SafetyViaInvariance safety_via_invariance(const Polytope& input_set,
                                          const Polytope& b_set,
                                          const Polytope& safe_set,
                                          const InvarianceResult& invariance);

/// JSON report with per-step gamma tables and the verdict.
void save_reach_result(const ReachResult& result, const std::string& path);

/// CSV boundary polyline of a 2-D slice of a polytope (coordinates axes.first,
/// axes.second, others fixed at 0), for plotting.
Eigen::MatrixXd polytope_slice(const Polytope& poly,
                               std::pair<Eigen::Index, Eigen::Index> axes);

}  // namespace nnv
