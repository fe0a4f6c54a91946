#pragma once

#include <string>

#include <Eigen/Dense>

#include "nnv/conic.hpp"

namespace nnv {

/// Standalone dual-form SDP: min c^T t subject to
/// F0 + sum_k t_k F_k >= 0 (blockwise). This is the representation written to
/// and read from SDPA sparse files, which carry no equality constraints.
struct SdpaProblem {
  Eigen::VectorXd c;                      // length m
  std::vector<Eigen::Index> block_sizes;  // negative size = diagonal block
  // mats[k] holds block matrices of constraint matrix F_k, k = 0..m;
  // mats[0] is F0.
  std::vector<std::vector<Eigen::MatrixXd>> mats;
};

/// Reduced dual form of a conic program (equalities eliminated), identical to
/// what the embedded interior-point solver works on.
SdpaProblem to_sdpa_problem(const ConicProgram& program);

/// Writes SDPA sparse format (.dat-s) with deterministic ordering: blocks in
/// declaration order, entries in row-major upper-triangular order. Identical
/// programs produce byte-identical files.
void export_sdpa(const ConicProgram& program, const std::string& path);
void export_sdpa(const SdpaProblem& problem, const std::string& path);

/// Parses a .dat-s file back into the standalone dual form.
SdpaProblem import_sdpa(const std::string& path);

}  // namespace nnv
