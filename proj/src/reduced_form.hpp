#pragma once

#include <vector>

#include <Eigen/Dense>

#include "nnv/conic.hpp"

namespace nnv::detail {

// Reduced LMI form obtained after eliminating the affine equality
// constraints of a ConicProgram:
//
//   minimize  chat^T t   subject to   S_b(t) = F0_b + sum_k t_k Fk_b >= 0
//
// with one LMI block per cone-tagged variable block (identity map) and per
// explicit LMI constraint. The original variables are y = y0 + Z t.
struct ReducedProblem {
  Eigen::VectorXd y0;
  Eigen::MatrixXd Z;  // num_vars x m nullspace basis of the equalities
  Eigen::VectorXd chat;
  double obj_constant = 0.0;
  double obj_sign = 1.0;  // -1 when the user asked to maximize
  std::vector<Eigen::MatrixXd> F0;               // per block
  std::vector<std::vector<Eigen::MatrixXd>> Fk;  // [k][block]
  std::vector<Eigen::Index> block_sizes;
  bool equalities_consistent = true;
  // Set when a nullspace direction touches no cone block but moves the
  // objective; the problem is unbounded along it.
  bool unbounded_free_direction = false;
};

ReducedProblem reduce(const ConicProgram& program);

}  // namespace nnv::detail
