#pragma once

#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "nnv/common.hpp"

namespace nnv {

enum class ConeTag { kPsd, kNonneg, kFree };

/// Sparse affine expression over the scalar decision variables of a
/// ConicProgram: constant + sum coeff_v * y_v.
class LinExpr {
 public:
  LinExpr() = default;
  explicit LinExpr(double constant) : constant_(constant) {}
  static LinExpr variable(int var, double coeff = 1.0) {
    LinExpr e;
    e.add(var, coeff);
    return e;
  }

  void add(int var, double coeff) {
    if (coeff != 0.0) terms_[var] += coeff;
  }
  void add_constant(double c) { constant_ += c; }

  LinExpr& operator+=(const LinExpr& other) {
    constant_ += other.constant_;
    for (const auto& [v, c] : other.terms_) terms_[v] += c;
    return *this;
  }
  LinExpr& operator-=(const LinExpr& other) {
    constant_ -= other.constant_;
    for (const auto& [v, c] : other.terms_) terms_[v] -= c;
    return *this;
  }
  LinExpr& operator*=(double s) {
    constant_ *= s;
    for (auto& [v, c] : terms_) c *= s;
    return *this;
  }

  double constant() const { return constant_; }
  const std::map<int, double>& terms() const { return terms_; }
  bool is_constant() const { return terms_.empty(); }

  double eval(const Eigen::VectorXd& y) const {
    double value = constant_;
    for (const auto& [v, c] : terms_) value += c * y[v];
    return value;
  }

 private:
  double constant_ = 0.0;
  std::map<int, double> terms_;
};

inline LinExpr operator+(LinExpr a, const LinExpr& b) { return a += b; }
inline LinExpr operator-(LinExpr a, const LinExpr& b) { return a -= b; }
inline LinExpr operator*(double s, LinExpr a) { return a *= s; }

struct VarBlock {
  std::string name;
  ConeTag cone = ConeTag::kFree;
  Eigen::Index rows = 0;
  Eigen::Index cols = 0;
  int offset = 0;  // first scalar variable index
  int size = 0;    // number of scalar variables
};

/// Symmetric matrix of affine expressions required to be PSD.
struct LmiConstraint {
  std::string name;
  Eigen::Index n = 0;
  std::vector<LinExpr> entries;  // row-major n x n, kept symmetric

  LinExpr& at(Eigen::Index i, Eigen::Index j) { return entries[i * n + j]; }
  const LinExpr& at(Eigen::Index i, Eigen::Index j) const {
    return entries[i * n + j];
  }
};

/// Linear-objective conic program over matrix variable blocks (PSD, nonneg or
/// free), affine equality constraints, and explicit LMI constraints. Block
/// names carry the link to the quantities they represent (Q1, L1, Gram, ...).
class ConicProgram {
 public:
  int add_psd_block(const std::string& name, Eigen::Index n);
  int add_nonneg_block(const std::string& name, Eigen::Index n);
  int add_free_block(const std::string& name, Eigen::Index rows,
                     Eigen::Index cols);

  /// Scalar variable index of entry (i, j) of a block. PSD blocks store the
  /// upper triangle once; (i, j) and (j, i) map to the same variable.
  int var(int block, Eigen::Index i, Eigen::Index j = 0) const;

  /// Adds the constraint expr == rhs.
  void add_equality(const LinExpr& expr, double rhs);

  int add_lmi(const std::string& name, Eigen::Index n);
  /// Sets entry (i, j) and its mirror (j, i).
  void set_lmi_entry(int lmi, Eigen::Index i, Eigen::Index j,
                     const LinExpr& expr);

  void set_objective(const LinExpr& objective, bool minimize = true);

  int num_vars() const { return num_vars_; }
  const std::vector<VarBlock>& blocks() const { return blocks_; }
  const std::vector<LmiConstraint>& lmis() const { return lmis_; }
  const std::vector<std::pair<LinExpr, double>>& equalities() const {
    return equalities_;
  }
  const LinExpr& objective() const { return objective_; }
  bool minimize() const { return minimize_; }

  /// Dense value of a block given the full variable vector.
  Eigen::MatrixXd block_value(int block, const Eigen::VectorXd& y) const;
  Eigen::MatrixXd lmi_value(int lmi, const Eigen::VectorXd& y) const;

 private:
  std::vector<VarBlock> blocks_;
  std::vector<LmiConstraint> lmis_;
  std::vector<std::pair<LinExpr, double>> equalities_;
  LinExpr objective_;
  bool minimize_ = true;
  int num_vars_ = 0;
};

enum class SolveStatus { kOptimal, kInfeasible, kUnbounded, kNumericalFailure };

const char* to_string(SolveStatus status);

struct ResidualReport {
  double max_equality_residual = 0.0;
  double equality_scale = 1.0;  // 1 + max |rhs|
  double min_cone_eigenvalue = 0.0;
  std::vector<std::pair<std::string, double>> min_eig_per_constraint;
  bool accepted = false;
};

struct Solution {
  SolveStatus status = SolveStatus::kNumericalFailure;
  double objective = 0.0;  // in the user's optimization sense
  Eigen::VectorXd y;       // all scalar variables
  int iterations = 0;
  std::string message;
  ResidualReport residuals;
};

struct SolverSettings {
  double feasibility_tol = 1e-8;
  double gap_tol = 1e-8;
  int max_iterations = 200;
  double step_fraction = 0.98;
  bool verbose = false;
};

/// Interior-point solve (primal-dual, HKM direction, Mehrotra corrector).
/// Never throws on solver trouble; trouble is reported in Solution::status.
Solution solve(const ConicProgram& program, const SolverSettings& settings = {});

/// Independent recomputation of equality residuals and minimum eigenvalues of
/// every cone/LMI constraint from the raw variable vector. Acceptance:
/// equalities within 1e-6 * (1 + max|rhs|), eigenvalues >= -1e-7.
ResidualReport verify_solution(const ConicProgram& program, const Solution& sol,
                               double eq_tol = 1e-6, double eig_tol = 1e-7);

}  // namespace nnv
