#include "nnv/conic.hpp"

namespace nnv {

int ConicProgram::add_psd_block(const std::string& name, Eigen::Index n) {
  VarBlock b;
  b.name = name;
  b.cone = ConeTag::kPsd;
  b.rows = b.cols = n;
  b.offset = num_vars_;
  b.size = static_cast<int>(n * (n + 1) / 2);
  num_vars_ += b.size;
  blocks_.push_back(b);
  return static_cast<int>(blocks_.size()) - 1;
}

int ConicProgram::add_nonneg_block(const std::string& name, Eigen::Index n) {
  VarBlock b;
  b.name = name;
  b.cone = ConeTag::kNonneg;
  b.rows = n;
  b.cols = 1;
  b.offset = num_vars_;
  b.size = static_cast<int>(n);
  num_vars_ += b.size;
  blocks_.push_back(b);
  return static_cast<int>(blocks_.size()) - 1;
}

int ConicProgram::add_free_block(const std::string& name, Eigen::Index rows,
                                 Eigen::Index cols) {
  VarBlock b;
  b.name = name;
  b.cone = ConeTag::kFree;
  b.rows = rows;
  b.cols = cols;
  b.offset = num_vars_;
  b.size = static_cast<int>(rows * cols);
  num_vars_ += b.size;
  blocks_.push_back(b);
  return static_cast<int>(blocks_.size()) - 1;
}

int ConicProgram::var(int block, Eigen::Index i, Eigen::Index j) const {
  const VarBlock& b = blocks_.at(block);
  if (i < 0 || i >= b.rows || j < 0 || j >= b.cols) {
    throw Error(ErrorKind::kInvalidInput,
                "variable index out of range in block " + b.name);
  }
  if (b.cone == ConeTag::kPsd) {
    // Upper triangle, column-major: var (i, j) with i <= j at j(j+1)/2 + i.
    if (i > j) std::swap(i, j);
    return b.offset + static_cast<int>(j * (j + 1) / 2 + i);
  }
  return b.offset + static_cast<int>(j * b.rows + i);
}

void ConicProgram::add_equality(const LinExpr& expr, double rhs) {
  equalities_.emplace_back(expr, rhs);
}

int ConicProgram::add_lmi(const std::string& name, Eigen::Index n) {
  LmiConstraint lmi;
  lmi.name = name;
  lmi.n = n;
  lmi.entries.assign(n * n, LinExpr{});
  lmis_.push_back(std::move(lmi));
  return static_cast<int>(lmis_.size()) - 1;
}

void ConicProgram::set_lmi_entry(int lmi, Eigen::Index i, Eigen::Index j,
                                 const LinExpr& expr) {
  LmiConstraint& c = lmis_.at(lmi);
  c.at(i, j) = expr;
  if (i != j) c.at(j, i) = expr;
}

void ConicProgram::set_objective(const LinExpr& objective, bool minimize) {
  objective_ = objective;
  minimize_ = minimize;
}

Eigen::MatrixXd ConicProgram::block_value(int block,
                                          const Eigen::VectorXd& y) const {
  const VarBlock& b = blocks_.at(block);
  Eigen::MatrixXd m(b.rows, b.cols);
  for (Eigen::Index j = 0; j < b.cols; ++j) {
    for (Eigen::Index i = 0; i < b.rows; ++i) m(i, j) = y[var(block, i, j)];
  }
  return m;
}

Eigen::MatrixXd ConicProgram::lmi_value(int lmi, const Eigen::VectorXd& y) const {
  const LmiConstraint& c = lmis_.at(lmi);
  Eigen::MatrixXd m(c.n, c.n);
  for (Eigen::Index i = 0; i < c.n; ++i) {
    for (Eigen::Index j = 0; j < c.n; ++j) m(i, j) = c.at(i, j).eval(y);
  }
  return 0.5 * (m + m.transpose());
}

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kInfeasible: return "infeasible";
    case SolveStatus::kUnbounded: return "unbounded";
    case SolveStatus::kNumericalFailure: return "numerical-failure";
  }
  return "unknown";
}

ResidualReport verify_solution(const ConicProgram& program, const Solution& sol,
                               double eq_tol, double eig_tol) {
  ResidualReport report;
  if (sol.y.size() != program.num_vars()) {
    report.accepted = false;
    return report;
  }
  double rhs_scale = 0.0;
  for (const auto& [expr, rhs] : program.equalities()) {
    report.max_equality_residual =
        std::max(report.max_equality_residual, std::abs(expr.eval(sol.y) - rhs));
    rhs_scale = std::max(rhs_scale, std::abs(rhs));
  }
  report.equality_scale = 1.0 + rhs_scale;

  double min_eig = std::numeric_limits<double>::infinity();
  auto record = [&](const std::string& name, double value) {
    report.min_eig_per_constraint.emplace_back(name, value);
    min_eig = std::min(min_eig, value);
  };
  for (size_t b = 0; b < program.blocks().size(); ++b) {
    const VarBlock& blk = program.blocks()[b];
    if (blk.cone == ConeTag::kFree) continue;
    const Eigen::MatrixXd value = program.block_value(static_cast<int>(b), sol.y);
    if (blk.cone == ConeTag::kNonneg) {
      record(blk.name, blk.rows > 0 ? value.minCoeff() : 0.0);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(value);
      record(blk.name, blk.rows > 0 ? eig.eigenvalues().minCoeff() : 0.0);
    }
  }
  for (size_t l = 0; l < program.lmis().size(); ++l) {
    const Eigen::MatrixXd value = program.lmi_value(static_cast<int>(l), sol.y);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(value);
    record(program.lmis()[l].name,
           value.rows() > 0 ? eig.eigenvalues().minCoeff() : 0.0);
  }
  report.min_cone_eigenvalue =
      std::isfinite(min_eig) ? min_eig : 0.0;
  report.accepted =
      report.max_equality_residual <= eq_tol * report.equality_scale &&
      report.min_cone_eigenvalue >= -eig_tol;
  return report;
}

}  // namespace nnv
