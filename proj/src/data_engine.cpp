#include "nnv/data_engine.hpp"

#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "json_util.hpp"

namespace nnv {
namespace {

Eigen::MatrixXd stack_data(const TrajectoryData& data) {
  Eigen::MatrixXd z(data.input_dim() + data.state_dim(), data.samples());
  z.topRows(data.input_dim()) = data.U0;
  z.bottomRows(data.state_dim()) = data.X0;
  return z;
}

Eigen::Index numeric_rank(const Eigen::VectorXd& sv, double rel_tol) {
  if (sv.size() == 0) return 0;
  const double thresh = rel_tol * sv[0];
  Eigen::Index rank = 0;
  for (Eigen::Index i = 0; i < sv.size(); ++i) {
    if (sv[i] > thresh) ++rank;
  }
  return rank;
}

}  // namespace

void TrajectoryData::validate() const {
  if (X0.cols() != U0.cols() || X1.cols() != U0.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "U0, X0, X1 must have the same number of columns");
  }
  if (X1.rows() != X0.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "X0 and X1 must have the same number of rows");
  }
}

OraclePlant load_plant(const std::string& path) {
  const auto j = detail::load_json_file(path);
  OraclePlant plant;
  plant.A = detail::matrix_from_json(j.at("A"));
  plant.B = detail::matrix_from_json(j.at("B"));
  if (plant.A.rows() != plant.A.cols() || plant.B.rows() != plant.A.rows()) {
    throw Error(ErrorKind::kDimensionMismatch,
                path + ": A must be square and B must match its row count");
  }
  return plant;
}

void save_plant(const OraclePlant& plant, const std::string& path) {
  detail::json j;
  j["A"] = detail::to_json(plant.A);
  j["B"] = detail::to_json(plant.B);
  detail::save_json_file(j, path);
}

RankReport check_excitation(const TrajectoryData& data, double rel_tol) {
  data.validate();
  RankReport report;
  report.required_data = data.input_dim() + data.state_dim();
  report.required_x1 = data.state_dim();

  Eigen::JacobiSVD<Eigen::MatrixXd> svd_data(stack_data(data));
  Eigen::JacobiSVD<Eigen::MatrixXd> svd_x1(data.X1);
  report.singular_values_data = svd_data.singularValues();
  report.singular_values_x1 = svd_x1.singularValues();
  report.rank_data = numeric_rank(report.singular_values_data, rel_tol);
  report.rank_x1 = numeric_rank(report.singular_values_x1, rel_tol);
  report.pass = report.rank_data == report.required_data &&
                report.rank_x1 == report.required_x1;
  return report;
}

TrajectoryData collect(const OraclePlant& plant, Eigen::Index samples,
                       const Eigen::VectorXd& input_lo,
                       const Eigen::VectorXd& input_hi,
                       const Eigen::VectorXd& init_lo,
                       const Eigen::VectorXd& init_hi, std::uint64_t seed) {
  const Eigen::Index n_x = plant.A.rows();
  const Eigen::Index n_u = plant.B.cols();
  if (samples < 1) throw Error(ErrorKind::kInvalidInput, "need samples >= 1");
  if (input_lo.size() != n_u || input_hi.size() != n_u ||
      init_lo.size() != n_x || init_hi.size() != n_x) {
    throw Error(ErrorKind::kDimensionMismatch, "box dimensions do not match plant");
  }
  if ((input_hi.array() < input_lo.array()).any() ||
      (init_hi.array() < init_lo.array()).any()) {
    throw Error(ErrorKind::kInvalidInput, "empty sampling box");
  }

  std::mt19937_64 rng(seed);
  auto uniform = [&rng](double lo, double hi) {
    std::uniform_real_distribution<double> dist(lo, hi);
    return dist(rng);
  };

  TrajectoryData data;
  data.U0.resize(n_u, samples);
  data.X0.resize(n_x, samples);
  data.X1.resize(n_x, samples);

  Eigen::VectorXd x(n_x);
  for (Eigen::Index i = 0; i < n_x; ++i) x[i] = uniform(init_lo[i], init_hi[i]);
  for (Eigen::Index k = 0; k < samples; ++k) {
    Eigen::VectorXd u(n_u);
    for (Eigen::Index i = 0; i < n_u; ++i) {
      u[i] = uniform(input_lo[i], input_hi[i]);
    }
    data.U0.col(k) = u;
    data.X0.col(k) = x;
    x = plant.step(x, u);
    data.X1.col(k) = x;
  }
  data.provenance = "collect(seed=" + std::to_string(seed) + ")";
  return data;
}

RecoveredSystem recover_system(const TrajectoryData& data) {
  const RankReport report = check_excitation(data);
  if (!report.pass) {
    throw Error(ErrorKind::kRankDeficient,
                "excitation rank condition failed (rank [U0;X0] = " +
                    std::to_string(report.rank_data) + " of " +
                    std::to_string(report.required_data) +
                    "); collect more or richer data");
  }
  const Eigen::MatrixXd z = stack_data(data);
  // [B A] = X1 z^dag; computed through the transposed least-squares problem.
  const Eigen::MatrixXd ba =
      z.transpose()
          .completeOrthogonalDecomposition()
          .solve(data.X1.transpose())
          .transpose();
  RecoveredSystem sys;
  sys.B = ba.leftCols(data.input_dim());
  sys.A = ba.rightCols(data.state_dim());
  sys.residual = (data.X1 - ba * z).norm();
  return sys;
}

Eigen::MatrixXd solve_consistency(const TrajectoryData& data,
                                  const Eigen::MatrixXd& top,
                                  const Eigen::MatrixXd& bottom,
                                  double tol) {
  const RankReport report = check_excitation(data);
  if (!report.pass) {
    throw Error(ErrorKind::kRankDeficient,
                "excitation rank condition failed; cannot parameterize");
  }
  if (top.rows() != data.input_dim() || bottom.rows() != data.state_dim() ||
      top.cols() != bottom.cols()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "rhs blocks must be n_u x m and n_x x m");
  }
  if (top.cols() == 0) return Eigen::MatrixXd(data.samples(), 0);

  Eigen::MatrixXd rhs(top.rows() + bottom.rows(), top.cols());
  rhs.topRows(top.rows()) = top;
  rhs.bottomRows(bottom.rows()) = bottom;
  const Eigen::MatrixXd z = stack_data(data);
  const Eigen::MatrixXd g = z.completeOrthogonalDecomposition().solve(rhs);
  const double residual = (z * g - rhs).norm();
  if (residual > tol * (1.0 + rhs.norm())) {
    throw Error(ErrorKind::kNumerical,
                "consistency system residual " + std::to_string(residual) +
                    " exceeds tolerance");
  }
  return g;
}

TrajectoryData load_trajectory_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::kIo, path + ": empty file");

  Eigen::Index n_u = 0, n_x = 0, n_x1 = 0;
  {
    std::stringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) {
      field.erase(0, field.find_first_not_of(" \t"));
      if (field.rfind("x1_", 0) == 0) ++n_x1;
      else if (field.rfind("u_", 0) == 0) ++n_u;
      else if (field.rfind("x_", 0) == 0) ++n_x;
      else throw Error(ErrorKind::kIo, path + ": unexpected column '" + field + "'");
    }
  }
  if (n_u == 0 || n_x == 0 || n_x != n_x1) {
    throw Error(ErrorKind::kIo, path + ": header must list u_*, x_*, x1_* columns");
  }

  std::vector<std::vector<double>> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string field;
    std::vector<double> row;
    while (std::getline(ss, field, ',')) row.push_back(std::stod(field));
    if (static_cast<Eigen::Index>(row.size()) != n_u + 2 * n_x) {
      throw Error(ErrorKind::kIo, path + ": row width does not match header");
    }
    rows.push_back(std::move(row));
  }

  TrajectoryData data;
  const Eigen::Index k = static_cast<Eigen::Index>(rows.size());
  data.U0.resize(n_u, k);
  data.X0.resize(n_x, k);
  data.X1.resize(n_x, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    for (Eigen::Index i = 0; i < n_u; ++i) data.U0(i, j) = rows[j][i];
    for (Eigen::Index i = 0; i < n_x; ++i) data.X0(i, j) = rows[j][n_u + i];
    for (Eigen::Index i = 0; i < n_x; ++i) data.X1(i, j) = rows[j][n_u + n_x + i];
  }
  data.provenance = path;
  return data;
}

void save_trajectory_csv(const TrajectoryData& data, const std::string& path) {
  data.validate();
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < data.input_dim(); ++i) {
    out << (i ? "," : "") << "u_" << i;
  }
  for (Eigen::Index i = 0; i < data.state_dim(); ++i) out << ",x_" << i;
  for (Eigen::Index i = 0; i < data.state_dim(); ++i) out << ",x1_" << i;
  out << "\n";
  for (Eigen::Index j = 0; j < data.samples(); ++j) {
    for (Eigen::Index i = 0; i < data.input_dim(); ++i) {
      out << (i ? "," : "") << data.U0(i, j);
    }
    for (Eigen::Index i = 0; i < data.state_dim(); ++i) out << "," << data.X0(i, j);
    for (Eigen::Index i = 0; i < data.state_dim(); ++i) out << "," << data.X1(i, j);
    out << "\n";
  }
}

}  // namespace nnv
