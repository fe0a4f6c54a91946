#pragma once

// Internal helpers shared by the file-format code. Not installed.

#include <fstream>
#include <string>

#include <Eigen/Dense>
#include <json.hpp>

#include "nnv/common.hpp"

namespace nnv::detail {

using json = nlohmann::json;

inline json to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline json to_json(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline Eigen::MatrixXd matrix_from_json(const json& j) {
  if (!j.is_array()) {
    throw Error(ErrorKind::kIo, "expected a matrix (array of rows)");
  }
  const Eigen::Index rows = static_cast<Eigen::Index>(j.size());
  if (rows == 0) return Eigen::MatrixXd(0, 0);
  const Eigen::Index cols = static_cast<Eigen::Index>(j[0].size());
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    if (static_cast<Eigen::Index>(j[i].size()) != cols) {
      throw Error(ErrorKind::kIo, "ragged matrix rows in JSON input");
    }
    for (Eigen::Index c = 0; c < cols; ++c) m(i, c) = j[i][c].get<double>();
  }
  return m;
}

inline Eigen::VectorXd vector_from_json(const json& j) {
  if (!j.is_array()) throw Error(ErrorKind::kIo, "expected a JSON array");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = j[i].get<double>();
  return v;
}

inline json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::kIo, "cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::kIo, "cannot parse " + path + ": " + e.what());
  }
  return j;
}

inline void save_json_file(const json& j, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out << j.dump(2) << "\n";
}

}  // namespace nnv::detail
