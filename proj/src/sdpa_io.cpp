#include "nnv/sdpa_io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "reduced_form.hpp"

namespace nnv {

namespace {

bool is_diagonal_block(const SdpaProblem& p, std::size_t b) {
  for (const auto& mats : p.mats) {
    const Eigen::MatrixXd& m = mats[b];
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        if (i != j && m(i, j) != 0.0) return false;
      }
    }
  }
  return true;
}

std::string format_value(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

SdpaProblem to_sdpa_problem(const ConicProgram& program) {
  const detail::ReducedProblem rp = detail::reduce(program);
  if (!rp.equalities_consistent) {
    throw Error(ErrorKind::kInvalidInput,
                "cannot export a program with inconsistent equalities");
  }
  SdpaProblem out;
  out.c = rp.chat;
  out.block_sizes = rp.block_sizes;
  out.mats.resize(rp.chat.size() + 1);
  out.mats[0] = rp.F0;
  for (Eigen::Index k = 0; k < rp.chat.size(); ++k) out.mats[k + 1] = rp.Fk[k];
  return out;
}

void export_sdpa(const ConicProgram& program, const std::string& path) {
  export_sdpa(to_sdpa_problem(program), path);
}

void export_sdpa(const SdpaProblem& problem, const std::string& path) {
  std::ostringstream os;
  const int m = static_cast<int>(problem.c.size());
  const int nblocks = static_cast<int>(problem.block_sizes.size());
  os << m << "\n" << nblocks << "\n";
  for (int b = 0; b < nblocks; ++b) {
    Eigen::Index size = problem.block_sizes[b];
    if (size > 1 && is_diagonal_block(problem, b)) size = -size;
    os << (b ? " " : "") << size;
  }
  os << "\n";
  for (int k = 0; k < m; ++k) {
    os << (k ? " " : "") << format_value(problem.c[k]);
  }
  os << "\n";
  // SDPA convention: X = sum_k x_k F_k - F0 >= 0, so our constant block is
  // written negated.
  for (int k = 0; k <= m; ++k) {
    const double sign = k == 0 ? -1.0 : 1.0;
    for (int b = 0; b < nblocks; ++b) {
      const Eigen::MatrixXd& mat = problem.mats[k][b];
      for (Eigen::Index i = 0; i < mat.rows(); ++i) {
        for (Eigen::Index j = i; j < mat.cols(); ++j) {
          const double v = sign * mat(i, j);
          if (v == 0.0) continue;
          os << k << " " << b + 1 << " " << i + 1 << " " << j + 1 << " "
             << format_value(v) << "\n";
        }
      }
    }
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) {
    throw Error(ErrorKind::kIo, "cannot open " + path + " for writing");
  }
  file << os.str();
  if (!file) {
    throw Error(ErrorKind::kIo, "failed writing " + path);
  }
}

SdpaProblem import_sdpa(const std::string& path) {
  std::ifstream file(path);
  if (!file) {
    throw Error(ErrorKind::kIo, "cannot open " + path);
  }
  // Strip SDPA comment lines (starting with '"' or '*') and the punctuation
  // some writers use in the block-size line.
  std::ostringstream clean;
  std::string line;
  while (std::getline(file, line)) {
    if (!line.empty() && (line[0] == '"' || line[0] == '*')) continue;
    for (char& ch : line) {
      if (ch == ',' || ch == '(' || ch == ')' || ch == '{' || ch == '}') {
        ch = ' ';
      }
    }
    clean << line << "\n";
  }
  std::istringstream in(clean.str());

  SdpaProblem out;
  int m = 0, nblocks = 0;
  if (!(in >> m >> nblocks) || m < 0 || nblocks < 0) {
    throw Error(ErrorKind::kIo, "malformed SDPA header in " + path);
  }
  out.block_sizes.resize(nblocks);
  for (int b = 0; b < nblocks; ++b) {
    long long s = 0;
    if (!(in >> s)) throw Error(ErrorKind::kIo, "missing block sizes");
    out.block_sizes[b] = std::abs(s);
  }
  out.c.resize(m);
  for (int k = 0; k < m; ++k) {
    if (!(in >> out.c[k])) throw Error(ErrorKind::kIo, "missing objective");
  }
  out.mats.assign(m + 1, {});
  for (auto& mats : out.mats) {
    for (int b = 0; b < nblocks; ++b) {
      mats.emplace_back(
          Eigen::MatrixXd::Zero(out.block_sizes[b], out.block_sizes[b]));
    }
  }
  int k = 0, b = 0;
  long long i = 0, j = 0;
  double v = 0.0;
  while (in >> k >> b >> i >> j >> v) {
    if (k < 0 || k > m || b < 1 || b > nblocks || i < 1 || j < 1 ||
        i > out.block_sizes[b - 1] || j > out.block_sizes[b - 1]) {
      throw Error(ErrorKind::kIo, "entry out of range in " + path);
    }
    const double signed_v = k == 0 ? -v : v;
    out.mats[k][b - 1](i - 1, j - 1) = signed_v;
    out.mats[k][b - 1](j - 1, i - 1) = signed_v;
  }
  return out;
}

}  // namespace nnv
