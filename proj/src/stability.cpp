#include "nnv/stability.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "json_util.hpp"

namespace nnv {

namespace {

struct LoopContext {
  TransformedForm tf;
  Eigen::Index n_x = 0;
  Eigen::Index n_u = 0;
  Eigen::Index n_phi = 0;  // after affine-neuron folding
};

LoopContext make_context(const NeuralNetwork& net, const SectorData& sectors,
                         double bias_tol) {
  sectors.validate();
  if (sectors.size() != net.total_neurons()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sector count does not match the network's neuron count");
  }
  LoopContext ctx;
  const StackedForm sf = build_stacked(net);
  ctx.tf = loop_transform(sf, sectors);
  ctx.n_x = net.input_dim();
  ctx.n_u = net.output_dim();
  ctx.n_phi = ctx.tf.N_vx.rows();

  const double shift =
      std::max(ctx.tf.bias_u.size() ? ctx.tf.bias_u.lpNorm<Eigen::Infinity>() : 0.0,
               ctx.tf.bias_v.size() ? ctx.tf.bias_v.lpNorm<Eigen::Infinity>() : 0.0);
  if (shift > bias_tol) {
    throw Error(ErrorKind::kInvalidInput,
                "the transformed loop has a nonzero equilibrium shift at the "
                "origin (" +
                    std::to_string(shift) +
                    "); stability verification requires x* = 0");
  }
  return ctx;
}

struct StabilityBlocks {
  int q1 = -1;
  int q2 = -1;
  int l1 = -1;
  int l2 = -1;
  int lmi = -1;
};

// Assembles the 2(n_x+n_phi) block LMI H - eps I >= 0. The (3,1)/(3,2)
// blocks — the closed-loop image of [Q1; Q2] — are supplied by the caller:
// data-driven X1 L1 / X1 L2, or model-based (A + B Nt_ux) Q1 / B Nt_uz Q2.
StabilityBlocks assemble_common(ConicProgram& prog, const LoopContext& ctx,
                                double eps, bool with_data,
                                Eigen::Index samples) {
  const Eigen::Index n_x = ctx.n_x, n_phi = ctx.n_phi;
  StabilityBlocks blocks;
  blocks.q1 = prog.add_psd_block("Q1", n_x);
  if (n_phi > 0) blocks.q2 = prog.add_nonneg_block("Q2", n_phi);
  if (with_data) {
    blocks.l1 = prog.add_free_block("L1", samples, n_x);
    if (n_phi > 0) blocks.l2 = prog.add_free_block("L2", samples, n_phi);
  }
  blocks.lmi = prog.add_lmi("H", 2 * (n_x + n_phi));

  const Eigen::Index r0 = 0, r1 = n_x, r2 = n_x + n_phi, r3 = 2 * n_x + n_phi;

  // Diagonal blocks Q1, Q2, Q1, Q2 (with the strictness margin).
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index j = i; j < n_x; ++j) {
      LinExpr q = LinExpr::variable(prog.var(blocks.q1, i, j));
      LinExpr q_eps = q;
      if (i == j) q_eps.add_constant(-eps);
      prog.set_lmi_entry(blocks.lmi, r0 + i, r0 + j, q_eps);
      prog.set_lmi_entry(blocks.lmi, r2 + i, r2 + j, q_eps);
    }
  }
  for (Eigen::Index i = 0; i < n_phi; ++i) {
    LinExpr q = LinExpr::variable(prog.var(blocks.q2, i, 0));
    q.add_constant(-eps);
    prog.set_lmi_entry(blocks.lmi, r1 + i, r1 + i, q);
    prog.set_lmi_entry(blocks.lmi, r3 + i, r3 + i, q);
  }
  // (1,4): Q1 Nt_vx^T and (2,4): Q2 Nt_vz^T.
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index r = 0; r < n_phi; ++r) {
      LinExpr e;
      for (Eigen::Index s = 0; s < n_x; ++s) {
        const double c = ctx.tf.N_vx(r, s);
        if (c != 0.0) e.add(prog.var(blocks.q1, i, s), c);
      }
      prog.set_lmi_entry(blocks.lmi, r0 + i, r3 + r, e);
    }
  }
  for (Eigen::Index i = 0; i < n_phi; ++i) {
    for (Eigen::Index r = 0; r < n_phi; ++r) {
      LinExpr e;
      const double c = ctx.tf.N_vz(r, i);
      if (c != 0.0) e.add(prog.var(blocks.q2, i, 0), c);
      prog.set_lmi_entry(blocks.lmi, r1 + i, r3 + r, e);
    }
  }
  return blocks;
}

void set_objective(ConicProgram& prog, const StabilityBlocks& blocks,
                   Eigen::Index n_x, StabilityObjective objective) {
  if (objective == StabilityObjective::kFeasibility) return;
  LinExpr trace;
  for (Eigen::Index i = 0; i < n_x; ++i) {
    trace.add(prog.var(blocks.q1, i, i), 1.0);
  }
  prog.set_objective(trace, objective == StabilityObjective::kTraceMin);
}

StabilityCertificate extract(const ConicProgram& prog,
                             const StabilityBlocks& blocks,
                             const Solution& sol, double eps) {
  StabilityCertificate cert;
  cert.status = sol.status;
  cert.message = sol.message;
  cert.epsilon = eps;
  cert.objective_value = sol.objective;
  cert.residuals = sol.residuals;
  if (sol.status != SolveStatus::kOptimal) {
    cert.message = std::string("not certified: ") + to_string(sol.status) +
                   (sol.message.empty() ? "" : " (" + sol.message + ")");
    return cert;
  }
  cert.Q1 = prog.block_value(blocks.q1, sol.y);
  cert.Q2_diag = blocks.q2 >= 0
                     ? Eigen::VectorXd(prog.block_value(blocks.q2, sol.y))
                     : Eigen::VectorXd(0);
  if (blocks.l1 >= 0) cert.L1 = prog.block_value(blocks.l1, sol.y);
  if (blocks.l2 >= 0) cert.L2 = prog.block_value(blocks.l2, sol.y);
  cert.certified = sol.residuals.accepted;
  if (!cert.certified) {
    cert.message = "solver reported optimal but post-verification rejected "
                   "the certificate";
  }
  return cert;
}

}  // namespace

StabilityObjective parse_stability_objective(const std::string& text) {
  if (text == "feasibility") return StabilityObjective::kFeasibility;
  if (text == "trace_min") return StabilityObjective::kTraceMin;
  if (text == "trace_max") return StabilityObjective::kTraceMax;
  throw Error(ErrorKind::kInvalidInput,
              "unknown objective '" + text +
                  "' (expected feasibility, trace_min or trace_max)");
}

ConicProgram build_stability_program(const NeuralNetwork& net,
                                     const SectorData& sectors,
                                     const TrajectoryData& data,
                                     const StabilityOptions& options) {
  data.validate();
  if (data.state_dim() != net.input_dim() ||
      data.input_dim() != net.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "data dimensions do not match the controller");
  }
  const RankReport rank = check_excitation(data);
  if (!rank.pass) {
    throw Error(ErrorKind::kRankDeficient,
                "data is not exciting enough: rank([U0;X0]) = " +
                    std::to_string(rank.rank_data) + " of " +
                    std::to_string(rank.required_data) + ", rank(X1) = " +
                    std::to_string(rank.rank_x1) + " of " +
                    std::to_string(rank.required_x1));
  }
  const LoopContext ctx = make_context(net, sectors, options.bias_tol);
  const Eigen::Index n_x = ctx.n_x, n_u = ctx.n_u, n_phi = ctx.n_phi;
  const Eigen::Index k = data.samples();
  const Eigen::Index r0 = 0, r1 = n_x, r2 = n_x + n_phi;

  ConicProgram prog;
  const StabilityBlocks blocks =
      assemble_common(prog, ctx, options.epsilon, /*with_data=*/true, k);

  // (3,1) block X1 L1 and (3,2) block X1 L2, entered through the upper
  // triangle as L1^T X1^T / L2^T X1^T.
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index j = 0; j < n_x; ++j) {
      LinExpr e;
      for (Eigen::Index t = 0; t < k; ++t) {
        const double c = data.X1(j, t);
        if (c != 0.0) e.add(prog.var(blocks.l1, t, i), c);
      }
      prog.set_lmi_entry(blocks.lmi, r0 + i, r2 + j, e);
    }
  }
  for (Eigen::Index i = 0; i < n_phi; ++i) {
    for (Eigen::Index j = 0; j < n_x; ++j) {
      LinExpr e;
      for (Eigen::Index t = 0; t < k; ++t) {
        const double c = data.X1(j, t);
        if (c != 0.0) e.add(prog.var(blocks.l2, t, i), c);
      }
      prog.set_lmi_entry(blocks.lmi, r1 + i, r2 + j, e);
    }
  }

  // Data-consistency equalities [Nt_ux Q1; Q1] = [U0; X0] L1 and
  // [Nt_uz Q2; 0] = [U0; X0] L2.
  for (Eigen::Index r = 0; r < n_u; ++r) {
    for (Eigen::Index c = 0; c < n_x; ++c) {
      LinExpr e;
      for (Eigen::Index s = 0; s < n_x; ++s) {
        const double coeff = ctx.tf.N_ux(r, s);
        if (coeff != 0.0) e.add(prog.var(blocks.q1, s, c), coeff);
      }
      for (Eigen::Index t = 0; t < k; ++t) {
        const double coeff = data.U0(r, t);
        if (coeff != 0.0) e.add(prog.var(blocks.l1, t, c), -coeff);
      }
      prog.add_equality(e, 0.0);
    }
  }
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index c = 0; c < n_x; ++c) {
      LinExpr e = LinExpr::variable(prog.var(blocks.q1, i, c));
      for (Eigen::Index t = 0; t < k; ++t) {
        const double coeff = data.X0(i, t);
        if (coeff != 0.0) e.add(prog.var(blocks.l1, t, c), -coeff);
      }
      prog.add_equality(e, 0.0);
    }
  }
  for (Eigen::Index r = 0; r < n_u; ++r) {
    for (Eigen::Index c = 0; c < n_phi; ++c) {
      LinExpr e;
      const double coeff = ctx.tf.N_uz(r, c);
      if (coeff != 0.0) e.add(prog.var(blocks.q2, c, 0), coeff);
      for (Eigen::Index t = 0; t < k; ++t) {
        const double u = data.U0(r, t);
        if (u != 0.0) e.add(prog.var(blocks.l2, t, c), -u);
      }
      prog.add_equality(e, 0.0);
    }
  }
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index c = 0; c < n_phi; ++c) {
      LinExpr e;
      for (Eigen::Index t = 0; t < k; ++t) {
        const double x = data.X0(i, t);
        if (x != 0.0) e.add(prog.var(blocks.l2, t, c), x);
      }
      prog.add_equality(e, 0.0);
    }
  }

  set_objective(prog, blocks, n_x, options.objective);
  return prog;
}

StabilityCertificate verify_stability(const NeuralNetwork& net,
                                      const SectorData& sectors,
                                      const TrajectoryData& data,
                                      const StabilityOptions& options) {
  const ConicProgram prog =
      build_stability_program(net, sectors, data, options);
  // Recover the block handles; build_stability_program declares them in a
  // fixed order.
  StabilityBlocks blocks;
  blocks.q1 = 0;
  int next = 1;
  const LoopContext ctx = make_context(net, sectors, options.bias_tol);
  if (ctx.n_phi > 0) blocks.q2 = next++;
  blocks.l1 = next++;
  if (ctx.n_phi > 0) blocks.l2 = next++;
  blocks.lmi = 0;

  const Solution sol = solve(prog, options.solver);
  return extract(prog, blocks, sol, options.epsilon);
}

StabilityCertificate verify_stability_model(const NeuralNetwork& net,
                                            const SectorData& sectors,
                                            const OraclePlant& plant,
                                            const StabilityOptions& options) {
  if (plant.A.rows() != net.input_dim() || plant.B.cols() != net.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "plant dimensions do not match the controller");
  }
  const LoopContext ctx = make_context(net, sectors, options.bias_tol);
  const Eigen::Index n_x = ctx.n_x, n_phi = ctx.n_phi;
  const Eigen::Index r0 = 0, r1 = n_x, r2 = n_x + n_phi;

  ConicProgram prog;
  const StabilityBlocks blocks =
      assemble_common(prog, ctx, options.epsilon, /*with_data=*/false, 0);

  const Eigen::MatrixXd acl = plant.A + plant.B * ctx.tf.N_ux;
  const Eigen::MatrixXd bnz = plant.B * ctx.tf.N_uz;
  // (3,1) block (A + B Nt_ux) Q1 and (3,2) block B Nt_uz Q2.
  for (Eigen::Index i = 0; i < n_x; ++i) {
    for (Eigen::Index j = 0; j < n_x; ++j) {
      LinExpr e;
      for (Eigen::Index s = 0; s < n_x; ++s) {
        const double c = acl(j, s);
        if (c != 0.0) e.add(prog.var(blocks.q1, s, i), c);
      }
      prog.set_lmi_entry(blocks.lmi, r0 + i, r2 + j, e);
    }
  }
  for (Eigen::Index i = 0; i < n_phi; ++i) {
    for (Eigen::Index j = 0; j < n_x; ++j) {
      LinExpr e;
      const double c = bnz(j, i);
      if (c != 0.0) e.add(prog.var(blocks.q2, i, 0), c);
      prog.set_lmi_entry(blocks.lmi, r1 + i, r2 + j, e);
    }
  }

  set_objective(prog, blocks, n_x, options.objective);
  const Solution sol = solve(prog, options.solver);
  return extract(prog, blocks, sol, options.epsilon);
}

Eigen::MatrixXd roa_ellipsoid(const StabilityCertificate& cert,
                              std::pair<Eigen::Index, Eigen::Index> axes,
                              int grid) {
  if (!cert.certified) {
    throw Error(ErrorKind::kInvalidInput,
                "ROA slice requires a certified Q1");
  }
  const Eigen::Index n = cert.Q1.rows();
  const auto [a, b] = axes;
  if (a < 0 || b < 0 || a >= n || b >= n || a == b || grid < 3) {
    throw Error(ErrorKind::kInvalidInput, "invalid ROA slice request");
  }
  Eigen::LLT<Eigen::MatrixXd> llt(cert.Q1);
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "Q1 is not positive definite");
  }
  const Eigen::MatrixXd p = llt.solve(Eigen::MatrixXd::Identity(n, n));
  Eigen::Matrix2d p_sub;
  p_sub << p(a, a), p(a, b), p(b, a), p(b, b);
  Eigen::LLT<Eigen::Matrix2d> sub(0.5 * (p_sub + p_sub.transpose()));
  if (sub.info() != Eigen::Success) {
    throw Error(ErrorKind::kNumerical, "sliced Q1^{-1} is not positive definite");
  }
  const Eigen::Matrix2d l = sub.matrixL();
  Eigen::MatrixXd points(grid + 1, 2);
  for (int g = 0; g <= grid; ++g) {
    const double theta = 2.0 * std::numbers::pi * g / grid;
    Eigen::Vector2d unit(std::cos(theta), std::sin(theta));
    points.row(g) =
        l.transpose().triangularView<Eigen::Upper>().solve(unit).transpose();
  }
  points.row(grid) = points.row(0);
  return points;
}

void save_certificate(const StabilityCertificate& cert,
                      const std::string& path) {
  detail::json j;
  j["verdict"] = cert.certified ? "certified" : "not_certified";
  j["status"] = to_string(cert.status);
  if (!cert.message.empty()) j["message"] = cert.message;
  j["epsilon"] = cert.epsilon;
  j["objective_value"] = cert.objective_value;
  if (cert.Q1.size()) j["Q1"] = detail::to_json(cert.Q1);
  j["Q2_diag"] = detail::to_json(cert.Q2_diag);
  if (cert.L1.size()) j["L1"] = detail::to_json(cert.L1);
  if (cert.L2.size()) j["L2"] = detail::to_json(cert.L2);
  detail::json res;
  res["max_equality_residual"] = cert.residuals.max_equality_residual;
  res["min_cone_eigenvalue"] = cert.residuals.min_cone_eigenvalue;
  res["accepted"] = cert.residuals.accepted;
  j["residuals"] = res;
  detail::save_json_file(j, path);
}

void save_polyline_csv(const Eigen::MatrixXd& points, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::kIo, "cannot write " + path);
  out.precision(17);
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      if (j) out << ",";
      out << points(i, j);
    }
    out << "\n";
  }
  if (!out) throw Error(ErrorKind::kIo, "failed writing " + path);
}

}  // namespace nnv
