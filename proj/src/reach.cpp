#include "nnv/reach.hpp"

#include <algorithm>
#include <cmath>

#include "json_util.hpp"

namespace nnv {

namespace {

// Shared description of the polynomial variable space w = [w^0; w^1; ...; w^l]
// (state followed by the stacked hidden-layer outputs).
struct ReachContext {
  StackedForm sf;
  Eigen::Index n_x = 0;
  Eigen::Index n_u = 0;
  Eigen::Index n_phi = 0;
  Eigen::Index n_w = 0;       // n_x + n_phi
  Eigen::Index last_offset = 0;  // first variable of w^l within w
  Eigen::Index last_width = 0;   // width of w^l (n_x when l = 0)
  Eigen::MatrixXd w_out;      // W^{l+1}
  Eigen::VectorXd b_out;      // b^{l+1}
  std::vector<Polynomial> s_v;  // v_phi(w) - v_star, one per neuron
  std::vector<Polynomial> s_w;  // w_phi - w_star
};

ReachContext make_context(const NeuralNetwork& net, const SectorData& sectors) {
  sectors.validate();
  if (sectors.size() != net.total_neurons()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "sector count does not match the network's neuron count");
  }
  ReachContext ctx;
  ctx.sf = build_stacked(net);
  ctx.n_x = ctx.sf.n_x;
  ctx.n_u = ctx.sf.n_u;
  ctx.n_phi = ctx.sf.n_phi;
  ctx.n_w = ctx.n_x + ctx.n_phi;
  ctx.w_out = net.layers().back().W;
  ctx.b_out = net.layers().back().b;
  if (net.hidden_count() == 0) {
    ctx.last_offset = 0;
    ctx.last_width = ctx.n_x;
  } else {
    ctx.last_width = net.hidden_sizes().back();
    ctx.last_offset = ctx.n_w - ctx.last_width;
  }

  // v_phi(w) = N_vx w^0 + N_vw w_phi + bias_v is affine in w.
  const Eigen::Index n_w = ctx.n_w;
  for (Eigen::Index r = 0; r < ctx.n_phi; ++r) {
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(n_w);
    lin.head(ctx.n_x) = ctx.sf.N_vx.row(r).transpose();
    lin.tail(ctx.n_phi) = ctx.sf.N_vw.row(r).transpose();
    ctx.s_v.push_back(
        Polynomial::affine(lin, ctx.sf.bias_v(r) - sectors.v_star(r)));
    Eigen::VectorXd wl = Eigen::VectorXd::Zero(n_w);
    wl(ctx.n_x + r) = 1.0;
    ctx.s_w.push_back(Polynomial::affine(wl, -sectors.w_star(r)));
  }
  return ctx;
}

// Affine facet polynomial n^T (w^0 - center) + offset over the w space.
Polynomial facet_polynomial(const ReachContext& ctx, const Polytope& poly,
                            Eigen::Index facet) {
  Eigen::VectorXd lin = Eigen::VectorXd::Zero(ctx.n_w);
  lin.head(ctx.n_x) = poly.normals().row(facet).transpose();
  const double c0 =
      poly.offsets()(facet) - poly.normals().row(facet).dot(poly.center());
  return Polynomial::affine(lin, c0);
}

// Subtracts the Lemma-1 sector quadratic (with per-facet Lambda = diag(lambda))
// from p. lambda_block is a nonneg block of size n_phi.
void subtract_sector_quadratic(ParamPolynomial& p, ConicProgram& prog,
                               int lambda_block, const ReachContext& ctx,
                               const SectorData& sectors) {
  for (Eigen::Index i = 0; i < ctx.n_phi; ++i) {
    const double a = sectors.alpha(i), b = sectors.beta(i);
    Polynomial quad = (-2.0 * a * b) * (ctx.s_v[i] * ctx.s_v[i]);
    quad += (2.0 * (a + b)) * (ctx.s_v[i] * ctx.s_w[i]);
    quad -= 2.0 * (ctx.s_w[i] * ctx.s_w[i]);
    p.add_scaled(LinExpr::variable(prog.var(lambda_block, i, 0), -1.0), quad);
  }
}

// Subtracts sum_j g_j(w) [prev facet j](w) from p, allocating the multiplier
// variables (nonneg scalars for degree 0, one Gram block per facet for
// degree 2).
int resolve_multiplier_degree(const ReachOptions& options,
                              const ReachContext& ctx) {
  if (options.multiplier_degree >= 0) return options.multiplier_degree;
  return ctx.n_phi == 0 ? 0 : 2;
}

void subtract_multipliers(ParamPolynomial& p, ConicProgram& prog,
                          const ReachContext& ctx, const Polytope& prev,
                          int multiplier_degree) {
  const Eigen::Index m = prev.facets();
  if (multiplier_degree == 0) {
    const int sigma = prog.add_nonneg_block("g", m);
    for (Eigen::Index j = 0; j < m; ++j) {
      p.add_scaled(LinExpr::variable(prog.var(sigma, j, 0), -1.0),
                   facet_polynomial(ctx, prev, j));
    }
    return;
  }
  if (multiplier_degree != 2) {
    throw Error(ErrorKind::kUnsupported,
                "multiplier degree must be 0 or 2");
  }
  const std::vector<Monomial> basis =
      monomial_basis(static_cast<int>(ctx.n_w), 1);
  std::vector<Polynomial> basis_poly;
  for (const Monomial& mono : basis) {
    Polynomial q(static_cast<int>(ctx.n_w));
    q.add_term(mono, 1.0);
    basis_poly.push_back(q);
  }
  const int k = static_cast<int>(basis.size());
  for (Eigen::Index j = 0; j < m; ++j) {
    const int gram =
        prog.add_psd_block("g" + std::to_string(j) + ".gram", k);
    const Polynomial facet = facet_polynomial(ctx, prev, j);
    for (int a = 0; a < k; ++a) {
      for (int b = a; b < k; ++b) {
        const Polynomial prod = basis_poly[a] * basis_poly[b] * facet;
        p.add_scaled(
            LinExpr::variable(prog.var(gram, a, b), a == b ? -1.0 : -2.0),
            prod);
      }
    }
  }
}

struct FacetProgram {
  ConicProgram prog;
  int gamma_var = -1;
  SosConstraint sos;
};

void finish_program(FacetProgram& fp, const ParamPolynomial& p) {
  // Newton-polytope bound: a monomial can appear in the Gram basis only if
  // twice its exponent lies inside the support hull, so for a polynomial of
  // degree d the basis stops at floor(d/2). Odd top-degree coefficients are
  // forced to zero by matching equalities, which is exactly how the
  // multiplier products cancel; keeping the ceil basis instead would force
  // whole Gram rows to zero and destroy strict feasibility.
  const int basis_degree = p.degree() / 2;
  fp.sos = compile_sos(fp.prog, p,
                       monomial_basis(p.n_vars(), basis_degree), "facet");
  fp.prog.set_objective(LinExpr::variable(fp.gamma_var), /*minimize=*/true);
}

FacetResult solve_facet(const FacetProgram& fp, const ReachOptions& options,
                        Eigen::Index facet) {
  FacetResult out;
  const Solution sol = solve(fp.prog, options.solver);
  out.status = sol.status;
  out.message = sol.message;
  out.residuals = sol.residuals;
  if (sol.status == SolveStatus::kInfeasible) {
    out.message = "approximation unbounded in this facet direction";
    return out;
  }
  if (sol.status != SolveStatus::kOptimal) {
    out.message = std::string("not certified: ") + to_string(sol.status) +
                  (sol.message.empty() ? "" : " (" + sol.message + ")");
    return out;
  }
  std::mt19937_64 rng(0x5eed0000ull + static_cast<std::uint64_t>(facet));
  out.sos =
      verify_sos_certificate(fp.prog, fp.sos, sol.y, options.sos_samples, rng);
  out.certified = sol.residuals.accepted && out.sos.accepted;
  if (out.certified) {
    out.gamma = sol.y[fp.gamma_var];
  } else {
    out.message = "solver reported optimal but post-verification rejected "
                  "the certificate";
  }
  return out;
}

StepResult collect_step(std::vector<FacetResult> facets) {
  StepResult step;
  step.facets = std::move(facets);
  step.gamma.resize(static_cast<Eigen::Index>(step.facets.size()));
  step.certified = true;
  for (std::size_t i = 0; i < step.facets.size(); ++i) {
    step.gamma[static_cast<Eigen::Index>(i)] = step.facets[i].gamma;
    step.certified = step.certified && step.facets[i].certified;
  }
  return step;
}

void check_geometry(const ReachContext& ctx, const Polytope& prev,
                    const Polytope& safe_template) {
  if (prev.dim() != ctx.n_x || safe_template.dim() != ctx.n_x) {
    throw Error(ErrorKind::kDimensionMismatch,
                "polytope dimension does not match the state dimension");
  }
}

FacetProgram build_data_facet(const ReachContext& ctx,
                              const SectorData& sectors,
                              const TrajectoryData& data, const Polytope& prev,
                              const Polytope& safe_template, Eigen::Index i,
                              const ReachOptions& options) {
  const Eigen::Index k = data.samples();
  const Eigen::Index n_x = ctx.n_x, n_u = ctx.n_u;
  FacetProgram fp;
  {
    ConicProgram& prog = fp.prog;
    const int gamma_block = prog.add_free_block("gamma", 1, 1);
    const int gamma_var = prog.var(gamma_block, 0, 0);
    fp.gamma_var = gamma_var;
    const int lambda =
        ctx.n_phi > 0 ? prog.add_nonneg_block("lambda", ctx.n_phi) : -1;
    const int g1 = prog.add_free_block("G1", k, n_x);
    const int g2 = prog.add_free_block("G2", k, ctx.last_width);
    const int g3 = prog.add_free_block("G3", k, 1);

    // Data-consistency equalities [0; I] = [U0; X0] G1,
    // [W^{l+1}; 0] = [U0; X0] G2, [b^{l+1}; 0] = [U0; X0] G3.
    auto bind = [&](int block, Eigen::Index cols,
                    const Eigen::MatrixXd& top_rhs,
                    bool identity_bottom) {
      for (Eigen::Index r = 0; r < n_u; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          LinExpr e;
          for (Eigen::Index t = 0; t < k; ++t) {
            const double u = data.U0(r, t);
            if (u != 0.0) e.add(prog.var(block, t, c), u);
          }
          prog.add_equality(e, top_rhs(r, c));
        }
      }
      for (Eigen::Index rr = 0; rr < n_x; ++rr) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          LinExpr e;
          for (Eigen::Index t = 0; t < k; ++t) {
            const double x = data.X0(rr, t);
            if (x != 0.0) e.add(prog.var(block, t, c), x);
          }
          prog.add_equality(e, identity_bottom && rr == c ? 1.0 : 0.0);
        }
      }
    };
    bind(g1, n_x, Eigen::MatrixXd::Zero(n_u, n_x), /*identity_bottom=*/true);
    bind(g2, ctx.last_width, ctx.w_out, /*identity_bottom=*/false);
    bind(g3, 1, Eigen::MatrixXd(ctx.b_out), /*identity_bottom=*/false);

    // Facet image term d_i^T [X1 G1 w^0 + X1 G2 w^l + X1 G3 - x_safe] + gamma.
    ParamPolynomial p(static_cast<int>(ctx.n_w));
    const Eigen::RowVectorXd a =
        safe_template.normals().row(i) * data.X1;  // 1 x K
    for (Eigen::Index s = 0; s < n_x; ++s) {
      LinExpr coeff;
      for (Eigen::Index t = 0; t < k; ++t) {
        if (a(t) != 0.0) coeff.add(prog.var(g1, t, s), a(t));
      }
      Monomial mono(static_cast<std::size_t>(ctx.n_w), 0);
      mono[static_cast<std::size_t>(s)] = 1;
      p.add_term(mono, coeff);
    }
    for (Eigen::Index c = 0; c < ctx.last_width; ++c) {
      LinExpr coeff;
      for (Eigen::Index t = 0; t < k; ++t) {
        if (a(t) != 0.0) coeff.add(prog.var(g2, t, c), a(t));
      }
      Monomial mono(static_cast<std::size_t>(ctx.n_w), 0);
      mono[static_cast<std::size_t>(ctx.last_offset + c)] = 1;
      p.add_term(mono, coeff);
    }
    LinExpr constant = LinExpr::variable(gamma_var);
    constant.add_constant(
        -safe_template.normals().row(i).dot(safe_template.center()));
    for (Eigen::Index t = 0; t < k; ++t) {
      if (a(t) != 0.0) constant.add(prog.var(g3, t, 0), a(t));
    }
    p.add_term(Monomial(static_cast<std::size_t>(ctx.n_w), 0), constant);

    subtract_multipliers(p, prog, ctx, prev,
                         resolve_multiplier_degree(options, ctx));
    if (lambda >= 0) subtract_sector_quadratic(p, prog, lambda, ctx, sectors);
    finish_program(fp, p);
  }
  return fp;
}

FacetProgram build_model_facet(const ReachContext& ctx,
                               const SectorData& sectors,
                               const OraclePlant& plant, const Polytope& prev,
                               const Polytope& safe_template, Eigen::Index i,
                               const ReachOptions& options) {
  const Eigen::Index n_x = ctx.n_x;
  FacetProgram fp;
  {
    ConicProgram& prog = fp.prog;
    const int gamma_block = prog.add_free_block("gamma", 1, 1);
    const int gamma_var = prog.var(gamma_block, 0, 0);
    fp.gamma_var = gamma_var;
    const int lambda =
        ctx.n_phi > 0 ? prog.add_nonneg_block("lambda", ctx.n_phi) : -1;

    // d_i^T [A w^0 + B (W^{l+1} w^l + b^{l+1}) - x_safe] + gamma.
    const Eigen::RowVectorXd d = safe_template.normals().row(i);
    const Eigen::RowVectorXd da = d * plant.A;
    const Eigen::RowVectorXd dbw = d * plant.B * ctx.w_out;
    Eigen::VectorXd lin = Eigen::VectorXd::Zero(ctx.n_w);
    lin.head(n_x) += da.transpose();
    lin.segment(ctx.last_offset, ctx.last_width) += dbw.transpose();
    const double c0 = d.dot(plant.B * ctx.b_out) - d.dot(safe_template.center());
    ParamPolynomial p =
        ParamPolynomial::from(Polynomial::affine(lin, c0));
    p.add_term(Monomial(static_cast<std::size_t>(ctx.n_w), 0),
               LinExpr::variable(gamma_var));

    subtract_multipliers(p, prog, ctx, prev,
                         resolve_multiplier_degree(options, ctx));
    if (lambda >= 0) subtract_sector_quadratic(p, prog, lambda, ctx, sectors);
    finish_program(fp, p);
  }
  return fp;
}

void check_data(const NeuralNetwork& net, const TrajectoryData& data) {
  data.validate();
  if (data.state_dim() != net.input_dim() ||
      data.input_dim() != net.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "data dimensions do not match the controller");
  }
  const RankReport rank = check_excitation(data);
  if (!rank.pass) {
    throw Error(ErrorKind::kRankDeficient,
                "data is not exciting enough for reachability analysis");
  }
}

}  // namespace

StepResult reach_step(const NeuralNetwork& net, const SectorData& sectors,
                      const TrajectoryData& data, const Polytope& prev,
                      const Polytope& safe_template,
                      const ReachOptions& options) {
  check_data(net, data);
  const ReachContext ctx = make_context(net, sectors);
  check_geometry(ctx, prev, safe_template);
  std::vector<FacetResult> facets;
  for (Eigen::Index i = 0; i < safe_template.facets(); ++i) {
    const FacetProgram fp =
        build_data_facet(ctx, sectors, data, prev, safe_template, i, options);
    facets.push_back(solve_facet(fp, options, i));
  }
  return collect_step(std::move(facets));
}

ConicProgram build_reach_facet_program(const NeuralNetwork& net,
                                       const SectorData& sectors,
                                       const TrajectoryData& data,
                                       const Polytope& prev,
                                       const Polytope& safe_template,
                                       Eigen::Index facet,
                                       const ReachOptions& options) {
  check_data(net, data);
  const ReachContext ctx = make_context(net, sectors);
  check_geometry(ctx, prev, safe_template);
  if (facet < 0 || facet >= safe_template.facets()) {
    throw Error(ErrorKind::kInvalidInput, "facet index out of range");
  }
  return build_data_facet(ctx, sectors, data, prev, safe_template, facet,
                          options)
      .prog;
}

StepResult reach_step_model(const NeuralNetwork& net, const SectorData& sectors,
                            const OraclePlant& plant, const Polytope& prev,
                            const Polytope& safe_template,
                            const ReachOptions& options) {
  if (plant.A.rows() != net.input_dim() || plant.B.cols() != net.output_dim()) {
    throw Error(ErrorKind::kDimensionMismatch,
                "plant dimensions do not match the controller");
  }
  const ReachContext ctx = make_context(net, sectors);
  check_geometry(ctx, prev, safe_template);
  std::vector<FacetResult> facets;
  for (Eigen::Index i = 0; i < safe_template.facets(); ++i) {
    const FacetProgram fp =
        build_model_facet(ctx, sectors, plant, prev, safe_template, i, options);
    facets.push_back(solve_facet(fp, options, i));
  }
  return collect_step(std::move(facets));
}

namespace {

template <typename StepFn>
ReachResult run_safety(StepFn&& step_fn, const Polytope& input_set,
                       const Polytope& safe_set, int horizon) {
  if (horizon < 1) {
    throw Error(ErrorKind::kInvalidInput, "horizon must be at least 1");
  }
  if (!contains_polytope(safe_set, input_set)) {
    throw Error(ErrorKind::kInvalidInput,
                "the input set is not contained in the safe set");
  }
  ReachResult result;
  result.horizon = horizon;
  Polytope prev = input_set;
  for (int k = 1; k <= horizon; ++k) {
    StepResult step = step_fn(prev, safe_set);
    const bool step_safe = step.certified && step.gamma.maxCoeff() <= 1.0;
    result.steps.push_back(step);
    if (!step.certified) {
      result.message =
          "not certified beyond step " + std::to_string(k - 1);
      return result;
    }
    result.certified_steps = k;
    if (!step_safe) {
      result.message = "reachable-set bound leaves the safe set at step " +
                       std::to_string(k);
      return result;
    }
    prev = safe_set.with_offsets(step.gamma);
  }
  result.safe = true;
  result.message = "safe for k = 1.." + std::to_string(horizon);
  return result;
}

}  // namespace

ReachResult verify_safety(const NeuralNetwork& net, const SectorData& sectors,
                          const TrajectoryData& data, const Polytope& input_set,
                          const Polytope& safe_set, int horizon,
                          const ReachOptions& options) {
  return run_safety(
      [&](const Polytope& prev, const Polytope& tmpl) {
        return reach_step(net, sectors, data, prev, tmpl, options);
      },
      input_set, safe_set, horizon);
}

ReachResult verify_safety_model(const NeuralNetwork& net,
                                const SectorData& sectors,
                                const OraclePlant& plant,
                                const Polytope& input_set,
                                const Polytope& safe_set, int horizon,
                                const ReachOptions& options) {
  return run_safety(
      [&](const Polytope& prev, const Polytope& tmpl) {
        return reach_step_model(net, sectors, plant, prev, tmpl, options);
      },
      input_set, safe_set, horizon);
}

InvarianceResult verify_invariance(const NeuralNetwork& net,
                                   const SectorData& sectors,
                                   const TrajectoryData& data,
                                   const Polytope& b_set,
                                   const ReachOptions& options) {
  InvarianceResult out;
  out.step = reach_step(net, sectors, data, b_set, b_set, options);
  out.invariant = out.step.certified && out.step.gamma.maxCoeff() <= 1.0;
  out.message = out.invariant
                    ? "certified invariant"
                    : (out.step.certified
                           ? "one-step image bound exceeds the set"
                           : "not certified");
  return out;
}

SafetyViaInvariance safety_via_invariance(const Polytope& input_set,
                                          const Polytope& b_set,
                                          const Polytope& safe_set,
                                          const InvarianceResult& invariance) {
  SafetyViaInvariance out;
  if (!contains_polytope(b_set, input_set)) {
    out.message = "not applicable: the input set is not contained in B";
    return out;
  }
  if (!contains_polytope(safe_set, b_set)) {
    out.message = "not applicable: B is not contained in the safe set";
    return out;
  }
  out.applicable = true;
  out.safe_for_all_time = invariance.invariant;
  out.message = invariance.invariant
                    ? "safe for all time (invariant B between X and S)"
                    : "B is not certified invariant";
  return out;
}

void save_reach_result(const ReachResult& result, const std::string& path) {
  detail::json j;
  j["verdict"] = result.safe ? "safe" : "not_certified";
  j["horizon"] = result.horizon;
  j["certified_steps"] = result.certified_steps;
  j["message"] = result.message;
  detail::json steps = detail::json::array();
  for (std::size_t k = 0; k < result.steps.size(); ++k) {
    const StepResult& step = result.steps[k];
    detail::json js;
    js["k"] = k + 1;
    js["certified"] = step.certified;
    js["gamma"] = detail::to_json(step.gamma);
    detail::json facets = detail::json::array();
    for (const FacetResult& f : step.facets) {
      detail::json jf;
      jf["gamma"] = f.gamma;
      jf["certified"] = f.certified;
      jf["status"] = to_string(f.status);
      jf["min_gram_eigenvalue"] = f.sos.min_gram_eigenvalue;
      jf["max_match_residual"] = f.sos.max_match_residual;
      if (!f.message.empty()) jf["message"] = f.message;
      facets.push_back(jf);
    }
    js["facets"] = facets;
    steps.push_back(js);
  }
  j["steps"] = steps;
  detail::save_json_file(j, path);
}

Eigen::MatrixXd polytope_slice(const Polytope& poly,
                               std::pair<Eigen::Index, Eigen::Index> axes) {
  const auto [a, b] = axes;
  if (a < 0 || b < 0 || a >= poly.dim() || b >= poly.dim() || a == b) {
    throw Error(ErrorKind::kInvalidInput, "invalid slice axes");
  }
  // Fixing the off-plane coordinates at 0 turns each facet into
  // n_sub^T (y - c_sub) + [offset - sum_off n_j c_j] >= 0.
  Eigen::MatrixXd normals(poly.facets(), 2);
  Eigen::VectorXd offsets(poly.facets());
  Eigen::Vector2d center(poly.center()(a), poly.center()(b));
  for (Eigen::Index i = 0; i < poly.facets(); ++i) {
    normals(i, 0) = poly.normals()(i, a);
    normals(i, 1) = poly.normals()(i, b);
    double shift = 0.0;
    for (Eigen::Index jx = 0; jx < poly.dim(); ++jx) {
      if (jx != a && jx != b) shift -= poly.normals()(i, jx) * poly.center()(jx);
    }
    offsets(i) = poly.offsets()(i) + shift;
  }
  const Polytope slice(normals, center, offsets);
  std::vector<Eigen::VectorXd> verts = slice.vertices();
  if (verts.empty()) {
    throw Error(ErrorKind::kInvalidInput, "empty slice");
  }
  Eigen::Vector2d centroid = Eigen::Vector2d::Zero();
  for (const auto& v : verts) centroid += v;
  centroid /= static_cast<double>(verts.size());
  std::sort(verts.begin(), verts.end(),
            [&](const Eigen::VectorXd& u, const Eigen::VectorXd& v) {
              return std::atan2(u(1) - centroid(1), u(0) - centroid(0)) <
                     std::atan2(v(1) - centroid(1), v(0) - centroid(0));
            });
  Eigen::MatrixXd points(verts.size() + 1, 2);
  for (std::size_t i = 0; i < verts.size(); ++i) points.row(i) = verts[i];
  points.row(static_cast<Eigen::Index>(verts.size())) = points.row(0);
  return points;
}

}  // namespace nnv
