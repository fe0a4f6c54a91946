#include <cmath>
#include <cstdio>
#include <limits>
#include <vector>

#include "nnv/conic.hpp"
#include "reduced_form.hpp"

namespace nnv {

namespace detail {

ReducedProblem reduce(const ConicProgram& program) {
  ReducedProblem rp;
  const int n = program.num_vars();
  const auto& equalities = program.equalities();
  const int m_eq = static_cast<int>(equalities.size());

  if (m_eq > 0) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(m_eq, n);
    Eigen::VectorXd f(m_eq);
    for (int r = 0; r < m_eq; ++r) {
      for (const auto& [v, c] : equalities[r].first.terms()) e(r, v) = c;
      f[r] = equalities[r].second - equalities[r].first.constant();
    }
    Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(e);
    rp.y0 = cod.solve(f);
    rp.equalities_consistent =
        (e * rp.y0 - f).norm() <= 1e-8 * (1.0 + f.norm());
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(e.transpose());
    const Eigen::Index rank = qr.rank();
    Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, n);
    rp.Z = q.rightCols(n - rank);
  } else {
    rp.y0 = Eigen::VectorXd::Zero(n);
    rp.Z = Eigen::MatrixXd::Identity(n, n);
  }

  const int m = static_cast<int>(rp.Z.cols());
  rp.obj_sign = program.minimize() ? 1.0 : -1.0;

  Eigen::VectorXd c = Eigen::VectorXd::Zero(n);
  for (const auto& [v, coeff] : program.objective().terms()) c[v] = coeff;
  c *= rp.obj_sign;
  rp.chat = rp.Z.transpose() * c;
  rp.obj_constant = c.dot(rp.y0) + rp.obj_sign * program.objective().constant();

  rp.Fk.assign(m, {});
  auto push_block = [&](Eigen::Index size) {
    rp.block_sizes.push_back(size);
    rp.F0.emplace_back(Eigen::MatrixXd::Zero(size, size));
    for (int k = 0; k < m; ++k) {
      rp.Fk[k].emplace_back(Eigen::MatrixXd::Zero(size, size));
    }
  };
  auto add_entry = [&](Eigen::Index i, Eigen::Index j, const LinExpr& expr) {
    const size_t b = rp.F0.size() - 1;
    double f0 = expr.constant();
    for (const auto& [v, coeff] : expr.terms()) {
      f0 += coeff * rp.y0[v];
      for (int k = 0; k < m; ++k) {
        const double zk = coeff * rp.Z(v, k);
        if (zk != 0.0) {
          rp.Fk[k][b](i, j) += zk;
          if (i != j) rp.Fk[k][b](j, i) += zk;
        }
      }
    }
    rp.F0[b](i, j) += f0;
    if (i != j) rp.F0[b](j, i) += f0;
  };

  for (size_t bi = 0; bi < program.blocks().size(); ++bi) {
    const VarBlock& blk = program.blocks()[bi];
    if (blk.cone == ConeTag::kFree || blk.rows == 0) continue;
    if (blk.cone == ConeTag::kPsd) {
      push_block(blk.rows);
      for (Eigen::Index j = 0; j < blk.cols; ++j) {
        for (Eigen::Index i = 0; i <= j; ++i) {
          add_entry(i, j,
                    LinExpr::variable(program.var(static_cast<int>(bi), i, j)));
        }
      }
    } else {  // nonneg vector as a diagonal LMI block
      push_block(blk.rows);
      for (Eigen::Index i = 0; i < blk.rows; ++i) {
        add_entry(i, i,
                  LinExpr::variable(program.var(static_cast<int>(bi), i, 0)));
      }
    }
  }
  for (const LmiConstraint& lmi : program.lmis()) {
    if (lmi.n == 0) continue;
    push_block(lmi.n);
    for (Eigen::Index j = 0; j < lmi.n; ++j) {
      for (Eigen::Index i = 0; i <= j; ++i) add_entry(i, j, lmi.at(i, j));
    }
  }

  // The map t -> sum_k t_k Fk can be rank deficient (directions that only
  // move free variables, or whose cone images are linearly dependent), which
  // would make the interior-point Schur system singular. Reparametrize the
  // directions onto an orthonormal basis of the map's row space; objective
  // components along its nullspace make the problem unbounded.
  if (m > 0) {
    Eigen::Index cone_dim = 0;
    for (Eigen::Index s : rp.block_sizes) cone_dim += s * s;
    Eigen::MatrixXd gm(cone_dim, m);
    for (int k = 0; k < m; ++k) {
      Eigen::Index at = 0;
      for (const Eigen::MatrixXd& blk : rp.Fk[k]) {
        gm.col(k).segment(at, blk.size()) =
            Eigen::Map<const Eigen::VectorXd>(blk.data(), blk.size());
        at += blk.size();
      }
    }
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(
        gm, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const double smax = svd.singularValues().size() > 0
                            ? svd.singularValues()(0)
                            : 0.0;
    Eigen::Index r = 0;
    while (r < svd.singularValues().size() &&
           svd.singularValues()(r) > std::max(1e-12, 1e-12 * smax)) {
      ++r;
    }
    if (r < m) {
      const Eigen::MatrixXd vr = svd.matrixV().leftCols(r);
      if ((rp.chat - vr * (vr.transpose() * rp.chat)).norm() >
          1e-10 * (1.0 + rp.chat.norm())) {
        rp.unbounded_free_direction = true;
      }
      // Use the orthonormal cone-side basis directly and fold the singular
      // values into the change of variables, so the new Fk are well scaled.
      const Eigen::MatrixXd vscaled =
          vr * svd.singularValues().head(r).cwiseInverse().asDiagonal();
      const Eigen::VectorXd chat_r = vscaled.transpose() * rp.chat;
      const Eigen::MatrixXd cols = svd.matrixU().leftCols(r);
      std::vector<std::vector<Eigen::MatrixXd>> fk(static_cast<std::size_t>(r));
      for (Eigen::Index k = 0; k < r; ++k) {
        Eigen::Index at = 0;
        for (Eigen::Index s : rp.block_sizes) {
          Eigen::MatrixXd blk =
              Eigen::Map<const Eigen::MatrixXd>(cols.col(k).data() + at, s, s);
          fk[static_cast<std::size_t>(k)].emplace_back(
              0.5 * (blk + blk.transpose()));
          at += s * s;
        }
      }
      rp.Fk = std::move(fk);
      rp.Z = rp.Z * vscaled;
      rp.chat = chat_r;
    }
  }
  return rp;
}

}  // namespace detail

namespace {

using detail::ReducedProblem;

using BlockMat = std::vector<Eigen::MatrixXd>;

double block_dot(const BlockMat& a, const BlockMat& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.size(); ++i) s += a[i].cwiseProduct(b[i]).sum();
  return s;
}

double block_norm(const BlockMat& a) {
  double s = 0.0;
  for (const auto& m : a) s += m.squaredNorm();
  return std::sqrt(s);
}

/// Largest alpha in (0, 1] with X + alpha * dX >= 0, given X > 0.
double max_psd_step(const BlockMat& x, const BlockMat& dx) {
  double alpha = 1.0;
  for (size_t b = 0; b < x.size(); ++b) {
    Eigen::LLT<Eigen::MatrixXd> llt(x[b]);
    if (llt.info() != Eigen::Success) return 0.0;
    const Eigen::MatrixXd l = llt.matrixL();
    const Eigen::MatrixXd w =
        l.triangularView<Eigen::Lower>().solve(
            l.triangularView<Eigen::Lower>().solve(dx[b]).transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(
        0.5 * (w + w.transpose()), Eigen::EigenvaluesOnly);
    const double lmin = eig.eigenvalues().minCoeff();
    if (lmin < 0.0) alpha = std::min(alpha, -1.0 / lmin);
  }
  return alpha;
}

double min_eig(const BlockMat& x) {
  double v = std::numeric_limits<double>::infinity();
  for (const auto& m : x) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(m, Eigen::EigenvaluesOnly);
    v = std::min(v, eig.eigenvalues().minCoeff());
  }
  return std::isfinite(v) ? v : 0.0;
}

struct IpmResult {
  SolveStatus status = SolveStatus::kNumericalFailure;
  Eigen::VectorXd t;
  int iterations = 0;
  std::string message;
};

IpmResult run_ipm(const ReducedProblem& rp, const SolverSettings& settings) {
  const int m = static_cast<int>(rp.chat.size());
  const size_t nb = rp.F0.size();
  double ntot = 0.0;
  for (Eigen::Index s : rp.block_sizes) ntot += static_cast<double>(s);

  IpmResult result;
  result.t = Eigen::VectorXd::Zero(m);

  if (nb == 0) {
    // No cone constraints at all: linear objective over free variables.
    if (rp.chat.norm() > 1e-12) {
      result.status = SolveStatus::kUnbounded;
    } else {
      result.status = SolveStatus::kOptimal;
    }
    return result;
  }

  if (m == 0) {
    result.status = min_eig(rp.F0) >= -settings.feasibility_tol
                        ? SolveStatus::kOptimal
                        : SolveStatus::kInfeasible;
    return result;
  }

  double data_scale = 1.0 + block_norm(rp.F0);
  for (int k = 0; k < m; ++k) data_scale = std::max(data_scale, block_norm(rp.Fk[k]));

  const double xi = std::max(10.0, data_scale);
  BlockMat x, s;
  for (size_t b = 0; b < nb; ++b) {
    x.push_back(xi * Eigen::MatrixXd::Identity(rp.block_sizes[b], rp.block_sizes[b]));
    s.push_back(xi * Eigen::MatrixXd::Identity(rp.block_sizes[b], rp.block_sizes[b]));
  }
  Eigen::VectorXd t = Eigen::VectorXd::Zero(m);

  const double cnorm = 1.0 + rp.chat.norm();
  const double f0norm = 1.0 + block_norm(rp.F0);

  BlockMat rd(nb), sinv(nb);
  std::vector<Eigen::LLT<Eigen::MatrixXd>> llts(nb);
  double last_rp_rel = std::numeric_limits<double>::infinity();
  double last_rd_rel = std::numeric_limits<double>::infinity();
  double last_gap = std::numeric_limits<double>::infinity();
  // Best iterate seen so far; degenerate problems can stall or diverge after
  // passing arbitrarily close to the optimum.
  double best_score = std::numeric_limits<double>::infinity();
  double best_rp_rel = best_score, best_rd_rel = best_score, best_gap = best_score;
  Eigen::VectorXd best_t = t;

  for (int iter = 0; iter < settings.max_iterations; ++iter) {
    result.iterations = iter;

    // Residuals.
    Eigen::VectorXd rpvec(m);
    for (int k = 0; k < m; ++k) rpvec[k] = rp.chat[k] - block_dot(rp.Fk[k], x);
    double mu = 0.0;
    for (size_t b = 0; b < nb; ++b) {
      rd[b] = rp.F0[b] - s[b];
      for (int k = 0; k < m; ++k) rd[b] += t[k] * rp.Fk[k][b];
      mu += x[b].cwiseProduct(s[b]).sum();
    }
    mu /= ntot;

    const double pobj = rp.chat.dot(t);
    const double dobj = -block_dot(rp.F0, x);
    const double gap = std::abs(pobj - dobj) / (1.0 + std::abs(pobj) + std::abs(dobj));
    const double rp_rel = rpvec.norm() / cnorm;
    const double rd_rel = block_norm(rd) / f0norm;
    last_rp_rel = rp_rel;
    last_rd_rel = rd_rel;
    last_gap = gap;
    const double score = std::max({rp_rel, rd_rel, gap});
    if (score < best_score) {
      best_score = score;
      best_rp_rel = rp_rel;
      best_rd_rel = rd_rel;
      best_gap = gap;
      best_t = t;
    }

    if (settings.verbose) {
      std::fprintf(stderr, "ipm %3d  mu=%9.2e  rp=%9.2e  rd=%9.2e  gap=%9.2e\n",
                   iter, mu, rp_rel, rd_rel, gap);
    }

    if (rp_rel <= settings.feasibility_tol && rd_rel <= settings.feasibility_tol &&
        gap <= settings.gap_tol) {
      result.status = SolveStatus::kOptimal;
      result.t = t;
      return result;
    }

    // Infeasibility / unboundedness certificates on the normalized iterates.
    {
      double xtrace = 0.0;
      for (const auto& xb : x) xtrace += xb.trace();
      if (xtrace > 1e5 * xi) {
        double amax = 0.0;
        for (int k = 0; k < m; ++k) {
          amax = std::max(amax, std::abs(block_dot(rp.Fk[k], x)) / xtrace);
        }
        const double cert = block_dot(rp.F0, x) / xtrace;
        if (amax <= 1e-9 * data_scale && cert < -1e-9 * data_scale) {
          result.status = SolveStatus::kInfeasible;
          result.message = "LMI infeasibility certificate found";
          return result;
        }
      }
      const double tnorm = t.norm();
      if (tnorm > 1e5 * std::max(1.0, xi)) {
        BlockMat ray(nb);
        for (size_t b = 0; b < nb; ++b) {
          ray[b] = Eigen::MatrixXd::Zero(rp.block_sizes[b], rp.block_sizes[b]);
          for (int k = 0; k < m; ++k) ray[b] += (t[k] / tnorm) * rp.Fk[k][b];
        }
        if (min_eig(ray) >= -1e-9 * data_scale &&
            rp.chat.dot(t) / tnorm < -1e-9 * cnorm) {
          result.status = SolveStatus::kUnbounded;
          result.t = t;
          result.message = "improving ray found; objective unbounded";
          return result;
        }
      }
    }

    // Factor S and precompute H_k = S^{-1} Fk X per block.
    bool ok = true;
    for (size_t b = 0; b < nb; ++b) {
      llts[b].compute(s[b]);
      if (llts[b].info() != Eigen::Success) {
        ok = false;
        break;
      }
      sinv[b] = llts[b].solve(
          Eigen::MatrixXd::Identity(rp.block_sizes[b], rp.block_sizes[b]));
    }
    if (!ok) {
      result.message = "dual block lost positive definiteness";
      break;
    }

    std::vector<BlockMat> h(m, BlockMat(nb));
    for (int k = 0; k < m; ++k) {
      for (size_t b = 0; b < nb; ++b) {
        h[k][b] = llts[b].solve(rp.Fk[k][b] * x[b]);
      }
    }

    // Schur complement M_kj = tr(Fk X Fj S^{-1}) = <Fk, H_j^T>.
    Eigen::MatrixXd schur(m, m);
    for (int k = 0; k < m; ++k) {
      for (int j = 0; j < m; ++j) {
        double v = 0.0;
        for (size_t b = 0; b < nb; ++b) {
          v += rp.Fk[k][b].cwiseProduct(h[j][b]).sum();
        }
        schur(k, j) = v;
      }
    }
    Eigen::PartialPivLU<Eigen::MatrixXd> schur_lu(schur);

    // tr(Fk X Rd S^{-1}) pieces shared by predictor and corrector.
    BlockMat w_rd(nb);
    for (size_t b = 0; b < nb; ++b) {
      w_rd[b] = (x[b] * llts[b].solve(rd[b]).transpose()).transpose();
    }
    Eigen::VectorXd base_rhs(m);
    for (int k = 0; k < m; ++k) {
      double v = -rpvec[k] - block_dot(rp.Fk[k], x);
      for (size_t b = 0; b < nb; ++b) {
        v -= rp.Fk[k][b].cwiseProduct(w_rd[b]).sum();
      }
      base_rhs[k] = v;
    }

    auto solve_direction = [&](double sigma_mu, const BlockMat* corr,
                               Eigen::VectorXd& dt, BlockMat& dxm, BlockMat& dsm) {
      // corr_sinv = Corr S^{-1}; tr(Fk Corr S^{-1}) = <Fk, S^{-1} Corr^T>.
      BlockMat corr_sinv(nb);
      if (corr) {
        for (size_t b = 0; b < nb; ++b) {
          corr_sinv[b] = llts[b].solve((*corr)[b].transpose()).transpose();
        }
      }
      Eigen::VectorXd rhs = base_rhs;
      for (int k = 0; k < m; ++k) {
        double v = 0.0;
        for (size_t b = 0; b < nb; ++b) {
          v += sigma_mu * rp.Fk[k][b].cwiseProduct(sinv[b]).sum();
          if (corr) {
            v -= rp.Fk[k][b].cwiseProduct(corr_sinv[b].transpose()).sum();
          }
        }
        rhs[k] += v;
      }
      dt = schur_lu.solve(rhs);
      dsm.resize(nb);
      dxm.resize(nb);
      for (size_t b = 0; b < nb; ++b) {
        dsm[b] = rd[b];
        for (int k = 0; k < m; ++k) dsm[b] += dt[k] * rp.Fk[k][b];
        Eigen::MatrixXd dx = sigma_mu * sinv[b] - x[b] -
                             x[b] * llts[b].solve(dsm[b]).transpose();
        if (corr) dx -= corr_sinv[b];
        dxm[b] = 0.5 * (dx + dx.transpose());
      }
    };

    // Predictor.
    Eigen::VectorXd dt_aff;
    BlockMat dx_aff, ds_aff;
    solve_direction(0.0, nullptr, dt_aff, dx_aff, ds_aff);
    if (!dt_aff.allFinite()) {
      result.message = "Schur system produced non-finite direction";
      break;
    }

    const double ap_aff = max_psd_step(x, dx_aff);
    const double ad_aff = max_psd_step(s, ds_aff);
    double mu_aff = 0.0;
    for (size_t b = 0; b < nb; ++b) {
      mu_aff += (x[b] + ap_aff * dx_aff[b])
                    .cwiseProduct(s[b] + ad_aff * ds_aff[b])
                    .sum();
    }
    mu_aff = std::max(mu_aff / ntot, 0.0);
    double sigma = std::pow(mu_aff / mu, 3.0);
    sigma = std::min(std::max(sigma, 1e-10), 1.0);

    // Corrector.
    BlockMat corr(nb);
    for (size_t b = 0; b < nb; ++b) corr[b] = dx_aff[b] * ds_aff[b];
    Eigen::VectorXd dt;
    BlockMat dx, ds;
    solve_direction(sigma * mu, &corr, dt, dx, ds);
    if (!dt.allFinite()) {
      result.message = "corrector direction non-finite";
      break;
    }

    const double tau = settings.step_fraction;
    const double ap = std::min(1.0, tau * max_psd_step(x, dx));
    const double ad = std::min(1.0, tau * max_psd_step(s, ds));
    if (ap < 1e-10 && ad < 1e-10) {
      result.message = "step sizes collapsed";
      break;
    }

    for (size_t b = 0; b < nb; ++b) {
      x[b] += ap * dx[b];
      x[b] = 0.5 * (x[b] + x[b].transpose());
      s[b] += ad * ds[b];
      s[b] = 0.5 * (s[b] + s[b].transpose());
    }
    t += ad * dt;
  }

  // Did not converge to full tolerance; fall back to the best iterate if it
  // is only mildly degraded (the certificate is post-verified independently
  // of the solver's own residuals), otherwise report failure.
  result.t = best_t;
  if (best_rp_rel <= 100.0 * settings.feasibility_tol &&
      best_rd_rel <= 100.0 * settings.feasibility_tol &&
      best_gap <= 1000.0 * settings.gap_tol) {
    result.status = SolveStatus::kOptimal;
    result.message = "converged at reduced accuracy";
  } else {
    result.status = SolveStatus::kNumericalFailure;
    if (result.message.empty()) result.message = "iteration limit reached";
  }
  return result;
}

}  // namespace

Solution solve(const ConicProgram& program, const SolverSettings& settings) {
  Solution sol;
  const ReducedProblem rp = detail::reduce(program);
  if (!rp.equalities_consistent) {
    sol.status = SolveStatus::kInfeasible;
    sol.message = "equality constraints are inconsistent";
    sol.y = rp.y0;
    return sol;
  }
  if (rp.unbounded_free_direction) {
    sol.status = SolveStatus::kUnbounded;
    sol.message = "objective is unbounded along a constraint-free direction";
    sol.y = rp.y0;
    return sol;
  }

  const IpmResult res = run_ipm(rp, settings);
  sol.status = res.status;
  sol.iterations = res.iterations;
  sol.message = res.message;
  sol.y = rp.y0 + rp.Z * res.t;
  const double internal_obj = rp.chat.dot(res.t) + rp.obj_constant;
  sol.objective = rp.obj_sign * internal_obj;
  if (sol.status == SolveStatus::kOptimal) {
    sol.residuals = verify_solution(program, sol);
  }
  return sol;
}

}  // namespace nnv
