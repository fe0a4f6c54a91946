#include <doctest.h>

#include <random>

#include "nnv/conic.hpp"
#include "test_util.hpp"

using namespace nnv;

TEST_CASE("min x subject to x >= 3 via a shifted 1x1 PSD block") {
  ConicProgram prog;
  const int x = prog.add_free_block("x", 1, 1);
  const int lmi = prog.add_lmi("shift", 1);
  LinExpr e = LinExpr::variable(prog.var(x, 0, 0));
  e.add_constant(-3.0);
  prog.set_lmi_entry(lmi, 0, 0, e);
  prog.set_objective(LinExpr::variable(prog.var(x, 0, 0)), true);

  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(3.0).epsilon(1e-6));
  CHECK(sol.y[prog.var(x, 0, 0)] == doctest::Approx(3.0).epsilon(1e-6));
}

TEST_CASE("max t subject to [[1,t],[t,1]] >= 0 reaches the boundary t = 1") {
  ConicProgram prog;
  const int t = prog.add_free_block("t", 1, 1);
  const int lmi = prog.add_lmi("m", 2);
  prog.set_lmi_entry(lmi, 0, 0, LinExpr(1.0));
  prog.set_lmi_entry(lmi, 1, 1, LinExpr(1.0));
  prog.set_lmi_entry(lmi, 0, 1, LinExpr::variable(prog.var(t, 0, 0)));
  prog.set_objective(LinExpr::variable(prog.var(t, 0, 0)), false);

  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("equality-constrained nonneg program") {
  // min x0 + 2 x1 s.t. x0 + x1 = 1, x >= 0  ->  x = (1, 0), objective 1.
  ConicProgram prog;
  const int x = prog.add_nonneg_block("x", 2);
  LinExpr sum;
  sum.add(prog.var(x, 0, 0), 1.0);
  sum.add(prog.var(x, 1, 0), 1.0);
  prog.add_equality(sum, 1.0);
  LinExpr obj;
  obj.add(prog.var(x, 0, 0), 1.0);
  obj.add(prog.var(x, 1, 0), 2.0);
  prog.set_objective(obj, true);

  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-6));
  CHECK(sol.y[prog.var(x, 0, 0)] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(sol.y[prog.var(x, 1, 0)] == doctest::Approx(0.0).epsilon(1e-5));
}

TEST_CASE("infeasible program is reported, not crashed") {
  // x >= 1 and x <= 0 simultaneously.
  ConicProgram prog;
  const int x = prog.add_free_block("x", 1, 1);
  const int lmi = prog.add_lmi("m", 2);
  LinExpr lower = LinExpr::variable(prog.var(x, 0, 0));
  lower.add_constant(-1.0);
  LinExpr upper = LinExpr::variable(prog.var(x, 0, 0));
  upper *= -1.0;
  prog.set_lmi_entry(lmi, 0, 0, lower);
  prog.set_lmi_entry(lmi, 1, 1, upper);

  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::kInfeasible);
}

TEST_CASE("inconsistent equalities are infeasible") {
  ConicProgram prog;
  const int x = prog.add_free_block("x", 1, 1);
  prog.add_equality(LinExpr::variable(prog.var(x, 0, 0)), 1.0);
  prog.add_equality(LinExpr::variable(prog.var(x, 0, 0)), 2.0);
  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::kInfeasible);
}

TEST_CASE("unbounded objective is reported") {
  // min -x with only x >= 0.
  ConicProgram prog;
  const int x = prog.add_nonneg_block("x", 1);
  LinExpr obj;
  obj.add(prog.var(x, 0, 0), -1.0);
  prog.set_objective(obj, true);
  const Solution sol = solve(prog);
  CHECK(sol.status == SolveStatus::kUnbounded);
}

TEST_CASE("PSD matrix-variable program: nearest-diagonal style problem") {
  // min tr(Q) s.t. Q - M >= 0 with M symmetric; optimum tr(Q) when Q = M^+
  // projection... use M PSD so optimum is tr(M).
  std::mt19937_64 rng(7);
  const Eigen::MatrixXd half = testutil::random_matrix(rng, 3, 3);
  const Eigen::MatrixXd m = half * half.transpose();

  ConicProgram prog;
  const int q = prog.add_psd_block("Q", 3);
  const int lmi = prog.add_lmi("QminusM", 3);
  for (Eigen::Index i = 0; i < 3; ++i) {
    for (Eigen::Index j = i; j < 3; ++j) {
      LinExpr e = LinExpr::variable(prog.var(q, i, j));
      e.add_constant(-m(i, j));
      prog.set_lmi_entry(lmi, i, j, e);
    }
  }
  LinExpr obj;
  for (Eigen::Index i = 0; i < 3; ++i) obj.add(prog.var(q, i, i), 1.0);
  prog.set_objective(obj, true);

  const Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(sol.objective == doctest::Approx(m.trace()).epsilon(1e-5));
  const Eigen::MatrixXd qv = prog.block_value(q, sol.y);
  CHECK((qv - m).norm() < 1e-4 * (1.0 + m.norm()));
}

TEST_CASE("discrete Lyapunov LMI for a stable matrix is feasible") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 5; ++trial) {
    const Eigen::MatrixXd a = testutil::random_stable(rng, 3, 0.8);
    // P - A^T P A >= eps I, P >= eps I  (variables P).
    ConicProgram prog;
    const int p = prog.add_psd_block("P", 3);
    const int lmi = prog.add_lmi("lyap", 3);
    const double eps = 1e-3;
    for (Eigen::Index i = 0; i < 3; ++i) {
      for (Eigen::Index j = i; j < 3; ++j) {
        LinExpr e = LinExpr::variable(prog.var(p, i, j));
        // subtract (A^T P A)(i, j) = sum_{s,t} A(s,i) P(s,t) A(t,j)
        for (Eigen::Index s = 0; s < 3; ++s) {
          for (Eigen::Index t = 0; t < 3; ++t) {
            e.add(prog.var(p, s, t), -a(s, i) * a(t, j));
          }
        }
        if (i == j) e.add_constant(-eps);
        prog.set_lmi_entry(lmi, i, j, e);
      }
    }
    // Normalize: tr P = 3.
    LinExpr tr;
    for (Eigen::Index i = 0; i < 3; ++i) tr.add(prog.var(p, i, i), 1.0);
    prog.add_equality(tr, 3.0);

    const Solution sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    const Eigen::MatrixXd pv = prog.block_value(p, sol.y);
    const Eigen::MatrixXd decrease = pv - a.transpose() * pv * a;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(decrease);
    CHECK(eig.eigenvalues().minCoeff() >= eps - 1e-6);
  }
}

TEST_CASE("verify_solution rejects a perturbed equality") {
  ConicProgram prog;
  const int x = prog.add_nonneg_block("x", 2);
  LinExpr sum;
  sum.add(prog.var(x, 0, 0), 1.0);
  sum.add(prog.var(x, 1, 0), 1.0);
  prog.add_equality(sum, 1.0);
  LinExpr obj;
  obj.add(prog.var(x, 0, 0), 1.0);
  prog.set_objective(obj, true);

  Solution sol = solve(prog);
  REQUIRE(sol.status == SolveStatus::kOptimal);
  CHECK(verify_solution(prog, sol).accepted);

  // Injected fault: shift a variable so the equality misses by 1e-3.
  Solution bad = sol;
  bad.y[prog.var(x, 1, 0)] += 1e-3;
  CHECK_FALSE(verify_solution(prog, bad).accepted);

  // Injected fault: negative cone entry.
  Solution neg = sol;
  neg.y[prog.var(x, 0, 0)] = -1e-3;
  neg.y[prog.var(x, 1, 0)] = 1.0 + 1e-3;
  CHECK_FALSE(verify_solution(prog, neg).accepted);
}

TEST_CASE("solver round-trip on random feasible SDPs") {
  // Build programs with a known strictly feasible point and check that the
  // returned solution passes the independent post-verification.
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 10; ++trial) {
    ConicProgram prog;
    const int q = prog.add_psd_block("Q", 3);
    const int z = prog.add_free_block("z", 2, 1);
    // Equalities tie z to Q entries.
    LinExpr e1 = LinExpr::variable(prog.var(q, 0, 0));
    e1.add(prog.var(z, 0, 0), -1.0);
    prog.add_equality(e1, 0.0);
    LinExpr e2 = LinExpr::variable(prog.var(q, 1, 1));
    e2.add(prog.var(z, 1, 0), -1.0);
    prog.add_equality(e2, 0.0);
    // Keep it bounded: tr Q = 3 + noise.
    LinExpr tr;
    for (Eigen::Index i = 0; i < 3; ++i) tr.add(prog.var(q, i, i), 1.0);
    std::uniform_real_distribution<double> unif(2.5, 4.0);
    prog.add_equality(tr, unif(rng));
    LinExpr obj;
    obj.add(prog.var(z, 0, 0), 1.0);
    obj.add(prog.var(z, 1, 0), 0.5);
    prog.set_objective(obj, true);

    const Solution sol = solve(prog);
    REQUIRE(sol.status == SolveStatus::kOptimal);
    CHECK(sol.residuals.accepted);
  }
}
