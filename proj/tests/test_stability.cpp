#include <doctest.h>

#include <random>

#include <Eigen/Dense>

#include "nnv/data_engine.hpp"
#include "nnv/examples.hpp"
#include "nnv/nn_model.hpp"
#include "nnv/sectors.hpp"
#include "nnv/stability.hpp"
#include "test_util.hpp"

using namespace nnv;

namespace {

/// Linear controller u = G x as a one-layer (no hidden neurons) network.
NeuralNetwork linear_controller(const Eigen::MatrixXd& gain) {
  return NeuralNetwork({{gain, Eigen::VectorXd::Zero(gain.rows())}},
                       Activation::kTanh);
}

SectorData sectors_for(const NeuralNetwork& net) {
  return SectorData::uniform(default_sector(net.activation(), net.leaky_slope()),
                             build_stacked(net).n_phi);
}

TrajectoryData collect_box(const OraclePlant& plant, Eigen::Index samples,
                           std::uint64_t seed) {
  Eigen::Index n_x = plant.A.rows(), n_u = plant.B.cols();
  return collect(plant, samples, Eigen::VectorXd::Constant(n_u, -1.0),
                 Eigen::VectorXd::Constant(n_u, 1.0),
                 Eigen::VectorXd::Constant(n_x, -1.0),
                 Eigen::VectorXd::Constant(n_x, 1.0), seed);
}

/// V(x) = x^T Q1^{-1} x strictly decreases along sampled closed-loop steps.
void check_lyapunov_decrease(const StabilityCertificate& cert,
                             const NeuralNetwork& net, const OraclePlant& plant,
                             std::mt19937_64& rng, int trials = 200) {
  Eigen::MatrixXd p = cert.Q1.inverse();
  Eigen::Index n_x = plant.A.rows();
  for (int t = 0; t < trials; ++t) {
    Eigen::VectorXd x = 0.05 * testutil::random_vector(rng, n_x);
    if (x.norm() < 1e-8) continue;
    Eigen::VectorXd next = plant.step(x, forward(net, x).u);
    double v0 = x.dot(p * x);
    double v1 = next.dot(p * next);
    CHECK(v1 < v0);
  }
}

}  // namespace

TEST_CASE("stability: contractive plant with zero controller is certified") {
  OraclePlant plant{0.5 * Eigen::MatrixXd::Identity(2, 2),
                    Eigen::MatrixXd::Ones(2, 1)};
  NeuralNetwork net = linear_controller(Eigen::MatrixXd::Zero(1, 2));
  TrajectoryData data = collect_box(plant, 6, 17);
  REQUIRE(check_excitation(data).pass);
  StabilityCertificate cert = verify_stability(net, sectors_for(net), data);
  REQUIRE(cert.certified);
  CHECK(cert.status == SolveStatus::kOptimal);
  // Q1 is positive definite.
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cert.Q1);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  std::mt19937_64 rng(71);
  check_lyapunov_decrease(cert, net, plant, rng);
}

TEST_CASE("stability: expansive plant with zero controller is not certified") {
  OraclePlant plant{2.0 * Eigen::MatrixXd::Identity(2, 2),
                    Eigen::MatrixXd::Zero(2, 1)};
  // B = 0 is rank-deficient data, so excite through a nonzero B but a gain
  // too weak to stabilize.
  plant.B = 0.01 * Eigen::MatrixXd::Ones(2, 1);
  NeuralNetwork net = linear_controller(Eigen::MatrixXd::Zero(1, 2));
  TrajectoryData data = collect_box(plant, 6, 19);
  REQUIRE(check_excitation(data).pass);
  StabilityCertificate cert = verify_stability(net, sectors_for(net), data);
  CHECK_FALSE(cert.certified);
}

TEST_CASE("stability: LQR-stabilized random plants, data path vs model oracle") {
  std::mt19937_64 rng(23);
  for (int trial = 0; trial < 5; ++trial) {
    Eigen::Index n_x = 2 + (trial % 2);
    OraclePlant plant{testutil::random_matrix(rng, n_x, n_x),
                      testutil::random_matrix(rng, n_x, 1)};
    plant.A = 0.9 * plant.A / std::max(1.0, plant.A.norm());
    NeuralNetwork net = fit_example_controller(plant, 0, 7 + trial);
    TrajectoryData data = collect_box(plant, n_x + 1, 400 + trial);
    if (!check_excitation(data).pass) continue;
    SectorData sectors = sectors_for(net);
    StabilityCertificate data_cert = verify_stability(net, sectors, data);
    StabilityCertificate model_cert = verify_stability_model(net, sectors, plant);
    // Agreement between the two paths is the whole point of the oracle.
    CHECK(data_cert.certified == model_cert.certified);
    if (data_cert.certified) {
      std::mt19937_64 sim_rng(900 + trial);
      check_lyapunov_decrease(data_cert, net, plant, sim_rng);
      check_lyapunov_decrease(model_cert, net, plant, sim_rng);
    }
  }
}

TEST_CASE("stability: pendulum workflow with a tanh controller") {
  PendulumExample pend;
  OraclePlant plant = pend.linearized();
  NeuralNetwork net = fit_example_controller(plant, 8, 3);
  TrajectoryData data = pendulum_data(5, 5);
  REQUIRE(check_excitation(data).pass);
  SectorData sectors = sectors_for(net);
  // A feasibility solve returns an interior point whose decrease margin
  // survives the linearization error in the sampled nonlinear data; the
  // trace-min optimum sits on the feasibility boundary by construction.
  StabilityOptions options;
  options.objective = StabilityObjective::kFeasibility;
  StabilityCertificate cert = verify_stability(net, sectors, data, options);
  REQUIRE(cert.certified);
  REQUIRE(cert.Q1.rows() == 2);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cert.Q1);
  CHECK(es.eigenvalues().minCoeff() > 0.0);
  // The linearized closed loop contracts the Lyapunov function found from
  // the sampled nonlinear-pendulum data.
  std::mt19937_64 rng(5);
  check_lyapunov_decrease(cert, net, plant, rng);
  // Q2 multipliers are nonnegative.
  CHECK(cert.Q2_diag.minCoeff() >= 0.0);
  // The true nonlinear pendulum converges to the upright equilibrium under
  // the certified controller.
  for (int t = 0; t < 20; ++t) {
    Eigen::Vector2d x = pend.x_star + Eigen::Vector2d(0.05 * testutil::random_vector(rng, 2));
    for (int step = 0; step < 400; ++step)
      x = pend.step(x, forward(net, x - pend.x_star).u(0));
    // The true closed-loop equilibrium sits at theta = pi, a distance of
    // |pi - 3.14| ~ 1.6e-3 from the nominal x*.
    CHECK((x - pend.x_star).norm() <= 5e-3);
  }
}

TEST_CASE("stability: verdict is invariant to the data length") {
  PendulumExample pend;
  OraclePlant plant = pend.linearized();
  NeuralNetwork net = fit_example_controller(plant, 4, 11);
  SectorData sectors = sectors_for(net);
  bool verdicts[3];
  int idx = 0;
  for (Eigen::Index samples : {5, 10, 55}) {
    TrajectoryData data = pendulum_data(31, samples);
    REQUIRE(check_excitation(data).pass);
    verdicts[idx++] = verify_stability(net, sectors, data).certified;
  }
  CHECK(verdicts[0] == verdicts[1]);
  CHECK(verdicts[1] == verdicts[2]);
  CHECK(verdicts[0]);
}

TEST_CASE("stability: certificate satisfies the data-consistency identities") {
  std::mt19937_64 rng(37);
  OraclePlant plant{testutil::random_stable(rng, 2), Eigen::MatrixXd::Ones(2, 1)};
  NeuralNetwork net = fit_example_controller(plant, 4, 2);
  TrajectoryData data = collect_box(plant, 8, 61);
  REQUIRE(check_excitation(data).pass);
  SectorData sectors = sectors_for(net);
  StabilityCertificate cert = verify_stability(net, sectors, data);
  REQUIRE(cert.certified);

  StackedForm sf = build_stacked(net);
  TransformedForm tf = loop_transform(sf, sectors);
  RecoveredSystem rec = recover_system(data);
  // X1 L1 equals the closed-loop image (A + B Nt_ux) Q1 because the
  // equalities tie [Nt_ux Q1; Q1] = [U0; X0] L1 and the data is noiseless.
  Eigen::MatrixXd lhs1 = data.X1 * cert.L1;
  Eigen::MatrixXd rhs1 = (rec.A + rec.B * tf.N_ux) * cert.Q1;
  CHECK((lhs1 - rhs1).norm() <= 1e-6 * (1.0 + rhs1.norm()));
  // X1 L2 equals B Nt_uz Q2.
  Eigen::MatrixXd lhs2 = data.X1 * cert.L2;
  Eigen::MatrixXd rhs2 = rec.B * tf.N_uz * cert.Q2_diag.asDiagonal();
  CHECK((lhs2 - rhs2).norm() <= 1e-6 * (1.0 + rhs2.norm()));
}

TEST_CASE("stability: equilibrium bias above tolerance is rejected") {
  OraclePlant plant{0.5 * Eigen::MatrixXd::Identity(2, 2),
                    Eigen::MatrixXd::Ones(2, 1)};
  // A network with a constant output offset shifts the equilibrium.
  Eigen::VectorXd b(1);
  b << 0.3;
  NeuralNetwork net({{Eigen::MatrixXd::Zero(1, 2), b}}, Activation::kTanh);
  TrajectoryData data = collect_box(plant, 6, 17);
  SectorData sectors = sectors_for(net);
  CHECK_THROWS_AS(verify_stability(net, sectors, data), Error);
}

TEST_CASE("roa_ellipsoid: identity Q1 traces the unit circle") {
  StabilityCertificate cert;
  cert.certified = true;
  cert.Q1 = Eigen::MatrixXd::Identity(2, 2);
  Eigen::MatrixXd pts = roa_ellipsoid(cert, {0, 1}, 64);
  REQUIRE(pts.rows() == 65);
  REQUIRE(pts.cols() == 2);
  for (Eigen::Index i = 0; i < pts.rows(); ++i)
    CHECK(pts.row(i).norm() == doctest::Approx(1.0).epsilon(1e-9));
  CHECK((pts.row(0) - pts.row(pts.rows() - 1)).norm() <= 1e-12);
}

TEST_CASE("roa_ellipsoid: diagonal Q1 gives the expected semi-axes") {
  StabilityCertificate cert;
  cert.certified = true;
  cert.Q1 = Eigen::Vector2d(4.0, 1.0).asDiagonal();
  Eigen::MatrixXd pts = roa_ellipsoid(cert, {0, 1}, 128);
  double max_x = pts.col(0).cwiseAbs().maxCoeff();
  double max_y = pts.col(1).cwiseAbs().maxCoeff();
  CHECK(max_x == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(max_y == doctest::Approx(1.0).epsilon(1e-6));
  // Every point lies on the boundary x^T Q1^{-1} x = 1.
  Eigen::MatrixXd p = cert.Q1.inverse();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Eigen::Vector2d x = pts.row(i);
    CHECK(x.dot(p * x) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("roa_ellipsoid: consistency on a solved certificate") {
  OraclePlant plant{0.5 * Eigen::MatrixXd::Identity(2, 2),
                    Eigen::MatrixXd::Ones(2, 1)};
  NeuralNetwork net = linear_controller(Eigen::MatrixXd::Zero(1, 2));
  TrajectoryData data = collect_box(plant, 6, 17);
  StabilityCertificate cert = verify_stability(net, sectors_for(net), data);
  REQUIRE(cert.certified);
  Eigen::MatrixXd pts = roa_ellipsoid(cert, {0, 1}, 64);
  Eigen::MatrixXd p = cert.Q1.inverse();
  for (Eigen::Index i = 0; i < pts.rows(); ++i) {
    Eigen::Vector2d x = pts.row(i);
    CHECK(x.dot(p * x) == doctest::Approx(1.0).epsilon(1e-9));
  }
}
