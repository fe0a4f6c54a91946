#include <doctest.h>

#include <cstdio>
#include <random>

#include <Eigen/Dense>

#include "nnv/nn_model.hpp"
#include "nnv/sectors.hpp"
#include "test_util.hpp"

using namespace nnv;

namespace {

NeuralNetwork random_tanh_net(std::mt19937_64& rng, Eigen::Index n_x,
                              std::vector<Eigen::Index> hidden,
                              Eigen::Index n_u, bool biases = true) {
  std::vector<Layer> layers;
  Eigen::Index prev = n_x;
  hidden.push_back(n_u);
  for (std::size_t i = 0; i < hidden.size(); ++i) {
    Layer layer;
    layer.W = testutil::random_matrix(rng, hidden[i], prev);
    layer.b = biases ? testutil::random_vector(rng, hidden[i])
                     : Eigen::VectorXd::Zero(hidden[i]);
    prev = hidden[i];
    layers.push_back(std::move(layer));
  }
  return NeuralNetwork(std::move(layers), Activation::kTanh);
}

}  // namespace

TEST_CASE("forward: zero network maps everything to zero") {
  std::vector<Layer> layers{{Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(3)},
                            {Eigen::MatrixXd::Zero(1, 3), Eigen::VectorXd::Zero(1)}};
  NeuralNetwork net(layers, Activation::kRelu);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 5; ++t) {
    auto trace = forward(net, testutil::random_vector(rng, 2));
    CHECK(trace.u.norm() == 0.0);
    CHECK(trace.w_phi.norm() == 0.0);
  }
}

TEST_CASE("forward: scalar ReLU identity chain") {
  std::vector<Layer> layers{
      {Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)},
      {Eigen::MatrixXd::Identity(1, 1), Eigen::VectorXd::Zero(1)}};
  NeuralNetwork net(layers, Activation::kRelu);
  Eigen::VectorXd x(1);
  x << -3.0;
  CHECK(forward(net, x).u(0) == 0.0);
  x << 2.0;
  CHECK(forward(net, x).u(0) == 2.0);
}

TEST_CASE("forward: dimension mismatch is a structured error") {
  std::vector<Layer> layers{
      {Eigen::MatrixXd::Identity(2, 2), Eigen::VectorXd::Zero(2)},
      {Eigen::MatrixXd::Ones(1, 2), Eigen::VectorXd::Zero(1)}};
  NeuralNetwork net(layers, Activation::kTanh);
  CHECK_THROWS_AS(forward(net, Eigen::VectorXd::Zero(3)), Error);
}

TEST_CASE("build_stacked: one hidden layer block layout") {
  std::mt19937_64 rng(7);
  Layer h{testutil::random_matrix(rng, 4, 3), testutil::random_vector(rng, 4)};
  Layer out{testutil::random_matrix(rng, 2, 4), testutil::random_vector(rng, 2)};
  NeuralNetwork net({h, out}, Activation::kTanh);
  StackedForm sf = build_stacked(net);
  CHECK(sf.n_phi == 4);
  CHECK(sf.N_ux.norm() == 0.0);
  CHECK((sf.N_uw - out.W).norm() == 0.0);
  CHECK((sf.N_vx - h.W).norm() == 0.0);
  CHECK(sf.N_vw.norm() == 0.0);
  CHECK((sf.bias_u - out.b).norm() == 0.0);
  CHECK((sf.bias_v - h.b).norm() == 0.0);
}

TEST_CASE("build_stacked: two hidden layers put W2 in the sub-diagonal block") {
  std::mt19937_64 rng(8);
  Layer l1{testutil::random_matrix(rng, 3, 2), testutil::random_vector(rng, 3)};
  Layer l2{testutil::random_matrix(rng, 4, 3), testutil::random_vector(rng, 4)};
  Layer out{testutil::random_matrix(rng, 1, 4), testutil::random_vector(rng, 1)};
  NeuralNetwork net({l1, l2, out}, Activation::kTanh);
  StackedForm sf = build_stacked(net);
  CHECK(sf.n_phi == 7);
  // N_vw: rows [3..6] x cols [0..2] hold W2; everything else is zero.
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(7, 7);
  expected.block(3, 0, 4, 3) = l2.W;
  CHECK((sf.N_vw - expected).norm() == 0.0);
  // N_uw touches only the last hidden layer.
  CHECK(sf.N_uw.leftCols(3).norm() == 0.0);
  CHECK((sf.N_uw.rightCols(4) - out.W).norm() == 0.0);
}

TEST_CASE("stacked equivalence: eval_stacked reproduces forward to 1e-12") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 10; ++trial) {
    NeuralNetwork net = random_tanh_net(rng, 3, {5, 4}, 2);
    StackedForm sf = build_stacked(net);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd x = testutil::random_vector(rng, 3);
      ForwardTrace a = forward(net, x);
      ForwardTrace b = eval_stacked(sf, net.activation(), x);
      double scale = 1.0 + a.u.norm() + a.v_phi.norm();
      CHECK((a.u - b.u).norm() <= 1e-12 * scale);
      CHECK((a.v_phi - b.v_phi).norm() <= 1e-12 * scale);
      CHECK((a.w_phi - b.w_phi).norm() <= 1e-12 * scale);
    }
  }
}

TEST_CASE("loop_transform: already-normalized sector leaves the loop unchanged") {
  std::mt19937_64 rng(31);
  NeuralNetwork net = random_tanh_net(rng, 2, {3}, 1, /*biases=*/false);
  StackedForm sf = build_stacked(net);
  SectorData sectors = SectorData::uniform({-1.0, 1.0, 0.0, 0.0}, sf.n_phi);
  TransformedForm tf = loop_transform(sf, sectors);
  CHECK(tf.C2.norm() == 0.0);
  CHECK(tf.C4.norm() == 0.0);
  CHECK((tf.N_vx - sf.N_vx).norm() <= 1e-14 * (1.0 + sf.N_vx.norm()));
}

TEST_CASE("loop_transform: single ReLU layer hand expansion") {
  std::mt19937_64 rng(32);
  NeuralNetwork net({{testutil::random_matrix(rng, 3, 2), Eigen::VectorXd::Zero(3)},
                     {testutil::random_matrix(rng, 1, 3), Eigen::VectorXd::Zero(1)}},
                    Activation::kRelu);
  StackedForm sf = build_stacked(net);
  SectorData sectors = SectorData::uniform(default_sector(Activation::kRelu), 3);
  TransformedForm tf = loop_transform(sf, sectors);
  // N_vw = 0 so C4 = 0, hence Nt_vx = N_vx and
  // Nt_ux = N_ux + C2 N_vx = N_uw (1/2) N_vx for the [0,1] sector.
  CHECK(tf.C4.norm() == 0.0);
  CHECK((tf.N_vx - sf.N_vx).norm() <= 1e-14);
  Eigen::MatrixXd expected_ux = sf.N_ux + 0.5 * sf.N_uw * sf.N_vx;
  CHECK((tf.N_ux - expected_ux).norm() <= 1e-13 * (1.0 + expected_ux.norm()));
}

TEST_CASE("loop_transform: invalid sector rejected") {
  std::mt19937_64 rng(33);
  NeuralNetwork net = random_tanh_net(rng, 2, {3}, 1, false);
  StackedForm sf = build_stacked(net);
  SectorData bad = SectorData::uniform({1.0, -1.0, 0.0, 0.0}, sf.n_phi);
  CHECK_THROWS_AS(loop_transform(sf, bad), Error);
}

TEST_CASE("normalized nonlinearity satisfies the symmetric sector") {
  SectorData sectors = SectorData::uniform(default_sector(Activation::kTanh), 4);
  std::mt19937_64 rng(41);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int t = 0; t < 10000; ++t) {
    Eigen::VectorXd v(4), w(4);
    for (int i = 0; i < 4; ++i) {
      v(i) = dist(rng);
      w(i) = std::tanh(v(i));
    }
    Eigen::VectorXd z = normalize_nonlinearity(sectors, v, w);
    Eigen::VectorXd vs = v - sectors.v_star;
    CHECK(z.squaredNorm() <= vs.squaredNorm() + 1e-12);
  }
}

TEST_CASE("nilpotency: C4^l = 0 and Neumann series inverts (I - C4)") {
  std::mt19937_64 rng(51);
  NeuralNetwork net = random_tanh_net(rng, 2, {3, 4, 2}, 1, false);
  StackedForm sf = build_stacked(net);
  SectorData sectors = SectorData::uniform({0.2, 0.9, 0.0, 0.0}, sf.n_phi);
  TransformedForm tf = loop_transform(sf, sectors);
  const int l = 3;
  Eigen::MatrixXd power = Eigen::MatrixXd::Identity(sf.n_phi, sf.n_phi);
  for (int i = 0; i < l; ++i) power = power * tf.C4;
  CHECK(power.norm() == 0.0);
  // Neumann series I + C4 + C4^2 equals the dense inverse.
  Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(sf.n_phi, sf.n_phi);
  Eigen::MatrixXd neumann = eye + tf.C4 + tf.C4 * tf.C4;
  Eigen::MatrixXd direct = (eye - tf.C4).inverse();
  CHECK((neumann - direct).norm() <= 1e-12 * (1.0 + direct.norm()));
}

TEST_CASE("transform consistency: reconstructing w from z reproduces the loop") {
  std::mt19937_64 rng(61);
  for (int trial = 0; trial < 5; ++trial) {
    NeuralNetwork net = random_tanh_net(rng, 3, {4, 3}, 2, false);
    StackedForm sf = build_stacked(net);
    SectorData sectors =
        SectorData::uniform(default_sector(Activation::kTanh), sf.n_phi);
    TransformedForm tf = loop_transform(sf, sectors);
    for (int t = 0; t < 50; ++t) {
      Eigen::VectorXd x = testutil::random_vector(rng, 3);
      ForwardTrace trace = forward(net, x);
      Eigen::VectorXd z =
          normalize_nonlinearity(sectors, trace.v_phi, trace.w_phi);
      Eigen::VectorXd u_t = tf.N_ux * x + tf.N_uz * z + tf.bias_u;
      Eigen::VectorXd v_t = tf.N_vx * x + tf.N_vz * z + tf.bias_v;
      double scale = 1.0 + trace.u.norm() + trace.v_phi.norm();
      CHECK((u_t - trace.u).norm() <= 1e-11 * scale);
      CHECK((v_t - trace.v_phi).norm() <= 1e-11 * scale);
    }
  }
}

TEST_CASE("fold_affine_neurons removes zero-width sectors exactly") {
  std::mt19937_64 rng(71);
  NeuralNetwork net = random_tanh_net(rng, 2, {4}, 1, false);
  StackedForm sf = build_stacked(net);
  // Neurons 1 and 3 act affinely with slope 0.5 through the origin.
  SectorData sectors = SectorData::uniform(default_sector(Activation::kTanh), 4);
  sectors.alpha(1) = sectors.beta(1) = 0.5;
  sectors.alpha(3) = sectors.beta(3) = 0.5;
  auto [reduced, rsec] = fold_affine_neurons(sf, sectors);
  CHECK(reduced.n_phi == 2);
  CHECK(rsec.size() == 2);
  // The reduced form must agree with direct evaluation where the folded
  // neurons really are affine: w_i = 0.5 v_i.
  for (int t = 0; t < 50; ++t) {
    Eigen::VectorXd x = testutil::random_vector(rng, 2);
    // Reference: evaluate the original stacked form with the mixed activation.
    Eigen::VectorXd v = sf.N_vx * x + sf.bias_v;
    Eigen::VectorXd w(4);
    for (int i = 0; i < 4; ++i)
      w(i) = (i == 1 || i == 3) ? 0.5 * v(i) : std::tanh(v(i));
    Eigen::VectorXd u_ref = sf.N_ux * x + sf.N_uw * w + sf.bias_u;
    // Reduced: only neurons 0 and 2 remain nonlinear.
    Eigen::VectorXd v_r = reduced.N_vx * x + reduced.bias_v;
    Eigen::VectorXd w_r(2);
    w_r << std::tanh(v_r(0)), std::tanh(v_r(1));
    Eigen::VectorXd u_red = reduced.N_ux * x + reduced.N_uw * w_r + reduced.bias_u;
    CHECK((u_red - u_ref).norm() <= 1e-12 * (1.0 + u_ref.norm()));
  }
}

TEST_CASE("network JSON IO round-trip") {
  std::mt19937_64 rng(81);
  NeuralNetwork net = random_tanh_net(rng, 3, {4}, 2);
  const std::string path = "nn_roundtrip_test.json";
  save_network(net, path);
  NeuralNetwork loaded = load_network(path);
  std::remove(path.c_str());
  REQUIRE(loaded.layers().size() == net.layers().size());
  CHECK(loaded.activation() == net.activation());
  for (std::size_t i = 0; i < net.layers().size(); ++i) {
    CHECK((loaded.layers()[i].W - net.layers()[i].W).norm() == 0.0);
    CHECK((loaded.layers()[i].b - net.layers()[i].b).norm() == 0.0);
  }
  for (int t = 0; t < 20; ++t) {
    Eigen::VectorXd x = testutil::random_vector(rng, 3);
    CHECK((forward(loaded, x).u - forward(net, x).u).norm() == 0.0);
  }
}
