#pragma once

#include <cstdint>

#include "nnv/data_engine.hpp"
#include "nnv/nn_model.hpp"

namespace nnv {

/// Inverted pendulum
///   theta_dot = omega
///   omega_dot = (3 g / 2 l) sin(theta) - k omega + (3 / (m l^2)) u
/// sampled around the upright equilibrium x* = (3.14, 0).
struct PendulumExample {
  double k = 0.8;   // air-resistance damping
  double g = 10.0;  // gravity
  double l = 1.0;   // length
  double m = 1.0;   // mass
  double dt = 0.02;
  Eigen::Vector2d x_star{3.14, 0.0};

  Eigen::Vector2d deriv(const Eigen::Vector2d& x, double u) const;
  /// One discretization step (forward Euler by default, RK4 optional).
  Eigen::Vector2d step(const Eigen::Vector2d& x, double u,
                       bool rk4 = false) const;
  /// Discretized Jacobian linearization at x* (same integrator choice),
  /// in deviation coordinates.
  OraclePlant linearized(bool rk4 = false) const;
};

/// Open-loop rollout of the nonlinear pendulum with u ~ U[-0.01, 0.01],
/// theta(0) in [3.13, 3.15], omega(0) in [-0.01, 0.01]; data is emitted in
/// deviation coordinates around x*. Deterministic given the seed.
TrajectoryData pendulum_data(std::uint64_t seed, Eigen::Index samples = 5,
                             bool rk4 = false);

/// Bundled 4-state lateral-dynamics fixture (n_x = 4, n_u = 1): a standard
/// single-track model with textbook constants, discretized by forward Euler.
/// The constants live in this repository; this is not a reproduction of any
/// external vehicle dataset.
OraclePlant vehicle_plant();

/// Discrete-time LQR gain K (u = -K x) by Riccati iteration.
Eigen::MatrixXd dlqr_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& q, const Eigen::MatrixXd& r);

/// Deterministically fits a bias-free controller to the plant's LQR gain:
/// hidden = 0 reproduces the linear gain exactly; hidden > 0 fits a
/// 1-hidden-layer tanh network by least squares on a state grid and requires
/// max grid error <= 1e-3.
NeuralNetwork fit_example_controller(const OraclePlant& plant,
                                     Eigen::Index hidden, std::uint64_t seed);

}  // namespace nnv
