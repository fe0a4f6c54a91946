#include "nnv/examples.hpp"

#include <cmath>
#include <random>

namespace nnv {

Eigen::Vector2d PendulumExample::deriv(const Eigen::Vector2d& x,
                                       double u) const {
  return {x(1),
          1.5 * g / l * std::sin(x(0)) - k * x(1) + 3.0 / (m * l * l) * u};
}

Eigen::Vector2d PendulumExample::step(const Eigen::Vector2d& x, double u,
                                      bool rk4) const {
  if (!rk4) return x + dt * deriv(x, u);
  const Eigen::Vector2d k1 = deriv(x, u);
  const Eigen::Vector2d k2 = deriv(x + 0.5 * dt * k1, u);
  const Eigen::Vector2d k3 = deriv(x + 0.5 * dt * k2, u);
  const Eigen::Vector2d k4 = deriv(x + dt * k3, u);
  return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

OraclePlant PendulumExample::linearized(bool rk4) const {
  Eigen::Matrix2d ac;
  ac << 0.0, 1.0, 1.5 * g / l * std::cos(x_star(0)), -k;
  Eigen::Vector2d bc(0.0, 3.0 / (m * l * l));
  OraclePlant plant;
  if (!rk4) {
    plant.A = Eigen::Matrix2d::Identity() + dt * ac;
    plant.B = dt * bc;
  } else {
    // Exact RK4 step of a linear system: the degree-4 Taylor polynomial.
    Eigen::Matrix2d ad = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d term = Eigen::Matrix2d::Identity();
    Eigen::Matrix2d bsum = Eigen::Matrix2d::Zero();
    for (int i = 1; i <= 4; ++i) {
      bsum += term * (dt / i);
      term = term * (dt / i) * ac;
      ad += term;
    }
    plant.A = ad;
    plant.B = bsum * bc;
  }
  return plant;
}

TrajectoryData pendulum_data(std::uint64_t seed, Eigen::Index samples,
                             bool rk4) {
  const PendulumExample pend;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> theta0(3.13, 3.15);
  std::uniform_real_distribution<double> omega0(-0.01, 0.01);
  std::uniform_real_distribution<double> torque(-0.01, 0.01);

  TrajectoryData data;
  data.U0.resize(1, samples);
  data.X0.resize(2, samples);
  data.X1.resize(2, samples);
  data.provenance = "pendulum rollout, seed " + std::to_string(seed);

  Eigen::Vector2d x(theta0(rng), omega0(rng));
  for (Eigen::Index t = 0; t < samples; ++t) {
    const double u = torque(rng);
    const Eigen::Vector2d next = pend.step(x, u, rk4);
    data.U0(0, t) = u;
    data.X0.col(t) = x - pend.x_star;
    data.X1.col(t) = next - pend.x_star;
    x = next;
  }
  return data;
}

OraclePlant vehicle_plant() {
  // Single-track lateral error dynamics (states: lateral offset, its rate,
  // heading error, its rate; input: steering) with textbook constants:
  // m = 1650 kg, Iz = 2315 kg m^2, lf = 1.11 m, lr = 1.59 m,
  // Caf = 55494 N/rad, Car = 59498 N/rad, vx = 15 m/s, Euler dt = 0.02 s.
  const double m = 1650.0, iz = 2315.0, lf = 1.11, lr = 1.59;
  const double caf = 55494.0, car = 59498.0, vx = 15.0, dt = 0.02;

  Eigen::Matrix4d ac = Eigen::Matrix4d::Zero();
  ac(0, 1) = 1.0;
  ac(1, 1) = -(2.0 * caf + 2.0 * car) / (m * vx);
  ac(1, 2) = (2.0 * caf + 2.0 * car) / m;
  ac(1, 3) = (-2.0 * caf * lf + 2.0 * car * lr) / (m * vx);
  ac(2, 3) = 1.0;
  ac(3, 1) = -(2.0 * caf * lf - 2.0 * car * lr) / (iz * vx);
  ac(3, 2) = (2.0 * caf * lf - 2.0 * car * lr) / iz;
  ac(3, 3) = -(2.0 * caf * lf * lf + 2.0 * car * lr * lr) / (iz * vx);
  Eigen::Vector4d bc(0.0, 2.0 * caf / m, 0.0, 2.0 * caf * lf / iz);

  OraclePlant plant;
  plant.A = Eigen::Matrix4d::Identity() + dt * ac;
  plant.B = dt * bc;
  return plant;
}

Eigen::MatrixXd dlqr_gain(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                          const Eigen::MatrixXd& q, const Eigen::MatrixXd& r) {
  if (a.rows() != a.cols() || b.rows() != a.rows() || q.rows() != a.rows() ||
      r.rows() != b.cols()) {
    throw Error(ErrorKind::kDimensionMismatch, "inconsistent LQR dimensions");
  }
  Eigen::MatrixXd p = q;
  for (int it = 0; it < 10000; ++it) {
    const Eigen::MatrixXd btp = b.transpose() * p;
    const Eigen::MatrixXd kk = (r + btp * b).ldlt().solve(btp * a);
    const Eigen::MatrixXd next =
        q + a.transpose() * p * (a - b * kk);
    const double change = (next - p).norm();
    p = 0.5 * (next + next.transpose());
    if (change <= 1e-12 * (1.0 + p.norm())) break;
  }
  const Eigen::MatrixXd btp = b.transpose() * p;
  return (r + btp * b).ldlt().solve(btp * a);
}

NeuralNetwork fit_example_controller(const OraclePlant& plant,
                                     Eigen::Index hidden, std::uint64_t seed) {
  const Eigen::Index n_x = plant.A.rows();
  const Eigen::Index n_u = plant.B.cols();
  const Eigen::MatrixXd gain = -dlqr_gain(
      plant.A, plant.B, Eigen::MatrixXd::Identity(n_x, n_x),
      Eigen::MatrixXd::Identity(n_u, n_u));

  if (hidden == 0) {
    return NeuralNetwork({Layer{gain, Eigen::VectorXd::Zero(n_u)}},
                         Activation::kTanh);
  }

  // State grid: 5 levels per axis on [-0.5, 0.5]^n_x.
  const std::vector<double> levels = {-0.5, -0.25, 0.0, 0.25, 0.5};
  Eigen::Index count = 1;
  for (Eigen::Index i = 0; i < n_x; ++i) count *= levels.size();
  Eigen::MatrixXd grid(count, n_x);
  for (Eigen::Index g = 0; g < count; ++g) {
    Eigen::Index rest = g;
    for (Eigen::Index i = 0; i < n_x; ++i) {
      grid(g, i) = levels[rest % levels.size()];
      rest /= levels.size();
    }
  }

  // Small random first layer keeps tanh near its linear regime, so the
  // least-squares second layer can match the linear gain tightly.
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd w1(hidden, n_x);
  for (Eigen::Index i = 0; i < hidden; ++i) {
    for (Eigen::Index j = 0; j < n_x; ++j) w1(i, j) = 0.1 * normal(rng);
  }

  Eigen::MatrixXd features(count, hidden);
  Eigen::MatrixXd targets(count, n_u);
  for (Eigen::Index g = 0; g < count; ++g) {
    features.row(g) = (w1 * grid.row(g).transpose()).array().tanh();
    targets.row(g) = (gain * grid.row(g).transpose()).transpose();
  }
  const Eigen::MatrixXd w2 =
      features.completeOrthogonalDecomposition().solve(targets).transpose();

  const double max_error =
      (features * w2.transpose() - targets).cwiseAbs().maxCoeff();
  if (max_error > 1e-3) {
    throw Error(ErrorKind::kNumerical,
                "controller fit error " + std::to_string(max_error) +
                    " exceeds 1e-3; increase the hidden size");
  }
  return NeuralNetwork({Layer{w1, Eigen::VectorXd::Zero(hidden)},
                        Layer{w2, Eigen::VectorXd::Zero(n_u)}},
                       Activation::kTanh);
}

}  // namespace nnv
