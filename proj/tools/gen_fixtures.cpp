// gen_fixtures: regenerates the bundled example files under assets/.
//
// Everything here is deterministic, so rerunning the tool reproduces the
// committed fixtures byte for byte.

#include <fstream>
#include <iostream>
#include <string>

#include <Eigen/Dense>

#include "nnv/data_engine.hpp"
#include "nnv/examples.hpp"
#include "nnv/nn_model.hpp"

namespace {

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw nnv::Error(nnv::ErrorKind::kIo, "cannot write " + path);
  out << text;
}

nnv::TrajectoryData collect_box(const nnv::OraclePlant& plant,
                                Eigen::Index samples, std::uint64_t seed) {
  const Eigen::Index n_x = plant.A.rows(), n_u = plant.B.cols();
  return nnv::collect(plant, samples, Eigen::VectorXd::Constant(n_u, -1.0),
                      Eigen::VectorXd::Constant(n_u, 1.0),
                      Eigen::VectorXd::Constant(n_x, -1.0),
                      Eigen::VectorXd::Constant(n_x, 1.0), seed);
}

}  // namespace

int main(int argc, char** argv) {
  const std::string dir = argc > 1 ? argv[1] : "assets";
  try {
    // Contraction toy: a well-damped 2-state plant with a small tanh
    // controller; certifiable for stability, safety and invariance.
    nnv::OraclePlant toy;
    toy.A.resize(2, 2);
    toy.A << 0.4, 0.1, 0.0, 0.3;
    toy.B.resize(2, 1);
    toy.B << 0.1, 0.05;
    nnv::save_plant(toy, dir + "/toy_plant.json");
    const nnv::NeuralNetwork toy_net = nnv::fit_example_controller(toy, 4, 1);
    nnv::save_network(toy_net, dir + "/toy_controller.json");
    nnv::save_trajectory_csv(collect_box(toy, 6, 11), dir + "/toy_data.csv");
    write_text(dir + "/toy_sets.json",
               "{\n"
               "  \"input_set\": {\"normals\": [[1,0],[-1,0],[0,1],[0,-1]],\n"
               "                \"center\": [0,0],\n"
               "                \"offsets\": [0.5,0.5,0.5,0.5]},\n"
               "  \"safe_set\": {\"normals\": [[1,0],[-1,0],[0,1],[0,-1]],\n"
               "               \"center\": [0,0]},\n"
               "  \"invariant_set\": {\"normals\": [[1,0],[-1,0],[0,1],[0,-1]],\n"
               "                    \"center\": [0,0],\n"
               "                    \"offsets\": [0.8,0.8,0.8,0.8]},\n"
               "  \"horizon\": 3\n"
               "}\n");

    // 4-state lateral-dynamics shape: rank gate needs K >= n_u + n_x = 5.
    const nnv::OraclePlant vehicle = nnv::vehicle_plant();
    nnv::save_plant(vehicle, dir + "/vehicle_plant.json");
    nnv::save_trajectory_csv(collect_box(vehicle, 4, 2),
                             dir + "/vehicle_data_k4.csv");
    nnv::save_trajectory_csv(collect_box(vehicle, 5, 2),
                             dir + "/vehicle_data_k5.csv");

    // Inverted pendulum sampled near the upright equilibrium, plus a tanh
    // controller fitted to the LQR gain of its linearization.
    nnv::save_trajectory_csv(nnv::pendulum_data(7), dir + "/pendulum_data.csv");
    const nnv::PendulumExample pend;
    nnv::save_network(nnv::fit_example_controller(pend.linearized(), 4, 3),
                      dir + "/pendulum_controller.json");
  } catch (const std::exception& e) {
    std::cerr << "gen_fixtures: " << e.what() << "\n";
    return 1;
  }
  std::cout << "fixtures written to " << dir << "/\n";
  return 0;
}
