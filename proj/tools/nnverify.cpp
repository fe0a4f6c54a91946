// nnverify: data-driven stability, safety and invariance verification for
// feedback loops of an unknown linear plant and a known NN controller.
//
// Exit codes: 0 = certified, 2 = not certified, 1 = usage or data error.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "nnv/data_engine.hpp"
#include "nnv/examples.hpp"
#include "nnv/nn_model.hpp"
#include "nnv/polytope.hpp"
#include "nnv/reach.hpp"
#include "nnv/sdpa_io.hpp"
#include "nnv/sectors.hpp"
#include "nnv/stability.hpp"

namespace {

constexpr int kExitCertified = 0;
constexpr int kExitError = 1;
constexpr int kExitNotCertified = 2;

struct RunConfig {
  std::string mode;
  std::string nn_path;
  std::string data_path;
  std::string sets_path;
  std::string plant_path;
  std::string example;
  int horizon = 1;
  std::string objective = "trace_min";
  int mult_degree = -1;
  std::uint64_t seed = 0;
  std::string out_dir = ".";
  double solver_tol = 1e-8;
  std::string export_sdpa_path;
  Eigen::Index samples = 0;
  double input_mag = 1.0;
  double init_mag = 1.0;
  double noise = 0.0;
  bool rk4 = false;
};

void check_solver_env() {
  const char* env = std::getenv("NNV_SOLVER");
  if (env == nullptr) return;
  const std::string value(env);
  if (value.empty() || value == "internal") return;
  throw nnv::Error(nnv::ErrorKind::kUnsupported,
                   "NNV_SOLVER='" + value +
                       "' is not available; only 'internal' ships with this "
                       "build");
}

nnv::SectorData default_sectors(const nnv::NeuralNetwork& net) {
  return nnv::SectorData::uniform(
      nnv::default_sector(net.activation(), net.leaky_slope()),
      net.total_neurons());
}

std::filesystem::path out_file(const RunConfig& cfg, const std::string& name) {
  std::filesystem::create_directories(cfg.out_dir);
  return std::filesystem::path(cfg.out_dir) / name;
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) {
    throw nnv::Error(nnv::ErrorKind::kIo, "cannot write " + path.string());
  }
  out << text;
}

void write_verdict(const RunConfig& cfg, const std::string& verdict,
                   int exit_code, const std::string& message) {
  std::string json = "{\n  \"mode\": \"" + cfg.mode + "\",\n  \"verdict\": \"" +
                     verdict + "\",\n  \"exit_code\": " +
                     std::to_string(exit_code) + ",\n  \"message\": \"" +
                     message + "\"\n}\n";
  write_text(out_file(cfg, "verdict.json"), json);
}

int run_stability(const RunConfig& cfg) {
  const nnv::NeuralNetwork net = nnv::load_network(cfg.nn_path);
  const nnv::TrajectoryData data = nnv::load_trajectory_csv(cfg.data_path);
  const nnv::SectorData sectors = default_sectors(net);

  nnv::StabilityOptions options;
  options.objective = nnv::parse_stability_objective(cfg.objective);
  options.solver.feasibility_tol = cfg.solver_tol;
  options.solver.gap_tol = cfg.solver_tol;

  if (!cfg.export_sdpa_path.empty()) {
    nnv::export_sdpa(
        nnv::build_stability_program(net, sectors, data, options),
        cfg.export_sdpa_path);
  }

  const nnv::StabilityCertificate cert =
      nnv::verify_stability(net, sectors, data, options);
  nnv::save_certificate(cert, out_file(cfg, "certificate.json").string());

  std::string report;
  report += "stability verification\n";
  report += "verdict: " + std::string(cert.certified ? "certified"
                                                     : "not certified") + "\n";
  report += "status: " + std::string(nnv::to_string(cert.status)) + "\n";
  if (!cert.message.empty()) report += "note: " + cert.message + "\n";
  if (cert.certified) {
    report += "Lyapunov function V(x) = x^T Q1^{-1} x with trace(Q1) = " +
              std::to_string(cert.Q1.trace()) + "\n";
    report += "max equality residual: " +
              std::to_string(cert.residuals.max_equality_residual) + "\n";
    report += "min cone eigenvalue: " +
              std::to_string(cert.residuals.min_cone_eigenvalue) + "\n";
    if (cert.Q1.rows() >= 2) {
      const Eigen::MatrixXd pts = nnv::roa_ellipsoid(cert, {0, 1});
      nnv::save_polyline_csv(pts, out_file(cfg, "roa_0_1.csv").string());
      report += "ROA slice (x0, x1) written to roa_0_1.csv\n";
    }
  }
  write_text(out_file(cfg, "report.txt"), report);
  write_verdict(cfg, cert.certified ? "certified" : "not_certified",
                cert.certified ? kExitCertified : kExitNotCertified,
                cert.message.empty() ? "ok" : cert.message);
  std::cout << report;
  return cert.certified ? kExitCertified : kExitNotCertified;
}

void write_gamma_csv(const RunConfig& cfg, const nnv::ReachResult& result) {
  std::string csv = "k";
  if (!result.steps.empty()) {
    for (Eigen::Index i = 0; i < result.steps.front().gamma.size(); ++i) {
      csv += ",gamma_" + std::to_string(i);
    }
  }
  csv += "\n";
  for (std::size_t k = 0; k < result.steps.size(); ++k) {
    csv += std::to_string(k + 1);
    const Eigen::VectorXd& g = result.steps[k].gamma;
    for (Eigen::Index i = 0; i < g.size(); ++i) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%.12g", g[i]);
      csv += std::string(",") + buf;
    }
    csv += "\n";
  }
  write_text(out_file(cfg, "gamma.csv"), csv);
}

int run_safety(const RunConfig& cfg) {
  const nnv::NeuralNetwork net = nnv::load_network(cfg.nn_path);
  const nnv::TrajectoryData data = nnv::load_trajectory_csv(cfg.data_path);
  const nnv::ProblemSets sets = nnv::load_sets(cfg.sets_path);
  if (!sets.input_set || !sets.safe_set) {
    throw nnv::Error(nnv::ErrorKind::kInvalidInput,
                     "safety mode needs input_set and safe_set in " +
                         cfg.sets_path);
  }
  const nnv::SectorData sectors = default_sectors(net);
  nnv::ReachOptions options;
  options.multiplier_degree = cfg.mult_degree;
  options.solver.feasibility_tol = cfg.solver_tol;
  options.solver.gap_tol = cfg.solver_tol;

  if (!cfg.export_sdpa_path.empty()) {
    nnv::export_sdpa(
        nnv::build_reach_facet_program(net, sectors, data, *sets.input_set,
                                       *sets.safe_set, 0, options),
        cfg.export_sdpa_path);
  }

  const nnv::ReachResult result =
      nnv::verify_safety(net, sectors, data, *sets.input_set, *sets.safe_set,
                         cfg.horizon, options);
  nnv::save_reach_result(result, out_file(cfg, "reach.json").string());
  write_gamma_csv(cfg, result);

  std::string report = "safety verification, horizon " +
                       std::to_string(cfg.horizon) + "\n";
  for (std::size_t k = 0; k < result.steps.size(); ++k) {
    const auto& step = result.steps[k];
    report += "k=" + std::to_string(k + 1) + ": ";
    if (step.certified) {
      report += "max gamma " + std::to_string(step.gamma.maxCoeff()) + "\n";
    } else {
      report += "not certified\n";
    }
  }
  report += "verdict: " + result.message + "\n";
  write_text(out_file(cfg, "report.txt"), report);
  write_verdict(cfg, result.safe ? "certified" : "not_certified",
                result.safe ? kExitCertified : kExitNotCertified,
                result.message);
  std::cout << report;
  return result.safe ? kExitCertified : kExitNotCertified;
}

int run_invariance(const RunConfig& cfg) {
  const nnv::NeuralNetwork net = nnv::load_network(cfg.nn_path);
  const nnv::TrajectoryData data = nnv::load_trajectory_csv(cfg.data_path);
  const nnv::ProblemSets sets = nnv::load_sets(cfg.sets_path);
  if (!sets.invariant_set) {
    throw nnv::Error(nnv::ErrorKind::kInvalidInput,
                     "invariance mode needs invariant_set in " +
                         cfg.sets_path);
  }
  const nnv::SectorData sectors = default_sectors(net);
  nnv::ReachOptions options;
  options.multiplier_degree = cfg.mult_degree;
  options.solver.feasibility_tol = cfg.solver_tol;
  options.solver.gap_tol = cfg.solver_tol;

  if (!cfg.export_sdpa_path.empty()) {
    nnv::export_sdpa(
        nnv::build_reach_facet_program(net, sectors, data, *sets.invariant_set,
                                       *sets.invariant_set, 0, options),
        cfg.export_sdpa_path);
  }

  const nnv::InvarianceResult result =
      nnv::verify_invariance(net, sectors, data, *sets.invariant_set, options);
  nnv::ReachResult as_reach;
  as_reach.steps.push_back(result.step);
  as_reach.horizon = 1;
  as_reach.certified_steps = result.step.certified ? 1 : 0;
  as_reach.safe = result.invariant;
  as_reach.message = result.message;
  nnv::save_reach_result(as_reach, out_file(cfg, "invariance.json").string());

  std::string report = "invariance verification\n";
  if (result.step.certified) {
    report += "max gamma " + std::to_string(result.step.gamma.maxCoeff()) + "\n";
  }
  report += "verdict: " + result.message + "\n";
  if (sets.input_set && sets.safe_set) {
    const nnv::SafetyViaInvariance sv = nnv::safety_via_invariance(
        *sets.input_set, *sets.invariant_set, *sets.safe_set, result);
    report += "safety via invariance: " + sv.message + "\n";
  }
  write_text(out_file(cfg, "report.txt"), report);
  write_verdict(cfg, result.invariant ? "certified" : "not_certified",
                result.invariant ? kExitCertified : kExitNotCertified,
                result.message);
  std::cout << report;
  return result.invariant ? kExitCertified : kExitNotCertified;
}

int run_collect(const RunConfig& cfg) {
  nnv::TrajectoryData data;
  if (cfg.example == "pendulum") {
    data = nnv::pendulum_data(cfg.seed, cfg.samples > 0 ? cfg.samples : 5,
                              cfg.rk4);
  } else if (!cfg.plant_path.empty()) {
    const nnv::OraclePlant plant = nnv::load_plant(cfg.plant_path);
    const Eigen::Index n_x = plant.A.rows(), n_u = plant.B.cols();
    const Eigen::Index samples =
        cfg.samples > 0 ? cfg.samples : n_x + n_u;
    data = nnv::collect(plant, samples,
                        Eigen::VectorXd::Constant(n_u, -cfg.input_mag),
                        Eigen::VectorXd::Constant(n_u, cfg.input_mag),
                        Eigen::VectorXd::Constant(n_x, -cfg.init_mag),
                        Eigen::VectorXd::Constant(n_x, cfg.init_mag),
                        cfg.seed);
  } else {
    throw nnv::Error(nnv::ErrorKind::kInvalidInput,
                     "collect mode needs --plant or --example pendulum");
  }
  if (cfg.noise > 0.0) {
    // Exploratory only: the verification theorems assume noiseless data,
    // so noisy collections are marked non-certifying.
    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::normal_distribution<double> gauss(0.0, cfg.noise);
    for (Eigen::Index i = 0; i < data.X1.rows(); ++i) {
      for (Eigen::Index j = 0; j < data.X1.cols(); ++j) {
        data.X1(i, j) += gauss(rng);
      }
    }
    data.provenance += " + gaussian noise (non-certifying)";
    std::cout << "warning: noisy data is for exploration only; certificates "
                 "over it are not sound\n";
  }
  const std::string path = out_file(cfg, "data.csv").string();
  nnv::save_trajectory_csv(data, path);
  std::cout << "wrote " << data.samples() << " samples to " << path << "\n";
  return kExitCertified;
}

int run_check_data(const RunConfig& cfg) {
  const nnv::TrajectoryData data = nnv::load_trajectory_csv(cfg.data_path);
  const nnv::RankReport report = nnv::check_excitation(data);
  std::string text = "excitation check on " + cfg.data_path + "\n";
  text += "rank([U0;X0]) = " + std::to_string(report.rank_data) + " (need " +
          std::to_string(report.required_data) + ")\n";
  text += "rank(X1) = " + std::to_string(report.rank_x1) + " (need " +
          std::to_string(report.required_x1) + ")\n";
  text += std::string("result: ") + (report.pass ? "pass" : "fail") + "\n";
  write_text(out_file(cfg, "report.txt"), text);
  std::cout << text;
  return report.pass ? kExitCertified : kExitNotCertified;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  CLI::App app{
      "Data-driven verification of NN-controlled linear systems: stability, "
      "finite-time safety, and set invariance certificates from sampled "
      "input/state data."};
  app.add_option("--mode", cfg.mode,
                 "stability | safety | invariance | collect | check-data")
      ->required();
  app.add_option("--nn", cfg.nn_path, "controller weights JSON");
  app.add_option("--data", cfg.data_path, "trajectory CSV");
  app.add_option("--sets", cfg.sets_path, "problem sets JSON");
  app.add_option("--plant", cfg.plant_path, "plant JSON (collect mode)");
  app.add_option("--example", cfg.example, "bundled example name (collect)");
  app.add_option("--horizon", cfg.horizon, "safety horizon T");
  app.add_option("--objective", cfg.objective,
                 "stability objective: feasibility | trace_min | trace_max");
  app.add_option("--mult-degree", cfg.mult_degree,
                 "SOS multiplier degree: 0, 2, or -1 to choose by network shape");
  app.add_option("--seed", cfg.seed, "RNG seed (collect mode)");
  app.add_option("--out", cfg.out_dir, "output directory");
  app.add_option("--solver-tol", cfg.solver_tol,
                 "feasibility/gap tolerance of the SDP solver");
  app.add_option("--export-sdpa", cfg.export_sdpa_path,
                 "also write the (first) SDP in SDPA sparse format");
  app.add_option("--samples", cfg.samples, "sample count (collect mode)");
  app.add_option("--input-mag", cfg.input_mag, "input box half-width (collect)");
  app.add_option("--init-mag", cfg.init_mag, "initial box half-width (collect)");
  app.add_option("--noise", cfg.noise,
                 "additive Gaussian noise std on X1 (exploratory only)");
  app.add_flag("--rk4", cfg.rk4, "use RK4 instead of forward Euler (pendulum)");

  CLI11_PARSE(app, argc, argv);

  try {
    check_solver_env();
    if (cfg.mode == "stability") return run_stability(cfg);
    if (cfg.mode == "safety") return run_safety(cfg);
    if (cfg.mode == "invariance") return run_invariance(cfg);
    if (cfg.mode == "collect") return run_collect(cfg);
    if (cfg.mode == "check-data") return run_check_data(cfg);
    throw nnv::Error(nnv::ErrorKind::kInvalidInput,
                     "unknown mode '" + cfg.mode + "'");
  } catch (const nnv::Error& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return kExitError;
  } catch (const std::exception& e) {
    std::cerr << "{\"error\": \"" << e.what() << "\"}\n";
    return kExitError;
  }
}
