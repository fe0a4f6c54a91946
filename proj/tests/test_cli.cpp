#include <doctest.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>

#include <json.hpp>

#include "nnv/data_engine.hpp"
#include "nnv/nn_model.hpp"
#include "nnv/polytope.hpp"
#include "nnv/reach.hpp"
#include "nnv/sectors.hpp"
#include "nnv/stability.hpp"
#include "test_util.hpp"

using namespace nnv;

namespace {

const std::string kAssets = NNV_ASSET_DIR;

std::string fresh_dir(const std::string& tag) {
  static int counter = 0;
  const std::string dir =
      "/tmp/nnv_cli_" + tag + "_" + std::to_string(counter++);
  REQUIRE(std::system(("rm -rf " + dir + " && mkdir -p " + dir).c_str()) == 0);
  return dir;
}

int run_cli(const std::string& args, const std::string& out_dir) {
  REQUIRE_FALSE(testutil::cli_path.empty());
  const std::string cmd = testutil::cli_path + " " + args + " --out " +
                          out_dir + " > " + out_dir + "/stdout.log 2>&1";
  const int status = std::system(cmd.c_str());
  REQUIRE(WIFEXITED(status));
  return WEXITSTATUS(status);
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

SectorData sectors_for(const NeuralNetwork& net) {
  return SectorData::uniform(default_sector(net.activation(), net.leaky_slope()),
                             net.total_neurons());
}

}  // namespace

TEST_CASE("cli: check-data rejects the K=4 vehicle file and passes K=5") {
  const std::string d4 = fresh_dir("k4");
  CHECK(run_cli("--mode check-data --data " + kAssets + "/vehicle_data_k4.csv",
                d4) == 2);
  const std::string report = slurp(d4 + "/report.txt");
  CHECK(report.find("(need 5)") != std::string::npos);
  CHECK(report.find("result: fail") != std::string::npos);

  const std::string d5 = fresh_dir("k5");
  CHECK(run_cli("--mode check-data --data " + kAssets + "/vehicle_data_k5.csv",
                d5) == 0);
  CHECK(slurp(d5 + "/report.txt").find("result: pass") != std::string::npos);
}

TEST_CASE("cli: stability on the bundled toy certifies and matches the library") {
  const std::string dir = fresh_dir("stab");
  CHECK(run_cli("--mode stability --nn " + kAssets + "/toy_controller.json" +
                    " --data " + kAssets + "/toy_data.csv",
                dir) == 0);

  const nlohmann::json verdict =
      nlohmann::json::parse(slurp(dir + "/verdict.json"));
  CHECK(verdict["verdict"] == "certified");
  CHECK(verdict["exit_code"] == 0);

  // CLI/library parity on identical inputs.
  const NeuralNetwork net = load_network(kAssets + "/toy_controller.json");
  const TrajectoryData data = load_trajectory_csv(kAssets + "/toy_data.csv");
  const StabilityCertificate cert =
      verify_stability(net, sectors_for(net), data);
  REQUIRE(cert.certified);
  const nlohmann::json cert_json =
      nlohmann::json::parse(slurp(dir + "/certificate.json"));
  const auto q1 = cert_json["Q1"];
  for (Eigen::Index i = 0; i < cert.Q1.rows(); ++i) {
    for (Eigen::Index j = 0; j < cert.Q1.cols(); ++j) {
      CHECK(q1[i][j].get<double>() == cert.Q1(i, j));
    }
  }

  // Every emitted ROA ellipse point lies on x^T Q1^{-1} x = 1.
  const Eigen::MatrixXd qinv = cert.Q1.inverse();
  std::ifstream roa(dir + "/roa_0_1.csv");
  std::string line;
  std::getline(roa, line);  // header
  int points = 0;
  while (std::getline(roa, line)) {
    const auto comma = line.find(',');
    REQUIRE(comma != std::string::npos);
    Eigen::Vector2d x(std::stod(line.substr(0, comma)),
                      std::stod(line.substr(comma + 1)));
    CHECK(x.dot(qinv * x) == doctest::Approx(1.0).epsilon(1e-9));
    ++points;
  }
  CHECK(points > 10);
}

TEST_CASE("cli: safety verdict and per-step gamma match the library call") {
  const std::string dir = fresh_dir("safety");
  CHECK(run_cli("--mode safety --nn " + kAssets + "/toy_controller.json" +
                    " --data " + kAssets + "/toy_data.csv --sets " + kAssets +
                    "/toy_sets.json --horizon 3",
                dir) == 0);

  const NeuralNetwork net = load_network(kAssets + "/toy_controller.json");
  const TrajectoryData data = load_trajectory_csv(kAssets + "/toy_data.csv");
  const ProblemSets sets = load_sets(kAssets + "/toy_sets.json");
  REQUIRE(sets.input_set);
  REQUIRE(sets.safe_set);
  const ReachResult lib = verify_safety(net, sectors_for(net), data,
                                        *sets.input_set, *sets.safe_set, 3);
  REQUIRE(lib.safe);

  const nlohmann::json reach = nlohmann::json::parse(slurp(dir + "/reach.json"));
  CHECK(reach["verdict"] == "safe");
  REQUIRE(reach["steps"].size() == lib.steps.size());
  for (std::size_t k = 0; k < lib.steps.size(); ++k) {
    const auto& gammas = reach["steps"][k]["gamma"];
    for (Eigen::Index i = 0; i < lib.steps[k].gamma.size(); ++i) {
      CHECK(gammas[i].get<double>() == lib.steps[k].gamma(i));
    }
  }
}

TEST_CASE("cli: invariance on the bundled toy certifies") {
  const std::string dir = fresh_dir("inv");
  CHECK(run_cli("--mode invariance --nn " + kAssets + "/toy_controller.json" +
                    " --data " + kAssets + "/toy_data.csv --sets " + kAssets +
                    "/toy_sets.json",
                dir) == 0);
  CHECK(slurp(dir + "/report.txt").find("safe for all time") !=
        std::string::npos);
}

TEST_CASE("cli: fixed-seed reruns are byte-identical") {
  const std::string a = fresh_dir("det_a");
  const std::string b = fresh_dir("det_b");
  const std::string args = "--mode stability --nn " + kAssets +
                           "/toy_controller.json --data " + kAssets +
                           "/toy_data.csv";
  CHECK(run_cli(args, a) == 0);
  CHECK(run_cli(args, b) == 0);
  for (const char* name : {"certificate.json", "report.txt", "verdict.json",
                           "roa_0_1.csv"}) {
    CHECK(slurp(a + "/" + name) == slurp(b + "/" + name));
  }

  const std::string c = fresh_dir("det_c");
  const std::string d = fresh_dir("det_d");
  const std::string collect_args =
      "--mode collect --example pendulum --seed 42";
  CHECK(run_cli(collect_args, c) == 0);
  CHECK(run_cli(collect_args, d) == 0);
  CHECK(slurp(c + "/data.csv") == slurp(d + "/data.csv"));
}

TEST_CASE("cli: usage and data errors exit with code 1") {
  const std::string dir = fresh_dir("err");
  CHECK(run_cli("--mode frobnicate", dir) == 1);
  CHECK(run_cli("--mode stability --nn /nonexistent.json --data " + kAssets +
                    "/toy_data.csv",
                dir) == 1);
}

TEST_CASE("cli: sdpa export writes a well-formed header") {
  const std::string dir = fresh_dir("sdpa");
  CHECK(run_cli("--mode stability --nn " + kAssets + "/toy_controller.json" +
                    " --data " + kAssets + "/toy_data.csv --export-sdpa " +
                    dir + "/prog.dat-s",
                dir) == 0);
  const std::string sdpa = slurp(dir + "/prog.dat-s");
  // First non-comment line is the number of dual variables.
  std::istringstream in(sdpa);
  std::string line;
  while (std::getline(in, line) && (line.empty() || line[0] == '"')) {
  }
  CHECK(std::stoi(line) > 0);
}
