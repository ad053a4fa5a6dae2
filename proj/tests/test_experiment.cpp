#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "meshnewton/experiment.hpp"

using namespace meshnewton;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

json small_config(const fs::path& out) {
  json j = json::parse(R"({
    "graph": {"kind": "erdos_renyi", "m": 6, "p": 0.6, "seed": 3},
    "mixing": {"rule": "metropolis_hastings", "scheme": "single", "K": 1},
    "data": {"source": "synthetic_ridge", "n": 10, "d": 4, "sigma_over_dn": 1.0,
             "noise_std": 0.01, "seed": 2, "partition_seed": 1},
    "loss": {"kind": "ridge", "reg": "inv_sqrt_N"},
    "algorithms": [
      {"name": "diregina", "tuning": {"M": 0.001, "tau": "2beta"}},
      {"name": "diging", "tuning": {"stepsize": 0.5}}
    ],
    "stop": {"max_rounds": 15, "eps_p": 0},
    "output": {"prefix": "small"}
  })");
  j["output"]["dir"] = out.string();
  return j;
}

std::string without_wall_time(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("meshnewton_test_" + name);
  fs::remove_all(p);
  return p;
}

}  // namespace

TEST_CASE("config parsing defaults and validation") {
  json j = small_config("unused");
  const ExperimentConfig c = parse_config(j);
  CHECK(c.graph.m == 6);
  CHECK(c.loss.reg_inv_sqrt_n);
  CHECK(c.data.sigma == doctest::Approx(1.0 / 40));
  CHECK(c.algorithms.size() == 2);
  CHECK_FALSE(c.algorithms[0].tau.has_value());

  const auto bad = [&](const json& patch) {
    json k = small_config("unused");
    k.merge_patch(patch);
    CHECK_THROWS_AS(parse_config(k), ConfigError);
  };
  bad({{"graph", {{"p", 1.5}}}});
  bad({{"graph", {{"m", 0}}}});
  bad({{"graph", {{"kind", "torus"}}}});
  bad({{"mixing", {{"K", 0}}}});
  bad({{"mixing", {{"scheme", "magic"}}}});
  bad({{"data", {{"source", "libsvm"}, {"path", "/nonexistent/file"}}}});
  bad({{"loss", {{"reg", -1}}}});
  bad({{"stop", {{"max_rounds", -1}}}});
  bad({{"algorithms", json::array()}});
  bad({{"loss", {{"feasible", {{"kind", "l2_ball"}, {"radius", 1.0}}}}}});  // diging on a ball
}

TEST_CASE("graph selection by target rho") {
  GraphSpec s;
  s.m = 30;
  s.p = 0.9;
  s.target_rho = 0.2;
  const GraphBuild b = build_graph(s);
  CHECK(std::abs(metropolis_hastings(b.graph).rho() - 0.2) <= s.rho_tol);
  CHECK(build_graph(s).seed_used == b.seed_used);
}

TEST_CASE("max_rounds = 0 writes single-row traces") {
  const fs::path out = scratch("zero");
  json j = small_config(out);
  j["stop"]["max_rounds"] = 0;
  const ExperimentResult r = run_experiment(parse_config(j), 1);
  REQUIRE(r.traces.size() == 2);
  for (const auto& t : r.traces) CHECK(t.rows.size() == 1);
  std::ifstream in(out / "small_diregina.csv");
  std::string header, row, extra;
  std::getline(in, header);
  CHECK(header == "nu,comm_rounds,p_nu,consensus_err,tracking_err,mean_step_norm,wall_time_ms");
  CHECK(static_cast<bool>(std::getline(in, row)));
  CHECK_FALSE(static_cast<bool>(std::getline(in, extra)));
  CHECK(fs::exists(out / "small_manifest.json"));
}

TEST_CASE("manifest carries the constants used") {
  const fs::path out = scratch("manifest");
  const ExperimentResult r = run_experiment(parse_config(small_config(out)), 1);
  const json& m = r.manifest;
  for (const char* key : {"beta_hat", "mu_hat", "Q_hat", "L_hat", "reg"})
    CHECK(m["constants"].contains(key));
  CHECK(m["mixing"].contains("rho"));
  CHECK(m["mixing"].contains("rho_K"));
  CHECK(m["runs"][0]["tau"].get<double>() ==
        doctest::Approx(2.0 * m["constants"]["beta_hat"].get<double>()));
  CHECK(m["runs"][0].contains("D_hat"));
  CHECK(m["reference"]["gradient_mapping"].get<double>() <= 1e-10);
}

TEST_CASE("runs are reproducible across repeats and thread counts") {
  std::string first_diregina, first_diging;
  for (int threads : {1, 2, 4, 1}) {
    const fs::path out = scratch("det" + std::to_string(threads));
    run_experiment(parse_config(small_config(out)), threads);
    const std::string a = without_wall_time(out / "small_diregina.csv");
    const std::string b = without_wall_time(out / "small_diging.csv");
    if (first_diregina.empty()) {
      first_diregina = a;
      first_diging = b;
    }
    CHECK(a == first_diregina);
    CHECK(b == first_diging);
  }
}

TEST_CASE("write_trace_csv formatting") {
  Trace t;
  t.rows.push_back(TraceRow{3, 7, 0.5, 0.5, 0.25, 0.0, 1.0, 12.34567});
  t.rows.push_back(TraceRow{4, 8, 1e-20, 1e-20, 5e10, 0.1, 2.0, 0.5});
  std::ostringstream os;
  write_trace_csv(os, t);
  CHECK(os.str() ==
        "nu,comm_rounds,p_nu,consensus_err,tracking_err,mean_step_norm,wall_time_ms\n"
        "3,7,0.5,0.25,0,1,12.346\n"
        "4,8,9.9999999999999995e-21,50000000000,0.10000000000000001,2,0.500\n");
}
