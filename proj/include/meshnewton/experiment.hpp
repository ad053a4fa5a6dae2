#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "meshnewton/algorithms.hpp"
#include "meshnewton/data.hpp"
#include "meshnewton/graph.hpp"
#include "meshnewton/losses.hpp"
#include "meshnewton/mixing.hpp"

namespace meshnewton {

/// Invalid or inconsistent configuration (CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

struct GraphSpec {
  std::string kind = "erdos_renyi";  ///< erdos_renyi | path | ring | star | complete | edge_list
  int m = 30;
  double p = 0.6;
  std::uint64_t seed = 1;
  std::string path;  ///< edge_list only
  /// Erdos-Renyi only: keep resampling until |rho - target| <= rho_tol.
  std::optional<double> target_rho;
  double rho_tol = 0.02;
};

struct MixingSpec {
  std::string rule = "metropolis_hastings";
  MixingScheme scheme = MixingScheme::single;
  int K = 1;
};

struct DataSpec {
  std::string source = "synthetic_ridge";  ///< libsvm | synthetic_ridge | synthetic_logistic | mackey_glass
  std::string path;
  LabelMode label_mode = LabelMode::detect;
  int n = 50;
  int d = 40;
  double sigma = 0.0;
  double noise_std = 1e-2;
  std::uint64_t seed = 1;
  std::uint64_t partition_seed = 1;
};

struct LossSpec {
  LossKind kind = LossKind::ridge;
  double reg = 0.0;
  /// reg = 1/sqrt(N), N the number of samples in use.
  bool reg_inv_sqrt_n = false;
  Feasible feasible;
};

struct AlgorithmSpec {
  std::string name = "diregina";  ///< diregina | diging
  /// diregina: "practice" takes M and tau as given (tau unset: 2 beta_hat);
  /// "theory" forces tau = 2 beta_hat and M = L_hat.
  std::string mode = "practice";
  double M = 1e-3;
  std::optional<double> tau;
  InitRule init = InitRule::common_random;
  double subproblem_tol = 1e-10;
  double stepsize = 0.5;
  std::optional<MixingSpec> mixing;  ///< per-algorithm override
};

struct ExperimentConfig {
  GraphSpec graph;
  MixingSpec mixing;
  DataSpec data;
  LossSpec loss;
  std::vector<AlgorithmSpec> algorithms;
  StopRule stop;
  double reference_tol = 1e-12;
  std::uint64_t init_seed = 1;
  CommAccounting accounting = CommAccounting::paired;
  int beta_probes = 0;  ///< random probes beyond the origin and the initial points
  std::filesystem::path output_dir = "out";
  std::string csv_prefix = "run";
  nlohmann::json raw;
};

/// Parses and range-checks; relative paths resolve against `base_dir`.
/// Throws ConfigError.
ExperimentConfig parse_config(const nlohmann::json& j,
                              const std::filesystem::path& base_dir = {});
ExperimentConfig load_config(const std::filesystem::path& file);

struct GraphBuild {
  Graph graph;
  std::uint64_t seed_used = 0;
  int resamples = 0;
};

GraphBuild build_graph(const GraphSpec& spec);
MixingMatrix build_mixing(const Graph& g, const MixingSpec& spec);
MixingOperator build_operator(const MixingMatrix& w, const MixingSpec& spec);

/// Everything a run needs before an algorithm is chosen.
struct Setup {
  GraphBuild graph;
  MixingMatrix weights;
  Partition partition;
  GlobalLoss loss;
  Feasible feasible;
  double reg = 0.0;
  std::optional<Eigen::VectorXd> x_star;
};

Setup build_setup(const ExperimentConfig& cfg);

struct Constants {
  double beta = 0.0;
  double mu = 0.0;
  double Q = 0.0;
  double L = 0.0;
};

/// beta_hat, mu_hat and Q_hat over the origin, the rows of `points` and
/// `extra_probes` projected normal draws; L_hat from random probe pairs.
Constants estimate_constants(const Setup& s, const Eigen::MatrixXd& points, int extra_probes,
                             std::uint64_t seed);

struct ExperimentResult {
  std::vector<Trace> traces;
  nlohmann::json manifest;
  std::vector<std::filesystem::path> files;
};

/// Runs every configured algorithm from the same initial points and writes
/// <prefix>_<algorithm>.csv plus <prefix>_manifest.json into the output dir.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads = 0);

/// Header nu,comm_rounds,p_nu,consensus_err,tracking_err,mean_step_norm,wall_time_ms.
void write_trace_csv(std::ostream& os, const Trace& t);

}  // namespace meshnewton
