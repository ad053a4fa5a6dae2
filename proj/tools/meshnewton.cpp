// meshnewton: command-line driver for decentralized cubic-Newton experiments.

#include <CLI11.hpp>
#include <fstream>
#include <iomanip>
#include <iostream>

#include "meshnewton/experiment.hpp"

namespace mn = meshnewton;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct GraphArgs {
  std::string topology = "erdos_renyi";
  int m = 30;
  double p = 0.6;
  std::uint64_t seed = 1;
  std::string edges;
  double target_rho = -1.0;

  void attach(CLI::App* app) {
    app->add_option("--topology", topology, "erdos_renyi | path | ring | star | complete");
    app->add_option("--m", m, "number of agents");
    app->add_option("--p", p, "edge probability (erdos_renyi)");
    app->add_option("--seed", seed, "graph seed (erdos_renyi)");
    app->add_option("--edges", edges, "read the graph from an edge-list file");
    app->add_option("--target-rho", target_rho, "resample until rho is within 0.02");
  }

  mn::GraphSpec spec() const {
    mn::GraphSpec s;
    s.kind = edges.empty() ? topology : "edge_list";
    s.m = m;
    s.p = p;
    s.seed = seed;
    s.path = edges;
    if (target_rho >= 0.0) s.target_rho = target_rho;
    return s;
  }
};

int graph_info(const GraphArgs& ga, const std::string& write_to) {
  const auto gb = mn::build_graph(ga.spec());
  const auto& g = gb.graph;
  int dmin = g.num_vertices(), dmax = 0;
  for (int i = 0; i < g.num_vertices(); ++i) {
    dmin = std::min(dmin, g.degree(i));
    dmax = std::max(dmax, g.degree(i));
  }
  std::cout << "graph: " << g.num_vertices() << " vertices, " << g.num_edges() << " edges, "
            << (mn::is_connected(g) ? "connected" : "disconnected") << "\n";
  std::cout << "m=" << g.num_vertices() << "\nedges=" << g.num_edges()
            << "\nconnected=" << (mn::is_connected(g) ? 1 : 0) << "\nmin_degree=" << dmin
            << "\nmax_degree=" << dmax << "\nseed_used=" << gb.seed_used
            << "\nresamples=" << gb.resamples << "\n";
  if (!write_to.empty()) {
    std::ofstream os(write_to);
    mn::write_edge_list(os, g);
  }
  return 0;
}

int mixing_info(const GraphArgs& ga, const std::string& scheme, int K, const std::string& csv) {
  const auto gb = mn::build_graph(ga.spec());
  const mn::MixingOperator op(mn::metropolis_hastings(gb.graph), mn::parse_mixing_scheme(scheme), K);
  std::cout << "Metropolis-Hastings weights on " << gb.graph.num_vertices() << " agents\n";
  std::cout << std::setprecision(6) << std::fixed;
  std::cout << "rho=" << op.base.rho() << "\nlambda_min=" << op.base.lambda_min()
            << "\nspectral_radius=" << op.base.spectral_radius() << "\nscheme=" << scheme
            << "\nK=" << op.K << "\nrho_K=" << mn::contraction_factor(op) << "\n";
  if (!csv.empty()) {
    std::ofstream os(csv);
    mn::write_csv(os, op.base);
  }
  return 0;
}

int estimate_constants(const std::string& config) {
  const auto cfg = mn::load_config(config);
  const auto setup = mn::build_setup(cfg);
  const mn::MixingOperator op = mn::build_operator(setup.weights, cfg.mixing);
  const auto X0 = mn::initial_points(setup.loss, setup.feasible, cfg.algorithms.front().init, op,
                                     cfg.init_seed);
  const auto k = mn::estimate_constants(setup, X0, cfg.beta_probes, cfg.init_seed + 7919);
  std::cout << "estimated constants (probe-based lower bounds for beta and L)\n";
  std::cout << std::setprecision(10) << "beta_hat=" << k.beta << "\nmu_hat=" << k.mu
            << "\nQ_hat=" << k.Q << "\nL_hat=" << k.L << "\nreg=" << setup.reg
            << "\nrho=" << setup.weights.rho() << "\n";
  return 0;
}

int solve_centralized(const std::string& config, double tol) {
  const auto cfg = mn::load_config(config);
  const auto setup = mn::build_setup(cfg);
  const auto ref = mn::centralized_reference(setup.loss, setup.feasible,
                                             tol > 0.0 ? tol : cfg.reference_tol);
  std::cout << "centralized reference solution\n" << std::setprecision(17);
  std::cout << "F_hat=" << ref.F_hat << "\ngradient_mapping=" << ref.gradient_mapping
            << "\niterations=" << ref.iterations << "\nx_hat=";
  for (Eigen::Index i = 0; i < ref.x_hat.size(); ++i) std::cout << (i ? "," : "") << ref.x_hat(i);
  std::cout << "\n";
  return 0;
}

int parse_check(const std::string& file, long long d_hint) {
  std::ifstream is(file);
  if (!is) throw mn::ConfigError("cannot open " + file);
  std::optional<Eigen::Index> hint;
  if (d_hint > 0) hint = d_hint;
  const auto ds = mn::parse_libsvm(is, hint);
  std::cout << "parsed " << file << "\nsamples=" << ds.size() << "\ndim=" << ds.dim()
            << "\nlabels="
            << (ds.kind == mn::LabelKind::classification ? "classification" : "regression")
            << "\n";
  return 0;
}

int run(const std::string& config, int threads, const std::string& out_dir) {
  auto cfg = mn::load_config(config);
  if (!out_dir.empty()) cfg.output_dir = out_dir;
  const auto res = mn::run_experiment(cfg, threads);
  for (std::size_t i = 0; i < res.traces.size(); ++i) {
    const auto& t = res.traces[i];
    const auto& last = t.rows.back();
    std::cout << t.algorithm << ": nu=" << last.nu << " comm_rounds=" << last.comm_rounds
              << std::scientific << std::setprecision(3) << " p_nu=" << last.p_nu
              << std::defaultfloat << "\n";
  }
  for (const auto& f : res.files) std::cout << "wrote " << f.string() << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decentralized cubic-regularized Newton (DiRegINA) simulator"};
  app.require_subcommand(1);

  std::string config;
  int threads = 0;
  std::string out_dir;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  run_cmd->add_option("config", config, "experiment config")->required();
  run_cmd->add_option("--threads", threads, "worker threads (default: MESHNEWTON_THREADS)");
  run_cmd->add_option("--output-dir", out_dir, "override output.dir");

  GraphArgs ga_graph, ga_mix;
  std::string write_edges;
  auto* graph_cmd = app.add_subcommand("graph-info", "generate a graph and summarize it");
  ga_graph.attach(graph_cmd);
  graph_cmd->add_option("--write", write_edges, "write the edge list here");

  std::string scheme = "single";
  int K = 1;
  std::string mix_csv;
  auto* mix_cmd = app.add_subcommand("mixing-info", "Metropolis-Hastings weights and spectral gap");
  ga_mix.attach(mix_cmd);
  mix_cmd->add_option("--scheme", scheme, "single | power | chebyshev");
  mix_cmd->add_option("--K", K, "rounds per mixing application");
  mix_cmd->add_option("--csv", mix_csv, "write the weight matrix as CSV");

  auto* est_cmd = app.add_subcommand("estimate-constants", "beta, mu, Q, L estimates for a config");
  est_cmd->add_option("config", config, "experiment config")->required();

  double tol = 0.0;
  auto* ref_cmd = app.add_subcommand("solve-centralized", "solve the pooled problem");
  ref_cmd->add_option("config", config, "experiment config")->required();
  ref_cmd->add_option("--tol", tol, "gradient-mapping tolerance");

  std::string file;
  long long d_hint = 0;
  auto* parse_cmd = app.add_subcommand("parse-check", "validate a LIBSVM file");
  parse_cmd->add_option("file", file, "LIBSVM file")->required();
  parse_cmd->add_option("--dim", d_hint, "minimum feature dimension");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*run_cmd) return run(config, threads, out_dir);
    if (*graph_cmd) return graph_info(ga_graph, write_edges);
    if (*mix_cmd) return mixing_info(ga_mix, scheme, K, mix_csv);
    if (*est_cmd) return estimate_constants(config);
    if (*ref_cmd) return solve_centralized(config, tol);
    if (*parse_cmd) return parse_check(file, d_hint);
  } catch (const mn::ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mn::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const mn::InvalidArgument& e) {
    std::cerr << "invalid argument: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return 0;
}
