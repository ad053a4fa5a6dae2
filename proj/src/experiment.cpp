#include "meshnewton/experiment.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <random>
#include <sstream>

#include "meshnewton/parallel.hpp"

namespace meshnewton {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

const json& section(const json& j, const char* key) {
  static const json empty = json::object();
  if (!j.contains(key)) return empty;
  require(j.at(key).is_object(), std::string("'") + key + "' must be an object");
  return j.at(key);
}

MixingSpec parse_mixing(const json& j) {
  MixingSpec s;
  s.rule = get_or<std::string>(j, "rule", s.rule);
  require(s.rule == "metropolis_hastings", "mixing.rule must be metropolis_hastings");
  try {
    s.scheme = parse_mixing_scheme(get_or<std::string>(j, "scheme", "single"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  s.K = get_or<int>(j, "K", 1);
  require(s.K >= 1, "mixing.K must be >= 1");
  return s;
}

std::string resolve_path(const fs::path& base, const std::string& p) {
  if (p.empty()) return p;
  fs::path path(p);
  if (path.is_relative() && !base.empty()) path = base / path;
  return path.string();
}

void write_manifest(const fs::path& file, const json& manifest) {
  std::ofstream os(file);
  if (!os) throw Error("cannot write " + file.string());
  os << std::setw(2) << manifest << '\n';
}

}  // namespace

ExperimentConfig parse_config(const json& j, const fs::path& base_dir) {
  require(j.is_object(), "config must be a JSON object");
  ExperimentConfig c;
  c.raw = j;

  const json& g = section(j, "graph");
  c.graph.kind = get_or<std::string>(g, "kind", c.graph.kind);
  c.graph.m = get_or<int>(g, "m", c.graph.m);
  c.graph.p = get_or<double>(g, "p", c.graph.p);
  c.graph.seed = get_or<std::uint64_t>(g, "seed", c.graph.seed);
  c.graph.path = resolve_path(base_dir, get_or<std::string>(g, "path", ""));
  if (g.contains("target_rho")) c.graph.target_rho = get_or<double>(g, "target_rho", 0.0);
  c.graph.rho_tol = get_or<double>(g, "rho_tol", c.graph.rho_tol);
  const bool named = c.graph.kind == "path" || c.graph.kind == "ring" ||
                     c.graph.kind == "star" || c.graph.kind == "complete";
  require(named || c.graph.kind == "erdos_renyi" || c.graph.kind == "edge_list",
          "graph.kind '" + c.graph.kind + "' is not supported");
  if (c.graph.kind == "edge_list") {
    require(fs::exists(c.graph.path), "graph.path '" + c.graph.path + "' does not exist");
  } else {
    require(c.graph.m >= 1, "graph.m must be >= 1");
  }
  require(c.graph.p >= 0.0 && c.graph.p <= 1.0, "graph.p must lie in [0,1]");
  require(c.graph.kind != "ring" || c.graph.m >= 3, "ring needs m >= 3");
  if (c.graph.target_rho)
    require(*c.graph.target_rho >= 0.0 && *c.graph.target_rho < 1.0 && c.graph.rho_tol > 0.0,
            "graph.target_rho must lie in [0,1) with rho_tol > 0");

  c.mixing = parse_mixing(section(j, "mixing"));

  const json& d = section(j, "data");
  c.data.source = get_or<std::string>(d, "source", c.data.source);
  c.data.path = resolve_path(base_dir, get_or<std::string>(d, "path", ""));
  const auto mode = get_or<std::string>(d, "labels", "detect");
  require(mode == "detect" || mode == "regression" || mode == "classification",
          "data.labels must be detect, regression or classification");
  c.data.label_mode = mode == "regression"       ? LabelMode::regression
                      : mode == "classification" ? LabelMode::classification
                                                 : LabelMode::detect;
  c.data.n = get_or<int>(d, "n", c.data.n);
  c.data.d = get_or<int>(d, "d", c.data.d);
  c.data.sigma = get_or<double>(d, "sigma", c.data.sigma);
  if (d.contains("sigma_over_dn"))
    c.data.sigma = get_or<double>(d, "sigma_over_dn", 1.0) / (double(c.data.d) * c.data.n);
  c.data.noise_std = get_or<double>(d, "noise_std", c.data.noise_std);
  c.data.seed = get_or<std::uint64_t>(d, "seed", c.data.seed);
  c.data.partition_seed = get_or<std::uint64_t>(d, "partition_seed", c.data.partition_seed);
  require(c.data.source == "libsvm" || c.data.source == "synthetic_ridge" ||
              c.data.source == "synthetic_logistic" || c.data.source == "mackey_glass",
          "data.source '" + c.data.source + "' is not supported");
  if (c.data.source == "libsvm")
    require(fs::exists(c.data.path), "data.path '" + c.data.path + "' does not exist");
  require(c.data.n >= 1 && c.data.d >= 1, "data.n and data.d must be >= 1");
  require(c.data.sigma >= 0.0 && c.data.noise_std >= 0.0, "data.sigma and noise_std must be >= 0");

  const json& l = section(j, "loss");
  try {
    c.loss.kind = parse_loss_kind(get_or<std::string>(l, "kind", "ridge"));
  } catch (const InvalidArgument& e) {
    throw ConfigError(e.what());
  }
  require(c.loss.kind != LossKind::quadratic, "loss.kind quadratic is library-only");
  if (l.contains("reg") && l.at("reg").is_string()) {
    require(l.at("reg").get<std::string>() == "inv_sqrt_N", "loss.reg must be a number or \"inv_sqrt_N\"");
    c.loss.reg_inv_sqrt_n = true;
  } else {
    c.loss.reg = get_or<double>(l, "reg", 0.0);
    require(c.loss.reg >= 0.0, "loss.reg must be >= 0");
  }
  const json& f = section(l, "feasible");
  const auto fkind = get_or<std::string>(f, "kind", "all_space");
  if (fkind == "l2_ball") {
    const double r = get_or<double>(f, "radius", 1.0);
    require(r > 0.0, "loss.feasible.radius must be > 0");
    c.loss.feasible = Feasible::l2_ball(r);
  } else {
    require(fkind == "all_space", "loss.feasible.kind must be all_space or l2_ball");
  }

  require(j.contains("algorithms") && j.at("algorithms").is_array() && !j.at("algorithms").empty(),
          "'algorithms' must be a non-empty array");
  for (const auto& a : j.at("algorithms")) {
    require(a.is_object(), "each algorithm must be an object");
    AlgorithmSpec s;
    s.name = get_or<std::string>(a, "name", "");
    require(s.name == "diregina" || s.name == "diging", "algorithm name must be diregina or diging");
    const json& t = section(a, "tuning");
    s.mode = get_or<std::string>(t, "mode", s.mode);
    require(s.mode == "practice" || s.mode == "theory", "tuning.mode must be practice or theory");
    s.M = get_or<double>(t, "M", s.M);
    if (t.contains("tau") && !t.at("tau").is_string()) s.tau = get_or<double>(t, "tau", 0.0);
    if (t.contains("tau") && t.at("tau").is_string())
      require(t.at("tau").get<std::string>() == "2beta", "tuning.tau must be a number or \"2beta\"");
    try {
      s.init = parse_init_rule(get_or<std::string>(t, "init", "common_random"));
    } catch (const InvalidArgument& e) {
      throw ConfigError(e.what());
    }
    s.subproblem_tol = get_or<double>(t, "subproblem_tol", s.subproblem_tol);
    s.stepsize = get_or<double>(t, "stepsize", s.stepsize);
    if (t.contains("mixing")) s.mixing = parse_mixing(t.at("mixing"));
    require(s.M >= 0.0 && (!s.tau || *s.tau >= 0.0), "tuning.M and tuning.tau must be >= 0");
    require(s.subproblem_tol > 0.0, "tuning.subproblem_tol must be > 0");
    require(s.stepsize >= 0.0, "tuning.stepsize must be >= 0");
    require(s.name != "diging" || !c.loss.feasible.is_ball(), "diging needs an unconstrained problem");
    c.algorithms.push_back(s);
  }

  const json& st = section(j, "stop");
  c.stop.max_rounds = get_or<long long>(st, "max_rounds", c.stop.max_rounds);
  c.stop.eps_p = get_or<double>(st, "eps_p", 0.0);
  require(c.stop.max_rounds >= 0, "stop.max_rounds must be >= 0");

  c.reference_tol = get_or<double>(section(j, "reference"), "tol", c.reference_tol);
  require(c.reference_tol > 0.0, "reference.tol must be > 0");
  c.init_seed = get_or<std::uint64_t>(j, "init_seed", c.init_seed);
  c.beta_probes = get_or<int>(j, "beta_probes", 0);
  require(c.beta_probes >= 0, "beta_probes must be >= 0");
  const auto acc = get_or<std::string>(j, "comm_accounting", "paired");
  require(acc == "paired" || acc == "separate", "comm_accounting must be paired or separate");
  c.accounting = acc == "paired" ? CommAccounting::paired : CommAccounting::separate;

  const json& o = section(j, "output");
  c.output_dir = resolve_path(base_dir, get_or<std::string>(o, "dir", "out"));
  c.csv_prefix = get_or<std::string>(o, "prefix", "run");
  require(!c.csv_prefix.empty(), "output.prefix must not be empty");
  return c;
}

ExperimentConfig load_config(const fs::path& file) {
  std::ifstream is(file);
  if (!is) throw ConfigError("cannot open config " + file.string());
  json j;
  try {
    is >> j;
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  return parse_config(j, file.parent_path());
}

GraphBuild build_graph(const GraphSpec& spec) {
  if (spec.kind == "edge_list") {
    std::ifstream is(spec.path);
    if (!is) throw ConfigError("cannot open " + spec.path);
    return {read_edge_list(is), 0, 0};
  }
  if (spec.kind != "erdos_renyi")
    return {named_topology(parse_topology(spec.kind), spec.m), 0, 0};
  std::uint64_t seed = spec.seed;
  int resamples = 0;
  for (int attempt = 0; attempt < 100000; ++attempt) {
    auto draw = erdos_renyi_connected(spec.m, spec.p, seed);
    resamples += draw.resamples;
    if (!spec.target_rho ||
        std::abs(metropolis_hastings(draw.graph).rho() - *spec.target_rho) <= spec.rho_tol)
      return {std::move(draw.graph), draw.seed_used, resamples};
    seed = draw.seed_used + 1;
    ++resamples;
  }
  throw Error("no Erdos-Renyi draw matched the target rho");
}

MixingMatrix build_mixing(const Graph& g, const MixingSpec&) { return metropolis_hastings(g); }

MixingOperator build_operator(const MixingMatrix& w, const MixingSpec& spec) {
  return MixingOperator(w, spec.scheme, spec.K);
}

Setup build_setup(const ExperimentConfig& cfg) {
  GraphBuild gb = build_graph(cfg.graph);
  MixingMatrix w = build_mixing(gb.graph, cfg.mixing);
  const int m = gb.graph.num_vertices();

  Partition part;
  std::optional<Eigen::VectorXd> x_star;
  const DataSpec& d = cfg.data;
  if (d.source == "synthetic_ridge") {
    auto sp = synthetic_ridge(m, d.n, d.d, d.sigma, d.noise_std, d.seed);
    part = std::move(sp.partition);
    x_star = std::move(sp.x_star);
  } else if (d.source == "synthetic_logistic") {
    auto sp = synthetic_logistic(m, d.n, d.d, d.seed);
    part = std::move(sp.partition);
    x_star = std::move(sp.x_star);
  } else {
    Dataset ds;
    if (d.source == "mackey_glass") {
      ds = mackey_glass();
    } else {
      std::ifstream is(d.path);
      if (!is) throw ConfigError("cannot open " + d.path);
      ds = parse_libsvm(is, std::nullopt, d.label_mode);
    }
    part = partition(ds, m, d.partition_seed);
  }
  if (cfg.loss.kind == LossKind::logistic && part.shards.front().kind != LabelKind::classification)
    throw ConfigError("logistic loss needs classification labels");

  const double reg = cfg.loss.reg_inv_sqrt_n
                         ? 1.0 / std::sqrt(static_cast<double>(part.total_size()))
                         : cfg.loss.reg;
  GlobalLoss loss = GlobalLoss::from_partition(part, cfg.loss.kind, reg);
  return Setup{std::move(gb), std::move(w), std::move(part), std::move(loss),
               cfg.loss.feasible, reg, std::move(x_star)};
}

Constants estimate_constants(const Setup& s, const Eigen::MatrixXd& points, int extra_probes,
                             std::uint64_t seed) {
  const Eigen::Index d = s.loss.dim();
  std::vector<Eigen::VectorXd> probes{project(s.feasible, Eigen::VectorXd(Eigen::VectorXd::Zero(d)))};
  for (Eigen::Index i = 0; i < points.rows(); ++i) probes.push_back(points.row(i).transpose());
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  for (int k = 0; k < extra_probes; ++k) {
    Eigen::VectorXd v(d);
    for (auto& e : v) e = nd(rng);
    probes.push_back(project(s.feasible, v));
  }
  Constants c;
  c.beta = estimate_beta(s.loss, probes);
  const auto b = estimate_mu_Q(s.loss, probes);
  c.mu = b.mu;
  c.Q = b.Q;
  c.L = estimate_hessian_lipschitz(s.loss, s.feasible, 20, seed + 1);
  return c;
}

void write_trace_csv(std::ostream& os, const Trace& t) {
  os << "nu,comm_rounds,p_nu,consensus_err,tracking_err,mean_step_norm,wall_time_ms\n";
  std::ostringstream line;
  for (const auto& r : t.rows) {
    line.str("");
    line << std::defaultfloat << std::setprecision(17) << r.nu << ',' << r.comm_rounds << ',' << r.p_nu << ','
         << r.consensus_err << ',' << r.tracking_err << ',' << r.mean_step_norm << ','
         << std::fixed << std::setprecision(3) << r.wall_time_ms << '\n';
    os << line.str();
  }
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, int threads) {
  threads = resolve_threads(threads);
  const Setup setup = build_setup(cfg);
  const ReferenceSolution ref = centralized_reference(setup.loss, setup.feasible, cfg.reference_tol);
  const MetricsContext ctx{ref.x_hat, ref.F_hat, &setup.loss};

  const MixingOperator base_op = build_operator(setup.weights, cfg.mixing);
  const Eigen::MatrixXd probe_points =
      initial_points(setup.loss, setup.feasible, cfg.algorithms.front().init, base_op, cfg.init_seed);
  const Constants k = estimate_constants(setup, probe_points, cfg.beta_probes, cfg.init_seed + 7919);

  ExperimentResult result;
  json& man = result.manifest;
  man["config"] = cfg.raw;
  man["graph"] = {{"m", setup.graph.graph.num_vertices()},
                  {"edges", setup.graph.graph.num_edges()},
                  {"seed_used", setup.graph.seed_used},
                  {"resamples", setup.graph.resamples}};
  man["mixing"] = {{"rho", setup.weights.rho()},
                   {"lambda_min", setup.weights.lambda_min()},
                   {"scheme", to_string(base_op.scheme)},
                   {"K", base_op.K},
                   {"rho_K", contraction_factor(base_op)}};
  man["data"] = {{"source", cfg.data.source},
                 {"agents", setup.partition.num_agents()},
                 {"shard_size", setup.partition.shard_size()},
                 {"dim", setup.partition.dim()},
                 {"dropped_rows", setup.partition.dropped},
                 {"seed", cfg.data.seed},
                 {"partition_seed", cfg.data.partition_seed}};
  man["constants"] = {{"beta_hat", k.beta}, {"mu_hat", k.mu}, {"Q_hat", k.Q}, {"L_hat", k.L},
                      {"reg", setup.reg}};
  man["reference"] = {{"F_hat", ref.F_hat},
                      {"gradient_mapping", ref.gradient_mapping},
                      {"iterations", ref.iterations}};
  man["init_seed"] = cfg.init_seed;
  man["comm_accounting"] = cfg.accounting == CommAccounting::paired ? "paired" : "separate";
  man["runs"] = json::array();

  fs::create_directories(cfg.output_dir);
  RunOptions opt;
  opt.threads = threads;
  for (const auto& a : cfg.algorithms) {
    const MixingOperator op = build_operator(setup.weights, a.mixing.value_or(cfg.mixing));
    const Eigen::MatrixXd X0 = initial_points(setup.loss, setup.feasible, a.init, op, cfg.init_seed);
    AgentState st = initial_state(setup.loss, X0, threads);
    json run = {{"algorithm", a.name},
                {"init", to_string(a.init)},
                {"scheme", to_string(op.scheme)},
                {"K", op.K},
                {"rho_K", contraction_factor(op)},
                {"D_hat", initial_radius(X0, ref.x_hat)}};
    Trace trace;
    if (a.name == "diregina") {
      Tuning t{op};
      t.tau = a.mode == "theory" ? 2.0 * k.beta : a.tau.value_or(2.0 * k.beta);
      t.M = a.mode == "theory" ? k.L : a.M;
      t.init = a.init;
      t.subproblem_tol = a.subproblem_tol;
      t.accounting = cfg.accounting;
      if (a.init == InitRule::local_min_consensus) st.comm_rounds = op.rounds();
      run["M"] = t.M;
      run["tau"] = t.tau;
      run["subproblem_tol"] = t.subproblem_tol;
      trace = run_diregina(setup.loss, setup.feasible, t, cfg.stop, ctx, std::move(st), opt);
    } else {
      FirstOrderTuning t{op, a.stepsize, cfg.accounting};
      run["stepsize"] = t.stepsize;
      trace = run_diging(setup.loss, setup.feasible, t, cfg.stop, ctx, std::move(st), opt);
    }

    const fs::path csv = cfg.output_dir / (cfg.csv_prefix + "_" + a.name + ".csv");
    {
      std::ofstream os(csv);
      if (!os) throw Error("cannot write " + csv.string());
      write_trace_csv(os, trace);
    }
    result.files.push_back(csv);
    run["csv"] = csv.filename().string();
    run["iterations"] = trace.rows.back().nu;
    run["comm_rounds"] = trace.rows.back().comm_rounds;
    run["final_p"] = trace.rows.back().p_nu_raw;
    if (trace.error) run["error"] = *trace.error;
    man["runs"].push_back(run);
    result.traces.push_back(std::move(trace));
  }

  const fs::path mf = cfg.output_dir / (cfg.csv_prefix + "_manifest.json");
  write_manifest(mf, man);
  result.files.push_back(mf);
  for (const auto& t : result.traces)
    if (t.error) throw Error(t.algorithm + " aborted: " + *t.error);
  return result;
}

}  // namespace meshnewton
