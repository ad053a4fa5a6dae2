// End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
// exits non-zero if any criterion fails.
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <limits>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "meshnewton/algorithms.hpp"
#include "meshnewton/cubic.hpp"
#include "meshnewton/experiment.hpp"
#include "oracles.hpp"

using namespace meshnewton;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(double v, int prec = 3) {
  std::ostringstream os;
  os << std::setprecision(prec) << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("meshnewton_acceptance_" + name);
  fs::remove_all(p);
  return p;
}

double deviation(const Eigen::MatrixXd& x) { return (x.rowwise() - x.colwise().mean()).norm(); }

/// Mackey-Glass regression data: the LIBSVM file when MESHNEWTON_MG_PATH is
/// set, the built-in generator otherwise.
json mg_data() {
  if (const char* path = std::getenv("MESHNEWTON_MG_PATH"))
    return {{"source", "libsvm"}, {"path", path}, {"labels", "regression"}, {"partition_seed", 1}};
  return {{"source", "mackey_glass"}, {"partition_seed", 1}};
}

/// First comm_rounds value at which p_nu <= eps, or +inf.
double rounds_to(const Trace& t, double eps) {
  for (const auto& r : t.rows)
    if (r.p_nu_raw <= eps) return static_cast<double>(r.comm_rounds);
  return std::numeric_limits<double>::infinity();
}

// 1. Metropolis-Hastings invariants and spectral gap on random graphs.
Outcome mixing_correctness() {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<int> pick_m(2, 30);
  std::uniform_real_distribution<double> pick_p(0.1, 1.0);
  double worst_sum = 0, worst_gap = 0;
  bool pattern = true;
  for (int t = 0; t < 200; ++t) {
    const int m = pick_m(rng);
    const Graph g = erdos_renyi_connected(m, pick_p(rng), rng()).graph;
    const MixingMatrix w = metropolis_hastings(g);
    const auto& a = w.weights();
    worst_sum = std::max({worst_sum, (a.rowwise().sum().array() - 1).abs().maxCoeff(),
                          (a.colwise().sum().array() - 1).abs().maxCoeff()});
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        pattern = pattern && ((a(i, j) != 0.0) == (i == j || g.has_edge(i, j)));
    worst_gap = std::max(worst_gap, std::abs(spectral_gap(a) - oracle::deflated_lambda_max(a)));
  }
  return {worst_sum <= 1e-12 && pattern && worst_gap <= 1e-9,
          "max |sum-1|=" + fmt(worst_sum) + " pattern=" + (pattern ? "ok" : "bad") +
              " max gap err=" + fmt(worst_gap)};
}

// 2. Chebyshev contraction of random stacks on graphs with rho in [0.3, 0.9].
Outcome chebyshev_contraction() {
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> pick_p(0.12, 0.8);
  double worst_margin = -1.0;
  int stacks = 0;
  while (stacks < 50) {
    const MixingMatrix w = metropolis_hastings(erdos_renyi_connected(30, pick_p(rng), rng()).graph);
    if (w.rho() < 0.3 || w.rho() > 0.9) continue;
    const Eigen::MatrixXd x = oracle::random_matrix(rng, 30, 5);
    for (int K : {1, 2, 3, 5}) {
      const MixingOperator op(w, MixingScheme::chebyshev, K);
      const double ratio = deviation(apply(op, x)) / deviation(x);
      worst_margin = std::max(worst_margin, ratio - contraction_factor(op));
    }
    ++stacks;
  }
  return {worst_margin <= 1e-10, "max(measured - bound)=" + fmt(worst_margin)};
}

// 3. Cubic subproblem against a grid oracle, KKT residual, closed-form root.
Outcome cubic_subproblem() {
  std::mt19937_64 rng(5);
  double worst_gap = -std::numeric_limits<double>::infinity(), worst_kkt = 0;
  const double Ms[] = {0.0, 0.5, 2.0};
  for (int t = 0; t < 100; ++t) {
    CubicSubproblem<double> p;
    const Eigen::MatrixXd a = oracle::random_matrix(rng, 2, 2);
    Eigen::Matrix2d h = a * a.transpose() / 2;
    if (t % 5 == 4) {  // singular curvature
      const Eigen::Vector2d u = oracle::random_unit(rng, 2);
      h = u * u.transpose();
    }
    p.center = Eigen::Vector2d::Zero();
    p.g = oracle::random_vector(rng, 2);
    p.M = Ms[t % 3];
    if (p.M == 0.0) h += 0.05 * Eigen::Matrix2d::Identity();
    p.H = h;
    const auto s = solve(p, 1e-12);
    const double half = std::max(1.0, 1.25 * s.step_norm);
    const double grid = oracle::grid_minimum(p.g, h, 0.0, p.M, half, 401);
    worst_gap = std::max(worst_gap, model_value(p, s.y) - grid);
    worst_kkt = std::max(worst_kkt, model_gradient(p, s.y).norm());
  }
  CubicSubproblem<double> q;
  q.center = Eigen::Vector2d::Zero();
  q.g = Eigen::Vector2d(3, 0);
  q.H = Eigen::Matrix2d::Identity();
  q.M = 2.0;
  const double theta_err =
      std::abs(solve(q, 1e-12).step_norm - (-1.0 + std::sqrt(13.0)) / 2);
  return {worst_gap <= 1e-6 && worst_kkt <= 1e-10 && theta_err <= 1e-10,
          "max(model-grid)=" + fmt(worst_gap) + " max KKT=" + fmt(worst_kkt) +
              " theta err=" + fmt(theta_err)};
}

// 4. Gradients and Hessians against central differences.
Outcome oracle_consistency() {
  std::mt19937_64 rng(9);
  const Dataset mg = mackey_glass();
  const LossOracle ridge(LossKind::ridge, partition(mg, 30, 1).shards[0], 0.0269);
  const LossOracle logistic(LossKind::logistic,
                            synthetic_logistic(1, 60, 12, 3).partition.shards[0], 0.01);
  double worst_g = 0, worst_h = 0;
  for (const LossOracle* f : {&ridge, &logistic}) {
    const auto value = [&](const Eigen::VectorXd& x) { return f->value(x); };
    const auto grad = [&](const Eigen::VectorXd& x) { return f->gradient(x); };
    for (int t = 0; t < 20; ++t) {
      const Eigen::VectorXd x = oracle::random_vector(rng, f->dim());
      const Eigen::VectorXd g = f->gradient(x);
      const Eigen::MatrixXd h = f->hessian(x);
      for (Eigen::Index k = 0; k < f->dim(); ++k) {
        const Eigen::VectorXd e = Eigen::VectorXd::Unit(f->dim(), k);
        worst_g = std::max(worst_g, std::abs(oracle::directional_fd(value, x, e, 1e-5) - g(k)));
        worst_h = std::max(
            worst_h, (oracle::directional_fd_vec(grad, x, e, 1e-5) - h.col(k)).cwiseAbs().maxCoeff());
      }
    }
  }
  return {worst_g <= 1e-6 && worst_h <= 1e-5,
          "max grad err=" + fmt(worst_g) + " max Hessian err=" + fmt(worst_h)};
}

// 5. Gradient-tracking conservation over a 200-iteration run.
Outcome tracking_conservation() {
  const Dataset mg = mackey_glass();
  const GlobalLoss g = GlobalLoss::from_partition(partition(mg, 30, 1), LossKind::ridge, 0.0269);
  const Feasible all = Feasible::all_space();
  Tuning t{MixingOperator(metropolis_hastings(erdos_renyi_connected(30, 0.6, 11).graph))};
  t.init = InitRule::random;
  t.tau = 0.3;
  const auto ref = centralized_reference(g, all);
  RunOptions opt;
  opt.threads = 0;
  opt.track_error = false;
  const Trace tr = run_diregina(g, all, t, StopRule{200, -std::numeric_limits<double>::infinity()},
                                MetricsContext{ref.x_hat, ref.F_hat, &g},
                                diregina_init(g, all, t, 3), opt);
  double worst = 0;
  for (const auto& r : tr.rows) worst = std::max(worst, r.conservation_err);
  const int iters = tr.rows.back().nu;
  return {iters == 200 && !tr.error && worst <= 1e-10,
          "iterations=" + std::to_string(iters) + " max defect=" + fmt(worst)};
}

// 6. One agent: DiRegINA reproduces centralized cubic Newton.
Outcome centralized_reduction() {
  double worst = 0;
  const Feasible all = Feasible::all_space();
  const MixingOperator one(metropolis_hastings(Graph(1, {})));
  struct Case {
    GlobalLoss loss;
    double M, tau;
  };
  std::vector<Case> cases;
  cases.push_back({GlobalLoss::from_partition(partition(mackey_glass(), 1, 1), LossKind::ridge,
                                              0.0269),
                   1e-3, 0.0});
  cases.push_back({GlobalLoss::from_partition(synthetic_logistic(1, 200, 20, 4).partition,
                                              LossKind::logistic, 1e-3),
                   1.0, 1e-3});
  for (const auto& c : cases) {
    Tuning t{one};
    t.M = c.M;
    t.tau = c.tau;
    t.init = InitRule::random;
    AgentState st = diregina_init(c.loss, all, t, 17);
    const auto ref = cubic_newton_iterates(c.loss, all, t.M, t.tau, st.X.row(0).transpose(), 30,
                                           t.subproblem_tol);
    for (std::size_t nu = 1; nu <= 30; ++nu) {
      st = diregina_step(st, c.loss, all, t);
      worst = std::max(worst, (st.X.row(0).transpose() - ref[nu]).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= 1e-12, "max iterate diff=" + fmt(worst)};
}

json mg_config(const fs::path& out, long long max_rounds, double eps_p) {
  return {{"graph", {{"kind", "erdos_renyi"}, {"m", 30}, {"p", 0.9}, {"seed", 1},
                     {"target_rho", 0.20}, {"rho_tol", 0.02}}},
          {"mixing", {{"scheme", "single"}, {"K", 1}}},
          {"data", mg_data()},
          {"loss", {{"kind", "ridge"}, {"reg", "inv_sqrt_N"}}},
          {"algorithms",
           {{{"name", "diregina"},
             {"tuning", {{"M", 1e-3}, {"tau", "2beta"}, {"init", "common_random"}}}},
            {{"name", "diging"}, {"tuning", {{"stepsize", 0.5}, {"init", "common_random"}}}}}},
          {"stop", {{"max_rounds", max_rounds}, {"eps_p", eps_p}}},
          {"init_seed", 1},
          {"output", {{"dir", out.string()}, {"prefix", "mg"}}}};
}

// 7. Mackey-Glass ridge on a rho ~ 0.20 graph: DiRegINA vs DIGing.
Outcome mg_ridge() {
  const auto res = run_experiment(parse_config(mg_config(scratch("mg"), 2000, 1e-9)), 0);
  const Trace& dr = res.traces.at(0);
  const Trace& dg = res.traces.at(1);
  const double r8 = rounds_to(dr, 1e-8), r6 = rounds_to(dr, 1e-6), g6 = rounds_to(dg, 1e-6);
  const auto& m = res.manifest;
  return {r8 <= 500 && r6 < g6,
          "rho=" + fmt(m["mixing"]["rho"].get<double>()) +
              " reg=" + fmt(m["constants"]["reg"].get<double>()) +
              " beta_hat=" + fmt(m["constants"]["beta_hat"].get<double>()) +
              " DiRegINA rounds to 1e-8=" + fmt(r8) + ", to 1e-6=" + fmt(r6) +
              "; DIGing to 1e-6=" + fmt(g6) + " (final p=" + fmt(dg.rows.back().p_nu_raw) + ")"};
}

// 8. Synthetic ridge with controlled similarity: beta estimate and the
// fast-then-linear shape of the trace.
Outcome synthetic_ridge_phases() {
  const json cfg = {
      {"graph", {{"kind", "erdos_renyi"}, {"m", 30}, {"p", 0.28}, {"seed", 1}, {"target_rho", 0.70}}},
      {"mixing", {{"scheme", "single"}, {"K", 1}}},
      {"data", {{"source", "synthetic_ridge"}, {"n", 50}, {"d", 40}, {"sigma_over_dn", 1.0},
                {"noise_std", 1e-2}, {"seed", 1}, {"partition_seed", 1}}},
      {"loss", {{"kind", "ridge"}, {"reg", "inv_sqrt_N"}}},
      {"algorithms",
       {{{"name", "diregina"}, {"tuning", {{"M", 1e-3}, {"tau", "2beta"}, {"init", "common_random"}}}}}},
      {"stop", {{"max_rounds", 1000}, {"eps_p", 1e-12}}},
      {"output", {{"dir", scratch("synthetic").string()}, {"prefix", "syn"}}}};
  const auto res = run_experiment(parse_config(cfg), 0);
  const double beta = res.manifest["constants"]["beta_hat"].get<double>();
  const Trace& tr = res.traces.at(0);
  // Log-decrease per iteration over the first and last thirds of the trace.
  std::vector<double> lp;
  for (const auto& r : tr.rows)
    if (r.p_nu_raw > 0) lp.push_back(std::log10(r.p_nu_raw));
  bool shape = false;
  double early = 0, late = 0;
  if (lp.size() >= 7) {
    const std::size_t n = lp.size() - 1, third = n / 3;
    early = (lp[0] - lp[third]) / static_cast<double>(third);
    late = (lp[n - third] - lp[n]) / static_cast<double>(third);
    shape = late > 0 && early >= 1.5 * late;
  }
  const bool beta_ok = beta >= 0.31 * 0.5 && beta <= 0.31 * 1.5;
  return {beta_ok && shape,
          "beta_hat=" + fmt(beta) + (beta_ok ? " (in range)" : " (outside 0.155..0.465)") +
              " iterations=" + std::to_string(tr.rows.back().nu) +
              " early/late log-rate=" + fmt(early) + "/" + fmt(late) +
              (late > 0 ? " ratio=" + fmt(early / late) : "")};
}

// 9. Nonincreasing suboptimality when mixing is nearly exact.
Outcome monotone_descent() {
  int violations = 0;
  double worst_rise = 0;
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto prob = synthetic_ridge(10, 30, 8, 0.05, 0.01, seed);
    const GlobalLoss g = GlobalLoss::from_partition(prob.partition, LossKind::ridge, 0.05);
    const Feasible all = Feasible::all_space();
    const MixingMatrix w = metropolis_hastings(erdos_renyi_connected(10, 0.4, seed).graph);
    int K = 1;
    while (contraction_factor(MixingOperator(w, MixingScheme::chebyshev, K)) > 1e-3) ++K;
    Tuning t{MixingOperator(w, MixingScheme::chebyshev, K)};
    t.tau = 2.0 * estimate_beta(g, {Eigen::VectorXd::Zero(8)});
    t.M = 1e-3;
    t.init = InitRule::random;
    const auto ref = centralized_reference(g, all);
    const Trace tr = run_diregina(g, all, t, StopRule{60LL * K, 1e-13},
                                  MetricsContext{ref.x_hat, ref.F_hat, &g},
                                  diregina_init(g, all, t, seed));
    for (std::size_t r = 2; r < tr.rows.size(); ++r) {
      const double rise = tr.rows[r].p_nu_raw - tr.rows[r - 1].p_nu_raw;
      if (rise > 0) {
        ++violations;
        worst_rise = std::max(worst_rise, rise);
      }
    }
  }
  return {violations == 0,
          "runs=20 increases=" + std::to_string(violations) + " worst rise=" + fmt(worst_rise)};
}

// 10. Ball-constrained logistic regression.
Outcome constrained_logistic() {
  const json cfg = {
      {"graph", {{"kind", "erdos_renyi"}, {"m", 30}, {"p", 0.72}, {"seed", 1}, {"target_rho", 0.367}}},
      {"mixing", {{"scheme", "single"}, {"K", 1}}},
      {"data", {{"source", "synthetic_logistic"}, {"n", 30}, {"d", 150}, {"seed", 1}, {"partition_seed", 1}}},
      {"loss", {{"kind", "logistic"}, {"reg", 0.0}, {"feasible", {{"kind", "l2_ball"}, {"radius", 1.0}}}}},
      {"algorithms",
       {{{"name", "diregina"}, {"tuning", {{"M", 1.0}, {"tau", 1e-3}, {"init", "common_random"}}}}}},
      {"stop", {{"max_rounds", 2000}, {"eps_p", 1e-5}}},
      {"output", {{"dir", scratch("logistic").string()}, {"prefix", "logit"}}}};
  const ExperimentConfig c = parse_config(cfg);
  const Setup s = build_setup(c);
  const auto ref = centralized_reference(s.loss, s.feasible, c.reference_tol);
  Tuning t{MixingOperator(s.weights)};
  t.M = 1.0;
  t.tau = 1e-3;
  t.init = InitRule::common_random;
  RunOptions opt;
  opt.threads = 0;
  opt.keep_iterates = true;
  opt.track_error = false;
  const Trace tr = run_diregina(s.loss, s.feasible, t, c.stop,
                                MetricsContext{ref.x_hat, ref.F_hat, &s.loss},
                                diregina_init(s.loss, s.feasible, t, c.init_seed), opt);
  double worst = 0;
  for (const auto& x : tr.iterates)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      worst = std::max(worst, x.row(i).norm() - 1.0);
  const double rounds = rounds_to(tr, 1e-5);
  return {!tr.error && worst <= 1e-12 && rounds <= 2000,
          "rho=" + fmt(s.weights.rho()) + " max(||x||-1)=" + fmt(worst) +
              " rounds to 1e-5=" + fmt(rounds) + (tr.error ? " error: " + *tr.error : "")};
}

std::string numeric_columns(const fs::path& csv) {
  std::ifstream in(csv);
  std::string line, out;
  while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
  return out;
}

// 11. Reruns and worker counts give identical CSV numeric columns.
Outcome determinism() {
  const int max_threads = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::string> seen;
  bool same = true;
  for (int threads : {1, 2, max_threads, 1}) {
    const fs::path out = scratch("det" + std::to_string(seen.size()));
    run_experiment(parse_config(mg_config(out, 150, 0.0)), threads);
    const std::string text =
        numeric_columns(out / "mg_diregina.csv") + numeric_columns(out / "mg_diging.csv");
    if (!seen.empty()) same = same && text == seen.front();
    seen.push_back(text);
  }
  return {same, "runs compared=" + std::to_string(seen.size()) +
                    " max threads=" + std::to_string(max_threads)};
}

}  // namespace

int main() {
  struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<Outcome()> run;
  };
  const double none = std::numeric_limits<double>::infinity();
  const std::vector<Criterion> all = {
      {1, "mixing correctness", 5, mixing_correctness},
      {2, "chebyshev contraction", 5, chebyshev_contraction},
      {3, "cubic subproblem", 10, cubic_subproblem},
      {4, "oracle consistency", 2, oracle_consistency},
      {5, "tracking conservation", 30, tracking_conservation},
      {6, "centralized reduction", 5, centralized_reduction},
      {7, "mackey-glass ridge vs DIGing", 60, mg_ridge},
      {8, "synthetic ridge similarity and phases", 60, synthetic_ridge_phases},
      {9, "monotone descent", 60, monotone_descent},
      {10, "ball-constrained logistic", 120, constrained_logistic},
      {11, "determinism", none, determinism},
  };
  int failed = 0;
  for (const auto& c : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs <= c.limit_s;
    const bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    std::cout << (pass ? "PASS" : "FAIL") << "  [" << std::setw(2) << c.id << "] " << c.name
              << ": " << o.detail << " (" << std::fixed << std::setprecision(2) << secs << " s"
              << (std::isfinite(c.limit_s) ? ", limit " + fmt(c.limit_s) + " s" : "")
              << (in_time ? "" : ", over time") << ")" << std::defaultfloat << std::endl;
  }
  std::cout << (all.size() - failed) << "/" << all.size() << " criteria passed" << std::endl;
  return failed == 0 ? 0 : 1;
}
