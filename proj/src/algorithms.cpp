#include "meshnewton/algorithms.hpp"

#include <chrono>
#include <cmath>
#include <random>

#include "meshnewton/parallel.hpp"

namespace meshnewton {

namespace {

Eigen::VectorXd row(const Eigen::MatrixXd& X, int i) { return X.row(i).transpose(); }

Eigen::MatrixXd local_gradients(const GlobalLoss& g, const Eigen::MatrixXd& X, int threads) {
  Eigen::MatrixXd out(X.rows(), X.cols());
  parallel_for(g.num_agents(), threads, [&](int i) {
    out.row(i) = g.agent(i).gradient(row(X, i)).transpose();
  });
  return out;
}

void project_rows(const Feasible& k, Eigen::MatrixXd& X) {
  if (!k.is_ball()) return;
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    X.row(i) = project(k, Eigen::VectorXd(X.row(i).transpose())).transpose();
}

long long rounds_per_iteration(const MixingOperator& mix, CommAccounting acc) {
  return acc == CommAccounting::paired ? mix.rounds() : 2LL * mix.rounds();
}

double gradient_mapping(const Feasible& k, const Eigen::VectorXd& x, const Eigen::VectorXd& grad) {
  return (x - project(k, Eigen::VectorXd(x - grad))).norm();
}

void check_shapes(const AgentState& st, const GlobalLoss& g) {
  if (st.X.rows() != g.num_agents() || st.X.cols() != g.dim() || st.S.rows() != st.X.rows() ||
      st.S.cols() != st.X.cols() || st.prev_grads.rows() != st.X.rows() ||
      st.prev_grads.cols() != st.X.cols())
    throw InvalidArgument("agent state does not match the loss (m x d)");
}

using Clock = std::chrono::steady_clock;

template <typename Step>
Trace run_loop(const char* name, const GlobalLoss& g, const StopRule& stop,
               const MetricsContext& ctx, AgentState state, const RunOptions& opt, Step&& step) {
  const int threads = resolve_threads(opt.threads);
  Trace trace;
  trace.algorithm = name;
  const auto start = Clock::now();
  for (;;) {
    TraceRow r;
    r.nu = state.nu;
    r.comm_rounds = state.comm_rounds;
    r.p_nu_raw = suboptimality(ctx, state.X, threads);
    r.p_nu = std::max(0.0, r.p_nu_raw);
    r.consensus_err = consensus_error(state.X);
    if (opt.track_error)
      r.tracking_err = tracking_error(state.S, global_gradients(g, state.X, threads));
    r.mean_step_norm = state.mean_step_norm;
    r.max_kkt_residual = state.max_kkt_residual;
    r.conservation_err = conservation_error(state.S, state.prev_grads);
    r.wall_time_ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    trace.rows.push_back(r);
    if (opt.keep_iterates) trace.iterates.push_back(state.X);

    if (!std::isfinite(r.p_nu_raw)) {
      trace.error = "suboptimality is not finite (diverged)";
      break;
    }
    if (r.p_nu_raw <= stop.eps_p || state.comm_rounds >= stop.max_rounds) break;
    try {
      state = step(state, threads);
    } catch (const std::exception& e) {
      trace.error = e.what();
      break;
    }
  }
  return trace;
}

}  // namespace

InitRule parse_init_rule(const std::string& name) {
  if (name == "random") return InitRule::random;
  if (name == "common_random") return InitRule::common_random;
  if (name == "local_min_consensus") return InitRule::local_min_consensus;
  throw InvalidArgument("unknown init rule '" + name + "'");
}

std::string to_string(InitRule r) {
  switch (r) {
    case InitRule::random: return "random";
    case InitRule::common_random: return "common_random";
    case InitRule::local_min_consensus: return "local_min_consensus";
  }
  return "?";
}

AgentState initial_state(const GlobalLoss& g, const Eigen::MatrixXd& X0, int threads) {
  if (X0.rows() != g.num_agents() || X0.cols() != g.dim())
    throw InvalidArgument("initial points must be m x d");
  AgentState st;
  st.X = X0;
  st.prev_grads = local_gradients(g, X0, resolve_threads(threads));
  st.S = st.prev_grads;
  return st;
}

Eigen::MatrixXd initial_points(const GlobalLoss& g, const Feasible& k, InitRule rule,
                               const MixingOperator& mix, std::uint64_t seed) {
  const int m = g.num_agents();
  const Eigen::Index d = g.dim();
  Eigen::MatrixXd X(m, d);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const auto draw = [&] {
    Eigen::VectorXd v(d);
    for (auto& e : v) e = nd(rng);
    return project(k, v);
  };
  switch (rule) {
    case InitRule::random:
      for (int i = 0; i < m; ++i) X.row(i) = draw().transpose();
      break;
    case InitRule::common_random:
      X.rowwise() = draw().transpose();
      break;
    case InitRule::local_min_consensus: {
      for (int i = 0; i < m; ++i) {
        const GlobalLoss local({g.agent(i)});
        X.row(i) = centralized_reference(local, k, 1e-10).x_hat.transpose();
      }
      X = apply(mix, X);
      project_rows(k, X);
      break;
    }
  }
  return X;
}

AgentState diregina_init(const GlobalLoss& g, const Feasible& k, const Tuning& t,
                         std::uint64_t seed, int threads) {
  if (!(t.M >= 0.0) || !(t.tau >= 0.0)) throw InvalidArgument("tuning: M and tau must be >= 0");
  if (t.mix.base.size() != g.num_agents())
    throw InvalidArgument("mixing matrix size differs from the number of agents");
  AgentState st = initial_state(g, initial_points(g, k, t.init, t.mix, seed), threads);
  if (t.init == InitRule::local_min_consensus) st.comm_rounds = t.mix.rounds();
  return st;
}

AgentState diregina_step(const AgentState& st, const GlobalLoss& g, const Feasible& k,
                         const Tuning& t, int threads) {
  check_shapes(st, g);
  threads = resolve_threads(threads);
  const int m = g.num_agents();
  Eigen::MatrixXd x_plus(st.X.rows(), st.X.cols());
  std::vector<double> step_norms(static_cast<std::size_t>(m));
  std::vector<double> residuals(static_cast<std::size_t>(m));

  // S.1: local cubic-regularized steps with the tracked gradient.
  parallel_for(m, threads, [&](int i) {
    CubicSubproblem<double> p;
    p.center = row(st.X, i);
    p.g = row(st.S, i);
    p.H = g.agent(i).hessian(p.center);
    p.tau = t.tau;
    p.M = t.M;
    p.feasible = k;
    try {
      const auto sol = solve(p, t.subproblem_tol);
      x_plus.row(i) = sol.y.transpose();
      step_norms[static_cast<std::size_t>(i)] = sol.step_norm;
      residuals[static_cast<std::size_t>(i)] = sol.kkt_residual;
    } catch (const Error& e) {
      throw Error("agent " + std::to_string(i) + ": " + e.what());
    }
  });

  // S.2: consensus on x, then perturb-then-mix tracking.
  AgentState next;
  next.X = apply(t.mix, x_plus);
  project_rows(k, next.X);
  const Eigen::MatrixXd grads = local_gradients(g, next.X, threads);
  next.S = apply(t.mix, Eigen::MatrixXd(st.S + grads - st.prev_grads));
  next.prev_grads = grads;
  next.nu = st.nu + 1;
  next.comm_rounds = st.comm_rounds + rounds_per_iteration(t.mix, t.accounting);
  double sum = 0.0;
  for (double v : step_norms) sum += v;
  next.mean_step_norm = sum / m;
  next.max_kkt_residual = *std::max_element(residuals.begin(), residuals.end());
  return next;
}

AgentState diging_step(const AgentState& st, const GlobalLoss& g, const Feasible& k,
                       const FirstOrderTuning& t, int threads) {
  if (k.is_ball()) throw InvalidArgument("DIGing handles unconstrained problems only");
  check_shapes(st, g);
  threads = resolve_threads(threads);
  AgentState next;
  next.X = apply(t.mix, st.X) - t.stepsize * st.S;
  const Eigen::MatrixXd grads = local_gradients(g, next.X, threads);
  next.S = apply(t.mix, st.S) + grads - st.prev_grads;
  next.prev_grads = grads;
  next.nu = st.nu + 1;
  next.comm_rounds = st.comm_rounds + rounds_per_iteration(t.mix, t.accounting);
  next.mean_step_norm = (next.X - st.X).rowwise().norm().mean();
  return next;
}

ReferenceSolution centralized_reference(const GlobalLoss& g, const Feasible& k, double tol,
                                        int max_iter) {
  if (!(tol > 0.0)) throw InvalidArgument("reference tolerance must be positive");
  const Eigen::Index d = g.dim();
  ReferenceSolution out;

  if (!k.is_ball() && g.agent(0).constant_hessian()) {
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    const Eigen::MatrixXd h = g.hessian(zero);
    Eigen::LLT<Eigen::MatrixXd> llt(h);
    if (llt.info() == Eigen::Success) {
      Eigen::VectorXd x = llt.solve(-g.gradient(zero));
      x -= llt.solve(g.gradient(x));  // one refinement sweep
      out.x_hat = x;
      out.F_hat = g.value(x);
      out.gradient_mapping = g.gradient(x).norm();
      return out;
    }
  }

  Eigen::VectorXd x = project(k, Eigen::VectorXd(Eigen::VectorXd::Zero(d)));
  double fx = g.value(x);
  double M = 1.0;
  double best_gm = std::numeric_limits<double>::infinity();
  int stalled = 0;
  for (int it = 0; it < max_iter; ++it) {
    const Eigen::VectorXd grad = g.gradient(x);
    const double gm = gradient_mapping(k, x, grad);
    if (gm <= tol) {
      out.x_hat = x;
      out.F_hat = fx;
      out.gradient_mapping = gm;
      out.iterations = it;
      return out;
    }
    if (gm < best_gm) {
      best_gm = gm;
      stalled = 0;
    } else if (++stalled > 50) {
      break;
    }
    CubicSubproblem<double> p;
    p.center = x;
    p.g = grad;
    p.H = g.hessian(x);
    p.feasible = k;
    const double sub_tol = std::clamp(1e-3 * gm, 1e-15, 1e-8);
    for (int tries = 0;; ++tries) {
      p.M = M;
      const auto sol = solve(p, sub_tol);
      const double fy = g.value(sol.y);
      if (fy <= fx + model_value(p, sol.y) + 1e-15 * (1.0 + std::abs(fx)) || tries > 60) {
        x = sol.y;
        fx = fy;
        M = std::max(0.5 * M, 1e-10);
        break;
      }
      M *= 2.0;
    }
  }
  throw Error("centralized reference did not reach gradient mapping " + std::to_string(tol) +
              " (best " + std::to_string(best_gm) + ")");
}

std::vector<Eigen::VectorXd> cubic_newton_iterates(const GlobalLoss& g, const Feasible& k,
                                                   double M, double tau,
                                                   const Eigen::VectorXd& x0, int iterations,
                                                   double subproblem_tol) {
  std::vector<Eigen::VectorXd> xs{x0};
  xs.reserve(static_cast<std::size_t>(iterations) + 1);
  for (int it = 0; it < iterations; ++it) {
    CubicSubproblem<double> p;
    p.center = xs.back();
    p.g = g.gradient(p.center);
    p.H = g.hessian(p.center);
    p.tau = tau;
    p.M = M;
    p.feasible = k;
    xs.push_back(solve(p, subproblem_tol).y);
  }
  return xs;
}

Trace run_diregina(const GlobalLoss& g, const Feasible& k, const Tuning& t, const StopRule& stop,
                   const MetricsContext& ctx, AgentState state, const RunOptions& opt) {
  return run_loop("diregina", g, stop, ctx, std::move(state), opt,
                  [&](const AgentState& st, int threads) {
                    return diregina_step(st, g, k, t, threads);
                  });
}

Trace run_diging(const GlobalLoss& g, const Feasible& k, const FirstOrderTuning& t,
                 const StopRule& stop, const MetricsContext& ctx, AgentState state,
                 const RunOptions& opt) {
  if (k.is_ball()) throw InvalidArgument("DIGing handles unconstrained problems only");
  return run_loop("diging", g, stop, ctx, std::move(state), opt,
                  [&](const AgentState& st, int threads) {
                    return diging_step(st, g, k, t, threads);
                  });
}

int select_rounds(double rho, double c, double arg) {
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidArgument("select_rounds: rho must lie in [0,1)");
  if (!(arg > 1.0) || !(c > 0.0)) return 1;
  return std::max(1, static_cast<int>(std::ceil(c * std::log(arg) / std::sqrt(1.0 - rho))));
}

}  // namespace meshnewton
