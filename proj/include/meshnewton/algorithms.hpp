#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "meshnewton/cubic.hpp"
#include "meshnewton/losses.hpp"
#include "meshnewton/metrics.hpp"
#include "meshnewton/mixing.hpp"

namespace meshnewton {

/// Agents' local copies and gradient trackers, one row per agent.
struct AgentState {
  Eigen::MatrixXd X;
  Eigen::MatrixXd S;
  /// grad f_i(x_i) at the current X.
  Eigen::MatrixXd prev_grads;
  int nu = 0;
  long long comm_rounds = 0;
  /// Diagnostics of the last local step.
  double mean_step_norm = 0.0;
  double max_kkt_residual = 0.0;
};

enum class InitRule {
  /// x_i^0 i.i.d. standard normal, projected; distinct across agents.
  random,
  /// One standard normal draw, projected, shared by every agent.
  common_random,
  /// x_i^0 = sum_j (W_K)_ij argmin_K f_j.
  local_min_consensus,
};

InitRule parse_init_rule(const std::string& name);
std::string to_string(InitRule r);

/// How a DiRegINA iteration is charged: one W_K application per exchange of
/// the (x, s) pair, or one per vector.
enum class CommAccounting { paired, separate };

struct Tuning {
  MixingOperator mix;
  double M = 1e-3;
  double tau = 0.0;
  InitRule init = InitRule::random;
  double subproblem_tol = 1e-10;
  CommAccounting accounting = CommAccounting::paired;
};

struct FirstOrderTuning {
  MixingOperator mix;
  double stepsize = 0.5;
  CommAccounting accounting = CommAccounting::paired;
};

struct StopRule {
  long long max_rounds = 1000;
  double eps_p = 0.0;
};

struct RunOptions {
  /// 0 resolves through MESHNEWTON_THREADS / hardware concurrency.
  int threads = 1;
  bool keep_iterates = false;
  /// Compute the tracking error (m global gradients per iteration).
  bool track_error = true;
};

struct TraceRow {
  int nu = 0;
  long long comm_rounds = 0;
  double p_nu = 0.0;      ///< clamped at zero
  double p_nu_raw = 0.0;
  double consensus_err = 0.0;
  double tracking_err = 0.0;
  double mean_step_norm = 0.0;
  double wall_time_ms = 0.0;
  double conservation_err = 0.0;
  double max_kkt_residual = 0.0;
};

struct Trace {
  std::string algorithm;
  std::vector<TraceRow> rows;
  /// X after each recorded row, when RunOptions::keep_iterates is set.
  std::vector<Eigen::MatrixXd> iterates;
  /// Set when a step failed; rows up to the failure are kept.
  std::optional<std::string> error;
};

/// Gradient-tracking start: S = prev_grads = rows grad f_i(x_i).
AgentState initial_state(const GlobalLoss& g, const Eigen::MatrixXd& X0, int threads = 1);

/// Initial points for `rule` (before tracking is set up). local_min_consensus
/// solves every local problem with centralized_reference at tolerance 1e-10
/// and mixes once.
Eigen::MatrixXd initial_points(const GlobalLoss& g, const Feasible& k, InitRule rule,
                               const MixingOperator& mix, std::uint64_t seed);

/// initial_points + initial_state. The consensus initialization is charged
/// one mixing application in comm_rounds.
AgentState diregina_init(const GlobalLoss& g, const Feasible& k, const Tuning& t,
                         std::uint64_t seed, int threads = 1);

/// One DiRegINA iteration: local cubic steps, consensus on x, then
/// s <- W_K (s + grad f(x_new) - grad f(x_old)).
AgentState diregina_step(const AgentState& st, const GlobalLoss& g, const Feasible& k,
                         const Tuning& t, int threads = 1);

/// One DIGing iteration: x <- W x - alpha s, s <- W s + grad f(x_new) - grad f(x_old).
AgentState diging_step(const AgentState& st, const GlobalLoss& g, const Feasible& k,
                       const FirstOrderTuning& t, int threads = 1);

struct ReferenceSolution {
  Eigen::VectorXd x_hat;
  double F_hat = 0.0;
  /// ||x - P(x - grad F(x))|| at x_hat.
  double gradient_mapping = 0.0;
  int iterations = 0;
};

/// Minimizer of F over K. Unconstrained ridge/quadratic problems use the
/// normal equations; everything else runs cubic-regularized Newton with an
/// adaptively doubled/halved M until the gradient mapping is <= tol.
ReferenceSolution centralized_reference(const GlobalLoss& g, const Feasible& k,
                                        double tol = 1e-12, int max_iter = 10000);

/// Iterates of cubic-regularized Newton on F with fixed M and tau from x0
/// (x0 first). Each step uses the same subproblem solver as DiRegINA.
std::vector<Eigen::VectorXd> cubic_newton_iterates(const GlobalLoss& g, const Feasible& k,
                                                   double M, double tau,
                                                   const Eigen::VectorXd& x0, int iterations,
                                                   double subproblem_tol = 1e-10);

/// Runs until p^nu <= eps_p or comm_rounds >= max_rounds; one row per nu.
Trace run_diregina(const GlobalLoss& g, const Feasible& k, const Tuning& t, const StopRule& stop,
                   const MetricsContext& ctx, AgentState state, const RunOptions& opt = {});

Trace run_diging(const GlobalLoss& g, const Feasible& k, const FirstOrderTuning& t,
                 const StopRule& stop, const MetricsContext& ctx, AgentState state,
                 const RunOptions& opt = {});

/// K = ceil(c * log(arg) / sqrt(1 - rho)), at least 1. The constants come
/// from the caller since the theoretical ones are not observable.
int select_rounds(double rho, double c, double arg);

}  // namespace meshnewton
