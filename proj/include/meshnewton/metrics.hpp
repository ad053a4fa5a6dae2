#pragma once

#include <Eigen/Dense>

#include "meshnewton/losses.hpp"

namespace meshnewton {

/// Reference optimum used by the suboptimality gap.
struct MetricsContext {
  Eigen::VectorXd x_hat;
  double F_hat = 0.0;
  const GlobalLoss* loss = nullptr;
};

/// (1/m) sum_i (F(x_i) - F_hat) over the rows of X. May be slightly negative
/// when the reference is only accurate to its tolerance.
double suboptimality(const MetricsContext& ctx, const Eigen::MatrixXd& X, int threads = 1);

/// ||(I - 11^T/m) X||_F
double consensus_error(const Eigen::MatrixXd& X);

/// sqrt(sum_i ||s_i - grad F(x_i)||^2), with grad F evaluated at each agent's
/// own point (rows of `global_grads`).
double tracking_error(const Eigen::MatrixXd& S, const Eigen::MatrixXd& global_grads);

/// Rows grad F(x_i).
Eigen::MatrixXd global_gradients(const GlobalLoss& g, const Eigen::MatrixXd& X, int threads = 1);

/// max_i ||x_i^0 - x_hat||, a computable lower bound on the initial radius D.
double initial_radius(const Eigen::MatrixXd& X0, const Eigen::VectorXd& x_hat);

/// ||mean(S) - mean(grads)||, the gradient-tracking conservation defect.
double conservation_error(const Eigen::MatrixXd& S, const Eigen::MatrixXd& local_grads);

}  // namespace meshnewton
