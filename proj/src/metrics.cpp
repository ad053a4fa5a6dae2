#include "meshnewton/metrics.hpp"

#include <vector>

#include "meshnewton/error.hpp"
#include "meshnewton/parallel.hpp"

namespace meshnewton {

double suboptimality(const MetricsContext& ctx, const Eigen::MatrixXd& X, int threads) {
  if (!ctx.loss) throw InvalidArgument("metrics context has no loss");
  const int m = static_cast<int>(X.rows());
  std::vector<double> gaps(static_cast<std::size_t>(m));
  parallel_for(m, threads, [&](int i) {
    gaps[static_cast<std::size_t>(i)] = ctx.loss->value(X.row(i).transpose()) - ctx.F_hat;
  });
  double sum = 0.0;
  for (double v : gaps) sum += v;
  return sum / m;
}

double consensus_error(const Eigen::MatrixXd& X) {
  return (X.rowwise() - X.colwise().mean()).norm();
}

double tracking_error(const Eigen::MatrixXd& S, const Eigen::MatrixXd& global_grads) {
  if (S.rows() != global_grads.rows() || S.cols() != global_grads.cols())
    throw InvalidArgument("tracking_error: shape mismatch");
  return (S - global_grads).norm();
}

Eigen::MatrixXd global_gradients(const GlobalLoss& g, const Eigen::MatrixXd& X, int threads) {
  Eigen::MatrixXd out(X.rows(), X.cols());
  parallel_for(static_cast<int>(X.rows()), threads,
               [&](int i) { out.row(i) = g.gradient(X.row(i).transpose()).transpose(); });
  return out;
}

double initial_radius(const Eigen::MatrixXd& X0, const Eigen::VectorXd& x_hat) {
  return (X0.rowwise() - x_hat.transpose()).rowwise().norm().maxCoeff();
}

double conservation_error(const Eigen::MatrixXd& S, const Eigen::MatrixXd& local_grads) {
  return (S.colwise().mean() - local_grads.colwise().mean()).norm();
}

}  // namespace meshnewton
