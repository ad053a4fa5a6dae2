#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "meshnewton/data.hpp"
#include "meshnewton/feasible.hpp"

namespace meshnewton {

enum class LossKind { ridge, logistic, quadratic };

LossKind parse_loss_kind(const std::string& name);
std::string to_string(LossKind k);

/// Explicit quadratic 1/2 x^T H x + g^T x + c.
struct QuadraticTerms {
  Eigen::MatrixXd H;
  Eigen::VectorXd g;
  double c = 0.0;
};

/// Per-agent empirical risk f_i with an additive (reg/2)||x||^2.
///
///   ridge:     (1/2n) ||A x - b||^2
///   logistic:  -(1/n) sum_j [y_j ln z_j + (1 - y_j) ln(1 - z_j)],
///              z_j = 1 / (1 + exp(-<a_j, x>))
///   quadratic: 1/2 x^T H x + g^T x + c
class LossOracle {
 public:
  LossOracle(LossKind kind, Dataset shard, double reg = 0.0);
  static LossOracle quadratic(QuadraticTerms q, double reg = 0.0);

  LossKind kind() const { return kind_; }
  double reg() const { return reg_; }
  Eigen::Index dim() const { return dim_; }
  const Dataset& shard() const { return shard_; }
  const QuadraticTerms& terms() const { return quad_; }
  /// Hessian does not depend on x.
  bool constant_hessian() const { return kind_ != LossKind::logistic; }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  /// Hessian-vector product without forming the Hessian.
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

 private:
  LossOracle() = default;
  void check_dim(const Eigen::VectorXd& x) const;

  LossKind kind_ = LossKind::quadratic;
  double reg_ = 0.0;
  Eigen::Index dim_ = 0;
  Dataset shard_;
  QuadraticTerms quad_;
  Eigen::MatrixXd const_hessian_;
};

/// F(x) = (1/m) sum_i f_i(x). Agent quantities are accumulated in agent
/// order so results are reproducible.
class GlobalLoss {
 public:
  explicit GlobalLoss(std::vector<LossOracle> agents);

  /// One oracle per shard, all of the same kind and regularization.
  static GlobalLoss from_partition(const Partition& p, LossKind kind, double reg);

  int num_agents() const { return static_cast<int>(agents_.size()); }
  const LossOracle& agent(int i) const { return agents_.at(static_cast<std::size_t>(i)); }
  const std::vector<LossOracle>& agents() const { return agents_; }
  Eigen::Index dim() const { return agents_.front().dim(); }
  LossKind kind() const { return agents_.front().kind(); }
  double reg() const { return agents_.front().reg(); }

  double value(const Eigen::VectorXd& x) const;
  Eigen::VectorXd gradient(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd hessian(const Eigen::VectorXd& x) const;
  Eigen::VectorXd hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const;

 private:
  std::vector<LossOracle> agents_;
};

/// Largest ||grad^2 F(x) - grad^2 f_i(x)||_2 over probes and agents: a lower
/// bound on the similarity constant beta. The difference is formed as
/// (1/m) sum_j (H_j - H_i), which is exactly zero for identical shards.
double estimate_beta(const GlobalLoss& g, const std::vector<Eigen::VectorXd>& probes);

struct CurvatureBounds {
  double mu = 0.0;  ///< min over probes of lambda_min(grad^2 F)
  double Q = 0.0;   ///< max over probes of lambda_max(grad^2 F)
};

CurvatureBounds estimate_mu_Q(const GlobalLoss& g, const std::vector<Eigen::VectorXd>& probes);

/// Heuristic Hessian-Lipschitz estimate: max ||H(x) - H(y)|| / ||x - y|| over
/// `pairs` random pairs drawn in the feasible set (points N(0, I) projected).
/// Exactly 0 for ridge and quadratic losses.
double estimate_hessian_lipschitz(const GlobalLoss& g, const Feasible& k, int pairs,
                                  std::uint64_t seed);

/// Spectral norm of a symmetric matrix.
double symmetric_norm(const Eigen::MatrixXd& a);

}  // namespace meshnewton
