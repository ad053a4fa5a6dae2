#include "meshnewton/losses.hpp"

#include <cmath>
#include <random>

#include "meshnewton/error.hpp"

namespace meshnewton {

namespace {

// ln(1 + e^t) without overflow.
double log1p_exp(double t) {
  return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

}  // namespace

LossKind parse_loss_kind(const std::string& name) {
  if (name == "ridge") return LossKind::ridge;
  if (name == "logistic") return LossKind::logistic;
  if (name == "quadratic") return LossKind::quadratic;
  throw InvalidArgument("unknown loss kind '" + name + "'");
}

std::string to_string(LossKind k) {
  switch (k) {
    case LossKind::ridge: return "ridge";
    case LossKind::logistic: return "logistic";
    case LossKind::quadratic: return "quadratic";
  }
  return "?";
}

LossOracle::LossOracle(LossKind kind, Dataset shard, double reg)
    : kind_(kind), reg_(reg), dim_(shard.dim()), shard_(std::move(shard)) {
  if (kind == LossKind::quadratic)
    throw InvalidArgument("use LossOracle::quadratic for explicit quadratics");
  if (!(reg >= 0.0)) throw InvalidArgument("regularization must be >= 0");
  validate(shard_);
  if (kind == LossKind::logistic && shard_.kind != LabelKind::classification)
    throw InvalidArgument("logistic loss needs {0,1} labels");
  if (kind == LossKind::ridge) {
    const auto n = static_cast<double>(shard_.size());
    const_hessian_ = shard_.features.transpose() * shard_.features / n;
    const_hessian_.diagonal().array() += reg_;
  }
}

LossOracle LossOracle::quadratic(QuadraticTerms q, double reg) {
  if (q.H.rows() != q.H.cols() || q.H.rows() != q.g.size() || q.g.size() == 0)
    throw InvalidArgument("quadratic: H must be d x d and g of length d");
  if (!(reg >= 0.0)) throw InvalidArgument("regularization must be >= 0");
  LossOracle o;
  o.kind_ = LossKind::quadratic;
  o.reg_ = reg;
  o.dim_ = q.g.size();
  o.const_hessian_ = 0.5 * (q.H + q.H.transpose());
  o.const_hessian_.diagonal().array() += reg;
  o.quad_ = std::move(q);
  return o;
}

void LossOracle::check_dim(const Eigen::VectorXd& x) const {
  if (x.size() != dim_)
    throw InvalidArgument("point has dimension " + std::to_string(x.size()) + ", expected " +
                          std::to_string(dim_));
}

double LossOracle::value(const Eigen::VectorXd& x) const {
  check_dim(x);
  const double penalty = 0.5 * reg_ * x.squaredNorm();
  switch (kind_) {
    case LossKind::ridge: {
      const auto n = static_cast<double>(shard_.size());
      return (shard_.features * x - shard_.labels).squaredNorm() / (2.0 * n) + penalty;
    }
    case LossKind::logistic: {
      const Eigen::VectorXd t = shard_.features * x;
      double sum = 0.0;
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        const double y = shard_.labels(j);
        sum += y * log1p_exp(-t(j)) + (1.0 - y) * log1p_exp(t(j));
      }
      return sum / static_cast<double>(t.size()) + penalty;
    }
    case LossKind::quadratic:
      return 0.5 * x.dot(quad_.H * x) + quad_.g.dot(x) + quad_.c + penalty;
  }
  return 0.0;
}

Eigen::VectorXd LossOracle::gradient(const Eigen::VectorXd& x) const {
  check_dim(x);
  switch (kind_) {
    case LossKind::ridge: {
      const auto n = static_cast<double>(shard_.size());
      return shard_.features.transpose() * (shard_.features * x - shard_.labels) / n + reg_ * x;
    }
    case LossKind::logistic: {
      Eigen::VectorXd r = shard_.features * x;
      for (Eigen::Index j = 0; j < r.size(); ++j) r(j) = sigmoid(r(j)) - shard_.labels(j);
      return shard_.features.transpose() * r / static_cast<double>(r.size()) + reg_ * x;
    }
    case LossKind::quadratic:
      return const_hessian_ * x + quad_.g;
  }
  return {};
}

Eigen::MatrixXd LossOracle::hessian(const Eigen::VectorXd& x) const {
  check_dim(x);
  if (constant_hessian()) return const_hessian_;
  Eigen::VectorXd w = shard_.features * x;
  for (Eigen::Index j = 0; j < w.size(); ++j) {
    const double z = sigmoid(w(j));
    w(j) = z * (1.0 - z);
  }
  Eigen::MatrixXd h = shard_.features.transpose() * w.asDiagonal() * shard_.features;
  h /= static_cast<double>(w.size());
  h.diagonal().array() += reg_;
  return h;
}

Eigen::VectorXd LossOracle::hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
  check_dim(x);
  check_dim(v);
  switch (kind_) {
    case LossKind::ridge: {
      const auto n = static_cast<double>(shard_.size());
      return shard_.features.transpose() * (shard_.features * v) / n + reg_ * v;
    }
    case LossKind::logistic: {
      Eigen::VectorXd t = shard_.features * x;
      Eigen::VectorXd av = shard_.features * v;
      for (Eigen::Index j = 0; j < t.size(); ++j) {
        const double z = sigmoid(t(j));
        av(j) *= z * (1.0 - z);
      }
      return shard_.features.transpose() * av / static_cast<double>(t.size()) + reg_ * v;
    }
    case LossKind::quadratic:
      return const_hessian_ * v;
  }
  return {};
}

GlobalLoss::GlobalLoss(std::vector<LossOracle> agents) : agents_(std::move(agents)) {
  if (agents_.empty()) throw InvalidArgument("global loss needs at least one agent");
  for (const auto& a : agents_) {
    if (a.dim() != dim() || a.kind() != kind() || a.reg() != reg())
      throw InvalidArgument("agents must share dimension, loss kind and regularization");
  }
}

GlobalLoss GlobalLoss::from_partition(const Partition& p, LossKind kind, double reg) {
  std::vector<LossOracle> agents;
  agents.reserve(p.shards.size());
  for (const auto& shard : p.shards) agents.emplace_back(kind, shard, reg);
  return GlobalLoss(std::move(agents));
}

double GlobalLoss::value(const Eigen::VectorXd& x) const {
  double sum = 0.0;
  for (const auto& a : agents_) sum += a.value(x);
  return sum / num_agents();
}

Eigen::VectorXd GlobalLoss::gradient(const Eigen::VectorXd& x) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  for (const auto& a : agents_) sum += a.gradient(x);
  return sum / num_agents();
}

Eigen::MatrixXd GlobalLoss::hessian(const Eigen::VectorXd& x) const {
  Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(dim(), dim());
  for (const auto& a : agents_) sum += a.hessian(x);
  return sum / num_agents();
}

Eigen::VectorXd GlobalLoss::hvp(const Eigen::VectorXd& x, const Eigen::VectorXd& v) const {
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(dim());
  for (const auto& a : agents_) sum += a.hvp(x, v);
  return sum / num_agents();
}

double symmetric_norm(const Eigen::MatrixXd& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(a, Eigen::EigenvaluesOnly);
  return eig.eigenvalues().cwiseAbs().maxCoeff();
}

double estimate_beta(const GlobalLoss& g, const std::vector<Eigen::VectorXd>& probes) {
  if (probes.empty()) throw InvalidArgument("estimate_beta: no probes");
  const int m = g.num_agents();
  double beta = 0.0;
  for (const auto& x : probes) {
    std::vector<Eigen::MatrixXd> h;
    h.reserve(static_cast<std::size_t>(m));
    for (const auto& a : g.agents()) h.push_back(a.hessian(x));
    for (int i = 0; i < m; ++i) {
      Eigen::MatrixXd diff = Eigen::MatrixXd::Zero(g.dim(), g.dim());
      for (int j = 0; j < m; ++j) diff += h[j] - h[i];
      beta = std::max(beta, symmetric_norm(diff / m));
    }
    if (g.agent(0).constant_hessian()) break;
  }
  return beta;
}

CurvatureBounds estimate_mu_Q(const GlobalLoss& g, const std::vector<Eigen::VectorXd>& probes) {
  if (probes.empty()) throw InvalidArgument("estimate_mu_Q: no probes");
  CurvatureBounds b{std::numeric_limits<double>::infinity(), 0.0};
  for (const auto& x : probes) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(g.hessian(x), Eigen::EigenvaluesOnly);
    b.mu = std::min(b.mu, eig.eigenvalues().minCoeff());
    b.Q = std::max(b.Q, eig.eigenvalues().maxCoeff());
    if (g.agent(0).constant_hessian()) break;
  }
  return b;
}

double estimate_hessian_lipschitz(const GlobalLoss& g, const Feasible& k, int pairs,
                                  std::uint64_t seed) {
  if (g.agent(0).constant_hessian()) return 0.0;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const auto draw = [&] {
    Eigen::VectorXd v(g.dim());
    for (auto& e : v) e = nd(rng);
    return project(k, v);
  };
  double L = 0.0;
  for (int p = 0; p < pairs; ++p) {
    const Eigen::VectorXd x = draw();
    const Eigen::VectorXd y = draw();
    const double dist = (x - y).norm();
    if (dist == 0.0) continue;
    L = std::max(L, symmetric_norm(g.hessian(x) - g.hessian(y)) / dist);
  }
  return L;
}

}  // namespace meshnewton
