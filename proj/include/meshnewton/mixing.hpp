#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "meshnewton/error.hpp"
#include "meshnewton/graph.hpp"

namespace meshnewton {

/// Largest and smallest eigenvalue of W - 11^T/m.
struct DeflatedSpectrum {
  double lambda_max = 0.0;
  double lambda_min = 0.0;
  double radius() const { return std::max(lambda_max, -lambda_min); }
};

/// Symmetric doubly stochastic weight matrix with its cached spectrum.
/// `rho()` is lambda_max(W - 11^T/m); `lambda_min()` is reported alongside
/// since the contraction of W on the disagreement subspace is governed by
/// the spectral radius.
class MixingMatrix {
 public:
  /// Validates symmetry and double stochasticity (tolerance 1e-8).
  explicit MixingMatrix(Eigen::MatrixXd w);

  int size() const { return static_cast<int>(w_.rows()); }
  const Eigen::MatrixXd& weights() const { return w_; }
  double rho() const { return spectrum_.lambda_max; }
  double lambda_min() const { return spectrum_.lambda_min; }
  double spectral_radius() const { return spectrum_.radius(); }

 private:
  Eigen::MatrixXd w_;
  DeflatedSpectrum spectrum_;
};

/// w_ij = 1/(1+max(deg_i, deg_j)) on edges, diagonal fills rows to one.
/// Throws InvalidArgument for disconnected graphs.
MixingMatrix metropolis_hastings(const Graph& g);

/// lambda_max(W - 11^T/m). Dense symmetric eigensolver for m <= 64, deflated
/// power iteration above. Throws unless W is symmetric and doubly stochastic.
double spectral_gap(const Eigen::MatrixXd& w);

DeflatedSpectrum deflated_spectrum(const Eigen::MatrixXd& w);

/// Power-iteration path of deflated_spectrum, exposed for testing at small m.
/// Stops once the eigen-residual is below rel_tol times the eigenvalue.
DeflatedSpectrum deflated_spectrum_power(const Eigen::MatrixXd& w,
                                         double rel_tol = 1e-10,
                                         int max_iter = 200000);

enum class MixingScheme { single, power, chebyshev };

MixingScheme parse_mixing_scheme(const std::string& name);
std::string to_string(MixingScheme s);

/// W_K = P_K(W) for the chosen polynomial family. `rounds()` is the number
/// of neighbor exchanges one application costs.
struct MixingOperator {
  MixingMatrix base;
  MixingScheme scheme = MixingScheme::single;
  int K = 1;

  MixingOperator(MixingMatrix w, MixingScheme s = MixingScheme::single, int k = 1);

  int rounds() const { return scheme == MixingScheme::single ? 1 : K; }
};

/// rho for single, rho^K for power, (1 - sqrt(1 - rho))^K for chebyshev.
double contraction_factor(const MixingOperator& op);

/// Applies W_K to an m x d stack of agent row vectors.
///
/// The Chebyshev scheme uses the polynomial of degree K that is smallest on
/// the disagreement spectrum [a, b] = [lambda_min, lambda_max] and equals one
/// at t = 1:
///   P_K(t) = T_K((2t - a - b) / (b - a)) / T_K((2 - a - b) / (b - a)).
/// It is evaluated through the three-term recurrence written in terms of
/// q_k = T_{k-1}(s) / T_k(s), so no T_k is formed and large K cannot
/// overflow. When the spectrum is (numerically) a single point c, the exact
/// annihilator (t - c) / (1 - c) is applied K times. W_K is never
/// materialized.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic> apply(
    const MixingOperator& op, const Eigen::MatrixBase<Derived>& x) {
  using Scalar = typename Derived::Scalar;
  using Stack = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  const auto w = op.base.weights().template cast<Scalar>();
  if (x.rows() != w.rows())
    throw InvalidArgument("mixing: stack has " + std::to_string(x.rows()) +
                          " rows, expected " + std::to_string(w.rows()));
  if (op.scheme == MixingScheme::single) return w * x;
  if (op.scheme == MixingScheme::power) {
    Stack y = x;
    for (int k = 0; k < op.K; ++k) y = w * y;
    return y;
  }
  const Scalar a = Scalar(op.base.lambda_min());
  const Scalar b = Scalar(op.base.rho());
  const Scalar width = b - a;
  if (width <= Scalar(1e-8)) {
    const Scalar c = (a + b) / Scalar(2);
    Stack y = x;
    for (int k = 0; k < op.K; ++k) y = (w * y - c * y) / (Scalar(1) - c);
    return y;
  }
  // L = (2W - (a + b) I) / (b - a) maps [a, b] onto [-1, 1] and 1 onto s > 1.
  const auto mapped = [&](const Stack& y) -> Stack {
    return (Scalar(2) * (w * y) - (a + b) * y) / width;
  };
  const Scalar s = (Scalar(2) - a - b) / width;
  Stack prev = x;
  Stack cur = mapped(prev) / s;
  Scalar q = Scalar(1) / s;  // q_1 = T_0(s) / T_1(s)
  for (int k = 1; k < op.K; ++k) {
    const Scalar q_next = Scalar(1) / (Scalar(2) * s - q);
    Stack next = (Scalar(2) * q_next) * mapped(cur) - (q * q_next) * prev;
    prev = std::move(cur);
    cur = std::move(next);
    q = q_next;
  }
  return cur;
}

/// m rows of m comma-separated reals, 17 significant digits.
void write_csv(std::ostream& os, const MixingMatrix& w);
MixingMatrix read_mixing_csv(std::istream& is);

}  // namespace meshnewton
