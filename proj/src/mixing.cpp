#include "meshnewton/mixing.hpp"

#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace meshnewton {

namespace {

constexpr double kStochasticTol = 1e-8;
constexpr int kDenseLimit = 64;

void check_doubly_stochastic(const Eigen::MatrixXd& w) {
  if (w.rows() == 0 || w.rows() != w.cols())
    throw InvalidArgument("mixing matrix must be square and non-empty");
  if (!w.allFinite()) throw InvalidArgument("mixing matrix has non-finite entries");
  const double row_dev = (w.rowwise().sum().array() - 1.0).abs().maxCoeff();
  const double col_dev = (w.colwise().sum().array() - 1.0).abs().maxCoeff();
  if (row_dev > kStochasticTol || col_dev > kStochasticTol)
    throw InvalidArgument("mixing matrix is not doubly stochastic");
  if ((w - w.transpose()).cwiseAbs().maxCoeff() > kStochasticTol)
    throw InvalidArgument("mixing matrix is not symmetric");
}

Eigen::MatrixXd deflate(const Eigen::MatrixXd& w) {
  const auto m = w.rows();
  return w - Eigen::MatrixXd::Constant(m, m, 1.0 / static_cast<double>(m));
}

// Dominant eigenvalue of a symmetric PSD matrix restricted to 1^perp.
double deflated_power(const Eigen::MatrixXd& a, double rel_tol, int max_iter) {
  const auto m = a.rows();
  Eigen::VectorXd v(m);
  for (Eigen::Index i = 0; i < m; ++i) v(i) = std::cos(1.0 + 0.7 * static_cast<double>(i));
  v.array() -= v.mean();
  if (v.norm() == 0.0) return 0.0;
  v.normalize();
  for (int it = 0; it < max_iter; ++it) {
    Eigen::VectorXd u = a * v;
    u.array() -= u.mean();
    const double value = v.dot(u);
    // Stop on the eigen-residual; the Rayleigh quotient error is below it.
    if ((u - value * v).norm() <= rel_tol * std::max(std::abs(value), 1e-300)) return value;
    const double n = u.norm();
    if (n == 0.0) return 0.0;
    v = u / n;
  }
  throw Error("spectral gap: power iteration did not converge");
}

}  // namespace

DeflatedSpectrum deflated_spectrum_power(const Eigen::MatrixXd& w, double rel_tol,
                                         int max_iter) {
  check_doubly_stochastic(w);
  const auto m = w.rows();
  if (m == 1) return {};
  const Eigen::MatrixXd b = deflate(w);
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(m, m);
  // Eigenvalues of b lie in [-1, 1]; both shifts make the target dominant.
  DeflatedSpectrum s;
  s.lambda_max = deflated_power(b + eye, rel_tol, max_iter) - 1.0;
  s.lambda_min = 1.0 - deflated_power(eye - b, rel_tol, max_iter);
  return s;
}

DeflatedSpectrum deflated_spectrum(const Eigen::MatrixXd& w) {
  check_doubly_stochastic(w);
  const auto m = w.rows();
  if (m == 1) return {};
  if (m > kDenseLimit) return deflated_spectrum_power(w);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(deflate(w), Eigen::EigenvaluesOnly);
  return {eig.eigenvalues().maxCoeff(), eig.eigenvalues().minCoeff()};
}

double spectral_gap(const Eigen::MatrixXd& w) { return deflated_spectrum(w).lambda_max; }

MixingMatrix::MixingMatrix(Eigen::MatrixXd w)
    : w_(std::move(w)), spectrum_(deflated_spectrum(w_)) {}

MixingMatrix metropolis_hastings(const Graph& g) {
  if (!is_connected(g))
    throw InvalidArgument("metropolis_hastings: graph is disconnected");
  const int m = g.num_vertices();
  Eigen::MatrixXd w = Eigen::MatrixXd::Zero(m, m);
  for (const auto& [i, j] : g.edges()) {
    const double v = 1.0 / (1.0 + std::max(g.degree(i), g.degree(j)));
    w(i, j) = v;
    w(j, i) = v;
  }
  for (int i = 0; i < m; ++i) w(i, i) = 1.0 - (w.row(i).sum() - w(i, i));
  return MixingMatrix(std::move(w));
}

MixingScheme parse_mixing_scheme(const std::string& name) {
  if (name == "single") return MixingScheme::single;
  if (name == "power") return MixingScheme::power;
  if (name == "chebyshev") return MixingScheme::chebyshev;
  throw InvalidArgument("unknown mixing scheme '" + name + "'");
}

std::string to_string(MixingScheme s) {
  switch (s) {
    case MixingScheme::single: return "single";
    case MixingScheme::power: return "power";
    case MixingScheme::chebyshev: return "chebyshev";
  }
  return "?";
}

MixingOperator::MixingOperator(MixingMatrix w, MixingScheme s, int k)
    : base(std::move(w)), scheme(s), K(s == MixingScheme::single ? 1 : k) {
  if (k < 1) throw InvalidArgument("mixing: K must be >= 1");
}

double contraction_factor(const MixingOperator& op) {
  const double rho = op.base.rho();
  switch (op.scheme) {
    case MixingScheme::single: return rho;
    case MixingScheme::power: return std::pow(rho, op.K);
    case MixingScheme::chebyshev: return std::pow(1.0 - std::sqrt(1.0 - rho), op.K);
  }
  return 1.0;
}

void write_csv(std::ostream& os, const MixingMatrix& w) {
  const auto& a = w.weights();
  os << std::setprecision(17);
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) os << (j ? "," : "") << a(i, j);
    os << '\n';
  }
}

MixingMatrix read_mixing_csv(std::istream& is) {
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(is, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<double> row;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cell, &used));
      } catch (const std::exception&) {
        throw ParseError(rows.size() + 1, "bad number '" + cell + "'");
      }
    }
    rows.push_back(std::move(row));
  }
  const auto m = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd w(m, m);
  for (Eigen::Index i = 0; i < m; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != m)
      throw ParseError(i + 1, "expected " + std::to_string(m) + " columns");
    for (Eigen::Index j = 0; j < m; ++j) w(i, j) = rows[i][j];
  }
  return MixingMatrix(std::move(w));
}

}  // namespace meshnewton
