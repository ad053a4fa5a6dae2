#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "meshnewton/error.hpp"
#include "meshnewton/feasible.hpp"

namespace meshnewton {

/// Local model around `center`:
///   phi(y) = <g, y - x> + 1/2 <(H + tau I)(y - x), y - x> + (M/6) ||y - x||^3
/// minimized over `feasible`. The constant F(x) is omitted.
template <typename Scalar>
struct CubicSubproblem {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  Vector center;
  Vector g;
  Matrix H;
  Scalar tau = Scalar(0);
  Scalar M = Scalar(0);
  BasicFeasible<Scalar> feasible;
};

template <typename Scalar>
struct CubicSolution {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> y;
  Scalar step_norm = Scalar(0);
  /// ||grad phi(y)|| unconstrained, ||y - P(y - grad phi(y))|| on a ball.
  Scalar kkt_residual = Scalar(0);
  /// Root r of the secular equation (ball: at the final multiplier).
  Scalar secular_root = Scalar(0);
  /// Multiplier of the ball constraint; zero when inactive.
  Scalar multiplier = Scalar(0);
  int inner_iterations = 0;
};

/// Raised when the subproblem solver runs out of iterations; carries the
/// best iterate found.
class CubicSolverError : public Error {
 public:
  CubicSolverError(const std::string& what, Eigen::VectorXd best, double residual)
      : Error(what), best_(std::move(best)), residual_(residual) {}
  const Eigen::VectorXd& best() const { return best_; }
  double residual() const { return residual_; }

 private:
  Eigen::VectorXd best_;
  double residual_;
};

template <typename Scalar, typename Derived>
Scalar model_value(const CubicSubproblem<Scalar>& p, const Eigen::MatrixBase<Derived>& y) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = y - p.center;
  const Scalar r = d.norm();
  return p.g.dot(d) + Scalar(0.5) * d.dot(p.H * d) + Scalar(0.5) * p.tau * d.squaredNorm() +
         p.M / Scalar(6) * r * r * r;
}

template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> model_gradient(const CubicSubproblem<Scalar>& p,
                                                        const Eigen::MatrixBase<Derived>& y) {
  const Eigen::Matrix<Scalar, Eigen::Dynamic, 1> d = y - p.center;
  return p.g + p.H * d + (p.tau + p.M / Scalar(2) * d.norm()) * d;
}

namespace detail {

template <typename Scalar>
using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

/// || c ./ (lam + shift) ||, +inf where a zero denominator meets nonzero c.
template <typename Scalar>
Scalar shifted_norm(const Vec<Scalar>& c, const Vec<Scalar>& lam, Scalar shift) {
  Scalar s = Scalar(0);
  for (Eigen::Index k = 0; k < c.size(); ++k) {
    const Scalar den = lam(k) + shift;
    if (c(k) == Scalar(0)) continue;
    if (den <= Scalar(0)) return std::numeric_limits<Scalar>::infinity();
    const Scalar t = c(k) / den;
    s += t * t;
  }
  using std::sqrt;
  return sqrt(s);
}

/// Minimizer of <c, z> + 1/2 z^T diag(lam) z + (M/6)||z||^3 in the
/// eigenbasis. For M > 0 the step is z = -c ./ (lam + M r / 2) where r >= 0
/// solves r = ||c ./ (lam + M r / 2)||; the left side minus the right side is
/// convex and decreasing, so Newton started left of the root stays left of it.
/// Bisection takes over whenever Newton leaves the bracket.
template <typename Scalar>
Vec<Scalar> secular_step(const Vec<Scalar>& c, const Vec<Scalar>& lam, Scalar M, Scalar& r,
                         int& iterations) {
  using std::abs;
  using std::sqrt;
  const Scalar cnorm = c.norm();
  r = Scalar(0);
  if (cnorm == Scalar(0)) return Vec<Scalar>::Zero(c.size());
  if (M == Scalar(0)) {
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      if (c(k) != Scalar(0) && lam(k) <= Scalar(0))
        throw InvalidArgument("cubic subproblem: M = 0 with singular curvature has no minimizer");
    }
    Vec<Scalar> z = Vec<Scalar>::Zero(c.size());
    for (Eigen::Index k = 0; k < c.size(); ++k)
      if (c(k) != Scalar(0)) z(k) = -c(k) / lam(k);
    r = z.norm();
    return z;
  }

  const Scalar half_m = M / Scalar(2);
  const auto psi = [&](Scalar t) { return shifted_norm(c, lam, half_m * t) - t; };
  Scalar lo = Scalar(0);
  Scalar hi = sqrt(Scalar(2) * cnorm / M);
  const Scalar lam_min = lam.minCoeff();
  if (lam_min > Scalar(0)) hi = std::min(hi, cnorm / lam_min);
  Scalar t = lo;
  if (!(psi(lo) < std::numeric_limits<Scalar>::infinity())) t = Scalar(0.5) * hi;

  const Scalar eps = std::numeric_limits<Scalar>::epsilon();
  for (iterations = 0; iterations < 500; ++iterations) {
    const Scalar f = psi(t);
    if (f == Scalar(0)) break;
    if (f > Scalar(0)) lo = t; else hi = t;
    if (hi - lo <= Scalar(4) * eps * hi) break;
    // d/dt ||c ./ (lam + h t)|| = -h sum c^2 / (lam + h t)^3 / ||.||
    Scalar s3 = Scalar(0);
    const Scalar nrm = f + t;
    for (Eigen::Index k = 0; k < c.size(); ++k) {
      const Scalar den = lam(k) + half_m * t;
      if (c(k) != Scalar(0) && den > Scalar(0)) s3 += c(k) * c(k) / (den * den * den);
    }
    const Scalar slope = -half_m * s3 / nrm - Scalar(1);
    Scalar next = t - f / slope;
    if (!(next > lo && next < hi) || !std::isfinite(static_cast<double>(next)))
      next = Scalar(0.5) * (lo + hi);
    if (abs(next - t) <= eps * t) {
      t = next;
      break;
    }
    t = next;
  }
  r = t;
  Vec<Scalar> z(c.size());
  for (Eigen::Index k = 0; k < c.size(); ++k)
    z(k) = c(k) == Scalar(0) ? Scalar(0) : -c(k) / (lam(k) + half_m * t);
  return z;
}

}  // namespace detail

/// Solves the cubic-regularized Newton subproblem.
///
/// The curvature H + tau I is eigendecomposed once. Unconstrained, the
/// minimizer follows from the scalar secular equation. On a ball with center
/// c and radius R, the minimizer of phi + (mu/2)||y - c||^2 has a distance to
/// c that is nonincreasing in mu, so the multiplier is found by bisection on
/// mu, each evaluation being a secular solve with shifted eigenvalues
/// lam + mu and linear term g + mu (x - c). Projected gradient steps with
/// backtracking polish the result if the residual is still above `tol`.
template <typename Scalar>
CubicSolution<Scalar> solve(const CubicSubproblem<Scalar>& p, Scalar tol) {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using std::abs;
  using std::max;
  using std::sqrt;

  const Eigen::Index d = p.center.size();
  if (p.g.size() != d || p.H.rows() != d || p.H.cols() != d)
    throw InvalidArgument("cubic subproblem: dimension mismatch");
  if (!(p.tau >= Scalar(0)) || !(p.M >= Scalar(0)))
    throw InvalidArgument("cubic subproblem: tau and M must be >= 0");
  const Scalar hscale = max(Scalar(1), p.H.cwiseAbs().maxCoeff());
  if ((p.H - p.H.transpose()).cwiseAbs().maxCoeff() > Scalar(1e-10) * hscale)
    throw InvalidArgument("cubic subproblem: H is not symmetric");
  if (!(tol > Scalar(0))) throw InvalidArgument("cubic subproblem: tol must be positive");

  CubicSolution<Scalar> sol;
  if (p.g.norm() == Scalar(0)) {
    sol.y = p.center;
    return sol;
  }

  Matrix a = Scalar(0.5) * (p.H + p.H.transpose());
  a.diagonal().array() += p.tau;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a);
  if (eig.info() != Eigen::Success) throw Error("cubic subproblem: eigendecomposition failed");
  const Matrix& u = eig.eigenvectors();
  Vector lam = eig.eigenvalues();
  // H + tau I is PSD under convexity; anything below is rounding.
  if (lam.minCoeff() < -Scalar(1e-8) * hscale)
    throw InvalidArgument("cubic subproblem: H + tau I is not positive semidefinite");
  lam = lam.cwiseMax(Scalar(0));

  const Vector ug = u.transpose() * p.g;
  int iters = 0;
  Vector z;
  bool inside = true;
  Vector offset;  // x - c in the eigenbasis
  if (p.feasible.is_ball()) offset = u.transpose() * (p.center - p.feasible.center_in(d));

  // Unconstrained step; a singular M = 0 model counts as leaving the ball.
  bool unconstrained_ok = true;
  try {
    z = detail::secular_step<Scalar>(ug, lam, p.M, sol.secular_root, iters);
  } catch (const InvalidArgument&) {
    if (!p.feasible.is_ball()) throw;
    unconstrained_ok = false;
  }
  sol.inner_iterations += iters;
  if (p.feasible.is_ball())
    inside = unconstrained_ok && (offset + z).norm() <= p.feasible.radius;

  if (!inside) {
    const Scalar radius = p.feasible.radius;
    const auto distance_at = [&](Scalar mu, Vector& step, Scalar& root) {
      int it = 0;
      const Vector lam_mu = (lam.array() + mu).matrix();
      step = detail::secular_step<Scalar>(ug + mu * offset, lam_mu, p.M, root, it);
      sol.inner_iterations += it;
      return (offset + step).norm();
    };
    Scalar lo = Scalar(0);
    Scalar hi = max(Scalar(1), p.g.norm() / radius);
    Vector step;
    Scalar root = Scalar(0);
    for (int k = 0; distance_at(hi, step, root) > radius; ++k) {
      lo = hi;
      hi *= Scalar(2);
      if (k > 2000) throw Error("cubic subproblem: ball multiplier bracket failed");
    }
    Vector best = step;
    Scalar best_root = root;
    Scalar best_mu = hi;
    const Scalar eps = std::numeric_limits<Scalar>::epsilon();
    for (int k = 0; k < 400 && hi - lo > Scalar(2) * eps * hi; ++k) {
      const Scalar mid = Scalar(0.5) * (lo + hi);
      const Scalar dist = distance_at(mid, step, root);
      if (dist > radius) {
        lo = mid;
      } else {
        hi = mid;
        best = step;
        best_root = root;
        best_mu = mid;
      }
    }
    z = best;
    sol.secular_root = best_root;
    sol.multiplier = best_mu;
  }

  sol.y = p.center + u * z;
  if (p.feasible.is_ball()) sol.y = project(p.feasible, sol.y);

  const auto residual = [&](const Vector& y) -> Scalar {
    const Vector grad = model_gradient(p, y);
    if (!p.feasible.is_ball()) return grad.norm();
    return (y - project(p.feasible, Vector(y - grad))).norm();
  };
  sol.kkt_residual = residual(sol.y);

  const Scalar target = p.feasible.is_ball() ? tol : tol * (Scalar(1) + p.g.norm());
  if (sol.kkt_residual > target && p.feasible.is_ball()) {
    // Projected gradient with Armijo backtracking on the projection arc.
    Vector y = sol.y;
    Scalar step = Scalar(1) / max(lam.maxCoeff() + p.M * (sol.y - p.center).norm(), Scalar(1e-12));
    Scalar f = model_value(p, y);
    const int cap = 10 * static_cast<int>(d) + 5000;
    for (int k = 0; k < cap && sol.kkt_residual > target; ++k) {
      const Vector grad = model_gradient(p, y);
      Vector trial;
      Scalar ft = Scalar(0);
      for (int ls = 0; ls < 60; ++ls) {
        trial = project(p.feasible, Vector(y - step * grad));
        ft = model_value(p, trial);
        if (ft <= f + grad.dot(trial - y) + (trial - y).squaredNorm() / (Scalar(2) * step)) break;
        step *= Scalar(0.5);
      }
      y = trial;
      f = ft;
      step *= Scalar(1.5);
      ++sol.inner_iterations;
      const Scalar res = residual(y);
      if (res < sol.kkt_residual) {
        sol.kkt_residual = res;
        sol.y = y;
      }
    }
  }
  sol.step_norm = (sol.y - p.center).norm();
  if (!(sol.kkt_residual <= target)) {
    throw CubicSolverError("cubic subproblem: residual " +
                               std::to_string(static_cast<double>(sol.kkt_residual)) +
                               " above tolerance",
                           sol.y.template cast<double>(), static_cast<double>(sol.kkt_residual));
  }
  return sol;
}

}  // namespace meshnewton
