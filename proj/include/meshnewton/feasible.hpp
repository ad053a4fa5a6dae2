#pragma once

#include <Eigen/Dense>
#include <string>

#include "meshnewton/error.hpp"

namespace meshnewton {

/// Closed convex feasible set: the whole space or a Euclidean ball.
template <typename Scalar>
struct BasicFeasible {
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  enum class Kind { all_space, l2_ball };

  Kind kind = Kind::all_space;
  Scalar radius = Scalar(0);
  /// Empty means the origin.
  Vector center;

  static BasicFeasible all_space() { return {}; }
  static BasicFeasible l2_ball(Scalar r, Vector c = Vector()) {
    if (!(r > Scalar(0))) throw InvalidArgument("ball radius must be positive");
    return {Kind::l2_ball, r, std::move(c)};
  }

  bool is_ball() const { return kind == Kind::l2_ball; }

  Vector center_in(Eigen::Index d) const {
    if (center.size() == 0) return Vector::Zero(d);
    if (center.size() != d) throw InvalidArgument("ball center has wrong dimension");
    return center;
  }

  /// Euclidean distance from x to the set.
  template <typename Derived>
  Scalar distance(const Eigen::MatrixBase<Derived>& x) const {
    if (!is_ball()) return Scalar(0);
    using std::max;
    return max(Scalar(0), (x - center_in(x.size())).norm() - radius);
  }
};

using Feasible = BasicFeasible<double>;

/// Euclidean projection: identity on the whole space, radial shrink onto
/// the ball otherwise. Exact on already-feasible points.
template <typename Scalar, typename Derived>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> project(const BasicFeasible<Scalar>& k,
                                                 const Eigen::MatrixBase<Derived>& x) {
  if (!k.is_ball()) return x;
  const auto c = k.center_in(x.size());
  const Scalar dist = (x - c).norm();
  if (dist <= k.radius) return x;
  return c + (x - c) * (k.radius / dist);
}

}  // namespace meshnewton
