#ifndef HSL_PROJECTION_HPP
#define HSL_PROJECTION_HPP

#include <Eigen/Dense>

namespace hsl {

/// Euclidean projection of v onto the L1 ball of the given radius.
/// Returns v unchanged when it is already inside the ball.
/// Throws std::invalid_argument on non-finite input or radius <= 0.
Eigen::VectorXd project_l1_ball(const Eigen::VectorXd& v, double radius);

/// Euclidean projection of v onto the probability simplex
/// { w : w_j >= 0, sum w_j = 1 }.
Eigen::VectorXd project_simplex(const Eigen::VectorXd& v);

}  // namespace hsl

#endif
