#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>

#include "mprim/common.hpp"
#include "mprim/dynamics.hpp"

// Torque generation for DMP plans: inverse dynamics feedforward, analytic and
// differential inverse kinematics, damped least squares, PD feedback, and the
// velocity-based sliding-mode redundancy controller.

namespace mprim {

struct PdGains {
  Eigen::MatrixXd Kq;  // N m / rad
  Eigen::MatrixXd Bq;  // N m s / rad
};

struct SlidingModeGains {
  Eigen::MatrixXd Lambda1;  // task dim
  Eigen::MatrixXd Lambda2;  // n x n
};

enum class ElbowBranch { Up, Down };  // Up: q2 >= 0, Down: q2 <= 0

// tau = M(q_des) qddot_des + C(q_des, qdot_des) qdot_des, with G = 0.
inline Eigen::VectorXd inverse_dynamics_torque(const PlanarChain& chain,
                                               const Eigen::VectorXd& q_des,
                                               const Eigen::VectorXd& qdot_des,
                                               const Eigen::VectorXd& qddot_des) {
  return mass_matrix(chain, q_des) * qddot_des +
         coriolis_matrix(chain, q_des, qdot_des) * qdot_des;
}

// 2-link analytic inverse kinematics on the requested elbow branch; chains
// with n > 2 fall back to damped Newton iteration from the seed.
inline Eigen::VectorXd ik_position(const PlanarChain& chain, const Eigen::Vector2d& p_des,
                                   const Eigen::VectorXd& seed,
                                   ElbowBranch branch = ElbowBranch::Up) {
  const double reach = chain.total_reach();
  const double r = p_des.norm();
  if (r > reach + 1e-12)
    throw OutOfWorkspaceError("ik_position: target outside reachable workspace");

  if (chain.n_links == 2) {
    const double l1 = chain.lengths[0], l2 = chain.lengths[1];
    if (r < std::abs(l1 - l2) - 1e-12)
      throw OutOfWorkspaceError("ik_position: target inside inner workspace boundary");
    double c2 = (r * r - l1 * l1 - l2 * l2) / (2.0 * l1 * l2);
    c2 = std::min(1.0, std::max(-1.0, c2));
    double q2 = std::acos(c2);
    if (branch == ElbowBranch::Down) q2 = -q2;
    const double q1 = std::atan2(p_des[1], p_des[0]) -
                      std::atan2(l2 * std::sin(q2), l1 + l2 * std::cos(q2));
    Eigen::VectorXd q(2);
    q << q1, q2;
    return q;
  }

  // Damped-Newton fallback for redundant chains; converges to the solution
  // nearest the seed in the least-squares sense.
  if (seed.size() != chain.n_links) throw ContractViolation("ik_position: bad seed size");
  Eigen::VectorXd q = seed;
  for (int it = 0; it < 500; ++it) {
    const Eigen::Vector2d err = p_des - forward_kinematics(chain, q);
    if (err.norm() < 1e-10) return q;
    const Eigen::Matrix2Xd J = jacobian(chain, q);
    const Eigen::Matrix2d JJt = J * J.transpose() + 1e-8 * Eigen::Matrix2d::Identity();
    Eigen::VectorXd dq = J.transpose() * JJt.ldlt().solve(err);
    if (dq.norm() > 0.5) dq *= 0.5 / dq.norm();
    q += dq;
  }
  throw SolveError("ik_position: Newton iteration did not converge");
}

// Exact inverse-Jacobian maps for the square (n = 2) case:
// qdot = J^{-1} pdot, qddot = J^{-1}(pddot - Jdot qdot).
inline std::pair<Eigen::VectorXd, Eigen::VectorXd> ik_velocity_accel(
    const PlanarChain& chain, const Eigen::VectorXd& q, const Eigen::Vector2d& pdot_des,
    const Eigen::Vector2d& pddot_des) {
  if (chain.n_links != 2)
    throw ContractViolation("ik_velocity_accel: requires a square (2-link) Jacobian");
  const Eigen::Matrix2d J = jacobian(chain, q);
  const double det = J.determinant();
  if (std::abs(det) < 1e-9)
    throw SingularityError("ik_velocity_accel: Jacobian singular");
  const Eigen::Matrix2d Jinv = J.inverse();
  const Eigen::VectorXd qdot = Jinv * pdot_des;
  const Eigen::Matrix2d Jdot = jacobian_dot(chain, q, qdot);
  const Eigen::VectorXd qddot = Jinv * (pddot_des - Jdot * qdot);
  return {qdot, qddot};
}

// J^T (J J^T + lambda_d^2 I)^{-1}; lambda_d = 0 is Moore-Penrose on full rank.
inline Eigen::MatrixXd dls_pinv(const Eigen::Matrix2Xd& J, double damping) {
  if (damping < 0.0) throw ContractViolation("dls_pinv: damping must be >= 0");
  const Eigen::Matrix2d JJt =
      J * J.transpose() + damping * damping * Eigen::Matrix2d::Identity();
  return J.transpose() * JJt.inverse();
}

inline Eigen::VectorXd pd_feedback(const PdGains& gains, const Eigen::VectorXd& q_des,
                                   const Eigen::VectorXd& qdot_des, const Eigen::VectorXd& q,
                                   const Eigen::VectorXd& qdot) {
  return gains.Kq * (q_des - q) + gains.Bq * (qdot_des - qdot);
}

// Velocity-based sliding-mode task controller:
//   pdot_r = pdot_des + L1 (p_des - p),  qdot_r = J+ pdot_r,
//   pddot_r = pddot_des + L1 (pdot_des - pdot),  qddot_r = J+ (pddot_r - Jdot qdot),
//   tau = M qddot_r + C qdot_r - L2 (qdot - qdot_r).
// The DLS damping engages only near rank loss (sigma_min < activation * sigma_max).
inline Eigen::VectorXd sliding_mode_torque(const PlanarChain& chain,
                                           const SlidingModeGains& gains,
                                           const RobotState& state,
                                           const Eigen::Vector2d& p_des,
                                           const Eigen::Vector2d& pdot_des,
                                           const Eigen::Vector2d& pddot_des,
                                           double dls_damping = 0.01,
                                           double activation = 0.05) {
  const Eigen::Matrix2Xd J = jacobian(chain, state.q);
  const Eigen::Vector2d p = forward_kinematics(chain, state.q);
  const Eigen::Vector2d pdot = J * state.qdot;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
  const double smax = svd.singularValues()[0];
  const double smin = svd.singularValues()[svd.singularValues().size() - 1];
  const double lam = (smin < activation * smax) ? dls_damping : 0.0;
  const Eigen::MatrixXd Jp = dls_pinv(J, lam);

  const Eigen::Vector2d pdot_r = pdot_des + gains.Lambda1 * (p_des - p);
  const Eigen::VectorXd qdot_r = Jp * pdot_r;
  const Eigen::Vector2d pddot_r = pddot_des + gains.Lambda1 * (pdot_des - pdot);
  const Eigen::Matrix2Xd Jdot = jacobian_dot(chain, state.q, state.qdot);
  const Eigen::VectorXd qddot_r = Jp * (pddot_r - Jdot * state.qdot);

  return mass_matrix(chain, state.q) * qddot_r +
         coriolis_matrix(chain, state.q, state.qdot) * qdot_r -
         gains.Lambda2 * (state.qdot - qdot_r);
}

}  // namespace mprim
