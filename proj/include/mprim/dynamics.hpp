#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "mprim/common.hpp"

// Planar n-link serial chain: kinematics, inertial matrices, forward-dynamics
// stepping, and a penalty contact wall. Gravity is zero (horizontal plane,
// compensated by the controller).

namespace mprim {

struct PlanarChain {
  int n_links = 0;
  Eigen::VectorXd masses;       // kg
  Eigen::VectorXd lengths;      // m
  Eigen::VectorXd com_offsets;  // m, proximal joint -> center of mass
  Eigen::VectorXd inertias;     // kg m^2 about each link's com

  // Default: uniform slender bars, com at l/2, I = m l^2 / 12.
  static PlanarChain uniform_bars(int n, double mass = 1.0, double length = 1.0) {
    if (n < 1) throw ContractViolation("uniform_bars: n must be >= 1");
    PlanarChain c;
    c.n_links = n;
    c.masses = Eigen::VectorXd::Constant(n, mass);
    c.lengths = Eigen::VectorXd::Constant(n, length);
    c.com_offsets = Eigen::VectorXd::Constant(n, 0.5 * length);
    c.inertias = Eigen::VectorXd::Constant(n, mass * length * length / 12.0);
    c.validate();
    return c;
  }

  void validate() const {
    if (n_links < 1) throw ContractViolation("PlanarChain: n_links must be >= 1");
    auto need = [&](const Eigen::VectorXd& v, const char* name) {
      if (v.size() != n_links)
        throw ContractViolation(std::string("PlanarChain: bad size for ") + name);
    };
    need(masses, "masses");
    need(lengths, "lengths");
    need(com_offsets, "com_offsets");
    need(inertias, "inertias");
    for (int i = 0; i < n_links; ++i) {
      if (!(masses[i] > 0.0) || !(lengths[i] > 0.0))
        throw ContractViolation("PlanarChain: masses and lengths must be positive");
      if (com_offsets[i] < 0.0 || com_offsets[i] > lengths[i])
        throw ContractViolation("PlanarChain: com_offset outside [0, length]");
      if (inertias[i] < 0.0) throw ContractViolation("PlanarChain: negative inertia");
    }
  }

  double total_reach() const { return lengths.sum(); }
};

struct RobotState {
  Eigen::VectorXd q;     // rad
  Eigen::VectorXd qdot;  // rad/s
  double t = 0.0;        // s
};

struct ExternalForce {
  Eigen::Vector2d point_force = Eigen::Vector2d::Zero();  // N, at end-effector
  bool active = false;
};

// Half-plane penalty wall acting on the end-effector. Penetration is
// delta = offset - normal . p; the wall disappears at removal_time.
struct ContactWall {
  Eigen::Vector2d normal = Eigen::Vector2d(0.0, -1.0);
  double offset = 0.0;       // m, signed plane distance
  double stiffness = 1e4;    // N/m
  double damping = 1e2;      // N s/m
  double removal_time = 0.0; // s
};

namespace detail {

inline void check_dim(const PlanarChain& chain, const Eigen::VectorXd& v, const char* what) {
  if (v.size() != chain.n_links)
    throw ContractViolation(std::string("dimension mismatch in ") + what);
}

// Absolute link angles theta_i = sum_{j<=i} q_j.
inline Eigen::VectorXd absolute_angles(const Eigen::VectorXd& q) {
  Eigen::VectorXd th(q.size());
  double acc = 0.0;
  for (int i = 0; i < q.size(); ++i) {
    acc += q[i];
    th[i] = acc;
  }
  return th;
}

// Center-of-mass position of link i (0-based).
inline Eigen::Vector2d com_position(const PlanarChain& chain, const Eigen::VectorXd& th, int i) {
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int k = 0; k < i; ++k)
    p += chain.lengths[k] * Eigen::Vector2d(std::cos(th[k]), std::sin(th[k]));
  p += chain.com_offsets[i] * Eigen::Vector2d(std::cos(th[i]), std::sin(th[i]));
  return p;
}

// Linear Jacobian of the com of link i: column j is d(com_i)/d(q_j).
inline Eigen::Matrix2Xd com_jacobian(const PlanarChain& chain, const Eigen::VectorXd& th, int i) {
  const int n = chain.n_links;
  Eigen::Matrix2Xd J = Eigen::Matrix2Xd::Zero(2, n);
  for (int j = 0; j <= i; ++j) {
    Eigen::Vector2d col = Eigen::Vector2d::Zero();
    for (int k = j; k < i; ++k)
      col += chain.lengths[k] * Eigen::Vector2d(-std::sin(th[k]), std::cos(th[k]));
    col += chain.com_offsets[i] * Eigen::Vector2d(-std::sin(th[i]), std::cos(th[i]));
    J.col(j) = col;
  }
  return J;
}

}  // namespace detail

inline Eigen::Vector2d forward_kinematics(const PlanarChain& chain, const Eigen::VectorXd& q) {
  detail::check_dim(chain, q, "forward_kinematics");
  const Eigen::VectorXd th = detail::absolute_angles(q);
  Eigen::Vector2d p = Eigen::Vector2d::Zero();
  for (int i = 0; i < chain.n_links; ++i)
    p += chain.lengths[i] * Eigen::Vector2d(std::cos(th[i]), std::sin(th[i]));
  return p;
}

// End-effector Jacobian, 2 x n: pdot = J(q) qdot.
inline Eigen::Matrix2Xd jacobian(const PlanarChain& chain, const Eigen::VectorXd& q) {
  detail::check_dim(chain, q, "jacobian");
  const int n = chain.n_links;
  const Eigen::VectorXd th = detail::absolute_angles(q);
  Eigen::Matrix2Xd J = Eigen::Matrix2Xd::Zero(2, n);
  for (int j = 0; j < n; ++j) {
    Eigen::Vector2d col = Eigen::Vector2d::Zero();
    for (int i = j; i < n; ++i)
      col += chain.lengths[i] * Eigen::Vector2d(-std::sin(th[i]), std::cos(th[i]));
    J.col(j) = col;
  }
  return J;
}

// Time derivative of the end-effector Jacobian along (q, qdot).
inline Eigen::Matrix2Xd jacobian_dot(const PlanarChain& chain, const Eigen::VectorXd& q,
                                     const Eigen::VectorXd& qdot) {
  detail::check_dim(chain, q, "jacobian_dot");
  detail::check_dim(chain, qdot, "jacobian_dot");
  const int n = chain.n_links;
  const Eigen::VectorXd th = detail::absolute_angles(q);
  const Eigen::VectorXd thdot = detail::absolute_angles(qdot);
  Eigen::Matrix2Xd Jd = Eigen::Matrix2Xd::Zero(2, n);
  for (int j = 0; j < n; ++j) {
    Eigen::Vector2d col = Eigen::Vector2d::Zero();
    for (int i = j; i < n; ++i)
      col += chain.lengths[i] * thdot[i] *
             Eigen::Vector2d(-std::cos(th[i]), -std::sin(th[i]));
    Jd.col(j) = col;
  }
  return Jd;
}

// M(q) = sum_i m_i Jv_i^T Jv_i + I_i Jw_i^T Jw_i. Jw_i rows are 1 for j <= i.
inline Eigen::MatrixXd mass_matrix(const PlanarChain& chain, const Eigen::VectorXd& q) {
  detail::check_dim(chain, q, "mass_matrix");
  const int n = chain.n_links;
  const Eigen::VectorXd th = detail::absolute_angles(q);
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const Eigen::Matrix2Xd Jv = detail::com_jacobian(chain, th, i);
    M.noalias() += chain.masses[i] * (Jv.transpose() * Jv);
    // Angular part: J_w has ones in columns 0..i, so its outer product is
    // a block of ones on those indices.
    for (int a = 0; a <= i; ++a)
      for (int b = 0; b <= i; ++b) M(a, b) += chain.inertias[i];
  }
  // Symmetrize to kill round-off asymmetry.
  return 0.5 * (M + M.transpose());
}

// Christoffel-symbol Coriolis matrix with finite-difference dM/dq_k, so that
// Mdot - 2C is skew-symmetric up to FD error.
inline Eigen::MatrixXd coriolis_matrix(const PlanarChain& chain, const Eigen::VectorXd& q,
                                       const Eigen::VectorXd& qdot) {
  detail::check_dim(chain, q, "coriolis_matrix");
  detail::check_dim(chain, qdot, "coriolis_matrix");
  const int n = chain.n_links;
  const double h = 1e-5;  // balances FD truncation vs round-off for skew residual
  std::vector<Eigen::MatrixXd> dM(n);
  for (int k = 0; k < n; ++k) {
    Eigen::VectorXd qp = q, qm = q;
    qp[k] += h;
    qm[k] -= h;
    dM[k] = (mass_matrix(chain, qp) - mass_matrix(chain, qm)) / (2.0 * h);
  }
  Eigen::MatrixXd C = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double cij = 0.0;
      for (int k = 0; k < n; ++k)
        cij += 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k)) * qdot[k];
      C(i, j) = cij;
    }
  return C;
}

// Semi-implicit Euler step of M qddot = tau_in + J^T f_ext - C qdot (G = 0).
inline RobotState step(const PlanarChain& chain, const RobotState& state,
                       const Eigen::VectorXd& tau_in, const ExternalForce& ext, double dt) {
  detail::check_dim(chain, state.q, "step");
  detail::check_dim(chain, state.qdot, "step");
  detail::check_dim(chain, tau_in, "step");
  if (!(dt > 0.0)) throw ContractViolation("step: dt must be positive");
  if (!tau_in.allFinite()) throw ContractViolation("step: non-finite torque");
  if (ext.active && !ext.point_force.allFinite())
    throw ContractViolation("step: non-finite external force");

  Eigen::VectorXd rhs = tau_in - coriolis_matrix(chain, state.q, state.qdot) * state.qdot;
  if (ext.active)
    rhs.noalias() += jacobian(chain, state.q).transpose() * ext.point_force;

  const Eigen::MatrixXd M = mass_matrix(chain, state.q);
  Eigen::LLT<Eigen::MatrixXd> llt(M);
  if (llt.info() != Eigen::Success) throw SolveError("step: mass matrix not SPD");
  const Eigen::VectorXd qddot = llt.solve(rhs);

  RobotState next;
  next.qdot = state.qdot + qddot * dt;
  next.q = state.q + next.qdot * dt;
  next.t = state.t + dt;
  return next;
}

// Penalty contact force of the wall on the end-effector, zero after removal.
inline Eigen::Vector2d wall_contact_force(const ContactWall& wall, const Eigen::Vector2d& p,
                                          const Eigen::Vector2d& pdot, double t) {
  if (t >= wall.removal_time) return Eigen::Vector2d::Zero();
  const double delta = wall.offset - wall.normal.dot(p);
  if (delta <= 0.0) return Eigen::Vector2d::Zero();
  double fn = wall.stiffness * delta - wall.damping * wall.normal.dot(pdot);
  if (fn < 0.0) fn = 0.0;
  return fn * wall.normal;
}

inline double kinetic_energy(const PlanarChain& chain, const RobotState& state) {
  return 0.5 * state.qdot.dot(mass_matrix(chain, state.q) * state.qdot);
}

}  // namespace mprim
