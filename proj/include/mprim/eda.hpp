#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <variant>
#include <vector>

#include "mprim/common.hpp"
#include "mprim/dynamics.hpp"

// Elementary Dynamic Actions: submovement/oscillation kinematic primitives,
// virtual-trajectory composition, and superposable mechanical impedances.
// No inverse kinematics and no inverse dynamics anywhere in this module.

namespace mprim {

// Minimum-jerk point-to-point segment with finite support [onset, onset + T].
struct Submovement {
  Eigen::VectorXd start;
  Eigen::VectorXd goal;
  double duration = 1.0;  // T > 0
  double onset = 0.0;     // t_off >= 0
};

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> submovement_eval(const Submovement& sm,
                                                                    double t) {
  if (!(sm.duration > 0.0)) throw ContractViolation("submovement_eval: duration must be positive");
  if (sm.start.size() != sm.goal.size())
    throw ContractViolation("submovement_eval: start/goal dimension mismatch");
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(sm.start.size());
  if (t <= sm.onset) return {sm.start, zero};
  if (t >= sm.onset + sm.duration) return {sm.goal, zero};
  const double u = (t - sm.onset) / sm.duration;
  const Eigen::VectorXd D = sm.goal - sm.start;
  return {sm.start + D * minjerk(u), D * (minjerk_d(u) / sm.duration)};
}

enum class OscShape { SinusoidPerDof, Circle };

// SinusoidPerDof: center + amplitude .* sin(w0 t + phase), per coordinate.
// Circle: center + r0 [cos(w0 t + phase), sin(w0 t + phase)].
struct Oscillation {
  OscShape shape = OscShape::SinusoidPerDof;
  Eigen::VectorXd center;
  Eigen::VectorXd amplitude;  // SinusoidPerDof
  double radius = 0.0;        // Circle, r0
  double omega = M_PI;        // w0, rad/s
  double phase = 0.0;         // rad
};

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> oscillation_eval(const Oscillation& os,
                                                                    double t) {
  if (os.shape == OscShape::SinusoidPerDof) {
    if (os.center.size() != os.amplitude.size())
      throw ContractViolation("oscillation_eval: center/amplitude dimension mismatch");
    const double ph = os.omega * t + os.phase;
    Eigen::VectorXd pos = os.center + os.amplitude * std::sin(ph);
    Eigen::VectorXd vel = os.amplitude * (os.omega * std::cos(ph));
    return {pos, vel};
  }
  if (os.center.size() != 2) throw ContractViolation("oscillation_eval: circle needs 2-D center");
  const double ph = os.omega * t + os.phase;
  Eigen::VectorXd pos(2), vel(2);
  pos << os.center[0] + os.radius * std::cos(ph), os.center[1] + os.radius * std::sin(ph);
  vel << -os.radius * os.omega * std::sin(ph), os.radius * os.omega * std::cos(ph);
  return {pos, vel};
}

// Exact sum of submovement and oscillation evaluations.
struct VirtualTrajectory {
  std::vector<std::variant<Submovement, Oscillation>> terms;
  int dim = 0;  // evaluation dimension when terms is empty
};

inline std::pair<Eigen::VectorXd, Eigen::VectorXd> vt_eval(const VirtualTrajectory& vt,
                                                           double t) {
  Eigen::VectorXd pos, vel;
  bool first = true;
  for (const auto& term : vt.terms) {
    auto [p, v] = std::visit(
        [&](const auto& x) {
          if constexpr (std::is_same_v<std::decay_t<decltype(x)>, Submovement>)
            return submovement_eval(x, t);
          else
            return oscillation_eval(x, t);
        },
        term);
    if (first) {
      pos = p;
      vel = v;
      first = false;
    } else {
      if (p.size() != pos.size())
        throw ContractViolation("vt_eval: term dimension mismatch");
      pos += p;
      vel += v;
    }
  }
  if (first) {
    pos = Eigen::VectorXd::Zero(vt.dim);
    vel = Eigen::VectorXd::Zero(vt.dim);
  }
  return {pos, vel};
}

// Impedance operators (one term of the superposable torque law).
struct JointImpedance {
  Eigen::MatrixXd Kq, Bq;
  VirtualTrajectory q0;
};
struct TaskImpedance {
  Eigen::MatrixXd Kp, Bp;
  VirtualTrajectory p0;
};
struct JointDamping {
  Eigen::MatrixXd Bq;
};
struct RepulsivePoint {
  double k = 0.1;          // amplitude
  int n_exp = 6;
  Eigen::Vector2d o = Eigen::Vector2d::Zero();
  double force_cap = 1e4;  // N, near the singular point o = p
};
struct EnergyModulatedTask {
  Eigen::MatrixXd Kp;
  double c = 1.0 / 3.0;  // damping-ratio constant: Bp'(lambda) = c lambda Kp
  VirtualTrajectory p0;
  double L_max = 2.5;  // J
};

using ImpedanceOp =
    std::variant<JointImpedance, TaskImpedance, JointDamping, RepulsivePoint, EnergyModulatedTask>;

// lambda = 1 when T + U <= L_max, else max((L_max - T)/U, 0), with
// T = kinetic energy and U computed from the unmodulated Kp.
inline double energy_lambda(const PlanarChain& chain, const RobotState& state,
                            const Eigen::MatrixXd& Kp, const Eigen::VectorXd& p0,
                            double L_max) {
  if (!(L_max > 0.0)) throw ContractViolation("energy_lambda: L_max must be positive");
  const double T = kinetic_energy(chain, state);
  const Eigen::VectorXd dp = p0 - forward_kinematics(chain, state.q);
  const double U = 0.5 * dp.dot(Kp * dp);
  if (T + U <= L_max) return 1.0;
  if (U < 1e-12) return 0.0;
  return std::max((L_max - T) / U, 0.0);
}

inline Eigen::VectorXd impedance_force(const ImpedanceOp& op, const PlanarChain& chain,
                                       const RobotState& state, double t) {
  const int n = chain.n_links;
  if (state.q.size() != n || state.qdot.size() != n)
    throw ContractViolation("impedance_force: state dimension mismatch");

  if (const auto* ji = std::get_if<JointImpedance>(&op)) {
    auto [q0, q0dot] = vt_eval(ji->q0, t);
    return ji->Kq * (q0 - state.q) + ji->Bq * (q0dot - state.qdot);
  }
  if (const auto* ti = std::get_if<TaskImpedance>(&op)) {
    auto [p0, p0dot] = vt_eval(ti->p0, t);
    const Eigen::Matrix2Xd J = jacobian(chain, state.q);
    const Eigen::Vector2d p = forward_kinematics(chain, state.q);
    const Eigen::Vector2d pdot = J * state.qdot;
    const Eigen::Vector2d F = ti->Kp * (p0 - p) + ti->Bp * (p0dot - pdot);
    return J.transpose() * F;
  }
  if (const auto* jd = std::get_if<JointDamping>(&op)) {
    return -(jd->Bq * state.qdot);
  }
  if (const auto* rp = std::get_if<RepulsivePoint>(&op)) {
    const Eigen::Matrix2Xd J = jacobian(chain, state.q);
    const Eigen::Vector2d p = forward_kinematics(chain, state.q);
    const Eigen::Vector2d d = rp->o - p;
    const double dist = d.norm();
    Eigen::Vector2d F;
    if (dist < 1e-6) {
      // The potential is singular at o = p; cap the magnitude.
      ++Diagnostics::capped_repulsion;
      const Eigen::Vector2d dir = dist > 0.0 ? Eigen::Vector2d(-d / dist)
                                             : Eigen::Vector2d(1.0, 0.0);
      F = rp->force_cap * dir;
    } else {
      F = -(rp->k / std::pow(dist, double(rp->n_exp))) * d;
      if (F.norm() > rp->force_cap) {
        ++Diagnostics::capped_repulsion;
        F *= rp->force_cap / F.norm();
      }
    }
    return J.transpose() * F;
  }
  const auto& em = std::get<EnergyModulatedTask>(op);
  auto [p0, p0dot] = vt_eval(em.p0, t);
  const double lam = energy_lambda(chain, state, em.Kp, p0, em.L_max);
  const Eigen::Matrix2Xd J = jacobian(chain, state.q);
  const Eigen::Vector2d p = forward_kinematics(chain, state.q);
  const Eigen::Vector2d pdot = J * state.qdot;
  const Eigen::Vector2d F =
      lam * (em.Kp * (p0 - p)) + em.c * lam * (em.Kp * (p0dot - pdot));
  return J.transpose() * F;
}

// Z = sum Z_i: exact sum of impedance forces.
inline Eigen::VectorXd superpose(const std::vector<ImpedanceOp>& ops, const PlanarChain& chain,
                                 const RobotState& state, double t) {
  Eigen::VectorXd tau = Eigen::VectorXd::Zero(chain.n_links);
  for (const auto& op : ops) tau += impedance_force(op, chain, state, t);
  return tau;
}

// Top-level per-tick EDA control law. Structurally, the call graph below
// contains no Jacobian inverse and no inverse dynamics.
inline Eigen::VectorXd eda_controller(const std::vector<ImpedanceOp>& ops,
                                      const PlanarChain& chain, const RobotState& state,
                                      double t) {
  return superpose(ops, chain, state, t);
}

}  // namespace mprim
