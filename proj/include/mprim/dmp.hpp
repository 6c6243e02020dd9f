#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <optional>
#include <vector>

#include "mprim/common.hpp"

// Dynamic Movement Primitives: canonical systems, basis functions, forcing
// terms, transformation systems, one-shot imitation learning, goal filtering,
// and the planar obstacle-coupling term.

namespace mprim {

enum class DmpKind { Discrete, Rhythmic };

struct CanonicalSystem {
  DmpKind kind = DmpKind::Discrete;
  double tau = 1.0;      // s
  double alpha_s = 1.0;  // Discrete only
};

// Phase variable: Discrete s(t) = exp(-alpha_s t / tau), Rhythmic s = (t/tau) mod 2pi.
inline double canonical_eval(const CanonicalSystem& cs, double t) {
  if (!(cs.tau > 0.0)) throw ContractViolation("canonical_eval: tau must be positive");
  if (cs.kind == DmpKind::Discrete) return std::exp(-cs.alpha_s * t / cs.tau);
  const double two_pi = 2.0 * M_PI;
  double s = std::fmod(t / cs.tau, two_pi);
  if (s < 0.0) s += two_pi;
  return s;
}

struct ForcingTerm {
  DmpKind kind = DmpKind::Discrete;
  Eigen::VectorXd weights;
  Eigen::VectorXd centers;  // c_i
  Eigen::VectorXd widths;   // h_i > 0
  double scale = 0.0;       // (g - y0) for Discrete, r for Rhythmic
};

// Default basis schedule for Discrete: c_i = exp(-alpha_s (i-1)/(N-1)),
// h_i = 1/(c_{i+1}-c_i)^2 with h_N = h_{N-1}.
inline void discrete_basis(int N, double alpha_s, Eigen::VectorXd& centers,
                           Eigen::VectorXd& widths) {
  if (N < 1) throw ContractViolation("discrete_basis: N must be >= 1");
  centers.resize(N);
  widths.resize(N);
  if (N == 1) {
    centers[0] = 1.0;
    widths[0] = 1.0;
    return;
  }
  for (int i = 0; i < N; ++i) centers[i] = std::exp(-alpha_s * double(i) / double(N - 1));
  for (int i = 0; i + 1 < N; ++i) {
    const double d = centers[i + 1] - centers[i];
    widths[i] = 1.0 / (d * d);
  }
  widths[N - 1] = widths[N - 2];
}

// Default basis schedule for Rhythmic: c_i = 2pi (i-1)/N, h_i = N.
inline void rhythmic_basis(int N, Eigen::VectorXd& centers, Eigen::VectorXd& widths) {
  if (N < 1) throw ContractViolation("rhythmic_basis: N must be >= 1");
  centers.resize(N);
  widths.resize(N);
  for (int i = 0; i < N; ++i) {
    centers[i] = 2.0 * M_PI * double(i) / double(N);
    widths[i] = double(N);
  }
}

// phi_i(s); i is zero-based.
inline double basis_eval(const ForcingTerm& ft, int i, double s) {
  if (i < 0 || i >= ft.centers.size()) throw ContractViolation("basis_eval: index out of range");
  if (ft.kind == DmpKind::Discrete) {
    const double d = s - ft.centers[i];
    return std::exp(-ft.widths[i] * d * d);
  }
  return std::exp(ft.widths[i] * (std::cos(s - ft.centers[i]) - 1.0));
}

// f(s) = (sum w_i phi_i / sum phi_i) * s * scale  (Discrete)
//      = (sum w_i phi_i / sum phi_i) * scale      (Rhythmic, scale = r)
inline double forcing_eval(const ForcingTerm& ft, double s) {
  const int N = int(ft.weights.size());
  if (N == 0 || ft.centers.size() != N || ft.widths.size() != N)
    throw ContractViolation("forcing_eval: inconsistent basis sizes");
  double num = 0.0, den = 0.0;
  for (int i = 0; i < N; ++i) {
    const double phi = basis_eval(ft, i, s);
    num += ft.weights[i] * phi;
    den += phi;
  }
  if (den < 1e-300) {
    ++Diagnostics::degenerate_forcing;
    return 0.0;
  }
  const double avg = num / den;
  return ft.kind == DmpKind::Discrete ? avg * s * ft.scale : avg * ft.scale;
}

// tau ydot = z; tau zdot = alpha_z (beta_z (g - y) - z) + f.
struct TransformationSystem {
  double alpha_z = 10.0;
  double beta_z = 2.5;  // critically damped at alpha_z / 4
  double tau = 1.0;
  double goal = 0.0;
  double y = 0.0;
  double z = 0.0;

  double ydot() const { return z / tau; }
  double zdot(double f_val) const {
    return (alpha_z * (beta_z * (goal - y) - z) + f_val) / tau;
  }
  double yddot(double f_val) const { return zdot(f_val) / tau; }
};

// Explicit Euler update; returns the new (y, z).
inline std::pair<double, double> transformation_step(TransformationSystem& ts, double f_val,
                                                     double dt) {
  if (!(dt > 0.0)) throw ContractViolation("transformation_step: dt must be positive");
  if (!std::isfinite(f_val)) throw ContractViolation("transformation_step: non-finite forcing");
  const double zd = ts.zdot(f_val);
  const double yd = ts.ydot();
  ts.z += zd * dt;
  ts.y += yd * dt;
  return {ts.y, ts.z};
}

// tau gdot = alpha_g (g0 - g). Stepped with the exact exponential update so the
// discrete sequence lies on the closed-form solution for piecewise-constant g0.
struct GoalFilter {
  double alpha_g = 1.0;
  double tau = 1.0;
  double g = 0.0;
  double g0 = 0.0;
};

inline double goal_filter_step(GoalFilter& gf, double dt) {
  if (!(dt > 0.0)) throw ContractViolation("goal_filter_step: dt must be positive");
  const double decay = std::exp(-gf.alpha_g * dt / gf.tau);
  gf.g = gf.g0 + (gf.g - gf.g0) * decay;
  return gf.g;
}

struct DemoTrajectory {
  Eigen::VectorXd times;      // strictly increasing, s
  Eigen::VectorXd y_des;      // one DOF
  Eigen::VectorXd ydot_des;
  Eigen::VectorXd yddot_des;

  void validate() const {
    const int P = int(times.size());
    if (P < 2) throw ContractViolation("DemoTrajectory: need P >= 2 samples");
    if (y_des.size() != P || ydot_des.size() != P || yddot_des.size() != P)
      throw ContractViolation("DemoTrajectory: mismatched sample lengths");
    for (int i = 1; i < P; ++i)
      if (!(times[i] > times[i - 1]))
        throw ContractViolation("DemoTrajectory: times must be strictly increasing");
  }
};

struct LearnedDmp {
  ForcingTerm forcing;
  double goal = 0.0;  // g
  double y0 = 0.0;    // initial position of the demo
};

// Locally weighted regression: w_i = (a^T Phi_i f_target) / (a^T Phi_i a),
// a_j = s(t_j)(g - y0) for Discrete, r for Rhythmic.
// f_target = tau^2 yddot + alpha_z tau ydot + alpha_z beta_z (y - g).
inline LearnedDmp imitation_learn(const DemoTrajectory& demo, const CanonicalSystem& cs,
                                  double alpha_z, double beta_z, int N,
                                  double rhythmic_r = 1.0) {
  demo.validate();
  const int P = int(demo.times.size());
  const double tau = cs.tau;

  LearnedDmp out;
  out.forcing.kind = cs.kind;
  if (cs.kind == DmpKind::Discrete) {
    out.goal = demo.y_des[P - 1];
    out.y0 = demo.y_des[0];
    out.forcing.scale = out.goal - out.y0;
    discrete_basis(N, cs.alpha_s, out.forcing.centers, out.forcing.widths);
  } else {
    out.goal = 0.5 * (demo.y_des.maxCoeff() + demo.y_des.minCoeff());
    out.y0 = demo.y_des[0];
    out.forcing.scale = rhythmic_r;
    rhythmic_basis(N, out.forcing.centers, out.forcing.widths);
  }

  Eigen::VectorXd s_vals(P), f_target(P), a(P);
  for (int j = 0; j < P; ++j) {
    s_vals[j] = canonical_eval(cs, demo.times[j]);
    f_target[j] = tau * tau * demo.yddot_des[j] + alpha_z * tau * demo.ydot_des[j] +
                  alpha_z * beta_z * (demo.y_des[j] - out.goal);
    a[j] = cs.kind == DmpKind::Discrete ? s_vals[j] * out.forcing.scale : rhythmic_r;
  }

  out.forcing.weights.resize(N);
  for (int i = 0; i < N; ++i) {
    double num = 0.0, den = 0.0;
    for (int j = 0; j < P; ++j) {
      const double phi = basis_eval(out.forcing, i, s_vals[j]);
      num += a[j] * phi * f_target[j];
      den += a[j] * phi * a[j];
    }
    if (den == 0.0) {
      out.forcing.weights[i] = 0.0;
      ++Diagnostics::zero_weight_columns;
    } else {
      out.forcing.weights[i] = num / den;
    }
  }
  return out;
}

// Planar obstacle-avoidance coupling C_t = gamma R pdot theta exp(-beta theta),
// theta = angle between (o - p) and pdot, R = rotation by +/-90 degrees.
inline Eigen::Vector2d coupling_term(const Eigen::Vector2d& p, const Eigen::Vector2d& pdot,
                                     const Eigen::Vector2d& o, double gamma, double beta,
                                     double rot_sign = 1.0) {
  const Eigen::Vector2d d = o - p;
  const double nd = d.norm(), nv = pdot.norm();
  if (nd < 1e-9 || nv < 1e-9) return Eigen::Vector2d::Zero();
  double c = d.dot(pdot) / (nd * nv);
  c = std::min(1.0, std::max(-1.0, c));
  const double theta = std::acos(c);
  const Eigen::Vector2d rotated(-rot_sign * pdot[1], rot_sign * pdot[0]);
  return gamma * theta * std::exp(-beta * theta) * rotated;
}

struct DmpRollout {
  Eigen::VectorXd times;
  Eigen::MatrixXd y, ydot, yddot;  // (steps+1) x n_dofs
};

struct CouplingConfig {
  Eigen::Vector2d obstacle = Eigen::Vector2d::Zero();
  double gamma = 300.0;
  double beta = 3.0;
  double rot_sign = 1.0;
};

// Integrates n transformation systems in lockstep with one canonical system.
// Optional planar coupling (first two DOFs) and per-DOF goal filters.
// substeps > 1 refines the Euler step while sampling at dt.
inline DmpRollout multi_dof_rollout(std::vector<TransformationSystem> systems,
                                    const CanonicalSystem& cs,
                                    const std::vector<ForcingTerm>& forcing, double duration,
                                    double dt,
                                    const std::optional<CouplingConfig>& coupling = std::nullopt,
                                    std::vector<GoalFilter>* filters = nullptr,
                                    int substeps = 1) {
  const int n = int(systems.size());
  if (n == 0 || int(forcing.size()) != n)
    throw ContractViolation("multi_dof_rollout: inconsistent dimensions");
  for (const auto& ts : systems)
    if (ts.tau != cs.tau) throw ContractViolation("multi_dof_rollout: systems must share tau");
  if (filters && int(filters->size()) != n)
    throw ContractViolation("multi_dof_rollout: filter count mismatch");
  if (coupling && n < 2)
    throw ContractViolation("multi_dof_rollout: coupling needs at least 2 DOFs");
  if (!(dt > 0.0) || duration < 0.0 || substeps < 1)
    throw ContractViolation("multi_dof_rollout: bad step parameters");

  const int steps = int(std::llround(duration / dt));
  DmpRollout out;
  out.times.resize(steps + 1);
  out.y.resize(steps + 1, n);
  out.ydot.resize(steps + 1, n);
  out.yddot.resize(steps + 1, n);

  const double h = dt / double(substeps);
  for (int k = 0; k <= steps; ++k) {
    const double t = k * dt;
    out.times[k] = t;
    const double s = canonical_eval(cs, t);
    Eigen::VectorXd f(n);
    for (int d = 0; d < n; ++d) f[d] = forcing_eval(forcing[d], s);
    if (coupling) {
      const Eigen::Vector2d p(systems[0].y, systems[1].y);
      const Eigen::Vector2d pd(systems[0].ydot(), systems[1].ydot());
      const Eigen::Vector2d ct = coupling_term(p, pd, coupling->obstacle, coupling->gamma,
                                               coupling->beta, coupling->rot_sign);
      f[0] += ct[0];
      f[1] += ct[1];
    }
    for (int d = 0; d < n; ++d) {
      out.y(k, d) = systems[d].y;
      out.ydot(k, d) = systems[d].ydot();
      out.yddot(k, d) = systems[d].yddot(f[d]);
    }
    if (k == steps) break;
    for (int sub = 0; sub < substeps; ++sub) {
      const double ts = t + sub * h;
      if (sub > 0) {
        const double ss = canonical_eval(cs, ts);
        for (int d = 0; d < n; ++d) f[d] = forcing_eval(forcing[d], ss);
        if (coupling) {
          const Eigen::Vector2d p(systems[0].y, systems[1].y);
          const Eigen::Vector2d pd(systems[0].ydot(), systems[1].ydot());
          const Eigen::Vector2d ct = coupling_term(p, pd, coupling->obstacle, coupling->gamma,
                                                   coupling->beta, coupling->rot_sign);
          f[0] += ct[0];
          f[1] += ct[1];
        }
      }
      for (int d = 0; d < n; ++d) {
        if (filters) systems[d].goal = goal_filter_step((*filters)[d], h);
        transformation_step(systems[d], f[d], h);
      }
    }
  }
  return out;
}

// Analytic minimum-jerk demonstration sampled at P points over [0, T].
inline DemoTrajectory min_jerk_demo(double y0, double g, double T, int P) {
  if (P < 2 || !(T > 0.0)) throw ContractViolation("min_jerk_demo: bad parameters");
  DemoTrajectory d;
  d.times.resize(P);
  d.y_des.resize(P);
  d.ydot_des.resize(P);
  d.yddot_des.resize(P);
  const double D = g - y0;
  for (int j = 0; j < P; ++j) {
    const double t = T * double(j) / double(P - 1);
    const double u = t / T;
    d.times[j] = t;
    d.y_des[j] = y0 + D * minjerk(u);
    d.ydot_des[j] = D * minjerk_d(u) / T;
    d.yddot_des[j] = D * minjerk_dd(u) / (T * T);
  }
  return d;
}

// Sinusoid demonstration y = center + amp sin(w0 t), one period, P samples
// over [0, 2pi/w0) excluding the duplicate endpoint phase.
inline DemoTrajectory sinusoid_demo(double center, double amp, double w0, int P) {
  if (P < 2 || !(w0 > 0.0)) throw ContractViolation("sinusoid_demo: bad parameters");
  DemoTrajectory d;
  d.times.resize(P);
  d.y_des.resize(P);
  d.ydot_des.resize(P);
  d.yddot_des.resize(P);
  const double period = 2.0 * M_PI / w0;
  for (int j = 0; j < P; ++j) {
    const double t = period * double(j) / double(P);
    d.times[j] = t;
    d.y_des[j] = center + amp * std::sin(w0 * t);
    d.ydot_des[j] = amp * w0 * std::cos(w0 * t);
    d.yddot_des[j] = -amp * w0 * w0 * std::sin(w0 * t);
  }
  return d;
}

}  // namespace mprim
