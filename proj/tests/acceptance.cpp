// Acceptance suite: one line per criterion, nonzero exit if any fails.
// Tolerances are pinned inline next to each check.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "mprim/io.hpp"
#include "mprim/scenarios.hpp"

using namespace mprim;
using Eigen::Vector2d;
using Eigen::VectorXd;

namespace {

int failures = 0;

void report(int idx, const char* name, bool ok, const std::string& detail) {
  std::printf("[%s] criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", idx, name, detail.c_str());
  if (!ok) ++failures;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

// --- 1: DMP joint-space tracking --------------------------------------------

void criterion_1() {
  const auto t0 = std::chrono::steady_clock::now();

  // Open-loop rollout of the learned primitive against the demo.
  CanonicalSystem cs;  // alpha_s = 1, tau = 1
  double rollout_rms = 0.0;
  for (double g : {1.0, 1.0}) {
    const DemoTrajectory demo = min_jerk_demo(0.0, g, 1.0, 100);
    const LearnedDmp l = imitation_learn(demo, cs, 10.0, 2.5, 50);
    TransformationSystem ts;
    ts.goal = l.goal;
    ts.y = l.y0;
    const double dt = 1e-4;
    double sum_sq = 0.0;
    int count = 0;
    for (int k = 0; k <= 10000; ++k) {
      const double t = k * dt;
      const double err = ts.y - (g * minjerk(std::min(t, 1.0)));
      sum_sq += err * err;
      ++count;
      transformation_step(ts, forcing_eval(l.forcing, canonical_eval(cs, t)), dt);
    }
    rollout_rms = std::max(rollout_rms, std::sqrt(sum_sq / count));
  }

  // Closed-loop model-matched simulation.
  ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Dmp);
  s.dt = 1e-4;
  const SimTrace tr = run(s);
  const Metrics m = metrics(tr, s);

  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool ok = rollout_rms < 1e-2 && !tr.failed && m.rms_tracking_error < 5e-3 &&
                  secs < 5.0;
  report(1, "DMP joint-space tracking", ok,
         "rollout_rms=" + fmt(rollout_rms) + " rad, closed_loop_rms=" +
             fmt(m.rms_tracking_error) + " rad, runtime=" + fmt(secs) + " s");
}

// --- 2: EDA joint-space convergence ------------------------------------------

void criterion_2() {
  const ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Eda);
  const SimTrace tr = run(s);
  const Metrics m = metrics(tr, s);
  const bool ok = !tr.failed && m.peak_tracking_error > 1e-2 && m.terminal_error < 5e-3;
  report(2, "EDA joint-space convergence", ok,
         "peak=" + fmt(m.peak_tracking_error) + " rad, terminal=" + fmt(m.terminal_error) +
             " rad");
}

// --- 3: singularity comparison -----------------------------------------------

void criterion_3() {
  const ScenarioSpec sd = build_scenario(ScenarioId::TaskDiscreteSingular, Framework::Dmp);
  const SimTrace td = run(sd);
  const bool dmp_ok = td.failed && td.failure_time < 1.5;

  const ScenarioSpec se = build_scenario(ScenarioId::TaskDiscreteSingular, Framework::Eda);
  const SimTrace te = run(se);
  const Metrics me = metrics(te, se);
  bool finite = !te.failed;
  for (const auto& q : te.q) finite = finite && q.allFinite();
  const bool eda_ok = finite && me.terminal_error < 1e-2 && me.min_conditioning < 0.05;

  report(3, "singularity comparison", dmp_ok && eda_ok,
         std::string("dmp_failed=") + (td.failed ? "yes" : "no") + " at t=" +
             fmt(td.failure_time) + ", eda_terminal=" + fmt(me.terminal_error) +
             " m, eda_min_cond=" + fmt(me.min_conditioning));
}

// --- 4: energy bound ---------------------------------------------------------

void criterion_4() {
  const ScenarioSpec mod = build_scenario(ScenarioId::UnexpectedContact, Framework::Eda);
  const SimTrace trm = run(mod);
  const Metrics mm = metrics(trm, mod);

  ScenarioSpec unmod = mod;
  unmod.eda.energy_modulated = false;
  const SimTrace tru = run(unmod);
  const Metrics mu = metrics(tru, unmod);

  // The release transient is what modulation tames: compare the peak hand
  // speed after the wall disappears, not over the whole run.
  auto post_removal_max_speed = [](const SimTrace& tr, double t_rm) {
    double vmax = 0.0;
    for (std::size_t k = 0; k < tr.t.size(); ++k)
      if (tr.t[k] >= t_rm) vmax = std::max(vmax, tr.pd[k].norm());
    return vmax;
  };
  const double v_mod = post_removal_max_speed(trm, mod.wall.removal_time);
  const double v_unmod = post_removal_max_speed(tru, unmod.wall.removal_time);

  const bool ok = !trm.failed && !tru.failed && mm.max_L_c <= 2.5 + 1e-6 &&
                  mu.terminal_error < 2e-2 && v_unmod > v_mod;
  report(4, "energy bound", ok,
         "max_L_c=" + fmt(mm.max_L_c) + " J, modulated_release_speed=" + fmt(v_mod) +
             " m/s, unmodulated_release_speed=" + fmt(v_unmod) +
             " m/s, unmodulated_terminal=" + fmt(mu.terminal_error) + " m");
}

// --- 5: PD rescue ------------------------------------------------------------

void criterion_5() {
  ScenarioSpec ff = build_scenario(ScenarioId::UnexpectedContact, Framework::Dmp);
  ff.dmp.use_pd = false;
  const Metrics mf = metrics(run(ff), ff);

  const ScenarioSpec pd = build_scenario(ScenarioId::UnexpectedContact, Framework::Dmp);
  const Metrics mp = metrics(run(pd), pd);

  const bool ok = !mf.failed && !mp.failed && mf.terminal_error > 0.1 &&
                  mp.terminal_error < 2e-2;
  report(5, "PD rescue after contact", ok,
         "feedforward_terminal=" + fmt(mf.terminal_error) + " m, pd_terminal=" +
             fmt(mp.terminal_error) + " m");
}

// --- 6: obstacle avoidance ---------------------------------------------------

void criterion_6() {
  const ScenarioSpec sd = build_scenario(ScenarioId::ObstacleAvoid, Framework::Dmp);
  const Metrics md = metrics(run(sd), sd);
  const ScenarioSpec se = build_scenario(ScenarioId::ObstacleAvoid, Framework::Eda);
  const Metrics me = metrics(run(se), se);

  // Note: the EDA repulsive term never switches off, so the hand settles at the
  // static balance Kp*e = k/(0.58+e)^5, whose root is e = 0.0212 m. That sits
  // just above the 2e-2 m tolerance; the gains, potential, obstacle, and goal
  // are all fixed by the reference values, so this clause fails by construction
  // rather than by implementation error.
  const bool ok = !md.failed && !me.failed && md.terminal_error < 2e-2 &&
                  me.terminal_error < 2e-2 && md.min_obstacle_distance > 1e-2 &&
                  me.min_obstacle_distance > 1e-2;
  report(6, "obstacle avoidance", ok,
         "dmp_terminal=" + fmt(md.terminal_error) + " m, eda_terminal=" +
             fmt(me.terminal_error) + " m, dmp_min_dist=" + fmt(md.min_obstacle_distance) +
             " m, eda_min_dist=" + fmt(me.min_obstacle_distance) + " m");
}

// --- 7: goal filter + sequencing ---------------------------------------------

void criterion_7() {
  // Closed-form agreement at dt = 1e-4.
  GoalFilter gf;
  gf.alpha_g = 1.0;
  gf.tau = 1.0;
  gf.g = -0.7;
  gf.g0 = 0.8;
  const double dt = 1e-4;
  double max_dev = 0.0;
  for (int k = 1; k <= 30000; ++k) {
    goal_filter_step(gf, dt);
    const double t = k * dt;
    const double closed = 0.8 + (-0.7 - 0.8) * std::exp(-t);
    max_dev = std::max(max_dev, std::abs(gf.g - closed));
  }

  const ScenarioSpec sd = build_scenario(ScenarioId::Sequencing, Framework::Dmp);
  const Metrics md = metrics(run(sd), sd);
  const ScenarioSpec se = build_scenario(ScenarioId::Sequencing, Framework::Eda);
  const Metrics me = metrics(run(se), se);

  const bool ok = max_dev < 1e-6 && !md.failed && !me.failed && me.convergence_time >= 0.0 &&
                  md.convergence_time >= 0.0 && me.convergence_time < md.convergence_time;
  report(7, "goal filter and sequencing", ok,
         "closed_form_dev=" + fmt(max_dev) + ", eda_convergence=" + fmt(me.convergence_time) +
             " s, dmp_convergence=" + fmt(md.convergence_time) + " s");
}

// --- 8: redundancy -----------------------------------------------------------

void criterion_8() {
  const ScenarioSpec sd = build_scenario(ScenarioId::RedundantDiscrete, Framework::Dmp);
  const SimTrace td = run(sd);
  const Metrics md = metrics(td, sd);
  const ScenarioSpec se = build_scenario(ScenarioId::RedundantDiscrete, Framework::Eda);
  const SimTrace te = run(se);
  const Metrics me = metrics(te, se);

  const double eda_final_qd = te.qd.empty() ? 1e9 : te.qd.back().norm();
  const bool ok = !td.failed && !te.failed && md.terminal_error < 1e-2 &&
                  me.terminal_error < 1e-2 && eda_final_qd < 1e-3;
  report(8, "redundant chain", ok,
         "dmp_terminal=" + fmt(md.terminal_error) + " m, eda_terminal=" +
             fmt(me.terminal_error) + " m, eda_final_qdot=" + fmt(eda_final_qd) + " rad/s");
}

// --- 9: property suites ------------------------------------------------------

void criterion_9() {
  std::mt19937 rng(101);
  std::uniform_real_distribution<double> ang(-M_PI, M_PI), sp(-2.0, 2.0);
  bool ok = true;
  std::string why;

  // Mass matrix symmetry + positive definiteness; Mdot - 2C skew to 1e-9.
  for (int n : {2, 5}) {
    const PlanarChain chain = PlanarChain::uniform_bars(n);
    for (int trial = 0; trial < 25 && ok; ++trial) {
      VectorXd q(n), qd(n);
      for (int i = 0; i < n; ++i) {
        q[i] = ang(rng);
        qd[i] = sp(rng);
      }
      const Eigen::MatrixXd M = mass_matrix(chain, q);
      if ((M - M.transpose()).cwiseAbs().maxCoeff() > 1e-12) {
        ok = false;
        why = "mass matrix asymmetric";
      }
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      if (es.eigenvalues().minCoeff() <= 0.0) {
        ok = false;
        why = "mass matrix not positive definite";
      }
      const double eps = 1e-4;
      auto M_at = [&](double a) { return mass_matrix(chain, (q + qd * a).eval()); };
      const Eigen::MatrixXd Mdot =
          (-M_at(2.0 * eps) + 8.0 * M_at(eps) - 8.0 * M_at(-eps) + M_at(-2.0 * eps)) /
          (12.0 * eps);
      const Eigen::MatrixXd S = Mdot - 2.0 * coriolis_matrix(chain, q, qd);
      if ((S + S.transpose()).cwiseAbs().maxCoeff() > 1e-9 * std::max(1.0, S.norm())) {
        ok = false;
        why = "Mdot - 2C not skew";
      }
    }
  }

  // Passive energy conservation over 1 s at dt = 1e-4.
  if (ok) {
    const PlanarChain chain = PlanarChain::uniform_bars(2);
    RobotState st;
    st.q = VectorXd::Zero(2);
    st.q << 0.3, 1.1;
    st.qdot = VectorXd::Zero(2);
    st.qdot << 1.0, -0.5;
    const double e0 = kinetic_energy(chain, st);
    for (int k = 0; k < 10000; ++k) st = step(chain, st, VectorXd::Zero(2), {}, 1e-4);
    if (std::abs(kinetic_energy(chain, st) - e0) / e0 >= 1e-3) {
      ok = false;
      why = "energy drift";
    }
  }

  // LWR weights equal brute-force scalar least squares to 1e-9.
  if (ok) {
    CanonicalSystem cs;
    const DemoTrajectory demo = min_jerk_demo(0.0, 1.0, 1.0, 100);
    const LearnedDmp l = imitation_learn(demo, cs, 10.0, 2.5, 10);
    for (int i = 0; i < 10 && ok; ++i) {
      // Independent accumulation of the weighted normal equation.
      long double num = 0.0, den = 0.0;
      for (int j = 0; j < 100; ++j) {
        const double s = canonical_eval(cs, demo.times[j]);
        const double a = s * (l.goal - l.y0);
        const double ft = demo.yddot_des[j] + 10.0 * demo.ydot_des[j] +
                          25.0 * (demo.y_des[j] - l.goal);
        const double phi = basis_eval(l.forcing, i, s);
        num += (long double)(a * phi * ft);
        den += (long double)(a * phi * a);
      }
      if (std::abs(l.forcing.weights[i] - double(num / den)) > 1e-9) {
        ok = false;
        why = "LWR weight mismatch";
      }
    }
  }

  // Superposition additivity: virtual trajectories to 1e-9, impedances to 1e-15.
  if (ok) {
    const PlanarChain chain = PlanarChain::uniform_bars(2);
    RobotState st;
    st.q = VectorXd::Zero(2);
    st.q << 0.4, 0.9;
    st.qdot = VectorXd::Zero(2);
    st.qdot << 0.3, -0.1;

    Submovement sm;
    sm.start = Vector2d(0.0, 0.0);
    sm.goal = Vector2d(1.0, 1.0);
    sm.duration = 2.0;
    Oscillation osc;
    osc.center = Vector2d(0.0, 0.0);
    osc.amplitude = Vector2d(0.2, 0.1);
    VirtualTrajectory both;
    both.terms = {sm, osc};
    auto [pb, vb] = vt_eval(both, 0.8);
    auto [ps, vs] = submovement_eval(sm, 0.8);
    auto [po, vo] = oscillation_eval(osc, 0.8);
    if ((pb - (ps + po)).norm() > 1e-9 || (vb - (vs + vo)).norm() > 1e-9) {
      ok = false;
      why = "virtual trajectory not additive";
    }

    JointDamping jd;
    jd.Bq = 30.0 * Eigen::Matrix2d::Identity();
    TaskImpedance ti;
    ti.Kp = 60.0 * Eigen::Matrix2d::Identity();
    ti.Bp = 20.0 * Eigen::Matrix2d::Identity();
    VirtualTrajectory hold;
    Submovement h;
    h.start = Vector2d(0.5, 1.2);
    h.goal = h.start;
    h.duration = 1.0;
    hold.terms = {h};
    ti.p0 = hold;
    const VectorXd sum = superpose({ImpedanceOp(jd), ImpedanceOp(ti)}, chain, st, 0.3);
    const VectorXd parts = impedance_force(ImpedanceOp(jd), chain, st, 0.3) +
                           impedance_force(ImpedanceOp(ti), chain, st, 0.3);
    if ((sum - parts).norm() > 1e-15) {
      ok = false;
      why = "impedance superposition not additive";
    }
  }

  // DMP spatial invariance (1e-9 relative) and temporal invariance (exact).
  if (ok) {
    CanonicalSystem cs;
    const DemoTrajectory demo = min_jerk_demo(0.0, 1.0, 1.0, 100);
    const LearnedDmp l = imitation_learn(demo, cs, 10.0, 2.5, 30);
    auto roll = [&](double y0, double g, double tau, double dt, int steps) {
      CanonicalSystem c = cs;
      c.tau = tau;
      ForcingTerm ft = l.forcing;
      ft.scale = g - y0;
      TransformationSystem ts;
      ts.tau = tau;
      ts.goal = g;
      ts.y = y0;
      VectorXd ys(steps + 1);
      for (int k = 0; k <= steps; ++k) {
        ys[k] = ts.y;
        transformation_step(ts, forcing_eval(ft, canonical_eval(c, k * dt)), dt);
      }
      return ys;
    };
    const VectorXd base = roll(0.0, 1.0, 1.0, 1e-3, 1000);
    const VectorXd shifted = roll(0.5, 2.5, 1.0, 1e-3, 1000);
    const VectorXd slow = roll(0.0, 1.0, 2.0, 2e-3, 1000);
    for (int k = 0; k <= 1000 && ok; ++k) {
      if (std::abs(shifted[k] - (0.5 + 2.0 * base[k])) > 1e-9) {
        ok = false;
        why = "spatial invariance violated";
      }
      if (slow[k] != base[k]) {
        ok = false;
        why = "temporal invariance violated";
      }
    }
  }

  // PD law agrees with the joint-impedance law to 1e-12.
  if (ok) {
    const PlanarChain chain = PlanarChain::uniform_bars(2);
    RobotState st;
    st.q = VectorXd::Zero(2);
    st.q << 0.2, -0.6;
    st.qdot = VectorXd::Zero(2);
    st.qdot << 0.7, 0.4;
    PdGains gains;
    gains.Kq = 150.0 * Eigen::Matrix2d::Identity();
    gains.Bq = 50.0 * Eigen::Matrix2d::Identity();
    VectorXd q_des(2);
    q_des << 1.0, 0.5;
    JointImpedance ji;
    ji.Kq = gains.Kq;
    ji.Bq = gains.Bq;
    Submovement h;
    h.start = q_des;
    h.goal = q_des;
    h.duration = 1.0;
    ji.q0.terms = {h};
    const VectorXd a = pd_feedback(gains, q_des, VectorXd::Zero(2), st.q, st.qdot);
    const VectorXd b = impedance_force(ImpedanceOp(ji), chain, st, 5.0);
    if ((a - b).norm() > 1e-12) {
      ok = false;
      why = "PD law != joint impedance law";
    }
  }

  report(9, "property suites", ok, ok ? "all properties hold" : why);
}

}  // namespace

int main() {
  criterion_1();
  criterion_2();
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  criterion_9();
  std::printf("%s: %d/9 criteria passed\n", failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              9 - failures);
  return failures == 0 ? 0 : 1;
}
