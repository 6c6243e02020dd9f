#pragma once

#include <Eigen/Dense>
#include <Eigen/SVD>
#include <cmath>
#include <limits>
#include <memory>
#include <string>
#include <vector>

#include "mprim/common.hpp"
#include "mprim/dmp.hpp"
#include "mprim/dmp_control.hpp"
#include "mprim/dynamics.hpp"
#include "mprim/eda.hpp"

// Declarative definitions and a fixed-step closed-loop runner for the eight
// comparison experiments, with per-run metrics for both frameworks.

namespace mprim {

enum class ScenarioId {
  JointDiscrete,
  TaskDiscrete,
  TaskDiscreteSingular,
  UnexpectedContact,
  ObstacleAvoid,
  Rhythmic,
  DiscretePlusRhythmic,
  Sequencing,
  RedundantDiscrete,
  RedundantSequencing,
};

enum class Framework { Dmp, Eda };

inline const char* scenario_name(ScenarioId id) {
  switch (id) {
    case ScenarioId::JointDiscrete: return "joint-discrete";
    case ScenarioId::TaskDiscrete: return "task-discrete";
    case ScenarioId::TaskDiscreteSingular: return "task-discrete-singular";
    case ScenarioId::UnexpectedContact: return "unexpected-contact";
    case ScenarioId::ObstacleAvoid: return "obstacle-avoid";
    case ScenarioId::Rhythmic: return "rhythmic";
    case ScenarioId::DiscretePlusRhythmic: return "discrete-plus-rhythmic";
    case ScenarioId::Sequencing: return "sequencing";
    case ScenarioId::RedundantDiscrete: return "redundant-discrete";
    case ScenarioId::RedundantSequencing: return "redundant-sequencing";
  }
  throw ContractViolation("scenario_name: unknown id");
}

inline ScenarioId scenario_id_from_name(const std::string& name) {
  for (ScenarioId id :
       {ScenarioId::JointDiscrete, ScenarioId::TaskDiscrete, ScenarioId::TaskDiscreteSingular,
        ScenarioId::UnexpectedContact, ScenarioId::ObstacleAvoid, ScenarioId::Rhythmic,
        ScenarioId::DiscretePlusRhythmic, ScenarioId::Sequencing, ScenarioId::RedundantDiscrete,
        ScenarioId::RedundantSequencing})
    if (name == scenario_name(id)) return id;
  throw ContractViolation("unknown scenario id: " + name);
}

inline const char* framework_name(Framework fw) { return fw == Framework::Dmp ? "dmp" : "eda"; }

inline Framework framework_from_name(const std::string& name) {
  if (name == "dmp") return Framework::Dmp;
  if (name == "eda") return Framework::Eda;
  throw ContractViolation("unknown controller: " + name);
}

// True when the scenario's targets and reference live in task space.
inline bool is_task_space(ScenarioId id) {
  switch (id) {
    case ScenarioId::JointDiscrete:
    case ScenarioId::Rhythmic:
    case ScenarioId::DiscretePlusRhythmic:
      return false;
    default:
      return true;
  }
}

// True when the reference is cyclic, so "terminal error" means tracking error
// at the final tick rather than distance to a point goal.
inline bool is_rhythmic_like(ScenarioId id) {
  return id == ScenarioId::Rhythmic || id == ScenarioId::DiscretePlusRhythmic;
}

struct DmpParams {
  double alpha_z = 10.0, beta_z = 2.5, alpha_s = 1.0;
  int n_basis = 50, n_samples = 100;
  double r_amplitude = 1.0;
  bool use_pd = false;
  Eigen::MatrixXd Kq_pd, Bq_pd;
  bool coupling = false;
  double gamma = 300.0, beta_decay = 3.0, rot_sign = 1.0;
  Eigen::Vector2d coupling_offset = Eigen::Vector2d(0.02, 0.0);
  bool goal_filter = false;
  double alpha_g = 1.0;
  bool sliding = false;
  Eigen::MatrixXd Lambda1, Lambda2;
  double dls_damping = 0.01, dls_activation = 0.05;
  // Second-order goal dynamics of the combined discrete+rhythmic movement.
  double tau2 = 1.0, alpha_z2 = 10.0, beta_z2 = 2.5;
};

struct EdaParams {
  Eigen::MatrixXd Kq, Bq;  // joint impedance
  Eigen::MatrixXd Kp, Bp;  // task impedance
  bool joint_damping = false;
  Eigen::MatrixXd Bq_damp;
  bool energy_modulated = false;
  double L_max = 2.5, c_ratio = 1.0 / 3.0;
  bool repulsive = false;
  double k_rep = 0.1;
  int n_rep = 6;
  Eigen::Vector2d rep_offset = Eigen::Vector2d(0.02, 0.0);
};

struct ScenarioSpec {
  ScenarioId id = ScenarioId::JointDiscrete;
  Framework controller = Framework::Dmp;
  PlanarChain chain;
  double duration = 3.0;
  double dt = 1e-3;

  // Movement geometry: joint space (rad) or task space (m) depending on id.
  Eigen::VectorXd start, goal, goal_new;
  double T1 = 1.0, T2 = 1.0, t_switch = 0.5, onset = 0.0;
  Eigen::VectorXd osc_amplitude;  // rhythmic joint amplitudes
  double omega = M_PI;            // rad/s

  bool has_wall = false;
  ContactWall wall;
  bool has_obstacle = false;
  Eigen::Vector2d obstacle = Eigen::Vector2d::Zero();

  ElbowBranch branch = ElbowBranch::Up;
  Eigen::VectorXd ik_seed;  // Newton seed for redundant chains

  DmpParams dmp;
  EdaParams eda;
};

struct SimTrace {
  ScenarioId id = ScenarioId::JointDiscrete;
  Framework controller = Framework::Dmp;
  double dt = 1e-3;
  std::vector<double> t;
  std::vector<Eigen::VectorXd> q, qd, tau;
  std::vector<Eigen::Vector2d> p, pd;
  std::vector<Eigen::VectorXd> ref, refd;  // reference in the control space
  std::vector<double> cond;                // sigma_min / sigma_max of J
  std::vector<double> lambda, L_c;         // when has_energy
  std::vector<double> obstacle_dist;       // when has_obstacle
  std::vector<Eigen::VectorXd> goal_traj;  // filtered goal when has_goal
  bool has_energy = false, has_obstacle = false, has_goal = false;
  bool ref_is_task = false;
  bool failed = false;
  double failure_time = 0.0;
  std::string failure_reason;
};

struct Metrics {
  double rms_tracking_error = 0.0;
  double peak_tracking_error = 0.0;
  double terminal_error = 0.0;
  double convergence_time = -1.0;  // -1 when never converged
  double tolerance = 0.0;
  double max_L_c = 0.0;
  double max_speed = 0.0;
  double min_conditioning = 1.0;
  double min_obstacle_distance = -1.0;
  bool failed = false;
  double failure_time = 0.0;
  std::string failure_reason;
};

// ---------------------------------------------------------------------------
// Scenario defaults (reference parameterizations for each comparison).

namespace detail {

inline Eigen::MatrixXd diag_gain(int n, double v) {
  return v * Eigen::MatrixXd::Identity(n, n);
}

inline Eigen::VectorXd vec2(double a, double b) {
  Eigen::VectorXd v(2);
  v << a, b;
  return v;
}

}  // namespace detail

inline ScenarioSpec build_scenario(ScenarioId id, Framework fw) {
  using detail::diag_gain;
  using detail::vec2;
  ScenarioSpec s;
  s.id = id;
  s.controller = fw;
  s.chain = PlanarChain::uniform_bars(2);

  switch (id) {
    case ScenarioId::JointDiscrete:
      s.start = vec2(0.0, 0.0);
      s.goal = vec2(1.0, 1.0);
      s.T1 = 1.0;
      s.duration = 3.0;
      s.eda.Kq = diag_gain(2, 150.0);
      s.eda.Bq = diag_gain(2, 50.0);
      break;
    case ScenarioId::TaskDiscrete:
    case ScenarioId::TaskDiscreteSingular:
      s.start = vec2(0.0, 0.52);
      s.goal = id == ScenarioId::TaskDiscrete ? vec2(0.0, 1.72) : vec2(0.0, 2.00);
      s.T1 = 1.0;
      s.duration = 3.0;
      s.eda.Kp = diag_gain(2, 60.0);
      s.eda.Bp = diag_gain(2, 20.0);
      if (id == ScenarioId::TaskDiscreteSingular) {
        // Light joint damping: task-space damping loses rank at full extension,
        // so the radial mode would otherwise ring for seconds near the boundary.
        s.eda.joint_damping = true;
        s.eda.Bq_damp = diag_gain(2, 0.5);
      }
      break;
    case ScenarioId::UnexpectedContact:
      s.start = vec2(0.0, 0.52);
      s.goal = vec2(0.0, 1.72);
      s.T1 = 1.0;
      s.duration = 5.0;
      s.eda.Kp = diag_gain(2, 60.0);
      s.eda.Bp = diag_gain(2, 20.0);
      s.eda.energy_modulated = true;
      s.eda.L_max = 2.5;
      s.eda.c_ratio = 1.0 / 3.0;
      s.dmp.use_pd = true;
      s.dmp.Kq_pd = diag_gain(2, 50.0);
      s.dmp.Bq_pd = diag_gain(2, 30.0);
      s.has_wall = true;
      s.wall.normal = Eigen::Vector2d(0.0, -1.0);
      s.wall.offset = -1.10;  // plane y = 1.10, mid-trajectory
      s.wall.stiffness = 1e4;
      s.wall.damping = 1e2;
      s.wall.removal_time = 2.0;
      break;
    case ScenarioId::ObstacleAvoid:
      s.start = vec2(0.0, 0.52);
      s.goal = vec2(0.0, 1.72);
      s.T1 = 1.0;
      s.duration = 4.0;
      s.eda.Kp = diag_gain(2, 60.0);
      s.eda.Bp = diag_gain(2, 20.0);
      s.eda.repulsive = true;
      s.eda.k_rep = 0.1;
      s.eda.n_rep = 6;
      s.has_obstacle = true;
      s.obstacle = Eigen::Vector2d(0.0, 1.14);
      s.dmp.coupling = true;
      s.dmp.gamma = 300.0;
      s.dmp.beta_decay = 3.0;
      break;
    case ScenarioId::Rhythmic:
      s.start = vec2(0.5, 0.5);
      s.goal = s.start;  // oscillation center
      s.osc_amplitude = vec2(0.1, 0.3);
      s.omega = M_PI;
      s.duration = 6.0;
      s.dmp.n_basis = 40;
      s.dmp.r_amplitude = 1.0;
      s.eda.Kq = diag_gain(2, 150.0);
      s.eda.Bq = diag_gain(2, 50.0);
      break;
    case ScenarioId::DiscretePlusRhythmic:
      s.start = vec2(0.5, 0.5);
      s.goal = vec2(1.5, 1.5);
      s.osc_amplitude = vec2(0.1, 0.3);
      s.omega = M_PI;
      s.onset = 3.5;
      s.T1 = 1.0;
      s.duration = 8.0;
      s.dmp.n_basis = 40;
      s.dmp.r_amplitude = 1.0;
      s.dmp.tau2 = 1.0;
      s.dmp.alpha_z2 = 10.0;
      s.dmp.beta_z2 = 2.5;
      s.eda.Kq = diag_gain(2, 150.0);
      s.eda.Bq = diag_gain(2, 50.0);
      break;
    case ScenarioId::Sequencing:
      s.start = vec2(0.0, 0.52);
      s.goal = vec2(-0.7, 1.22);
      s.goal_new = vec2(0.8, 1.72);
      s.T1 = 1.0;
      s.T2 = 1.0;
      s.t_switch = 0.5;
      s.duration = 8.0;
      s.eda.Kp = diag_gain(2, 60.0);
      s.eda.Bp = diag_gain(2, 20.0);
      s.dmp.goal_filter = true;
      s.dmp.alpha_g = 1.0;
      // Feedback around the planned trajectory: pure inverse-dynamics
      // feedforward accumulates integration drift over the long horizon.
      s.dmp.use_pd = true;
      s.dmp.Kq_pd = diag_gain(2, 50.0);
      s.dmp.Bq_pd = diag_gain(2, 30.0);
      break;
    case ScenarioId::RedundantDiscrete:
      s.chain = PlanarChain::uniform_bars(5);
      s.start = vec2(0.0, 3.0);
      s.goal = vec2(3.0, 3.0);
      s.T1 = 2.0;
      s.duration = 10.0;
      s.dt = 1e-4;  // sliding-mode feedback rates need the finer step
      s.ik_seed = Eigen::VectorXd(5);
      s.ik_seed << M_PI / 3.0, M_PI / 6.0, M_PI / 6.0, M_PI / 6.0, M_PI / 6.0;
      s.dmp.sliding = true;
      s.dmp.Lambda1 = diag_gain(2, 80.0);
      s.dmp.Lambda2 = diag_gain(5, 100.0);
      s.eda.Kp = diag_gain(2, 300.0);
      s.eda.Bp = diag_gain(2, 100.0);
      s.eda.joint_damping = true;
      s.eda.Bq_damp = diag_gain(5, 30.0);
      break;
    case ScenarioId::RedundantSequencing:
      s.chain = PlanarChain::uniform_bars(5);
      s.start = vec2(-1.62, 0.76);
      s.goal = vec2(-3.62, 1.76);
      s.goal_new = vec2(2.38, 3.26);
      s.T1 = 2.0;
      s.T2 = 3.0;
      s.t_switch = 1.0;
      s.duration = 10.0;
      s.dt = 1e-4;  // sliding-mode feedback rates need the finer step
      s.ik_seed = Eigen::VectorXd(5);
      s.ik_seed << M_PI / 2.0, 0.6, 0.6, 0.6, 0.6;
      s.dmp.sliding = true;
      s.dmp.goal_filter = true;
      s.dmp.alpha_g = 1.0;
      s.dmp.Lambda1 = diag_gain(2, 80.0);
      s.dmp.Lambda2 = diag_gain(5, 100.0);
      s.eda.Kp = diag_gain(2, 300.0);
      s.eda.Bp = diag_gain(2, 100.0);
      s.eda.joint_damping = true;
      s.eda.Bq_damp = diag_gain(5, 30.0);
      break;
  }
  return s;
}

// Initial joint configuration: the start itself for joint-space scenarios,
// inverse kinematics of the start point otherwise.
inline Eigen::VectorXd initial_configuration(const ScenarioSpec& spec) {
  if (!is_task_space(spec.id)) return spec.start;
  Eigen::VectorXd seed = spec.ik_seed.size() == spec.chain.n_links
                             ? spec.ik_seed
                             : Eigen::VectorXd::Zero(spec.chain.n_links);
  return ik_position(spec.chain, Eigen::Vector2d(spec.start[0], spec.start[1]), seed,
                     spec.branch);
}

// ---------------------------------------------------------------------------
// Controllers.

namespace detail {

struct TickOutput {
  Eigen::VectorXd tau;
  Eigen::VectorXd ref, refd;
  double lambda = 1.0, L_c = 0.0;
  bool has_energy = false;
  Eigen::VectorXd goal;  // filtered/driven goal when present
  bool has_goal = false;
};

struct Controller {
  virtual ~Controller() = default;
  // Compute torque and reference from the internal plan at time t.
  virtual void tick(const PlanarChain& chain, const RobotState& state, double t,
                    TickOutput& out) = 0;
  // Advance the internal plan by dt (called after the dynamics step).
  virtual void advance(double dt) = 0;
  // Initial joint velocity that puts the robot on the plan at t = 0.
  virtual Eigen::VectorXd initial_qdot(const PlanarChain& chain) {
    return Eigen::VectorXd::Zero(chain.n_links);
  }
};

struct DmpPlan {
  CanonicalSystem cs;
  std::vector<TransformationSystem> ts;
  std::vector<ForcingTerm> forcing;
};

inline DmpPlan learn_min_jerk_plan(const Eigen::VectorXd& start, const Eigen::VectorXd& goal,
                                   double T, const DmpParams& dp) {
  DmpPlan plan;
  plan.cs = {DmpKind::Discrete, T, dp.alpha_s};
  for (int d = 0; d < start.size(); ++d) {
    const DemoTrajectory demo = min_jerk_demo(start[d], goal[d], T, dp.n_samples);
    const LearnedDmp learned = imitation_learn(demo, plan.cs, dp.alpha_z, dp.beta_z, dp.n_basis);
    plan.forcing.push_back(learned.forcing);
    TransformationSystem ts;
    ts.alpha_z = dp.alpha_z;
    ts.beta_z = dp.beta_z;
    ts.tau = T;
    ts.goal = learned.goal;
    ts.y = start[d];
    ts.z = 0.0;
    plan.ts.push_back(ts);
  }
  return plan;
}

inline DmpPlan learn_sinusoid_plan(const Eigen::VectorXd& center,
                                   const Eigen::VectorXd& amplitude, double omega,
                                   const DmpParams& dp) {
  DmpPlan plan;
  const double tau = 1.0 / omega;  // period / 2pi
  plan.cs = {DmpKind::Rhythmic, tau, dp.alpha_s};
  for (int d = 0; d < center.size(); ++d) {
    const DemoTrajectory demo = sinusoid_demo(center[d], amplitude[d], omega, dp.n_samples);
    const LearnedDmp learned =
        imitation_learn(demo, plan.cs, dp.alpha_z, dp.beta_z, dp.n_basis, dp.r_amplitude);
    plan.forcing.push_back(learned.forcing);
    TransformationSystem ts;
    ts.alpha_z = dp.alpha_z;
    ts.beta_z = dp.beta_z;
    ts.tau = tau;
    ts.goal = learned.goal;
    ts.y = demo.y_des[0];
    ts.z = tau * demo.ydot_des[0];
    plan.ts.push_back(ts);
  }
  return plan;
}

// Joint-space DMP plan tracked by inverse-dynamics feedforward, with optional
// PD feedback. Covers JointDiscrete and Rhythmic.
class DmpJointController : public Controller {
 public:
  DmpJointController(DmpPlan plan, const DmpParams& dp) : plan_(std::move(plan)), dp_(dp) {
    f_ = Eigen::VectorXd::Zero(int(plan_.ts.size()));
  }

  void tick(const PlanarChain& chain, const RobotState& state, double t,
            TickOutput& out) override {
    const int n = int(plan_.ts.size());
    const double s = canonical_eval(plan_.cs, t);
    Eigen::VectorXd q_des(n), qd_des(n), qdd_des(n);
    for (int d = 0; d < n; ++d) {
      const double f = forcing_eval(plan_.forcing[d], s);
      q_des[d] = plan_.ts[d].y;
      qd_des[d] = plan_.ts[d].ydot();
      qdd_des[d] = plan_.ts[d].yddot(f);
      f_[d] = f;
    }
    out.tau = inverse_dynamics_torque(chain, q_des, qd_des, qdd_des);
    if (dp_.use_pd)
      out.tau += pd_feedback({dp_.Kq_pd, dp_.Bq_pd}, q_des, qd_des, state.q, state.qdot);
    out.ref = q_des;
    out.refd = qd_des;
  }

  void advance(double dt) override {
    for (size_t d = 0; d < plan_.ts.size(); ++d) transformation_step(plan_.ts[d], f_[d], dt);
  }

  Eigen::VectorXd initial_qdot(const PlanarChain& chain) override {
    Eigen::VectorXd qd(chain.n_links);
    for (int d = 0; d < chain.n_links; ++d) qd[d] = plan_.ts[d].ydot();
    return qd;
  }

 protected:
  DmpPlan plan_;
  DmpParams dp_;
  Eigen::VectorXd f_;  // per-DOF forcing cache, filled by tick, used by advance
};

// Rhythmic DMP whose goal is driven by a second-order system toward a
// commanded target that switches at the onset time (discrete + rhythmic).
class DmpGoalDrivenController : public DmpJointController {
 public:
  DmpGoalDrivenController(DmpPlan plan, const DmpParams& dp, const Eigen::VectorXd& g_start,
                          const Eigen::VectorXd& g_final, double onset)
      : DmpJointController(std::move(plan), dp),
        g_(g_start),
        gd_(Eigen::VectorXd::Zero(g_start.size())),
        g0_(g_start),
        g_final_(g_final),
        onset_(onset) {
    for (size_t d = 0; d < plan_.ts.size(); ++d) plan_.ts[d].goal = g_[d];
  }

  void tick(const PlanarChain& chain, const RobotState& state, double t,
            TickOutput& out) override {
    DmpJointController::tick(chain, state, t, out);
    out.goal = g_;
    out.has_goal = true;
  }

  void advance(double dt) override {
    if (time_ >= onset_ - 1e-12) g0_ = g_final_;
    const double tau2 = dp_.tau2;
    for (int d = 0; d < g_.size(); ++d) {
      const double gdd = (-dp_.alpha_z2 * dp_.beta_z2 * (g_[d] - g0_[d]) -
                          dp_.alpha_z2 * tau2 * gd_[d]) /
                         (tau2 * tau2);
      gd_[d] += gdd * dt;
      g_[d] += gd_[d] * dt;
      plan_.ts[d].goal = g_[d];
    }
    DmpJointController::advance(dt);
    time_ += dt;
  }

 private:
  Eigen::VectorXd g_, gd_, g0_, g_final_;
  double onset_ = 0.0;
  double time_ = 0.0;
};

// Task-space DMP plan turned into torques through analytic IK and inverse
// dynamics; optional PD feedback, obstacle coupling, and goal filtering.
class DmpTaskController : public Controller {
 public:
  DmpTaskController(DmpPlan plan, const ScenarioSpec& spec)
      : plan_(std::move(plan)), dp_(spec.dmp), branch_(spec.branch) {
    if (dp_.coupling) obstacle_ = spec.obstacle + dp_.coupling_offset;
    if (dp_.goal_filter) {
      for (int d = 0; d < 2; ++d) {
        GoalFilter gf;
        gf.alpha_g = dp_.alpha_g;
        gf.tau = plan_.cs.tau;
        gf.g = spec.goal[d];
        gf.g0 = spec.goal[d];
        filters_.push_back(gf);
      }
      t_switch_ = spec.t_switch;
      goal_new_ = spec.goal_new;
    }
  }

  void tick(const PlanarChain& chain, const RobotState& state, double t,
            TickOutput& out) override {
    const double s = canonical_eval(plan_.cs, t);
    for (int d = 0; d < 2; ++d) f_[d] = forcing_eval(plan_.forcing[d], s);
    const Eigen::Vector2d p_des(plan_.ts[0].y, plan_.ts[1].y);
    const Eigen::Vector2d pd_des(plan_.ts[0].ydot(), plan_.ts[1].ydot());
    if (dp_.coupling) {
      const Eigen::Vector2d ct =
          coupling_term(p_des, pd_des, obstacle_, dp_.gamma, dp_.beta_decay, dp_.rot_sign);
      f_[0] += ct[0];
      f_[1] += ct[1];
    }
    const Eigen::Vector2d pdd_des(plan_.ts[0].yddot(f_[0]), plan_.ts[1].yddot(f_[1]));

    const Eigen::VectorXd q_des =
        ik_position(chain, p_des, Eigen::VectorXd::Zero(chain.n_links), branch_);
    auto [qd_des, qdd_des] = ik_velocity_accel(chain, q_des, pd_des, pdd_des);

    out.tau = inverse_dynamics_torque(chain, q_des, qd_des, qdd_des);
    if (dp_.use_pd)
      out.tau += pd_feedback({dp_.Kq_pd, dp_.Bq_pd}, q_des, qd_des, state.q, state.qdot);
    out.ref = p_des;
    out.refd = pd_des;
    if (dp_.goal_filter) {
      out.goal = detail::vec2(filters_[0].g, filters_[1].g);
      out.has_goal = true;
    }
  }

  void advance(double dt) override {
    if (dp_.goal_filter) {
      if (time_ >= t_switch_ - 1e-12)
        for (int d = 0; d < 2; ++d) filters_[d].g0 = goal_new_[d];
      for (int d = 0; d < 2; ++d) plan_.ts[d].goal = goal_filter_step(filters_[d], dt);
    }
    for (int d = 0; d < 2; ++d) transformation_step(plan_.ts[d], f_[d], dt);
    time_ += dt;
  }

 private:
  DmpPlan plan_;
  DmpParams dp_;
  ElbowBranch branch_;
  Eigen::Vector2d obstacle_ = Eigen::Vector2d::Zero();
  std::vector<GoalFilter> filters_;
  Eigen::VectorXd goal_new_;
  double t_switch_ = 0.0, time_ = 0.0;
  Eigen::Vector2d f_ = Eigen::Vector2d::Zero();
};

// Task-space DMP plan tracked by the velocity-based sliding-mode controller
// (redundant chains). Optional goal filtering for the sequencing variant.
class DmpSlidingController : public Controller {
 public:
  DmpSlidingController(DmpPlan plan, const ScenarioSpec& spec) : plan_(std::move(plan)), dp_(spec.dmp) {
    if (dp_.goal_filter) {
      for (int d = 0; d < 2; ++d) {
        GoalFilter gf;
        gf.alpha_g = dp_.alpha_g;
        gf.tau = plan_.cs.tau;
        gf.g = spec.goal[d];
        gf.g0 = spec.goal[d];
        filters_.push_back(gf);
      }
      t_switch_ = spec.t_switch;
      goal_new_ = spec.goal_new;
    }
  }

  void tick(const PlanarChain& chain, const RobotState& state, double t,
            TickOutput& out) override {
    const double s = canonical_eval(plan_.cs, t);
    for (int d = 0; d < 2; ++d) f_[d] = forcing_eval(plan_.forcing[d], s);
    const Eigen::Vector2d p_des(plan_.ts[0].y, plan_.ts[1].y);
    const Eigen::Vector2d pd_des(plan_.ts[0].ydot(), plan_.ts[1].ydot());
    const Eigen::Vector2d pdd_des(plan_.ts[0].yddot(f_[0]), plan_.ts[1].yddot(f_[1]));
    out.tau = sliding_mode_torque(chain, {dp_.Lambda1, dp_.Lambda2}, state, p_des, pd_des,
                                  pdd_des, dp_.dls_damping, dp_.dls_activation);
    out.ref = p_des;
    out.refd = pd_des;
    if (dp_.goal_filter) {
      out.goal = detail::vec2(filters_[0].g, filters_[1].g);
      out.has_goal = true;
    }
  }

  void advance(double dt) override {
    if (dp_.goal_filter) {
      if (time_ >= t_switch_ - 1e-12)
        for (int d = 0; d < 2; ++d) filters_[d].g0 = goal_new_[d];
      for (int d = 0; d < 2; ++d) plan_.ts[d].goal = goal_filter_step(filters_[d], dt);
    }
    for (int d = 0; d < 2; ++d) transformation_step(plan_.ts[d], f_[d], dt);
    time_ += dt;
  }

 private:
  DmpPlan plan_;
  DmpParams dp_;
  std::vector<GoalFilter> filters_;
  Eigen::VectorXd goal_new_;
  double t_switch_ = 0.0, time_ = 0.0;
  Eigen::Vector2d f_ = Eigen::Vector2d::Zero();
};

// EDA controller: a list of impedance operators around virtual trajectories.
class EdaScenarioController : public Controller {
 public:
  EdaScenarioController(std::vector<ImpedanceOp> ops, VirtualTrajectory primary,
                        const EdaParams& ep)
      : ops_(std::move(ops)), primary_(std::move(primary)), ep_(ep) {}

  void tick(const PlanarChain& chain, const RobotState& state, double t,
            TickOutput& out) override {
    out.tau = eda_controller(ops_, chain, state, t);
    auto [pos, vel] = vt_eval(primary_, t);
    out.ref = pos;
    out.refd = vel;
    if (ep_.energy_modulated) {
      const double T = kinetic_energy(chain, state);
      const Eigen::VectorXd dp = pos - forward_kinematics(chain, state.q);
      const double U = 0.5 * dp.dot(ep_.Kp * dp);
      const double lam = energy_lambda(chain, state, ep_.Kp, pos, ep_.L_max);
      out.lambda = lam;
      out.L_c = T + lam * U;
      out.has_energy = true;
    }
  }

  void advance(double) override {}

 private:
  std::vector<ImpedanceOp> ops_;
  VirtualTrajectory primary_;
  EdaParams ep_;
};

inline std::unique_ptr<Controller> make_controller(const ScenarioSpec& spec) {
  const ScenarioId id = spec.id;

  if (spec.controller == Framework::Eda) {
    std::vector<ImpedanceOp> ops;
    VirtualTrajectory vt;
    if (!is_task_space(id)) {
      if (id == ScenarioId::JointDiscrete) {
        vt.terms.push_back(Submovement{spec.start, spec.goal, spec.T1, 0.0});
      } else if (id == ScenarioId::Rhythmic) {
        Oscillation osc;
        osc.shape = OscShape::SinusoidPerDof;
        osc.center = spec.start;
        osc.amplitude = spec.osc_amplitude;
        osc.omega = spec.omega;
        vt.terms.push_back(osc);
      } else {  // DiscretePlusRhythmic
        vt.terms.push_back(Submovement{spec.start, spec.goal, spec.T1, spec.onset});
        Oscillation osc;
        osc.shape = OscShape::SinusoidPerDof;
        osc.center = Eigen::VectorXd::Zero(2);
        osc.amplitude = spec.osc_amplitude;
        osc.omega = spec.omega;
        vt.terms.push_back(osc);
      }
      vt.dim = spec.chain.n_links;
      ops.push_back(JointImpedance{spec.eda.Kq, spec.eda.Bq, vt});
    } else {
      vt.terms.push_back(Submovement{spec.start, spec.goal, spec.T1, 0.0});
      if (id == ScenarioId::Sequencing || id == ScenarioId::RedundantSequencing) {
        // Second submovement superimposed as a delta, starting at t_switch.
        vt.terms.push_back(Submovement{Eigen::VectorXd::Zero(2),
                                       (spec.goal_new - spec.goal).eval(), spec.T2,
                                       spec.t_switch});
      }
      vt.dim = 2;
      if (spec.eda.energy_modulated) {
        ops.push_back(EnergyModulatedTask{spec.eda.Kp, spec.eda.c_ratio, vt, spec.eda.L_max});
      } else {
        ops.push_back(TaskImpedance{spec.eda.Kp, spec.eda.Bp, vt});
      }
      if (spec.eda.repulsive) {
        RepulsivePoint rp;
        rp.k = spec.eda.k_rep;
        rp.n_exp = spec.eda.n_rep;
        rp.o = spec.obstacle + spec.eda.rep_offset;
        ops.push_back(rp);
      }
      if (spec.eda.joint_damping) ops.push_back(JointDamping{spec.eda.Bq_damp});
    }
    return std::make_unique<EdaScenarioController>(std::move(ops), std::move(vt), spec.eda);
  }

  // DMP framework.
  if (!is_task_space(id)) {
    if (id == ScenarioId::JointDiscrete) {
      return std::make_unique<DmpJointController>(
          learn_min_jerk_plan(spec.start, spec.goal, spec.T1, spec.dmp), spec.dmp);
    }
    if (id == ScenarioId::Rhythmic) {
      return std::make_unique<DmpJointController>(
          learn_sinusoid_plan(spec.start, spec.osc_amplitude, spec.omega, spec.dmp), spec.dmp);
    }
    return std::make_unique<DmpGoalDrivenController>(
        learn_sinusoid_plan(spec.start, spec.osc_amplitude, spec.omega, spec.dmp), spec.dmp,
        spec.start, spec.goal, spec.onset);
  }
  DmpPlan plan = learn_min_jerk_plan(spec.start, spec.goal, spec.T1, spec.dmp);
  if (spec.dmp.sliding) return std::make_unique<DmpSlidingController>(std::move(plan), spec);
  return std::make_unique<DmpTaskController>(std::move(plan), spec);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Runner.

inline SimTrace run(const ScenarioSpec& spec) {
  spec.chain.validate();
  if (!(spec.dt > 0.0) || spec.duration < 0.0)
    throw ContractViolation("run: bad dt or duration");

  SimTrace trace;
  trace.id = spec.id;
  trace.controller = spec.controller;
  trace.dt = spec.dt;
  trace.ref_is_task = is_task_space(spec.id);
  trace.has_obstacle = spec.has_obstacle;

  auto ctrl = detail::make_controller(spec);

  RobotState st;
  st.q = initial_configuration(spec);
  st.qdot = ctrl->initial_qdot(spec.chain);
  st.t = 0.0;

  const int steps = int(std::llround(spec.duration / spec.dt));
  for (int k = 0; k <= steps; ++k) {
    const double t = k * spec.dt;
    const Eigen::Matrix2Xd J = jacobian(spec.chain, st.q);
    const Eigen::Vector2d p = forward_kinematics(spec.chain, st.q);
    const Eigen::Vector2d pd = J * st.qdot;

    detail::TickOutput out;
    try {
      ctrl->tick(spec.chain, st, t, out);
    } catch (const SingularityError& e) {
      trace.failed = true;
      trace.failure_time = t;
      trace.failure_reason = std::string("singularity: ") + e.what();
      break;
    } catch (const OutOfWorkspaceError& e) {
      trace.failed = true;
      trace.failure_time = t;
      trace.failure_reason = std::string("out-of-workspace: ") + e.what();
      break;
    } catch (const SolveError& e) {
      trace.failed = true;
      trace.failure_time = t;
      trace.failure_reason = std::string("solve: ") + e.what();
      break;
    }
    if (!out.tau.allFinite()) {
      trace.failed = true;
      trace.failure_time = t;
      trace.failure_reason = "non-finite torque";
      break;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(J);
    const auto& sv = svd.singularValues();
    const double cond = sv[0] > 0.0 ? sv[sv.size() - 1] / sv[0] : 0.0;

    trace.t.push_back(t);
    trace.q.push_back(st.q);
    trace.qd.push_back(st.qdot);
    trace.tau.push_back(out.tau);
    trace.p.push_back(p);
    trace.pd.push_back(pd);
    trace.ref.push_back(out.ref);
    trace.refd.push_back(out.refd);
    trace.cond.push_back(cond);
    if (out.has_energy) {
      trace.has_energy = true;
      trace.lambda.push_back(out.lambda);
      trace.L_c.push_back(out.L_c);
    }
    if (spec.has_obstacle) trace.obstacle_dist.push_back((p - spec.obstacle).norm());
    if (out.has_goal) {
      trace.has_goal = true;
      trace.goal_traj.push_back(out.goal);
    }

    if (k == steps) break;

    ExternalForce ext;
    if (spec.has_wall) {
      ext.point_force = wall_contact_force(spec.wall, p, pd, t);
      ext.active = ext.point_force.squaredNorm() > 0.0;
    }
    st = step(spec.chain, st, out.tau, ext, spec.dt);
    if (!st.q.allFinite() || !st.qdot.allFinite()) {
      trace.failed = true;
      trace.failure_time = st.t;
      trace.failure_reason = "non-finite state";
      break;
    }
    ctrl->advance(spec.dt);
  }
  return trace;
}

// ---------------------------------------------------------------------------
// Metrics.

inline Metrics metrics(const SimTrace& trace, const ScenarioSpec& spec) {
  if (trace.t.empty() && !trace.failed)
    throw ContractViolation("metrics: empty trace");
  Metrics m;
  m.failed = trace.failed;
  m.failure_time = trace.failure_time;
  m.failure_reason = trace.failure_reason;
  m.tolerance = is_task_space(spec.id) ? 2e-2 : 5e-3;
  if (trace.t.empty()) return m;

  const bool task = is_task_space(spec.id);
  const int n_rows = int(trace.t.size());

  // Tracking error against the recorded reference.
  double sum_sq = 0.0;
  std::vector<double> track(n_rows), goal_err(n_rows);
  const Eigen::VectorXd final_goal =
      spec.goal_new.size() > 0 ? spec.goal_new : spec.goal;
  for (int k = 0; k < n_rows; ++k) {
    const Eigen::VectorXd actual =
        task ? Eigen::VectorXd(trace.p[k]) : trace.q[k];
    track[k] = (actual - trace.ref[k]).norm();
    sum_sq += track[k] * track[k];
    m.peak_tracking_error = std::max(m.peak_tracking_error, track[k]);
    goal_err[k] = is_rhythmic_like(spec.id) ? track[k] : (actual - final_goal).norm();
    m.max_speed = std::max(m.max_speed, trace.pd[k].norm());
    m.min_conditioning = std::min(m.min_conditioning, trace.cond[k]);
  }
  m.rms_tracking_error = std::sqrt(sum_sq / n_rows);
  m.terminal_error = goal_err[n_rows - 1];

  // First time after which the goal error stays below tolerance.
  m.convergence_time = -1.0;
  for (int k = n_rows - 1; k >= 0; --k) {
    if (goal_err[k] >= m.tolerance) break;
    m.convergence_time = trace.t[k];
  }

  if (trace.has_energy)
    for (double v : trace.L_c) m.max_L_c = std::max(m.max_L_c, v);
  if (trace.has_obstacle) {
    m.min_obstacle_distance = std::numeric_limits<double>::infinity();
    for (double v : trace.obstacle_dist)
      m.min_obstacle_distance = std::min(m.min_obstacle_distance, v);
  }
  return m;
}

}  // namespace mprim
