#include <doctest.h>

#include <cmath>

#include "mprim/io.hpp"
#include "mprim/scenarios.hpp"

using namespace mprim;
using Eigen::Vector2d;
using Eigen::VectorXd;

TEST_CASE("names and ids round-trip") {
  for (ScenarioId id :
       {ScenarioId::JointDiscrete, ScenarioId::TaskDiscrete, ScenarioId::TaskDiscreteSingular,
        ScenarioId::UnexpectedContact, ScenarioId::ObstacleAvoid, ScenarioId::Rhythmic,
        ScenarioId::DiscretePlusRhythmic, ScenarioId::Sequencing, ScenarioId::RedundantDiscrete,
        ScenarioId::RedundantSequencing}) {
    CHECK(scenario_id_from_name(scenario_name(id)) == id);
  }
  CHECK(framework_from_name("dmp") == Framework::Dmp);
  CHECK(framework_from_name("eda") == Framework::Eda);
  CHECK_THROWS_AS(scenario_id_from_name("nope"), ContractViolation);
  CHECK_THROWS_AS(framework_from_name("pid"), ContractViolation);
}

TEST_CASE("initial configuration") {
  SUBCASE("joint-space scenarios start at the given joints") {
    const ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Dmp);
    CHECK((initial_configuration(s) - s.start).norm() == 0.0);
  }
  SUBCASE("task-space scenarios start at IK of the start point") {
    const ScenarioSpec s = build_scenario(ScenarioId::TaskDiscrete, Framework::Eda);
    const VectorXd q0 = initial_configuration(s);
    CHECK((forward_kinematics(s.chain, q0) - Vector2d(s.start[0], s.start[1])).norm() < 1e-9);
  }
  SUBCASE("redundant scenarios use the seed") {
    const ScenarioSpec s = build_scenario(ScenarioId::RedundantDiscrete, Framework::Dmp);
    const VectorXd q0 = initial_configuration(s);
    CHECK(q0.size() == 5);
    CHECK((forward_kinematics(s.chain, q0) - Vector2d(0.0, 3.0)).norm() < 1e-9);
  }
}

TEST_CASE("runner basics") {
  SUBCASE("zero duration records a single sample") {
    ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Eda);
    s.duration = 0.0;
    const SimTrace tr = run(s);
    CHECK(tr.t.size() == 1);
    CHECK(tr.t[0] == 0.0);
  }

  SUBCASE("bad dt rejected") {
    ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Eda);
    s.dt = 0.0;
    CHECK_THROWS_AS(run(s), ContractViolation);
  }

  SUBCASE("deterministic: identical runs give identical CSV bytes") {
    const ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Dmp);
    const std::string a = trace_to_csv(run(s));
    const std::string b = trace_to_csv(run(s));
    CHECK(a == b);
  }

  SUBCASE("trace rows cover duration/dt + 1 samples") {
    ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Eda);
    s.duration = 0.25;
    const SimTrace tr = run(s);
    CHECK(tr.t.size() == 251);
    CHECK(tr.t.back() == doctest::Approx(0.25).epsilon(1e-12));
  }
}

TEST_CASE("sequencing structure") {
  SUBCASE("EDA: first submovement is not modified by the second") {
    const ScenarioSpec s = build_scenario(ScenarioId::Sequencing, Framework::Eda);
    const SimTrace tr = run(s);
    REQUIRE(!tr.failed);
    // Before t_switch the reference is the first min-jerk alone.
    const int k = int(std::llround(0.3 / s.dt));
    const double u = 0.3 / s.T1;
    const Vector2d expect =
        Vector2d(s.start) + (Vector2d(s.goal) - Vector2d(s.start)) * minjerk(u);
    CHECK((Vector2d(tr.ref[k]) - expect).norm() < 1e-12);
    // Long after both supports the reference is the new goal.
    CHECK((Vector2d(tr.ref.back()) - Vector2d(s.goal_new)).norm() < 1e-12);
  }

  SUBCASE("DMP: filtered goal follows the exponential closed form") {
    const ScenarioSpec s = build_scenario(ScenarioId::Sequencing, Framework::Dmp);
    const SimTrace tr = run(s);
    REQUIRE(!tr.failed);
    REQUIRE(tr.has_goal);
    for (double t_probe : {1.0, 2.0, 4.0}) {
      const int k = int(std::llround(t_probe / s.dt));
      // Goal filter starts moving after t_switch; tau here is T1.
      const double te = tr.t[k] - s.t_switch;
      const Vector2d expect =
          Vector2d(s.goal_new) +
          (Vector2d(s.goal) - Vector2d(s.goal_new)) * std::exp(-s.dmp.alpha_g * te / s.T1);
      CHECK((Vector2d(tr.goal_traj[k]) - expect).norm() < 1e-6);
    }
  }
}

TEST_CASE("discrete-plus-rhythmic EDA reference decomposes exactly") {
  const ScenarioSpec s = build_scenario(ScenarioId::DiscretePlusRhythmic, Framework::Eda);
  const SimTrace tr = run(s);
  REQUIRE(!tr.failed);
  Submovement sm;
  sm.start = s.start;
  sm.goal = s.goal;
  sm.duration = s.T1;
  sm.onset = s.onset;
  for (double t_probe : {0.5, 3.0, 4.0, 7.5}) {
    const int k = int(std::llround(t_probe / s.dt));
    auto [ps, vs] = submovement_eval(sm, tr.t[k]);
    const Vector2d osc(s.osc_amplitude[0] * std::sin(s.omega * tr.t[k]),
                       s.osc_amplitude[1] * std::sin(s.omega * tr.t[k]));
    CHECK((Vector2d(tr.ref[k]) - (Vector2d(ps) + osc)).norm() < 1e-9);
  }
}

TEST_CASE("metrics") {
  SUBCASE("constant-at-goal trace yields zero errors and immediate convergence") {
    ScenarioSpec s = build_scenario(ScenarioId::JointDiscrete, Framework::Eda);
    SimTrace tr;
    tr.id = s.id;
    tr.controller = s.controller;
    tr.dt = s.dt;
    for (int k = 0; k < 10; ++k) {
      tr.t.push_back(k * s.dt);
      tr.q.push_back(s.goal);
      tr.qd.push_back(VectorXd::Zero(2));
      tr.tau.push_back(VectorXd::Zero(2));
      tr.p.push_back(forward_kinematics(s.chain, s.goal));
      tr.pd.push_back(Vector2d::Zero());
      tr.ref.push_back(s.goal);
      tr.refd.push_back(VectorXd::Zero(2));
      tr.cond.push_back(0.5);
    }
    const Metrics m = metrics(tr, s);
    CHECK(m.rms_tracking_error == 0.0);
    CHECK(m.terminal_error == 0.0);
    CHECK(m.convergence_time == 0.0);
    CHECK(m.tolerance == 5e-3);
    CHECK(m.min_conditioning == 0.5);
  }

  SUBCASE("task tolerance is 2 cm") {
    const ScenarioSpec s = build_scenario(ScenarioId::TaskDiscrete, Framework::Eda);
    const SimTrace tr = run(s);
    const Metrics m = metrics(tr, s);
    CHECK(m.tolerance == 2e-2);
  }

  SUBCASE("failed trace propagates into metrics") {
    SimTrace tr;
    tr.failed = true;
    tr.failure_time = 1.25;
    tr.failure_reason = "singularity";
    const ScenarioSpec s = build_scenario(ScenarioId::TaskDiscreteSingular, Framework::Dmp);
    const Metrics m = metrics(tr, s);
    CHECK(m.failed);
    CHECK(m.failure_time == 1.25);
  }
}

TEST_CASE("unexpected contact traces record the energy monitor") {
  const ScenarioSpec s = build_scenario(ScenarioId::UnexpectedContact, Framework::Eda);
  const SimTrace tr = run(s);
  REQUIRE(!tr.failed);
  CHECK(tr.has_energy);
  CHECK(tr.lambda.size() == tr.t.size());
  for (double lam : tr.lambda) {
    CHECK(lam >= 0.0);
    CHECK(lam <= 1.0);
  }
}

TEST_CASE("obstacle scenario records the obstacle distance") {
  const ScenarioSpec s = build_scenario(ScenarioId::ObstacleAvoid, Framework::Eda);
  const SimTrace tr = run(s);
  REQUIRE(!tr.failed);
  CHECK(tr.has_obstacle);
  CHECK(tr.obstacle_dist.size() == tr.t.size());
  const Metrics m = metrics(tr, s);
  CHECK(m.min_obstacle_distance > 0.0);
}
