#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mprim/common.hpp"
#include "mprim/dmp.hpp"
#include "mprim/scenarios.hpp"

// Serialization: scenario specs and metrics as JSON, learned DMP weights as
// JSON, traces and demonstrations as CSV. Schemas are documented in README.md.

namespace mprim {

using nlohmann::json;

namespace io_detail {

inline json to_json_vec(const Eigen::VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

inline Eigen::VectorXd from_json_vec(const json& a) {
  Eigen::VectorXd v(a.size());
  for (size_t i = 0; i < a.size(); ++i) v[int(i)] = a[i].get<double>();
  return v;
}

// Matrices as row-major nested arrays.
inline json to_json_mat(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

inline Eigen::MatrixXd from_json_mat(const json& rows) {
  const int nr = int(rows.size());
  const int nc = nr > 0 ? int(rows[0].size()) : 0;
  Eigen::MatrixXd m(nr, nc);
  for (int i = 0; i < nr; ++i)
    for (int j = 0; j < nc; ++j) m(i, j) = rows[i][j].get<double>();
  return m;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace io_detail

// --- learned DMP weights -----------------------------------------------------
// One object per DOF: {kind, tau, alpha_z, beta_z, alpha_s, N, weights[],
// centers[], widths[], scale} plus goal/y0 for reproduction.

inline json weights_to_json(const std::vector<LearnedDmp>& dofs, const CanonicalSystem& cs,
                            double alpha_z, double beta_z) {
  json doc;
  doc["schema"] = "dmp-weights/1";
  json arr = json::array();
  for (const auto& d : dofs) {
    json o;
    o["kind"] = d.forcing.kind == DmpKind::Discrete ? "discrete" : "rhythmic";
    o["tau"] = cs.tau;
    o["alpha_z"] = alpha_z;
    o["beta_z"] = beta_z;
    o["alpha_s"] = cs.alpha_s;
    o["N"] = int(d.forcing.weights.size());
    o["weights"] = io_detail::to_json_vec(d.forcing.weights);
    o["centers"] = io_detail::to_json_vec(d.forcing.centers);
    o["widths"] = io_detail::to_json_vec(d.forcing.widths);
    o["scale"] = d.forcing.scale;
    o["goal"] = d.goal;
    o["y0"] = d.y0;
    arr.push_back(o);
  }
  doc["dofs"] = arr;
  return doc;
}

struct LoadedWeights {
  CanonicalSystem cs;
  double alpha_z = 10.0, beta_z = 2.5;
  std::vector<LearnedDmp> dofs;
};

inline LoadedWeights weights_from_json(const json& doc) {
  if (!doc.contains("dofs") || !doc["dofs"].is_array() || doc["dofs"].empty())
    throw ContractViolation("weight file: missing dofs array");
  LoadedWeights out;
  bool first = true;
  for (const auto& o : doc["dofs"]) {
    LearnedDmp d;
    const std::string kind = o.at("kind").get<std::string>();
    d.forcing.kind = kind == "discrete" ? DmpKind::Discrete : DmpKind::Rhythmic;
    d.forcing.weights = io_detail::from_json_vec(o.at("weights"));
    d.forcing.centers = io_detail::from_json_vec(o.at("centers"));
    d.forcing.widths = io_detail::from_json_vec(o.at("widths"));
    d.forcing.scale = o.at("scale").get<double>();
    d.goal = o.value("goal", 0.0);
    d.y0 = o.value("y0", 0.0);
    if (first) {
      out.cs.kind = d.forcing.kind;
      out.cs.tau = o.at("tau").get<double>();
      out.cs.alpha_s = o.at("alpha_s").get<double>();
      out.alpha_z = o.at("alpha_z").get<double>();
      out.beta_z = o.at("beta_z").get<double>();
      first = false;
    }
    out.dofs.push_back(std::move(d));
  }
  return out;
}

// --- scenario spec -----------------------------------------------------------

inline json spec_to_json(const ScenarioSpec& s) {
  using namespace io_detail;
  json j;
  j["schema"] = "scenario/1";
  j["id"] = scenario_name(s.id);
  j["controller"] = framework_name(s.controller);
  j["duration"] = s.duration;
  j["dt"] = s.dt;
  j["chain"] = {{"n_links", s.chain.n_links},
                {"masses", to_json_vec(s.chain.masses)},
                {"lengths", to_json_vec(s.chain.lengths)},
                {"com_offsets", to_json_vec(s.chain.com_offsets)},
                {"inertias", to_json_vec(s.chain.inertias)}};
  j["start"] = to_json_vec(s.start);
  j["goal"] = to_json_vec(s.goal);
  if (s.goal_new.size() > 0) j["goal_new"] = to_json_vec(s.goal_new);
  j["T1"] = s.T1;
  j["T2"] = s.T2;
  j["t_switch"] = s.t_switch;
  j["onset"] = s.onset;
  if (s.osc_amplitude.size() > 0) j["osc_amplitude"] = to_json_vec(s.osc_amplitude);
  j["omega"] = s.omega;
  j["branch"] = s.branch == ElbowBranch::Up ? "up" : "down";
  if (s.ik_seed.size() > 0) j["ik_seed"] = to_json_vec(s.ik_seed);
  if (s.has_wall)
    j["wall"] = {{"normal", to_json_vec(s.wall.normal)},
                 {"offset", s.wall.offset},
                 {"stiffness", s.wall.stiffness},
                 {"damping", s.wall.damping},
                 {"removal_time", s.wall.removal_time}};
  if (s.has_obstacle) j["obstacle"] = to_json_vec(s.obstacle);

  json d;
  d["alpha_z"] = s.dmp.alpha_z;
  d["beta_z"] = s.dmp.beta_z;
  d["alpha_s"] = s.dmp.alpha_s;
  d["n_basis"] = s.dmp.n_basis;
  d["n_samples"] = s.dmp.n_samples;
  d["r_amplitude"] = s.dmp.r_amplitude;
  d["use_pd"] = s.dmp.use_pd;
  if (s.dmp.use_pd) {
    d["Kq_pd_Nm_per_rad"] = to_json_mat(s.dmp.Kq_pd);
    d["Bq_pd_Nms_per_rad"] = to_json_mat(s.dmp.Bq_pd);
  }
  d["coupling"] = s.dmp.coupling;
  if (s.dmp.coupling) {
    d["gamma"] = s.dmp.gamma;
    d["beta_decay"] = s.dmp.beta_decay;
    d["rot_sign"] = s.dmp.rot_sign;
    d["coupling_offset"] = to_json_vec(s.dmp.coupling_offset);
  }
  d["goal_filter"] = s.dmp.goal_filter;
  if (s.dmp.goal_filter) d["alpha_g"] = s.dmp.alpha_g;
  d["sliding"] = s.dmp.sliding;
  if (s.dmp.sliding) {
    d["Lambda1"] = to_json_mat(s.dmp.Lambda1);
    d["Lambda2"] = to_json_mat(s.dmp.Lambda2);
    d["dls_damping"] = s.dmp.dls_damping;
    d["dls_activation"] = s.dmp.dls_activation;
  }
  d["tau2"] = s.dmp.tau2;
  d["alpha_z2"] = s.dmp.alpha_z2;
  d["beta_z2"] = s.dmp.beta_z2;
  j["dmp"] = d;

  json e;
  if (s.eda.Kq.size() > 0) e["Kq_Nm_per_rad"] = to_json_mat(s.eda.Kq);
  if (s.eda.Bq.size() > 0) e["Bq_Nms_per_rad"] = to_json_mat(s.eda.Bq);
  if (s.eda.Kp.size() > 0) e["Kp_N_per_m"] = to_json_mat(s.eda.Kp);
  if (s.eda.Bp.size() > 0) e["Bp_Ns_per_m"] = to_json_mat(s.eda.Bp);
  e["joint_damping"] = s.eda.joint_damping;
  if (s.eda.joint_damping) e["Bq_damp_Nms_per_rad"] = to_json_mat(s.eda.Bq_damp);
  e["energy_modulated"] = s.eda.energy_modulated;
  e["L_max_J"] = s.eda.L_max;
  e["c_ratio"] = s.eda.c_ratio;
  e["repulsive"] = s.eda.repulsive;
  if (s.eda.repulsive) {
    e["k_rep"] = s.eda.k_rep;
    e["n_rep"] = s.eda.n_rep;
    e["rep_offset"] = to_json_vec(s.eda.rep_offset);
  }
  j["eda"] = e;
  return j;
}

inline ScenarioSpec spec_from_json(const json& j) {
  using namespace io_detail;
  ScenarioSpec s = build_scenario(scenario_id_from_name(j.at("id").get<std::string>()),
                                  framework_from_name(j.at("controller").get<std::string>()));
  s.duration = j.value("duration", s.duration);
  s.dt = j.value("dt", s.dt);
  if (j.contains("chain")) {
    const json& c = j["chain"];
    s.chain.n_links = c.at("n_links").get<int>();
    s.chain.masses = from_json_vec(c.at("masses"));
    s.chain.lengths = from_json_vec(c.at("lengths"));
    s.chain.com_offsets = from_json_vec(c.at("com_offsets"));
    s.chain.inertias = from_json_vec(c.at("inertias"));
    s.chain.validate();
  }
  if (j.contains("start")) s.start = from_json_vec(j["start"]);
  if (j.contains("goal")) s.goal = from_json_vec(j["goal"]);
  if (j.contains("goal_new")) s.goal_new = from_json_vec(j["goal_new"]);
  s.T1 = j.value("T1", s.T1);
  s.T2 = j.value("T2", s.T2);
  s.t_switch = j.value("t_switch", s.t_switch);
  s.onset = j.value("onset", s.onset);
  if (j.contains("osc_amplitude")) s.osc_amplitude = from_json_vec(j["osc_amplitude"]);
  s.omega = j.value("omega", s.omega);
  if (j.contains("branch"))
    s.branch = j["branch"].get<std::string>() == "down" ? ElbowBranch::Down : ElbowBranch::Up;
  if (j.contains("ik_seed")) s.ik_seed = from_json_vec(j["ik_seed"]);
  if (j.contains("wall")) {
    const json& w = j["wall"];
    s.has_wall = true;
    const Eigen::VectorXd nrm = from_json_vec(w.at("normal"));
    s.wall.normal = Eigen::Vector2d(nrm[0], nrm[1]);
    s.wall.offset = w.at("offset").get<double>();
    s.wall.stiffness = w.value("stiffness", s.wall.stiffness);
    s.wall.damping = w.value("damping", s.wall.damping);
    s.wall.removal_time = w.value("removal_time", s.wall.removal_time);
  }
  if (j.contains("obstacle")) {
    s.has_obstacle = true;
    const Eigen::VectorXd o = from_json_vec(j["obstacle"]);
    s.obstacle = Eigen::Vector2d(o[0], o[1]);
  }
  if (j.contains("dmp")) {
    const json& d = j["dmp"];
    s.dmp.alpha_z = d.value("alpha_z", s.dmp.alpha_z);
    s.dmp.beta_z = d.value("beta_z", s.dmp.beta_z);
    s.dmp.alpha_s = d.value("alpha_s", s.dmp.alpha_s);
    s.dmp.n_basis = d.value("n_basis", s.dmp.n_basis);
    s.dmp.n_samples = d.value("n_samples", s.dmp.n_samples);
    s.dmp.r_amplitude = d.value("r_amplitude", s.dmp.r_amplitude);
    s.dmp.use_pd = d.value("use_pd", s.dmp.use_pd);
    if (d.contains("Kq_pd_Nm_per_rad")) s.dmp.Kq_pd = from_json_mat(d["Kq_pd_Nm_per_rad"]);
    if (d.contains("Bq_pd_Nms_per_rad")) s.dmp.Bq_pd = from_json_mat(d["Bq_pd_Nms_per_rad"]);
    s.dmp.coupling = d.value("coupling", s.dmp.coupling);
    s.dmp.gamma = d.value("gamma", s.dmp.gamma);
    s.dmp.beta_decay = d.value("beta_decay", s.dmp.beta_decay);
    s.dmp.rot_sign = d.value("rot_sign", s.dmp.rot_sign);
    if (d.contains("coupling_offset")) {
      const Eigen::VectorXd o = from_json_vec(d["coupling_offset"]);
      s.dmp.coupling_offset = Eigen::Vector2d(o[0], o[1]);
    }
    s.dmp.goal_filter = d.value("goal_filter", s.dmp.goal_filter);
    s.dmp.alpha_g = d.value("alpha_g", s.dmp.alpha_g);
    s.dmp.sliding = d.value("sliding", s.dmp.sliding);
    if (d.contains("Lambda1")) s.dmp.Lambda1 = from_json_mat(d["Lambda1"]);
    if (d.contains("Lambda2")) s.dmp.Lambda2 = from_json_mat(d["Lambda2"]);
    s.dmp.dls_damping = d.value("dls_damping", s.dmp.dls_damping);
    s.dmp.dls_activation = d.value("dls_activation", s.dmp.dls_activation);
    s.dmp.tau2 = d.value("tau2", s.dmp.tau2);
    s.dmp.alpha_z2 = d.value("alpha_z2", s.dmp.alpha_z2);
    s.dmp.beta_z2 = d.value("beta_z2", s.dmp.beta_z2);
  }
  if (j.contains("eda")) {
    const json& e = j["eda"];
    if (e.contains("Kq_Nm_per_rad")) s.eda.Kq = from_json_mat(e["Kq_Nm_per_rad"]);
    if (e.contains("Bq_Nms_per_rad")) s.eda.Bq = from_json_mat(e["Bq_Nms_per_rad"]);
    if (e.contains("Kp_N_per_m")) s.eda.Kp = from_json_mat(e["Kp_N_per_m"]);
    if (e.contains("Bp_Ns_per_m")) s.eda.Bp = from_json_mat(e["Bp_Ns_per_m"]);
    s.eda.joint_damping = e.value("joint_damping", s.eda.joint_damping);
    if (e.contains("Bq_damp_Nms_per_rad")) s.eda.Bq_damp = from_json_mat(e["Bq_damp_Nms_per_rad"]);
    s.eda.energy_modulated = e.value("energy_modulated", s.eda.energy_modulated);
    s.eda.L_max = e.value("L_max_J", s.eda.L_max);
    s.eda.c_ratio = e.value("c_ratio", s.eda.c_ratio);
    s.eda.repulsive = e.value("repulsive", s.eda.repulsive);
    s.eda.k_rep = e.value("k_rep", s.eda.k_rep);
    s.eda.n_rep = e.value("n_rep", s.eda.n_rep);
    if (e.contains("rep_offset")) {
      const Eigen::VectorXd o = from_json_vec(e["rep_offset"]);
      s.eda.rep_offset = Eigen::Vector2d(o[0], o[1]);
    }
  }
  return s;
}

// Scenario defaults merged with a JSON override patch (RFC 7386 merge).
inline ScenarioSpec build_scenario(ScenarioId id, Framework fw, const json& overrides) {
  json base = spec_to_json(build_scenario(id, fw));
  base.merge_patch(overrides);
  return spec_from_json(base);
}

// --- metrics -----------------------------------------------------------------

inline json metrics_to_json(const Metrics& m) {
  json j;
  j["schema"] = "metrics/1";
  j["rms_tracking_error"] = m.rms_tracking_error;
  j["peak_tracking_error"] = m.peak_tracking_error;
  j["terminal_error"] = m.terminal_error;
  j["convergence_time"] = m.convergence_time;
  j["tolerance"] = m.tolerance;
  j["max_L_c"] = m.max_L_c;
  j["max_speed"] = m.max_speed;
  j["min_conditioning"] = m.min_conditioning;
  j["min_obstacle_distance"] = m.min_obstacle_distance;
  if (m.failed) j["failure"] = {{"time", m.failure_time}, {"reason", m.failure_reason}};
  return j;
}

// --- trace CSV ---------------------------------------------------------------
// First line is a versioned schema comment, second the column header.

inline std::string trace_to_csv(const SimTrace& trace) {
  std::ostringstream os;
  const int n = trace.q.empty() ? 0 : int(trace.q[0].size());
  const int rdim = trace.ref.empty() ? 0 : int(trace.ref[0].size());
  os << "# trace-csv/1 scenario=" << scenario_name(trace.id)
     << " controller=" << framework_name(trace.controller) << " dt=" << io_detail::fmt(trace.dt);
  if (trace.failed)
    os << " failed_at=" << io_detail::fmt(trace.failure_time) << " reason=\""
       << trace.failure_reason << '"';
  os << '\n';

  os << "t";
  for (int i = 0; i < n; ++i) os << ",q" << i + 1;
  for (int i = 0; i < n; ++i) os << ",qd" << i + 1;
  os << ",px,py,pdx,pdy";
  for (int i = 0; i < n; ++i) os << ",tau" << i + 1;
  for (int i = 0; i < rdim; ++i) os << ",ref" << i + 1;
  os << ",cond";
  if (trace.has_energy) os << ",lambda,L_c";
  if (trace.has_obstacle) os << ",obstacle_dist";
  if (trace.has_goal)
    for (int i = 0; i < int(trace.goal_traj[0].size()); ++i) os << ",goal" << i + 1;
  os << '\n';

  for (size_t k = 0; k < trace.t.size(); ++k) {
    os << io_detail::fmt(trace.t[k]);
    for (int i = 0; i < n; ++i) os << ',' << io_detail::fmt(trace.q[k][i]);
    for (int i = 0; i < n; ++i) os << ',' << io_detail::fmt(trace.qd[k][i]);
    os << ',' << io_detail::fmt(trace.p[k][0]) << ',' << io_detail::fmt(trace.p[k][1]) << ','
       << io_detail::fmt(trace.pd[k][0]) << ',' << io_detail::fmt(trace.pd[k][1]);
    for (int i = 0; i < n; ++i) os << ',' << io_detail::fmt(trace.tau[k][i]);
    for (int i = 0; i < rdim; ++i) os << ',' << io_detail::fmt(trace.ref[k][i]);
    os << ',' << io_detail::fmt(trace.cond[k]);
    if (trace.has_energy)
      os << ',' << io_detail::fmt(trace.lambda[k]) << ',' << io_detail::fmt(trace.L_c[k]);
    if (trace.has_obstacle) os << ',' << io_detail::fmt(trace.obstacle_dist[k]);
    if (trace.has_goal)
      for (int i = 0; i < int(trace.goal_traj[k].size()); ++i)
        os << ',' << io_detail::fmt(trace.goal_traj[k][i]);
    os << '\n';
  }
  return os.str();
}

// --- demonstration CSV -------------------------------------------------------
// Header: t, then per DOF d: y<d>, yd<d>, ydd<d>.

inline std::vector<DemoTrajectory> demos_from_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw ContractViolation("demo csv: empty file");
  // Count columns from the header.
  int cols = 1;
  for (char ch : line) cols += ch == ',';
  if (cols < 4 || (cols - 1) % 3 != 0)
    throw ContractViolation("demo csv: expected header t,y1,yd1,ydd1[,y2,...]");
  const int dofs = (cols - 1) / 3;

  std::vector<double> times;
  std::vector<std::vector<double>> y(dofs), yd(dofs), ydd(dofs);
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ls(line);
    std::string cell;
    std::vector<double> row;
    while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
    if (int(row.size()) != cols) throw ContractViolation("demo csv: ragged row");
    times.push_back(row[0]);
    for (int d = 0; d < dofs; ++d) {
      y[d].push_back(row[1 + 3 * d]);
      yd[d].push_back(row[2 + 3 * d]);
      ydd[d].push_back(row[3 + 3 * d]);
    }
  }
  std::vector<DemoTrajectory> out(dofs);
  for (int d = 0; d < dofs; ++d) {
    out[d].times = Eigen::Map<Eigen::VectorXd>(times.data(), long(times.size()));
    out[d].y_des = Eigen::Map<Eigen::VectorXd>(y[d].data(), long(y[d].size()));
    out[d].ydot_des = Eigen::Map<Eigen::VectorXd>(yd[d].data(), long(yd[d].size()));
    out[d].yddot_des = Eigen::Map<Eigen::VectorXd>(ydd[d].data(), long(ydd[d].size()));
    out[d].validate();
  }
  return out;
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw SolveError("cannot open for writing: " + path);
  f << content;
}

}  // namespace mprim
