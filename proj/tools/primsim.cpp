// primsim: run the comparison scenarios, learn DMP weights from demo CSVs,
// and compare both frameworks on one scenario.
//
// Exit codes: 0 success, 1 usage/config error, 2 scientific failure
// (FAILED trace, e.g. the planned-trajectory singularity case).

#include <filesystem>
#include <fstream>
#include <optional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "mprim/io.hpp"

namespace fs = std::filesystem;
using mprim::json;

namespace {

struct CommonOpts {
  std::string scenario;
  std::string spec_path;
  std::string controller;  // empty: use the spec file's controller (default dmp)
  double dt = 0.0;  // 0 = keep scenario default
  std::string out_dir = "out";
  std::string format = "csv,json";
};

mprim::ScenarioSpec resolve_spec(const CommonOpts& o,
                                 std::optional<mprim::Framework> fw_override) {
  if (!o.spec_path.empty()) {
    std::ifstream f(o.spec_path);
    if (!f) throw mprim::ContractViolation("cannot open spec file: " + o.spec_path);
    json j = json::parse(f);
    mprim::ScenarioSpec spec = mprim::spec_from_json(j);
    if (fw_override) spec.controller = *fw_override;
    if (o.dt > 0.0) spec.dt = o.dt;
    return spec;
  }
  if (o.scenario.empty())
    throw mprim::ContractViolation("either --scenario or --spec is required");
  mprim::ScenarioSpec spec = mprim::build_scenario(
      mprim::scenario_id_from_name(o.scenario),
      fw_override.value_or(mprim::Framework::Dmp));
  if (o.dt > 0.0) spec.dt = o.dt;
  return spec;
}

bool wants(const std::string& format, const std::string& kind) {
  return format.find(kind) != std::string::npos;
}

int run_one(const CommonOpts& o) {
  std::optional<mprim::Framework> fw;
  if (!o.controller.empty()) fw = mprim::framework_from_name(o.controller);
  const mprim::ScenarioSpec spec = resolve_spec(o, fw);
  const mprim::Framework fw_used = spec.controller;
  const mprim::SimTrace trace = mprim::run(spec);
  const mprim::Metrics m = mprim::metrics(trace, spec);

  fs::create_directories(o.out_dir);
  const std::string stem =
      std::string(mprim::scenario_name(spec.id)) + "-" + mprim::framework_name(fw_used);
  if (wants(o.format, "csv"))
    mprim::write_file(o.out_dir + "/" + stem + "-trace.csv", mprim::trace_to_csv(trace));
  if (wants(o.format, "json"))
    mprim::write_file(o.out_dir + "/" + stem + "-metrics.json",
                      mprim::metrics_to_json(m).dump(2) + "\n");

  std::cout << mprim::metrics_to_json(m).dump(2) << std::endl;
  if (trace.failed) {
    std::cerr << "run FAILED at t=" << trace.failure_time << ": " << trace.failure_reason
              << std::endl;
    return 2;
  }
  return 0;
}

int learn_one(const std::string& demo_path, const std::string& out_path,
              const std::string& kind, double period, int n_basis, double alpha_z,
              double beta_z, double alpha_s, double r_amplitude) {
  std::ifstream f(demo_path);
  if (!f) throw mprim::ContractViolation("cannot open demo file: " + demo_path);
  const std::vector<mprim::DemoTrajectory> demos = mprim::demos_from_csv(f);

  mprim::CanonicalSystem cs;
  cs.alpha_s = alpha_s;
  if (kind == "discrete") {
    cs.kind = mprim::DmpKind::Discrete;
    cs.tau = demos[0].times[demos[0].times.size() - 1] - demos[0].times[0];
  } else if (kind == "rhythmic") {
    cs.kind = mprim::DmpKind::Rhythmic;
    if (!(period > 0.0))
      throw mprim::ContractViolation("--period is required for rhythmic demos");
    cs.tau = period / (2.0 * M_PI);
  } else {
    throw mprim::ContractViolation("--kind must be discrete or rhythmic");
  }

  std::vector<mprim::LearnedDmp> learned;
  double rms_total = 0.0;
  for (const auto& demo : demos) {
    const mprim::LearnedDmp l =
        mprim::imitation_learn(demo, cs, alpha_z, beta_z, n_basis, r_amplitude);
    // Reproduction error: integrate the learned system over the demo support.
    mprim::TransformationSystem ts;
    ts.alpha_z = alpha_z;
    ts.beta_z = beta_z;
    ts.tau = cs.tau;
    ts.goal = l.goal;
    ts.y = demo.y_des[0];
    ts.z = cs.tau * demo.ydot_des[0];
    const double t_end = demo.times[demo.times.size() - 1];
    const double dt = 1e-4;
    double sum_sq = 0.0;
    int count = 0, next_sample = 0;
    for (double t = 0.0; t <= t_end + 1e-12; t += dt) {
      while (next_sample < demo.times.size() && demo.times[next_sample] <= t + 1e-12) {
        const double err = ts.y - demo.y_des[next_sample];
        sum_sq += err * err;
        ++count;
        ++next_sample;
      }
      mprim::transformation_step(ts, mprim::forcing_eval(l.forcing, mprim::canonical_eval(cs, t)),
                                 dt);
    }
    rms_total += count > 0 ? std::sqrt(sum_sq / count) : 0.0;
    learned.push_back(l);
  }

  const json doc = mprim::weights_to_json(learned, cs, alpha_z, beta_z);
  mprim::write_file(out_path, doc.dump(2) + "\n");
  std::cout << "wrote " << out_path << "; reproduction RMS = "
            << rms_total / double(demos.size()) << std::endl;
  return 0;
}

int compare_one(const CommonOpts& o) {
  mprim::ScenarioSpec spec_dmp = resolve_spec(o, mprim::Framework::Dmp);
  mprim::ScenarioSpec spec_eda = resolve_spec(o, mprim::Framework::Eda);

  const mprim::SimTrace tr_dmp = mprim::run(spec_dmp);
  const mprim::SimTrace tr_eda = mprim::run(spec_eda);
  const mprim::Metrics m_dmp = mprim::metrics(tr_dmp, spec_dmp);
  const mprim::Metrics m_eda = mprim::metrics(tr_eda, spec_eda);

  json table;
  table["schema"] = "compare/1";
  table["scenario"] = mprim::scenario_name(spec_dmp.id);
  table["dmp"] = mprim::metrics_to_json(m_dmp);
  table["eda"] = mprim::metrics_to_json(m_eda);
  table["claims"] = {
      {"dmp_failed", m_dmp.failed},
      {"eda_failed", m_eda.failed},
      {"dmp_tracks_tighter", m_dmp.rms_tracking_error < m_eda.rms_tracking_error},
      {"eda_converges_earlier",
       m_eda.convergence_time >= 0.0 &&
           (m_dmp.convergence_time < 0.0 || m_eda.convergence_time < m_dmp.convergence_time)},
  };

  fs::create_directories(o.out_dir);
  const std::string stem = std::string(mprim::scenario_name(spec_dmp.id)) + "-compare";
  mprim::write_file(o.out_dir + "/" + stem + ".json", table.dump(2) + "\n");
  if (wants(o.format, "csv")) {
    mprim::write_file(o.out_dir + "/" + mprim::scenario_name(spec_dmp.id) + "-dmp-trace.csv",
                      mprim::trace_to_csv(tr_dmp));
    mprim::write_file(o.out_dir + "/" + mprim::scenario_name(spec_dmp.id) + "-eda-trace.csv",
                      mprim::trace_to_csv(tr_eda));
  }
  std::cout << table.dump(2) << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Motor-primitive comparison scenarios: DMP vs EDA on a planar chain"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* cmd_run = app.add_subcommand("run", "run one scenario and export trace + metrics");
  cmd_run->add_option("--scenario", run_opts.scenario, "scenario id (e.g. joint-discrete)");
  cmd_run->add_option("--spec", run_opts.spec_path, "path to a scenario JSON spec");
  cmd_run->add_option("--controller", run_opts.controller, "dmp or eda")
      ->check(CLI::IsMember({"dmp", "eda"}));
  cmd_run->add_option("--dt", run_opts.dt, "time-step override (s)");
  cmd_run->add_option("--out", run_opts.out_dir, "output directory");
  cmd_run->add_option("--format", run_opts.format, "comma list of csv,json");

  std::string demo_path, weights_out = "weights.json", kind = "discrete";
  double period = 0.0, alpha_z = 10.0, beta_z = 2.5, alpha_s = 1.0, r_amplitude = 1.0;
  int n_basis = 50;
  CLI::App* cmd_learn = app.add_subcommand("learn", "learn DMP weights from a demo CSV");
  cmd_learn->add_option("--demo", demo_path, "demo CSV (t,y1,yd1,ydd1[,y2,...])")->required();
  cmd_learn->add_option("--out", weights_out, "output weight JSON path");
  cmd_learn->add_option("--kind", kind, "discrete or rhythmic")
      ->check(CLI::IsMember({"discrete", "rhythmic"}));
  cmd_learn->add_option("--period", period, "demo period (s), rhythmic only");
  cmd_learn->add_option("--n-basis", n_basis, "number of basis functions");
  cmd_learn->add_option("--alpha-z", alpha_z, "transformation-system gain");
  cmd_learn->add_option("--beta-z", beta_z, "transformation-system gain");
  cmd_learn->add_option("--alpha-s", alpha_s, "canonical decay rate (discrete)");
  cmd_learn->add_option("--r", r_amplitude, "rhythmic amplitude r");

  CommonOpts cmp_opts;
  CLI::App* cmd_compare =
      app.add_subcommand("compare", "run both frameworks on one scenario");
  cmd_compare->add_option("--scenario", cmp_opts.scenario, "scenario id");
  cmd_compare->add_option("--spec", cmp_opts.spec_path, "path to a scenario JSON spec");
  cmd_compare->add_option("--dt", cmp_opts.dt, "time-step override (s)");
  cmd_compare->add_option("--out", cmp_opts.out_dir, "output directory");
  cmd_compare->add_option("--format", cmp_opts.format, "comma list of csv,json");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_run->parsed()) return run_one(run_opts);
    if (cmd_learn->parsed())
      return learn_one(demo_path, weights_out, kind, period, n_basis, alpha_z, beta_z, alpha_s,
                       r_amplitude);
    if (cmd_compare->parsed()) return compare_one(cmp_opts);
  } catch (const mprim::ContractViolation& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << std::endl;
    return 1;
  }
  return 1;
}
