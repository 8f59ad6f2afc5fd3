// pvdt: datasheet fitting, synthetic telemetry and stream replay.
//
// Exit codes: 0 success, 1 error, 2 nothing to grade (no daylight samples).

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pvdt/pvdt.hpp"

namespace fs = std::filesystem;
using namespace pvdt;

namespace {

constexpr int kExitEmpty = 2;

struct RunFlags {
  std::string config;
  std::string in;
  std::string out_dir;
  std::optional<std::string> method;
  std::optional<std::string> policy;
  std::optional<std::uint64_t> seed;
  std::optional<double> resample_s;
  std::optional<std::string> warm_start;
  std::optional<std::string> bounds;
  std::optional<std::size_t> workers;
};

void add_run_flags(CLI::App* cmd, RunFlags& f, bool method_and_policy) {
  cmd->add_option("--config", f.config, "run config JSON");
  cmd->add_option("--in", f.in, "telemetry CSV")->required();
  cmd->add_option("--out-dir", f.out_dir, "output directory (overrides config out_dir)");
  if (method_and_policy) {
    cmd->add_option("--method", f.method, "base | method1 | method2 | proposed");
    cmd->add_option("--policy", f.policy, "fixed:<seconds> | event:<threshold>");
  }
  cmd->add_option("--seed", f.seed, "base seed");
  cmd->add_option("--resample", f.resample_s, "optimization step [s]");
  cmd->add_option("--warm-start", f.warm_start, "initial parameters JSON");
  cmd->add_option("--bounds", f.bounds, "parameter bounds CSV");
  cmd->add_option("--workers", f.workers, "threads per swarm evaluation");
}

RunSetup setup_from(const RunFlags& f) {
  RunSetup s = f.config.empty() ? RunSetup{} : load_run_config(f.config);
  RunConfig& c = s.run;
  if (f.method) c.method = parse_method(*f.method);
  if (f.policy) c.policy = parse_policy(*f.policy);
  if (f.seed) c.seed = *f.seed;
  if (f.resample_s) c.resample_s = *f.resample_s;
  if (f.warm_start) c.warm_start = load_params(*f.warm_start);
  if (f.bounds) c.coopt.x2_bounds = load_bounds(*f.bounds);
  if (f.workers) {
    c.coopt.stage1_cfg.workers = *f.workers;
    c.coopt.stage2_cfg.workers = *f.workers;
  }
  if (!f.out_dir.empty()) s.out_dir = f.out_dir;
  if (!s.out_dir) s.out_dir = "results";
  return s;
}

std::vector<Measurement> load_stream(const std::string& path) {
  auto t = load_telemetry(path);
  for (const auto& g : t.gaps) {
    std::cerr << "warning: telemetry gap " << fmt(g.from_ts) << " -> " << fmt(g.to_ts) << '\n';
  }
  return std::move(t.samples);
}

int cmd_fit_datasheet(const std::string& curve, const std::string& bounds_path,
                      const std::string& out, const PlantConstants& plant,
                      const PsoConfig& cfg) {
  const auto points = load_datasheet(curve);
  const auto bounds = bounds_path.empty() ? default_param_bounds() : load_bounds(bounds_path);
  const auto fit = fit_datasheet(points, plant, bounds, cfg);
  save_params(out, fit.params, fit.rmse);
  std::cout << "rmse " << fmt(fit.rmse) << " A\n" << params_to_json(fit.params).dump() << '\n';
  return 0;
}

int cmd_replay(const RunFlags& f) {
  const auto setup = setup_from(f);
  const auto stream = load_stream(f.in);
  const auto result = replay(setup.run, stream);
  emit_replay(result, *setup.out_dir);
  std::cout << summary_json(result).dump() << '\n';
  return result.report ? 0 : kExitEmpty;
}

int cmd_sweep(const RunFlags& f, double event_threshold) {
  auto setup = setup_from(f);
  const auto stream = load_stream(f.in);
  std::vector<ReplayResult> runs;
  setup.run.method = Method::proposed;
  for (const auto& policy : standard_policy_set(event_threshold)) {
    setup.run.policy = policy;
    runs.push_back(replay(setup.run, stream));
    std::cout << summary_json(runs.back()).dump() << '\n';
  }
  emit_table(runs, *setup.out_dir / "sweep.csv");
  for (const auto& r : runs) {
    if (r.report) return 0;
  }
  return kExitEmpty;
}

int cmd_compare(const RunFlags& f) {
  auto setup = setup_from(f);
  const auto stream = load_stream(f.in);
  const bool has_g = !stream.empty() && stream.front().g_meas.has_value();
  std::vector<ReplayResult> runs;
  for (Method m : {Method::base, Method::method1, Method::method2, Method::proposed}) {
    if (needs_g_meas(m) && !has_g) {
      std::cerr << "skipping " << to_string(m) << ": telemetry has no g_meas column\n";
      continue;
    }
    setup.run.method = m;
    runs.push_back(replay(setup.run, stream));
    std::cout << summary_json(runs.back()).dump() << '\n';
  }
  emit_table(runs, *setup.out_dir / "compare.csv");
  for (const auto& r : runs) {
    if (r.report) return 0;
  }
  return kExitEmpty;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PV digital twin: parameter fitting, synthetic telemetry and stream replay"};
  app.require_subcommand(1);

  PlantConstants plant;
  app.add_option("--ns", plant.ns, "series cell count");
  app.add_option("--alpha-isc", plant.alpha_isc, "short-circuit current temperature coefficient");

  // fit-datasheet
  std::string curve, fit_bounds, fit_out = "params.json";
  PsoConfig fit_cfg = default_datasheet_config();
  auto* fit = app.add_subcommand("fit-datasheet", "fit initial parameters to I-V curve points");
  fit->add_option("curve", curve, "curve CSV (v,i,g,t_c)")->required();
  fit->add_option("--bounds", fit_bounds, "parameter bounds CSV");
  fit->add_option("--out", fit_out, "output parameters JSON");
  fit->add_option("--seed", fit_cfg.seed, "swarm seed");
  fit->add_option("--particles", fit_cfg.n_particles, "swarm size");
  fit->add_option("--iterations", fit_cfg.n_iterations, "swarm iterations");

  // synth
  SynthOptions so;
  std::string synth_params, synth_out = "telemetry.csv", scenario = "cloudy", sensor = "aligned";
  auto* synth = app.add_subcommand("synth", "generate synthetic plant telemetry");
  synth->add_option("--scenario", scenario, "clear | cloudy | overcast");
  synth->add_option("--params", synth_params, "ground-truth parameters JSON (default: datasheet set)");
  synth->add_option("--duration", so.duration_s, "seconds at 1 Hz");
  synth->add_option("--seed", so.seed, "generator seed");
  synth->add_option("--noise", so.noise, "relative std of V and I noise");
  synth->add_flag("--tracker", so.tracker, "sample through a perturb-and-observe tracker");
  synth->add_option("--tracker-step", so.tracker_step_v, "tracker voltage step [V]");
  synth->add_option("--sensor", sensor, "pyranometer: aligned | decorrelated | absent");
  synth->add_option("--sensor-noise", so.sensor_noise, "relative std of pyranometer noise");
  synth->add_option("--start-hour", so.start_hour, "solar hour of the first sample");
  synth->add_option("--rs-drift", so.drift.rs_delta, "linear rs change over the run [ohm]");
  synth->add_option("--rs-wave", so.drift.rs_wave, "sinusoidal rs amplitude [ohm]");
  synth->add_option("--rs-wave-period", so.drift.rs_wave_period_s, "period of the rs wave [s]");
  synth->add_option("--rsh-drift", so.drift.rsh_delta, "linear rsh change over the run [ohm]");
  synth->add_option("--out", synth_out, "telemetry CSV; truth and cloud sidecars sit next to it");

  // replay, sweep-policies, compare-methods
  RunFlags rf, sf, cf;
  double sweep_threshold = 0.005;
  auto* rep = app.add_subcommand("replay", "replay one method over telemetry");
  add_run_flags(rep, rf, true);
  auto* sweep = app.add_subcommand("sweep-policies", "proposed method under every update policy");
  add_run_flags(sweep, sf, false);
  sweep->add_option("--event-threshold", sweep_threshold, "threshold of the event policy");
  auto* cmp = app.add_subcommand("compare-methods", "all four methods on the same telemetry");
  add_run_flags(cmp, cf, false);
  cmp->add_option("--policy", cf.policy, "update policy of the proposed method");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    plant.validate();
    if (*fit) return cmd_fit_datasheet(curve, fit_bounds, fit_out, plant, fit_cfg);
    if (*synth) {
      so.scenario = parse_scenario(scenario);
      so.sensor = parse_sensor_model(sensor);
      const PvParams truth = synth_params.empty() ? kDatasheetParams : load_params(synth_params);
      const auto out = synth_plant(truth, plant, so);
      const fs::path base(synth_out);
      auto write = [](const fs::path& path, auto&& body) {
        auto os = detail::open_out(path);
        body(os);
        detail::finish(os, path);
      };
      write(base, [&](std::ostream& os) {
        write_telemetry_csv(os, out.telemetry, so.sensor != SensorModel::absent);
      });
      auto sidecar = [&](const char* suffix) {
        fs::path p = base;
        p.replace_extension(suffix);
        return p;
      };
      write(sidecar(".truth.csv"), [&](std::ostream& os) { write_truth_csv(os, out.truth); });
      write(sidecar(".clouds.csv"), [&](std::ostream& os) { write_clouds_csv(os, out); });
      std::cout << out.telemetry.size() << " samples, " << out.clouds.size() << " cloud events\n";
      return 0;
    }
    if (*rep) return cmd_replay(rf);
    if (*sweep) return cmd_sweep(sf, sweep_threshold);
    if (*cmp) return cmd_compare(cf);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
