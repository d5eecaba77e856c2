#include <quadtune/config.hpp>
#include <quadtune/harness.hpp>
#include <quadtune/outputs.hpp>

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <map>
#include <optional>

namespace
{
using namespace quadtune;

constexpr int kExitMissionAbort = 2;
constexpr int kExitNumericalAbort = 3;
constexpr int kExitConfigError = 64;

struct Overrides
{
  std::string config_file;
  std::string profile = "sim";
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> gain_source;
  std::optional<std::string> default_gains;
  std::optional<std::string> snapshot;
  std::optional<std::string> mission;
  std::optional<std::string> mission_file;
  std::optional<double> log_rate;
  std::optional<double> v_max;
  std::optional<double> a_max;
  std::optional<int> hilbert_order;
  std::optional<double> hilbert_side;
};

void add_common(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("-c,--config", o.config_file, "Scenario YAML file (overrides the built-in profile)")
      ->check(CLI::ExistingFile);
  cmd->add_option("-p,--profile", o.profile, "Built-in profile when no config file is given")
      ->check(CLI::IsMember({"sim", "mair"}));
  cmd->add_option("--alpha", o.alpha, "Vehicle mass scale");
  cmd->add_option("--seed", o.seed, "Measurement-noise seed");
  cmd->add_option("-o,--out", o.out_dir, "Output directory");
  cmd->add_option("--log-rate", o.log_rate, "Telemetry log rate [Hz]");
  cmd->add_option("--v-max", o.v_max, "Guidance speed limit [m/s]");
  cmd->add_option("--a-max", o.a_max, "Guidance acceleration limit [m/s^2]");
}

void add_gain_options(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("--gains", o.gain_source, "Gain source")
      ->check(CLI::IsMember({"default_file", "autotuned_snapshot", "zero"}));
  cmd->add_option("--default-gains", o.default_gains, "Default gain JSON file");
  cmd->add_option("--snapshot", o.snapshot, "Autotuned gain snapshot JSON file");
}

void add_mission_options(CLI::App* cmd, Overrides& o)
{
  cmd->add_option("--mission", o.mission, "Mission kind")->check(CLI::IsMember({"learning", "hilbert", "custom"}));
  cmd->add_option("--mission-file", o.mission_file, "Custom mission JSON file");
  cmd->add_option("--hilbert-order", o.hilbert_order, "Hilbert test curve order");
  cmd->add_option("--hilbert-side", o.hilbert_side, "Hilbert test square side [m]");
}

ScenarioConfig resolve_config(const Overrides& o)
{
  ScenarioConfig c = o.config_file.empty() ? default_scenario(o.profile) : load_scenario_config(o.config_file);
  if (o.alpha) c.alpha = *o.alpha;
  if (o.seed) c.seed = *o.seed;
  if (o.out_dir) c.output_dir = *o.out_dir;
  if (o.log_rate) c.log_rate_hz = *o.log_rate;
  if (o.v_max) c.limits.v_max = *o.v_max;
  if (o.a_max) c.limits.a_max = *o.a_max;
  if (o.default_gains) c.default_gain_file = *o.default_gains;
  if (o.snapshot) {
    c.snapshot_file = *o.snapshot;
    c.gain_source = GainSource::autotuned_snapshot;
  }
  if (o.gain_source) {
    static const std::map<std::string, GainSource> sources = {{"default_file", GainSource::default_file},
                                                              {"autotuned_snapshot", GainSource::autotuned_snapshot},
                                                              {"zero", GainSource::zero}};
    c.gain_source = sources.at(*o.gain_source);
  }
  if (o.mission) {
    static const std::map<std::string, MissionKind> kinds = {
        {"learning", MissionKind::learning}, {"hilbert", MissionKind::hilbert}, {"custom", MissionKind::custom}};
    c.mission = kinds.at(*o.mission);
  }
  if (o.mission_file) {
    c.mission_file = *o.mission_file;
    c.mission = MissionKind::custom;
  }
  if (o.hilbert_order) c.test.order = *o.hilbert_order;
  if (o.hilbert_side) c.test.side = *o.hilbert_side;
  c.validate();
  return c;
}

void print_paths(const std::vector<std::string>& paths)
{
  for (const auto& p : paths) {
    fmt::print("wrote {}\n", p);
  }
}

void print_report(const CostReport& r)
{
  fmt::print("J = {:.6f} m^2/s  T = {:.2f} s  N = {}  rms = ({:.4f}, {:.4f}, {:.4f}) m\n", r.cost, r.duration,
             r.samples, r.rms.x(), r.rms.y(), r.rms.z());
}

int cmd_autotune(const Overrides& o)
{
  const ScenarioConfig c = resolve_config(o);
  const AutotuneResult tuned = run_autotune(c);
  fmt::print("{}: learning mission complete, {} legs, {:.2f} s\n", tuned.log.scenario, tuned.log.legs_flown,
             tuned.log.window_end);
  print_paths(emit_autotune(tuned, c.output_dir));
  return 0;
}

int cmd_fly(const Overrides& o, bool adapt)
{
  const ScenarioConfig c = resolve_config(o);
  GainSet gains = resolve_gains(c);
  if (!adapt && c.gain_source == GainSource::zero) {
    throw ConfigError("fly: zero gains cannot fly without --adapt");
  }
  FlightSpec spec = make_flight_spec(c);
  spec.plan = c.mission == MissionKind::learning ? learning_plan(c) : test_plan(c);
  spec.gains = gains;
  spec.mode = adapt ? GainMode::adaptive : GainMode::fixed_default;
  spec.scenario = fmt::format("{}_fly-{}-{}_a{:.2f}", c.scenario_id, to_string(c.mission), to_string(c.gain_source),
                              c.alpha);
  FlightResult flight = fly(spec);
  TestResult result{std::move(flight.log), {}};
  result.report = compute_cost(result.log);
  print_report(result.report);
  print_paths(emit_test(result, c.alpha, c.output_dir));
  if (adapt) {
    const std::string snapshot =
        (std::filesystem::path(c.output_dir) / (result.log.scenario + "_snapshot.json")).string();
    write_text_file(snapshot, to_json(flight.final_gains).dump(2) + "\n");
    print_paths({snapshot});
  }
  return 0;
}

int cmd_sweep(const Overrides& o, const std::vector<double>& alphas, unsigned jobs)
{
  const ScenarioConfig c = resolve_config(o);
  const SweepResult sweep = run_sweep(c, alphas, jobs);
  fmt::print("{:>6} {:>12} {:>12} {:>12}  {}\n", "alpha", "J_default", "J_autotuned", "improvement", "error");
  bool all_ok = true;
  for (const SweepRow& r : sweep.rows) {
    auto num = [](const std::optional<double>& v) { return v ? fmt::format("{:.6f}", *v) : std::string("-"); };
    fmt::print("{:>6.2f} {:>12} {:>12} {:>12}  {}\n", r.alpha, num(r.cost_default), num(r.cost_autotuned),
               num(r.improvement), r.error);
    all_ok = all_ok && r.ok();
  }
  print_paths(emit_sweep(sweep, c.scenario_id, c.output_dir));
  return all_ok ? 0 : kExitMissionAbort;
}

int cmd_cost(const std::string& telemetry)
{
  const FlightLog log = read_telemetry_csv(telemetry);
  print_report(compute_cost(log));
  return 0;
}

int cmd_mission_export(const Overrides& o, const std::string& kind, const std::string& path)
{
  const ScenarioConfig c = resolve_config(o);
  const MissionPlan plan = kind == "learning" ? learning_plan(c) : test_plan(c);
  save_mission(plan, path);
  fmt::print("wrote {} ({} waypoints)\n", path, plan.waypoints.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Adaptive PID autotuning workbench for a simulated quadcopter"};
  app.require_subcommand(1);

  Overrides o;
  bool adapt = false;
  std::vector<double> alphas = {0.5, 0.75, 1.0, 1.25, 1.5};
  unsigned jobs = 1;
  std::string telemetry;
  std::string export_kind = "hilbert";
  std::string export_path;

  CLI::App* autotune = app.add_subcommand("autotune", "Fly the learning mission from zero gains and save the snapshot");
  add_common(autotune, o);
  add_mission_options(autotune, o);

  CLI::App* fly_cmd = app.add_subcommand("fly", "Fly a mission with a gain set and report the tracking cost");
  add_common(fly_cmd, o);
  add_gain_options(fly_cmd, o);
  add_mission_options(fly_cmd, o);
  fly_cmd->add_flag("--adapt", adapt, "Keep adapting gains during the flight");

  CLI::App* sweep = app.add_subcommand("sweep", "Mass sensitivity sweep: autotune and test per alpha");
  add_common(sweep, o);
  add_gain_options(sweep, o);
  add_mission_options(sweep, o);
  sweep->add_option("--alphas", alphas, "Mass scale list")->delimiter(',');
  sweep->add_option("-j,--jobs", jobs, "Concurrent alpha scenarios")->check(CLI::Range(1u, 64u));

  CLI::App* cost = app.add_subcommand("cost", "Recompute the tracking cost of a telemetry CSV");
  cost->add_option("telemetry", telemetry, "Telemetry CSV")->required()->check(CLI::ExistingFile);

  CLI::App* mission = app.add_subcommand("mission", "Mission utilities");
  mission->require_subcommand(1);
  CLI::App* mission_export = mission->add_subcommand("export", "Write a built-in mission as JSON");
  add_common(mission_export, o);
  mission_export->add_option("--kind", export_kind, "Mission to export")
      ->check(CLI::IsMember({"learning", "hilbert"}));
  mission_export->add_option("file", export_path, "Output JSON path")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfigError;
  }

  try {
    if (*autotune) return cmd_autotune(o);
    if (*fly_cmd) return cmd_fly(o, adapt);
    if (*sweep) return cmd_sweep(o, alphas, jobs);
    if (*cost) return cmd_cost(telemetry);
    if (*mission_export) return cmd_mission_export(o, export_kind, export_path);
  } catch (const MissionAbort& e) {
    fmt::print(stderr, "mission abort: {}\n", e.what());
    return kExitMissionAbort;
  } catch (const NumericalAbort& e) {
    fmt::print(stderr, "numerical abort: {}\n", e.what());
    return kExitNumericalAbort;
  } catch (const ConfigError& e) {
    fmt::print(stderr, "config error: {}\n", e.what());
    return kExitConfigError;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
