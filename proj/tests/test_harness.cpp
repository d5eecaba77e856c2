#include <quadtune/config.hpp>
#include <quadtune/gains.hpp>
#include <quadtune/harness.hpp>
#include <quadtune/outputs.hpp>

#include <gtest/gtest.h>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <sys/wait.h>

using namespace quadtune;
namespace fs = std::filesystem;

namespace
{
const std::string kConfigDir = QUADTUNE_CONFIG_DIR;

fs::path scratch(const std::string& name)
{
  const fs::path p = fs::temp_directory_path() / ("quadtune_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

FlightLog synthetic_log(const std::vector<Vector3>& errors, double dt)
{
  FlightLog log;
  log.scenario = "synthetic";
  for (std::size_t i = 0; i < errors.size(); ++i) {
    LogRow r;
    r.t = static_cast<double>(i) * dt;
    r.in_window = true;
    r.position_error = errors[i];
    log.rows.push_back(r);
  }
  log.window_start = 0.0;
  log.window_end = static_cast<double>(errors.size()) * dt;
  log.completed = true;
  return log;
}

// Small, fast scenario: flight-arena profile with an order-1 test curve.
ScenarioConfig quick_scenario()
{
  ScenarioConfig c = default_scenario("mair");
  c.test.order = 1;
  c.scenario_id = "quick";
  return c;
}

int run_cli(const std::string& args)
{
  const std::string cmd = std::string(QUADTUNE_CLI) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
}  // namespace

TEST(GainSet, HasTwentySevenGains)
{
  GainSet g;
  EXPECT_EQ(g.flatten().size(), 27);
  Eigen::Matrix<double, 27, 1> flat;
  for (int i = 0; i < 27; ++i) flat(i) = i + 1;
  const GainSet back = GainSet::from_flat(flat, GainMode::adaptive);
  EXPECT_TRUE(back.flatten() == flat);
  EXPECT_EQ(channel_gains(back, ControllerBlock::position, 0).size(), 1);
  EXPECT_EQ(channel_gains(back, ControllerBlock::velocity, 1).size(), 3);
  EXPECT_EQ(channel_gains(back, ControllerBlock::rate, 2).size(), 4);
}

TEST(GainSet, JsonRoundTripIsExact)
{
  Eigen::Matrix<double, 27, 1> flat;
  for (int i = 0; i < 27; ++i) flat(i) = 0.1 * i - 1.3 + 1e-17 * i;
  GainSet g = GainSet::from_flat(flat, GainMode::adaptive);
  g.steps[3] = 1234;
  const GainSet back = gain_set_from_json(to_json(g), LoopRates{});
  EXPECT_TRUE(back == g);
}

TEST(GainSet, ContinuousDefaultsAreDiscretized)
{
  const GainSet g = load_gain_set(kConfigDir + "/px4_v1.11.3_default_gains.json", LoopRates{});
  EXPECT_EQ(g.mode, GainMode::fixed_default);
  EXPECT_DOUBLE_EQ(g.position(0), 0.95);
  EXPECT_DOUBLE_EQ(g.velocity(0, 0), 1.8);
  EXPECT_NEAR(g.velocity(0, 1), 0.4 * 0.02, 1e-15);
  EXPECT_NEAR(g.velocity(0, 2), 0.2 / 0.02, 1e-12);
  EXPECT_DOUBLE_EQ(g.attitude(2), 2.8);
  EXPECT_NEAR(g.rate(0, 1), 0.2 * 0.001, 1e-15);
  EXPECT_NEAR(g.rate(0, 2), 0.003 / 0.001, 1e-12);
}

TEST(GainSet, SchemaErrors)
{
  nlohmann::json doc = to_json(GainSet{});
  doc["controllers"].erase(0);
  EXPECT_THROW(gain_set_from_json(doc, LoopRates{}), ConfigError);
  doc = to_json(GainSet{});
  doc["controllers"][3]["theta"] = {1.0};
  EXPECT_THROW(gain_set_from_json(doc, LoopRates{}), ConfigError);
  doc = to_json(GainSet{});
  doc["mode"] = "sometimes";
  EXPECT_THROW(gain_set_from_json(doc, LoopRates{}), ConfigError);
  EXPECT_THROW(load_gain_set("/nonexistent/gains.json", LoopRates{}), ConfigError);
}

TEST(Cost, TwoUnitSamples)
{
  const FlightLog log = synthetic_log({Vector3(1, 0, 0), Vector3(0, 1, 0)}, 1.0);
  const CostReport r = compute_cost(log);
  EXPECT_DOUBLE_EQ(r.duration, 2.0);
  EXPECT_DOUBLE_EQ(r.cost, 1.0);
  EXPECT_EQ(r.samples, 2u);
}

TEST(Cost, ScalesQuadratically)
{
  std::vector<Vector3> e(50, Vector3(0.3, -0.1, 0.2));
  const double j = compute_cost(synthetic_log(e, 0.02)).cost;
  for (auto& v : e) v *= 3.0;
  EXPECT_NEAR(compute_cost(synthetic_log(e, 0.02)).cost, 9.0 * j, 1e-12 * j);
  EXPECT_NEAR(j, 50 * 0.14 / 1.0, 1e-12);
}

TEST(Cost, RowsOutsideWindowIgnored)
{
  FlightLog log = synthetic_log({Vector3(1, 0, 0), Vector3(5, 5, 5)}, 1.0);
  log.rows[1].in_window = false;
  EXPECT_DOUBLE_EQ(compute_cost(log).cost, 0.5);
}

TEST(Cost, EmptyWindowThrows)
{
  FlightLog log = synthetic_log({Vector3(1, 0, 0)}, 1.0);
  log.window_end = log.window_start;
  EXPECT_THROW(compute_cost(log), std::invalid_argument);
  log = synthetic_log({}, 1.0);
  log.window_end = 1.0;
  EXPECT_THROW(compute_cost(log), std::invalid_argument);
}

TEST(Csv, FieldQuoting)
{
  EXPECT_EQ(csv_field("plain"), "plain");
  EXPECT_EQ(csv_field("a,b"), "\"a,b\"");
  EXPECT_EQ(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
}

TEST(Config, ProfilesLoad)
{
  const ScenarioConfig sim = load_scenario_config(kConfigDir + "/sim.yaml");
  EXPECT_EQ(sim.learning.z_hov, 5.0);
  EXPECT_EQ(sim.test.side, 10.0);
  EXPECT_EQ(sim.limits.v_max, 6.0);
  EXPECT_EQ(sim.rcac.rate.p0, 1e-4);
  EXPECT_EQ(sim.rcac.velocity.normalization, Normalization::scaled_erf);
  EXPECT_TRUE(fs::path(sim.default_gain_file).is_absolute());

  const ScenarioConfig mair = load_scenario_config(kConfigDir + "/mair.yaml");
  EXPECT_EQ(mair.learning.z_hov, 2.0);
  EXPECT_EQ(mair.learning.x_inc, 4.0);
  EXPECT_EQ(mair.learning.z_inc, 1.0);
  EXPECT_EQ(mair.test.side, 4.0);
}

TEST(Config, FileMatchesBuiltInProfile)
{
  const ScenarioConfig file = load_scenario_config(kConfigDir + "/sim.yaml");
  const ScenarioConfig builtin = default_scenario("sim");
  EXPECT_EQ(file.vehicle.mass, builtin.vehicle.mass);
  EXPECT_EQ(file.limits.a_max, builtin.limits.a_max);
  EXPECT_TRUE(file.autopilot.output_scale == builtin.autopilot.output_scale);
  EXPECT_EQ(file.rcac.position.ru, builtin.rcac.position.ru);
}

TEST(Config, ErrorsNameTheFile)
{
  const fs::path dir = scratch("config");
  const fs::path bad = dir / "bad.yaml";
  std::ofstream(bad) << "profile: sim\nvehicle_file: " << kConfigDir << "/vehicle_x500.yaml\nalpha: -2\n";
  try {
    load_scenario_config(bad.string());
    FAIL() << "expected ConfigError";
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("bad.yaml"), std::string::npos);
  }
  std::ofstream(dir / "broken.yaml") << "profile: [unclosed\n";
  EXPECT_THROW(load_scenario_config((dir / "broken.yaml").string()), ConfigError);
  EXPECT_THROW(load_scenario_config((dir / "missing.yaml").string()), ConfigError);
  EXPECT_THROW(scenario_profile("moon"), ConfigError);
}

TEST(Config, LogRateMustFitLoopRates)
{
  ScenarioConfig c = default_scenario("sim");
  c.log_rate_hz = 30.0;
  EXPECT_THROW(c.validate(), ConfigError);
  c.log_rate_hz = 250.0;
  EXPECT_NO_THROW(c.validate());
}

TEST(Flight, TestFlightCompletesAndLogsWindow)
{
  const ScenarioConfig c = quick_scenario();
  const TestResult r = run_test(c, resolve_gains(c));
  EXPECT_TRUE(r.log.completed);
  EXPECT_EQ(r.log.legs_flown, test_plan(c).waypoints.size());
  EXPECT_GT(r.report.cost, 0.0);
  EXPECT_NEAR(r.report.duration, r.log.window_end - r.log.window_start, 1e-12);
  EXPECT_EQ(r.report.samples, static_cast<std::size_t>(std::count_if(
                                  r.log.rows.begin(), r.log.rows.end(), [](const LogRow& row) { return row.in_window; })));
}

TEST(Flight, TelemetryCsvHasOneRowPerSample)
{
  const ScenarioConfig c = quick_scenario();
  const TestResult r = run_test(c, resolve_gains(c));
  const fs::path dir = scratch("telemetry");
  const auto paths = emit_test(r, c.alpha, dir.string());
  ASSERT_EQ(paths.size(), 3u);
  const std::string csv = slurp(paths.front());
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = csv.find("\r\n", pos)) != std::string::npos; pos += 2) ++lines;
  EXPECT_EQ(lines, r.log.rows.size() + 1);
  EXPECT_EQ(csv.rfind("t [s],", 0), 0u);

  // cost recomputed from the file matches the in-memory report
  const CostReport again = compute_cost(read_telemetry_csv(paths.front()));
  EXPECT_NEAR(again.cost, r.report.cost, 1e-9 * r.report.cost);
  EXPECT_EQ(again.samples, r.report.samples);
}

TEST(Flight, RepeatIsByteIdentical)
{
  ScenarioConfig c = quick_scenario();
  c.noise.enabled = true;
  c.noise.position_std = 0.002;
  const fs::path a = scratch("repeat_a");
  const fs::path b = scratch("repeat_b");
  const auto pa = emit_test(run_test(c, resolve_gains(c)), c.alpha, a.string());
  const auto pb = emit_test(run_test(c, resolve_gains(c)), c.alpha, b.string());
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) {
    EXPECT_EQ(slurp(pa[i]), slurp(pb[i])) << pa[i];
  }
  c.seed += 1;
  const auto pc = emit_test(run_test(c, resolve_gains(c)), c.alpha, scratch("repeat_c").string());
  EXPECT_NE(slurp(pa.front()), slurp(pc.front()));
}

TEST(Flight, AutotuneFromZeroCompletes)
{
  const ScenarioConfig c = quick_scenario();
  const AutotuneResult r = run_autotune(c);
  EXPECT_TRUE(r.log.completed);
  EXPECT_EQ(r.snapshot.mode, GainMode::adaptive);
  EXPECT_TRUE(r.snapshot.flatten().allFinite());
  EXPECT_FALSE(r.snapshot.flatten().isZero(0.0));
  EXPECT_TRUE(r.log.rows.front().gains.isZero(0.0));
}

TEST(Sweep, OneRowPerAlphaInOrder)
{
  const ScenarioConfig c = quick_scenario();
  const SweepResult s = run_sweep(c, {1.25, 0.75}, 2);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_EQ(s.rows[0].alpha, 1.25);
  EXPECT_EQ(s.rows[1].alpha, 0.75);
  for (const auto& row : s.rows) {
    EXPECT_TRUE(row.ok()) << row.error;
    EXPECT_EQ(row.default_gain_hash.size(), 64u);
  }
  const fs::path dir = scratch("sweep");
  const auto paths = emit_sweep(s, c.scenario_id, dir.string());
  EXPECT_EQ(paths.back(), (dir / "quick_sweep.csv").string());
  const std::string csv = slurp(paths.back());
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 3);
}

TEST(Sweep, BadAlphaIsRecordedNotFatal)
{
  const ScenarioConfig c = quick_scenario();
  const SweepResult s = run_sweep(c, {1.0, 40.0}, 1);
  ASSERT_EQ(s.rows.size(), 2u);
  EXPECT_TRUE(s.rows[0].ok());
  EXPECT_FALSE(s.rows[1].ok());
  EXPECT_FALSE(s.rows[1].cost_autotuned.has_value());
}

TEST(FileSha256, KnownDigest)
{
  const fs::path p = scratch("sha") / "abc.txt";
  std::ofstream(p, std::ios::binary) << "abc";
  EXPECT_EQ(file_sha256(p.string()), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Cli, ExitCodes)
{
  const fs::path dir = scratch("cli");
  EXPECT_EQ(run_cli("--help"), 0);
  EXPECT_EQ(run_cli("bogus"), 64);
  EXPECT_EQ(run_cli("fly --alpha -1"), 64);
  EXPECT_EQ(run_cli("fly -c /nonexistent.yaml"), 64);
  EXPECT_EQ(run_cli("fly --gains zero"), 64);
  EXPECT_EQ(run_cli("fly -p mair --mission hilbert --hilbert-order 1 -o " + dir.string()), 0);
  EXPECT_TRUE(fs::exists(dir / "mair_fly-hilbert-default_file_a1.00_telemetry.csv"));
  EXPECT_EQ(run_cli("cost " + (dir / "mair_fly-hilbert-default_file_a1.00_telemetry.csv").string()), 0);
  EXPECT_EQ(run_cli("mission export --kind learning " + (dir / "learning.json").string()), 0);
  EXPECT_EQ(load_mission((dir / "learning.json").string()).waypoints.size(), 13u);
  // a huge mass cannot lift off: the first leg stalls
  EXPECT_EQ(run_cli("fly -p mair --mission hilbert --hilbert-order 1 --alpha 40 -o " + dir.string()), 2);
}
