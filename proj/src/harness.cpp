#include <quadtune/harness.hpp>

#include <fmt/format.h>
#include <openssl/evp.h>

#include <cmath>
#include <fstream>
#include <future>
#include <iterator>
#include <memory>
#include <random>

namespace quadtune
{
std::string_view to_string(GainSource source)
{
  switch (source) {
    case GainSource::default_file:
      return "default_file";
    case GainSource::autotuned_snapshot:
      return "autotuned_snapshot";
    case GainSource::zero:
      return "zero";
  }
  return "?";
}

std::string_view to_string(MissionKind kind)
{
  switch (kind) {
    case MissionKind::learning:
      return "learning";
    case MissionKind::hilbert:
      return "hilbert";
    case MissionKind::custom:
      return "custom";
  }
  return "?";
}

void ScenarioConfig::validate() const
{
  vehicle.validate();
  autopilot.validate();
  try {
    limits.validate();
    for (auto b : {ControllerBlock::position, ControllerBlock::velocity, ControllerBlock::attitude,
                   ControllerBlock::rate}) {
      rcac.row(b).validate();
    }
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConfigError("scenario: alpha must be positive");
  }
  if (!(log_rate_hz > 0.0) || log_rate_hz > autopilot.rates.rate_hz) {
    throw ConfigError("scenario: log rate must lie in (0, rate-loop rate]");
  }
  const double divider = autopilot.rates.rate_hz / log_rate_hz;
  const double multiple = log_rate_hz / autopilot.rates.position_hz;
  if (std::abs(divider - std::round(divider)) > 1e-9 || std::abs(multiple - std::round(multiple)) > 1e-9) {
    throw ConfigError("scenario: log rate must divide the rate-loop rate and be a multiple of the position-loop rate");
  }
  if (!(max_flight_time > 0.0)) {
    throw ConfigError("scenario: max_flight_time must be positive");
  }
  if (mission == MissionKind::custom && mission_file.empty()) {
    throw ConfigError("scenario: custom mission requires mission_file");
  }
  if (gain_source == GainSource::default_file && default_gain_file.empty()) {
    throw ConfigError("scenario: default gain source requires default_gain_file");
  }
  if (gain_source == GainSource::autotuned_snapshot && snapshot_file.empty()) {
    throw ConfigError("scenario: snapshot gain source requires snapshot_file");
  }
}

ScenarioConfig scenario_profile(std::string_view name)
{
  ScenarioConfig c;
  c.scenario_id = std::string(name);
  c.vehicle_file = std::string(QUADTUNE_CONFIG_DIR) + "/vehicle_x500.yaml";
  c.default_gain_file = std::string(QUADTUNE_CONFIG_DIR) + "/px4_v1.11.3_default_gains.json";
  if (name == "sim") {
    c.learning = {5.0, 5.0, 5.0, 5.0};
    c.limits = {6.0, 1.0, 2.0, 0.5};
    c.test = {2, 10.0, 5.0};
  } else if (name == "mair") {
    c.learning = {2.0, 4.0, 4.0, 1.0};
    c.limits = {3.0, 1.2, 2.0, 0.5};
    c.test = {2, 4.0, 2.0};
  } else {
    throw ConfigError(fmt::format("unknown scenario profile '{}'", name));
  }
  return c;
}

CostReport compute_cost(const FlightLog& log)
{
  CostReport report;
  report.duration = log.window_end - log.window_start;
  if (!(report.duration > 0.0)) {
    throw std::invalid_argument("compute_cost: flight time must be positive");
  }
  Vector3 sum_sq = Vector3::Zero();
  for (const LogRow& row : log.rows) {
    if (!row.in_window) {
      continue;
    }
    sum_sq += row.position_error.cwiseAbs2();
    ++report.samples;
  }
  if (report.samples == 0) {
    throw std::invalid_argument("compute_cost: log has no samples in the cost window");
  }
  report.cost = sum_sq.sum() / report.duration;
  report.rms = (sum_sq / static_cast<double>(report.samples)).cwiseSqrt();
  report.completed = log.completed;
  return report;
}

namespace
{
LogRow make_row(double t, const MissionRunner& runner, const VehicleState& state, const Autopilot& ap)
{
  LogRow row;
  const SetpointBundle& sp = ap.setpoints();
  row.t = t;
  row.leg = static_cast<int>(runner.legs_completed());
  row.position_sp = sp.position_sp;
  row.velocity_sp = sp.velocity_sp;
  row.azimuth_sp = sp.azimuth_sp;
  row.position = state.position;
  row.velocity = state.velocity;
  row.attitude = state.attitude;
  row.angular_rate = state.angular_rate;
  row.position_error = sp.position_sp - state.position;
  row.loop_errors = ap.errors();
  row.velocity_command = sp.velocity_command;
  row.thrust_vector_sp = sp.thrust_vector_sp;
  row.rate_sp = sp.rate_sp;
  row.moment_sp = sp.moment_sp;
  row.rotor_speeds = state.rotor_speeds;
  row.gains = ap.gains().flatten();
  return row;
}

}  // namespace

FlightResult fly(const FlightSpec& spec)
{
  spec.vehicle.validate();
  spec.plan.validate();

  const Waypoint& first = spec.plan.waypoints.front();
  VehicleState state = VehicleState::at_rest(Vector3(first.x, first.y, 0.0), first.psi);
  MissionRunner runner(spec.plan, state.position, first.psi, 0.0);
  Autopilot autopilot(spec.autopilot, spec.gains, spec.mode, spec.rcac);
  std::mt19937_64 rng(spec.seed);

  const double rate_hz = spec.autopilot.rates.rate_hz;
  const double dt = 1.0 / rate_hz;
  const auto log_divider = static_cast<std::uint64_t>(std::llround(rate_hz / spec.log_rate_hz));
  const auto max_ticks = static_cast<std::uint64_t>(std::ceil(spec.max_flight_time * rate_hz));

  FlightResult result;
  FlightLog& log = result.log;
  log.scenario = spec.scenario;
  log.log_rate_hz = spec.log_rate_hz;
  log.window_start = 0.0;
  log.rows.reserve(static_cast<std::size_t>(max_ticks / log_divider / 4));

  for (std::uint64_t tick = 0;; ++tick) {
    if (tick > max_ticks) {
      throw MissionAbort(fmt::format("{}: flight exceeded {:.0f} s without completing the mission", spec.scenario,
                                     spec.max_flight_time));
    }
    const double t = static_cast<double>(tick) * dt;
    const Measurement m = measure(state, spec.noise, rng);

    const bool position_tick = autopilot.position_tick();
    if (position_tick) {
      runner.advance(m.position, t);
      if (runner.complete()) {
        break;
      }
    }
    const MissionSetpoint sp = runner.setpoint(t);
    autopilot.step(m, {sp.position.position, sp.position.velocity, sp.azimuth.azimuth, sp.azimuth.rate});

    if (tick % log_divider == 0) {
      LogRow row = make_row(t, runner, state, autopilot);
      row.in_window = position_tick;
      log.rows.push_back(std::move(row));
    }
    state = integrate_step(state, autopilot.last_command(), spec.vehicle, dt);
  }

  log.completed = true;
  log.window_end = runner.completion_time().value_or(0.0);
  log.legs_flown = runner.legs_completed();
  result.final_gains = autopilot.gains();
  return result;
}

MissionPlan learning_plan(const ScenarioConfig& config)
{
  MissionPlan plan = learning_mission(config.learning.z_hov, config.learning.x_inc, config.learning.y_inc,
                                      config.learning.z_inc, config.limits);
  plan.acceptance_radius = config.acceptance_radius;
  plan.hold_time = config.hold_time;
  plan.validate();
  return plan;
}

MissionPlan test_plan(const ScenarioConfig& config)
{
  if (config.mission == MissionKind::custom) {
    return load_mission(config.mission_file);
  }
  MissionPlan plan = hilbert_mission(config.test.order, config.test.side, config.test.altitude, config.limits);
  plan.acceptance_radius = config.acceptance_radius;
  plan.hold_time = config.hold_time;
  plan.validate();
  return plan;
}

FlightSpec make_flight_spec(const ScenarioConfig& config)
{
  FlightSpec spec;
  spec.vehicle = config.vehicle;
  spec.vehicle.mass_scale = config.alpha;
  spec.noise = config.noise;
  spec.seed = config.seed;
  spec.autopilot = config.autopilot;
  spec.rcac = config.rcac;
  spec.log_rate_hz = config.log_rate_hz;
  spec.max_flight_time = config.max_flight_time;
  return spec;
}

AutotuneResult run_autotune(const ScenarioConfig& config)
{
  config.validate();
  FlightSpec spec = make_flight_spec(config);
  spec.scenario = fmt::format("{}_autotune_a{:.2f}", config.scenario_id, config.alpha);
  spec.plan = config.mission == MissionKind::custom ? load_mission(config.mission_file) : learning_plan(config);
  spec.gains = GainSet{};
  spec.gains.mode = GainMode::adaptive;
  spec.mode = GainMode::adaptive;

  FlightResult flight = fly(spec);
  const Eigen::Matrix<double, GainSet::kCount, 1> flat = flight.final_gains.flatten();
  if (!flat.allFinite()) {
    throw NumericalAbort(fmt::format("{}: autotuned gains are not finite", spec.scenario));
  }
  return {std::move(flight.log), flight.final_gains};
}

TestResult run_test(const ScenarioConfig& config, const GainSet& gains)
{
  config.validate();
  FlightSpec spec = make_flight_spec(config);
  const std::string source = gains.mode == GainMode::adaptive ? "autotuned" : "default";
  spec.scenario = fmt::format("{}_test-{}_a{:.2f}", config.scenario_id, source, config.alpha);
  spec.plan = test_plan(config);
  spec.gains = gains;
  spec.mode = GainMode::fixed_default;

  FlightResult flight = fly(spec);
  CostReport report = compute_cost(flight.log);
  return {std::move(flight.log), report};
}

GainSet resolve_gains(const ScenarioConfig& config)
{
  switch (config.gain_source) {
    case GainSource::default_file: {
      GainSet g = load_gain_set(config.default_gain_file, config.autopilot.rates);
      g.mode = GainMode::fixed_default;
      return g;
    }
    case GainSource::autotuned_snapshot: {
      GainSet g = load_gain_set(config.snapshot_file, config.autopilot.rates);
      g.mode = GainMode::adaptive;
      return g;
    }
    case GainSource::zero:
      return GainSet{};
  }
  return GainSet{};
}

std::string file_sha256(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(fmt::format("cannot open '{}' for hashing", path));
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 computation failed");
  }
  std::string hex;
  hex.reserve(2 * length);
  for (unsigned int i = 0; i < length; ++i) {
    hex += fmt::format("{:02x}", digest[i]);
  }
  return hex;
}

namespace
{
struct AlphaOutcome
{
  SweepRow row;
  SweepScenario scenario;
};

AlphaOutcome run_alpha(ScenarioConfig config, double alpha, const GainSet& defaults, const std::string& hash)
{
  AlphaOutcome out;
  out.row.alpha = alpha;
  out.row.default_gain_hash = hash;
  out.scenario.alpha = alpha;
  config.alpha = alpha;
  try {
    AutotuneResult tuned = run_autotune(config);
    out.scenario.test_autotuned = run_test(config, tuned.snapshot);
    out.scenario.autotune = std::move(tuned);
    out.row.cost_autotuned = out.scenario.test_autotuned->report.cost;
  } catch (const std::exception& e) {
    out.row.error = fmt::format("autotuned: {}", e.what());
  }
  try {
    out.scenario.test_default = run_test(config, defaults);
    out.row.cost_default = out.scenario.test_default->report.cost;
  } catch (const std::exception& e) {
    out.row.error += fmt::format("{}default: {}", out.row.error.empty() ? "" : "; ", e.what());
  }
  if (out.row.cost_default && out.row.cost_autotuned) {
    out.row.improvement = (*out.row.cost_default - *out.row.cost_autotuned) / *out.row.cost_default;
  }
  return out;
}

}  // namespace

SweepResult run_sweep(const ScenarioConfig& config, const std::vector<double>& alphas, unsigned jobs)
{
  if (alphas.empty()) {
    throw ConfigError("sweep: alpha list is empty");
  }
  config.validate();
  GainSet defaults = load_gain_set(config.default_gain_file, config.autopilot.rates);
  defaults.mode = GainMode::fixed_default;
  const std::string hash = file_sha256(config.default_gain_file);

  std::vector<AlphaOutcome> outcomes(alphas.size());
  jobs = std::max(jobs, 1u);
  for (std::size_t begin = 0; begin < alphas.size(); begin += jobs) {
    const std::size_t end = std::min(alphas.size(), begin + jobs);
    std::vector<std::future<AlphaOutcome>> batch;
    for (std::size_t i = begin; i < end; ++i) {
      batch.push_back(std::async(jobs > 1 ? std::launch::async : std::launch::deferred, run_alpha, config,
                                 alphas[i], std::cref(defaults), std::cref(hash)));
    }
    for (std::size_t i = begin; i < end; ++i) {
      outcomes[i] = batch[i - begin].get();
    }
  }

  SweepResult result;
  for (auto& o : outcomes) {
    result.rows.push_back(std::move(o.row));
    result.scenarios.push_back(std::move(o.scenario));
  }
  return result;
}

}  // namespace quadtune
