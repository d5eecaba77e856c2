#pragma once

// Experiment orchestration: learning flight with adaptation, test flights with
// frozen gains, the position-tracking cost, and the vehicle-mass sweep.

#include <quadtune/autopilot.hpp>
#include <quadtune/missions.hpp>
#include <quadtune/vehicle.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace quadtune
{
enum class GainSource { default_file, autotuned_snapshot, zero };
enum class MissionKind { learning, hilbert, custom };

std::string_view to_string(GainSource source);
std::string_view to_string(MissionKind kind);

struct LearningParameters
{
  double z_hov = 5.0;
  double x_inc = 5.0;
  double y_inc = 5.0;
  double z_inc = 5.0;
};

struct HilbertParameters
{
  int order = 2;
  double side = 10.0;     // m
  double altitude = 5.0;  // m
};

struct ScenarioConfig
{
  std::string scenario_id = "sim";
  std::string vehicle_file;
  VehicleParameters vehicle;
  MeasurementNoise noise;
  std::uint64_t seed = 1;

  MissionKind mission = MissionKind::learning;
  LearningParameters learning;
  HilbertParameters test;
  std::string mission_file;  // MissionKind::custom
  GuidanceLimits limits{6.0, 1.0, 2.0, 0.5};
  double acceptance_radius = 0.3;
  double hold_time = 2.0;

  GainSource gain_source = GainSource::default_file;
  std::string default_gain_file;
  std::string snapshot_file;

  RcacTable rcac = RcacTable::defaults();
  AutopilotConfig autopilot;
  double alpha = 1.0;
  double log_rate_hz = 50.0;
  double max_flight_time = 900.0;  // s, hard cap per flight
  std::string output_dir = "out";

  /// Throws ConfigError.
  void validate() const;
};

/// Built-in scenario profiles: "sim" (5 m hover, 5 m increments, 6 m/s, 1 m/s^2,
/// 10 m test square) and "mair" (2 m hover, 4/4/1 m increments, 3 m/s, 1.2 m/s^2,
/// 4 m test square). Throws ConfigError for unknown names.
ScenarioConfig scenario_profile(std::string_view name);

struct LogRow
{
  double t = 0.0;
  int leg = 0;
  bool in_window = false;  // counts toward the tracking cost
  Vector3 position_sp = Vector3::Zero();
  Vector3 velocity_sp = Vector3::Zero();
  double azimuth_sp = 0.0;
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  Quaternion attitude = Quaternion::Identity();
  Vector3 angular_rate = Vector3::Zero();
  Vector3 position_error = Vector3::Zero();  // setpoint - true position
  LoopErrors loop_errors;
  Vector3 velocity_command = Vector3::Zero();
  Vector3 thrust_vector_sp = Vector3::Zero();
  Vector3 rate_sp = Vector3::Zero();
  Vector3 moment_sp = Vector3::Zero();
  Vector4 rotor_speeds = Vector4::Zero();
  Eigen::Matrix<double, GainSet::kCount, 1> gains = Eigen::Matrix<double, GainSet::kCount, 1>::Zero();
};

struct FlightLog
{
  std::string scenario;
  double log_rate_hz = 50.0;
  std::vector<LogRow> rows;
  double window_start = 0.0;  // s
  double window_end = 0.0;    // s
  bool completed = false;
  std::size_t legs_flown = 0;
};

struct CostReport
{
  double cost = 0.0;       // J, m^2/s
  double duration = 0.0;   // T, s
  std::size_t samples = 0; // N
  Vector3 rms = Vector3::Zero();
  bool completed = false;
};

/// J = (1/T) sum z_i^T z_i over the rows flagged in_window, T = window_end - window_start.
/// Throws std::invalid_argument for an empty window or T <= 0.
CostReport compute_cost(const FlightLog& log);

struct FlightSpec
{
  std::string scenario;
  MissionPlan plan;
  VehicleParameters vehicle;  // true vehicle, mass_scale applied
  MeasurementNoise noise;
  std::uint64_t seed = 1;
  AutopilotConfig autopilot;
  GainSet gains;
  GainMode mode = GainMode::fixed_default;
  RcacTable rcac = RcacTable::defaults();
  double log_rate_hz = 50.0;
  double max_flight_time = 900.0;
};

struct FlightResult
{
  FlightLog log;
  GainSet final_gains;
};

/// Flies a mission from rest on the ground below its first waypoint. Throws
/// MissionAbort or NumericalAbort.
FlightResult fly(const FlightSpec& spec);

struct AutotuneResult
{
  FlightLog log;
  GainSet snapshot;  // terminal gains, mode adaptive
};

struct TestResult
{
  FlightLog log;
  CostReport report;
};

/// Vehicle (with alpha applied), noise, seed, autopilot and logging settings of a
/// scenario; the caller fills in mission, gains and mode.
FlightSpec make_flight_spec(const ScenarioConfig& config);

MissionPlan learning_plan(const ScenarioConfig& config);
MissionPlan test_plan(const ScenarioConfig& config);

/// Learning flight with all 27 gains starting at zero.
AutotuneResult run_autotune(const ScenarioConfig& config);

/// Test flight with frozen gains.
TestResult run_test(const ScenarioConfig& config, const GainSet& gains);

/// Resolves the config's gain source (default file, snapshot file, or zeros).
GainSet resolve_gains(const ScenarioConfig& config);

struct SweepRow
{
  double alpha = 1.0;
  std::optional<double> cost_default;
  std::optional<double> cost_autotuned;
  std::optional<double> improvement;  // (J_D - J_A) / J_D
  std::string default_gain_hash;
  std::string error;  // empty on success

  bool ok() const { return error.empty(); }
};

struct SweepScenario
{
  double alpha = 1.0;
  std::optional<AutotuneResult> autotune;
  std::optional<TestResult> test_default;
  std::optional<TestResult> test_autotuned;
};

struct SweepResult
{
  std::vector<SweepRow> rows;
  std::vector<SweepScenario> scenarios;
};

/// For each alpha: re-autotune from zero, then fly the test mission with the fresh
/// gains and with the default gain file. Failures are recorded per row. Alphas run
/// concurrently up to `jobs` at a time; results are ordered as given.
SweepResult run_sweep(const ScenarioConfig& config, const std::vector<double>& alphas, unsigned jobs = 1);

/// Hex SHA-256 of a file's bytes.
std::string file_sha256(const std::string& path);

}  // namespace quadtune
