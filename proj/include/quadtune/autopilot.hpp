#pragma once

// Cascaded multicopter autopilot:
//   position P (G_r) -> velocity PID (G_v) -> thrust vector -> attitude setpoint
//   -> attitude P (G_q) -> body-rate PID + feedforward (G_w) -> moment -> mixer.
// Errors are setpoint minus measurement throughout.

#include <quadtune/adaptive_law.hpp>
#include <quadtune/gains.hpp>
#include <quadtune/vehicle.hpp>

#include <array>
#include <cstdint>

namespace quadtune
{
/// One RCAC hyperparameter row per controller block.
struct RcacTable
{
  RcacHyperparameters position;
  RcacHyperparameters velocity;
  RcacHyperparameters attitude;
  RcacHyperparameters rate;

  const RcacHyperparameters& row(ControllerBlock block) const;
  RcacHyperparameters& row(ControllerBlock block);

  /// P0 / Ru / normalization per block as used by the autotuner, Rz = 1. sigma is -1
  /// for every block because errors are setpoint minus measurement, which makes the
  /// control-to-error coefficient negative.
  static RcacTable defaults();
};

struct AutopilotConfig
{
  LoopRates rates;
  VehicleParameters nominal;       // geometry, rotor model and nominal mass (mass_scale ignored)
  double tilt_max = 0.7853981633974483;  // rad
  double thrust_min_fraction = 0.12;     // of the rotor thrust limit
  double thrust_max_fraction = 0.9;
  double velocity_max_xy = 12.0;   // m/s
  double velocity_max_z = 6.0;     // m/s
  Vector3 rate_max = Vector3(3.839724354387525, 3.839724354387525, 3.490658503988659);  // rad/s
  double thrust_epsilon = 1e-6;    // N; below this the attitude setpoint is held
  /// Physical output per unit of controller output, per block (G_r, G_v, G_q, G_w).
  /// The velocity loop works in units of g; gains are always reported in physical units.
  Vector4 output_scale = Vector4(1.0, kGravity, 1.0, 1.0);

  double nominal_mass() const { return nominal.mass; }
  double thrust_limit() const { return 4.0 * nominal.rotor_thrust_max(); }
  /// Body moment that a normalized rate-loop output of 1 maps to.
  Vector3 moment_scale() const;

  void validate() const;
};

struct SetpointBundle
{
  Vector3 position_sp = Vector3::Zero();       // m, guidance
  Vector3 velocity_sp = Vector3::Zero();       // m/s, guidance feedforward
  double azimuth_sp = 0.0;                     // rad
  double azimuth_rate_sp = 0.0;                // rad/s
  Vector3 velocity_command = Vector3::Zero();  // m/s, G_r output plus feedforward
  Vector3 thrust_vector_sp = Vector3::Zero();  // N, ENU
  Quaternion attitude_sp = Quaternion::Identity();
  double collective_thrust = 0.0;              // N
  Vector3 rate_sp = Vector3::Zero();           // rad/s, body
  Vector3 moment_sp = Vector3::Zero();         // N m, body
};

struct LoopErrors
{
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  Vector3 attitude = Vector3::Zero();
  Vector3 rate = Vector3::Zero();
};

/// Guidance inputs to the autopilot.
struct GuidanceCommand
{
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  double azimuth = 0.0;
  double azimuth_rate = 0.0;
};

// Pure loop laws. These take gains directly and are what the stateful
// Autopilot composes.

/// v_sp = gr .* e + feedforward.
Vector3 position_loop(const Vector3& position_error, const Vector3& gr, const Vector3& feedforward);

struct ThrustEnvelope
{
  double mass = 1.0;        // kg, nominal
  double z_min = 0.0;       // N
  double z_max = 0.0;       // N
  double total_max = 0.0;   // N
  double tilt_max = 0.0;    // rad
};

struct ClampedThrust
{
  Vector3 thrust = Vector3::Zero();
  std::array<bool, 3> saturated{};
};

/// thrust = m (u + g e_z) clamped to the vertical band, tilt cone and total limit.
ClampedThrust thrust_from_acceleration(const Vector3& accel_command, const ThrustEnvelope& envelope);

struct AttitudeSetpoint
{
  Quaternion attitude = Quaternion::Identity();
  double collective_thrust = 0.0;
  bool held = false;  // thrust vector too small; previous attitude kept
};

AttitudeSetpoint attitude_setpoint(const Vector3& thrust_vector, double azimuth, const Quaternion& previous,
                                   double thrust_epsilon = 1e-6);

/// Body-frame attitude error 2 sign(qe_w) qe_vec with qe = q^-1 q_sp.
Vector3 attitude_error(const Quaternion& attitude_sp, const Quaternion& attitude);

Vector3 attitude_loop(const Quaternion& attitude_sp, const Quaternion& attitude, const Vector3& gq);

/// Fixed-gain evaluation of the rate law from a regressor history; for tests and
/// documentation of the law's form.
Vector3 rate_law(const Eigen::Matrix<double, 3, 4>& gw, const Vector3& g_latest, const Vector3& gamma,
                 const Vector3& g_previous, const Vector3& feedforward);

/// Thrust-priority allocation: yaw moment is reduced first, then roll/pitch, and
/// thrust only when even zero moment is infeasible.
ActuatorCommand mix(double collective_thrust, const Vector3& moment, const VehicleParameters& params);

/// Multirate cascaded autopilot. Each call is one rate-loop tick; the position and
/// attitude loops run on their sub-multiples and hold their outputs in between.
class Autopilot
{
public:
  Autopilot(const AutopilotConfig& config, const GainSet& initial, GainMode mode, const RcacTable& rcac);

  /// Throws NumericalAbort naming the first block that produced a non-finite value.
  ActuatorCommand step(const Measurement& measurement, const GuidanceCommand& guidance);

  GainSet gains() const;
  GainMode mode() const { return mode_; }
  const SetpointBundle& setpoints() const { return setpoints_; }
  const LoopErrors& errors() const { return errors_; }
  const ActuatorCommand& last_command() const { return command_; }
  std::uint64_t tick() const { return tick_; }
  bool attitude_setpoint_held() const { return attitude_held_; }
  const AutopilotConfig& config() const { return config_; }
  const SisoController<double>& controller(ControllerBlock block, int axis) const;

  bool position_tick() const { return tick_ % position_divider_ == 0; }
  bool attitude_tick() const { return tick_ % attitude_divider_ == 0; }

private:
  SisoController<double>& channel(ControllerBlock block, int axis);
  double scale_of(ControllerBlock block) const;
  void run_position_loops(const Measurement& m, const GuidanceCommand& guidance);
  void run_attitude_loop(const Measurement& m);
  void run_rate_loop(const Measurement& m);

  AutopilotConfig config_;
  GainMode mode_;
  std::array<SisoController<double>, GainSet::kChannels> channels_;
  std::uint64_t position_divider_ = 20;
  std::uint64_t attitude_divider_ = 4;
  std::uint64_t tick_ = 0;
  ThrustEnvelope envelope_;
  Vector3 moment_scale_ = Vector3::Ones();

  SetpointBundle setpoints_;
  LoopErrors errors_;
  ActuatorCommand command_;
  bool attitude_held_ = false;
  std::array<bool, 3> velocity_saturated_{};
  std::array<bool, 3> rate_saturated_{};
};

}  // namespace quadtune
