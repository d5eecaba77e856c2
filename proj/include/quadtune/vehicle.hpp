#pragma once

// Rigid-body quadcopter model: quad-X rotor layout, first-order rotor lag,
// linear drag, flat-ground contact. Frames are ENU (world) and FLU (body).

#include <quadtune/types.hpp>

#include <array>
#include <random>

namespace quadtune
{
struct VehicleParameters
{
  double mass = 2.0;                              // kg, before mass_scale
  Vector3 inertia = Vector3(0.0217, 0.0217, 0.04);  // kg m^2, diagonal
  double arm_length = 0.25;                       // m, hub to rotor
  double thrust_coeff = 1.2e-5;                   // N s^2 / rad^2
  double torque_coeff = 1.6e-7;                   // N m s^2 / rad^2
  double rotor_time_constant = 0.01;              // s
  double rotor_speed_max = 1100.0;                // rad/s
  double drag_coeff = 0.3;                        // N s / m
  double mass_scale = 1.0;                        // alpha
  Vector3 wind = Vector3::Zero();                 // m/s, ENU
  bool ground_contact = true;

  double effective_mass() const { return mass * mass_scale; }
  double rotor_thrust_max() const { return thrust_coeff * rotor_speed_max * rotor_speed_max; }
  double hover_rotor_speed() const;

  void validate() const;
};

/// Rotor i sits at azimuth 45 + 90 i degrees in the body x-y plane. Rotors 0 and 2
/// spin so that their drag torque is +z, rotors 1 and 3 the opposite way.
struct RotorLayout
{
  /// Maps per-rotor thrust [N] to [collective thrust, Mx, My, Mz].
  static Eigen::Matrix4d allocation(const VehicleParameters& params);
  static Eigen::Matrix4d allocation_inverse(const VehicleParameters& params);
};

/// Collective thrust and body moments produced by the given rotor speeds.
Vector4 rotor_wrench(const Vector4& rotor_speeds, const VehicleParameters& params);

struct ActuatorCommand
{
  Vector4 rotor_speeds = Vector4::Zero();  // rad/s
  std::array<bool, 4> saturated{};
};

struct VehicleState
{
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  Quaternion attitude = Quaternion::Identity();  // body -> ENU
  Vector3 angular_rate = Vector3::Zero();        // body
  Vector4 rotor_speeds = Vector4::Zero();

  static VehicleState at_rest(const Vector3& position, double azimuth);
};

using PackedState = Eigen::Matrix<double, 17, 1>;

PackedState pack(const VehicleState& state);
VehicleState unpack(const PackedState& packed);

PackedState derivatives(const VehicleState& state, const ActuatorCommand& command,
                        const VehicleParameters& params);

/// Single RK4 step, quaternion renormalized, ground contact applied.
/// Throws NumericalAbort on a non-finite result, std::invalid_argument on dt outside (0, 2 ms].
VehicleState integrate_step(const VehicleState& state, const ActuatorCommand& command,
                            const VehicleParameters& params, double dt);

double total_energy(const VehicleState& state, const VehicleParameters& params);

struct MeasurementNoise
{
  bool enabled = false;
  double position_std = 0.0;      // m
  double velocity_std = 0.0;      // m/s
  double attitude_std = 0.0;      // rad, per axis rotation vector
  double angular_rate_std = 0.0;  // rad/s
};

struct Measurement
{
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
  Quaternion attitude = Quaternion::Identity();
  Vector3 angular_rate = Vector3::Zero();
};

Measurement measure(const VehicleState& state, const MeasurementNoise& noise, std::mt19937_64& rng);

}  // namespace quadtune
