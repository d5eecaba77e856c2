#include <quadtune/vehicle.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace quadtune
{
namespace
{
constexpr std::array<double, 4> kRotorAzimuth = {
  std::numbers::pi / 4.0, 3.0 * std::numbers::pi / 4.0, 5.0 * std::numbers::pi / 4.0,
  7.0 * std::numbers::pi / 4.0};
constexpr std::array<double, 4> kRotorSpin = {1.0, -1.0, 1.0, -1.0};

Eigen::Vector4d rotor_thrusts(const Vector4& rotor_speeds, const VehicleParameters& params)
{
  return params.thrust_coeff * rotor_speeds.array().square().matrix();
}

}  // namespace

double VehicleParameters::hover_rotor_speed() const
{
  return std::sqrt(effective_mass() * kGravity / (4.0 * thrust_coeff));
}

void VehicleParameters::validate() const
{
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(mass) || !positive(arm_length) || !positive(thrust_coeff) || !positive(torque_coeff) ||
      !positive(rotor_time_constant) || !positive(rotor_speed_max) || !positive(mass_scale)) {
    throw ConfigError("vehicle parameters: mass, geometry, rotor coefficients and mass_scale must be positive");
  }
  if (!(drag_coeff >= 0.0) || !std::isfinite(drag_coeff)) {
    throw ConfigError("vehicle parameters: drag_coeff must be nonnegative");
  }
  if (!(inertia.array() > 0.0).all() || !inertia.allFinite()) {
    throw ConfigError("vehicle parameters: inertia entries must be positive");
  }
  if (!wind.allFinite()) {
    throw ConfigError("vehicle parameters: wind must be finite");
  }
}

Eigen::Matrix4d RotorLayout::allocation(const VehicleParameters& params)
{
  Eigen::Matrix4d a;
  const double drag_ratio = params.torque_coeff / params.thrust_coeff;
  for (int i = 0; i < 4; ++i) {
    a(0, i) = 1.0;
    a(1, i) = params.arm_length * std::sin(kRotorAzimuth[i]);
    a(2, i) = -params.arm_length * std::cos(kRotorAzimuth[i]);
    a(3, i) = kRotorSpin[i] * drag_ratio;
  }
  return a;
}

Eigen::Matrix4d RotorLayout::allocation_inverse(const VehicleParameters& params)
{
  return allocation(params).inverse();
}

Vector4 rotor_wrench(const Vector4& rotor_speeds, const VehicleParameters& params)
{
  return RotorLayout::allocation(params) * rotor_thrusts(rotor_speeds, params);
}

VehicleState VehicleState::at_rest(const Vector3& position, double azimuth)
{
  VehicleState s;
  s.position = position;
  s.attitude = Quaternion(Eigen::AngleAxisd(azimuth, Vector3::UnitZ()));
  return s;
}

PackedState pack(const VehicleState& state)
{
  PackedState x;
  x.segment<3>(0) = state.position;
  x.segment<3>(3) = state.velocity;
  x.segment<4>(6) << state.attitude.w(), state.attitude.x(), state.attitude.y(), state.attitude.z();
  x.segment<3>(10) = state.angular_rate;
  x.segment<4>(13) = state.rotor_speeds;
  return x;
}

VehicleState unpack(const PackedState& x)
{
  VehicleState s;
  s.position = x.segment<3>(0);
  s.velocity = x.segment<3>(3);
  s.attitude = Quaternion(x(6), x(7), x(8), x(9));
  s.angular_rate = x.segment<3>(10);
  s.rotor_speeds = x.segment<4>(13);
  return s;
}

PackedState derivatives(const VehicleState& state, const ActuatorCommand& command,
                        const VehicleParameters& params)
{
  const double m = params.effective_mass();
  const Vector4 wrench = rotor_wrench(state.rotor_speeds, params);
  const Matrix3 rotation = state.attitude.normalized().toRotationMatrix();

  const Vector3 thrust_world = rotation * Vector3(0.0, 0.0, wrench(0));
  const Vector3 accel = thrust_world / m - kGravity * Vector3::UnitZ() -
                        params.drag_coeff / m * (state.velocity - params.wind);

  const Vector3& w = state.angular_rate;
  const Vector3 iw = params.inertia.cwiseProduct(w);
  const Vector3 angular_accel = (wrench.tail<3>() - w.cross(iw)).cwiseQuotient(params.inertia);

  const Quaternion& q = state.attitude;
  const Quaternion q_dot_full = q * Quaternion(0.0, w.x(), w.y(), w.z());

  const Vector4 command_speeds = command.rotor_speeds.cwiseMax(0.0).cwiseMin(params.rotor_speed_max);
  const Vector4 rotor_accel = (command_speeds - state.rotor_speeds) / params.rotor_time_constant;

  PackedState dx;
  dx.segment<3>(0) = state.velocity;
  dx.segment<3>(3) = accel;
  dx.segment<4>(6) << 0.5 * q_dot_full.w(), 0.5 * q_dot_full.x(), 0.5 * q_dot_full.y(),
    0.5 * q_dot_full.z();
  dx.segment<3>(10) = angular_accel;
  dx.segment<4>(13) = rotor_accel;
  return dx;
}

VehicleState integrate_step(const VehicleState& state, const ActuatorCommand& command,
                            const VehicleParameters& params, double dt)
{
  if (!(dt > 0.0) || dt > 2e-3) {
    throw std::invalid_argument("integrate_step: dt must lie in (0, 2 ms]");
  }
  const PackedState x0 = pack(state);
  const auto f = [&](const PackedState& x) { return derivatives(unpack(x), command, params); };

  const PackedState k1 = f(x0);
  const PackedState k2 = f(x0 + 0.5 * dt * k1);
  const PackedState k3 = f(x0 + 0.5 * dt * k2);
  const PackedState k4 = f(x0 + dt * k3);
  const PackedState x1 = x0 + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);

  if (!x1.allFinite()) {
    throw NumericalAbort("vehicle_sim: non-finite state after integration step");
  }

  VehicleState next = unpack(x1);
  next.attitude.normalize();

  if (params.ground_contact && next.position.z() <= 0.0) {
    next.position.z() = 0.0;
    next.velocity.z() = std::max(next.velocity.z(), 0.0);
    // resting contact: friction holds the vehicle in place until it lifts off
    next.velocity.x() = 0.0;
    next.velocity.y() = 0.0;
  }
  return next;
}

double total_energy(const VehicleState& state, const VehicleParameters& params)
{
  const double m = params.effective_mass();
  const double kinetic = 0.5 * m * state.velocity.squaredNorm();
  const double potential = m * kGravity * state.position.z();
  const double rotational = 0.5 * state.angular_rate.dot(params.inertia.cwiseProduct(state.angular_rate));
  return kinetic + potential + rotational;
}

Measurement measure(const VehicleState& state, const MeasurementNoise& noise, std::mt19937_64& rng)
{
  Measurement m{state.position, state.velocity, state.attitude, state.angular_rate};
  if (!noise.enabled) {
    return m;
  }
  std::normal_distribution<double> unit(0.0, 1.0);
  const auto draw = [&](double stddev) {
    return Vector3(stddev * unit(rng), stddev * unit(rng), stddev * unit(rng));
  };
  m.position += draw(noise.position_std);
  m.velocity += draw(noise.velocity_std);
  const Vector3 tilt = draw(noise.attitude_std);
  if (tilt.norm() > 0.0) {
    m.attitude = (m.attitude * Quaternion(Eigen::AngleAxisd(tilt.norm(), tilt.normalized()))).normalized();
  }
  m.angular_rate += draw(noise.angular_rate_std);
  return m;
}

}  // namespace quadtune
