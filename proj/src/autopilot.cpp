#include <quadtune/autopilot.hpp>

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace quadtune
{
namespace
{
ControllerStructure structure_of(ControllerBlock block)
{
  switch (block) {
    case ControllerBlock::position:
    case ControllerBlock::attitude:
      return {ControllerKind::P};
    case ControllerBlock::velocity:
      return {ControllerKind::PID};
    case ControllerBlock::rate:
      return {ControllerKind::PID_FF};
  }
  return {};
}

constexpr std::array<ControllerBlock, 4> kBlocks = {ControllerBlock::position, ControllerBlock::velocity,
                                                    ControllerBlock::attitude, ControllerBlock::rate};

std::size_t channel_index(ControllerBlock block, int axis)
{
  return static_cast<std::size_t>(static_cast<int>(block) * 3 + axis);
}

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& v, const char* block)
{
  if (!v.allFinite()) {
    throw NumericalAbort(fmt::format("autopilot: non-finite output from {}", block));
  }
}

// Largest s in [0, 1] keeping base + s * dir inside [0, upper] element-wise.
double feasible_scale(const Vector4& base, const Vector4& dir, double upper)
{
  double s = 1.0;
  for (int i = 0; i < 4; ++i) {
    if (dir(i) > 0.0) {
      s = std::min(s, (upper - base(i)) / dir(i));
    } else if (dir(i) < 0.0) {
      s = std::min(s, -base(i) / dir(i));
    }
  }
  return std::clamp(s, 0.0, 1.0);
}

}  // namespace

const RcacHyperparameters& RcacTable::row(ControllerBlock block) const
{
  switch (block) {
    case ControllerBlock::position:
      return position;
    case ControllerBlock::velocity:
      return velocity;
    case ControllerBlock::attitude:
      return attitude;
    case ControllerBlock::rate:
      return rate;
  }
  return position;
}

RcacHyperparameters& RcacTable::row(ControllerBlock block)
{
  return const_cast<RcacHyperparameters&>(std::as_const(*this).row(block));
}

RcacTable RcacTable::defaults()
{
  RcacTable t;
  t.position = {0.01, 0.01, 1.0, -1.0, Normalization::identity};
  t.velocity = {0.1, 0.01, 1.0, -1.0, Normalization::scaled_erf};
  t.attitude = {1.0, 0.001, 1.0, -1.0, Normalization::identity};
  t.rate = {0.0001, 0.1, 1.0, -1.0, Normalization::scaled_erf};
  return t;
}

Vector3 AutopilotConfig::moment_scale() const
{
  const double f_max = nominal.rotor_thrust_max();
  const double roll_pitch = std::sqrt(2.0) * nominal.arm_length * f_max;
  const double yaw = 2.0 * nominal.torque_coeff / nominal.thrust_coeff * f_max;
  return {roll_pitch, roll_pitch, yaw};
}

void AutopilotConfig::validate() const
{
  rates.validate();
  nominal.validate();
  if (!(tilt_max > 0.0 && tilt_max < 1.5707963267948966)) {
    throw ConfigError("autopilot: tilt_max must lie in (0, pi/2)");
  }
  if (!(thrust_min_fraction >= 0.0 && thrust_min_fraction < thrust_max_fraction && thrust_max_fraction <= 1.0)) {
    throw ConfigError("autopilot: thrust fractions must satisfy 0 <= min < max <= 1");
  }
  if (!(velocity_max_xy > 0.0) || !(velocity_max_z > 0.0) || !(rate_max.array() > 0.0).all()) {
    throw ConfigError("autopilot: velocity and rate limits must be positive");
  }
  if (!output_scale.allFinite() || !(output_scale.array() > 0.0).all()) {
    throw ConfigError("autopilot: output scales must be positive");
  }
}

Vector3 position_loop(const Vector3& position_error, const Vector3& gr, const Vector3& feedforward)
{
  return gr.cwiseProduct(position_error) + feedforward;
}

ClampedThrust thrust_from_acceleration(const Vector3& accel_command, const ThrustEnvelope& envelope)
{
  ClampedThrust out;
  Vector3 t = envelope.mass * (accel_command + kGravity * Vector3::UnitZ());

  const double z = std::clamp(t.z(), envelope.z_min, envelope.z_max);
  out.saturated[2] = z != t.z();
  t.z() = z;

  const double xy_tilt = z * std::tan(envelope.tilt_max);
  const double xy_total = std::sqrt(std::max(envelope.total_max * envelope.total_max - z * z, 0.0));
  const double xy_max = std::min(xy_tilt, xy_total);
  const double xy = t.head<2>().norm();
  if (xy > xy_max) {
    t.head<2>() *= xy_max / xy;
    out.saturated[0] = out.saturated[1] = true;
  }
  out.thrust = t;
  return out;
}

AttitudeSetpoint attitude_setpoint(const Vector3& thrust_vector, double azimuth, const Quaternion& previous,
                                   double thrust_epsilon)
{
  const double magnitude = thrust_vector.norm();
  if (!(magnitude > thrust_epsilon)) {
    return {previous, magnitude, true};
  }
  const Vector3 body_z = thrust_vector / magnitude;
  const Vector3 heading_y(-std::sin(azimuth), std::cos(azimuth), 0.0);
  Vector3 body_x = heading_y.cross(body_z);
  if (body_x.norm() < 1e-9) {
    // thrust along the heading's lateral axis; fall back on the heading axis itself
    const Vector3 heading_x(std::cos(azimuth), std::sin(azimuth), 0.0);
    body_x = body_z.cross(heading_x).cross(body_z);
  }
  body_x.normalize();
  const Vector3 body_y = body_z.cross(body_x);

  Matrix3 rotation;
  rotation << body_x, body_y, body_z;
  Quaternion q(rotation);
  q.normalize();
  if (q.w() < 0.0) {
    q.coeffs() = -q.coeffs();
  }
  return {q, magnitude, false};
}

Vector3 attitude_error(const Quaternion& attitude_sp, const Quaternion& attitude)
{
  const Quaternion qe = attitude.conjugate() * attitude_sp;
  const double sign = qe.w() >= 0.0 ? 1.0 : -1.0;
  return 2.0 * sign * qe.vec();
}

Vector3 attitude_loop(const Quaternion& attitude_sp, const Quaternion& attitude, const Vector3& gq)
{
  return gq.cwiseProduct(attitude_error(attitude_sp, attitude));
}

Vector3 rate_law(const Eigen::Matrix<double, 3, 4>& gw, const Vector3& g_latest, const Vector3& gamma,
                 const Vector3& g_previous, const Vector3& feedforward)
{
  Vector3 u;
  for (int i = 0; i < 3; ++i) {
    const Eigen::Vector4d phi(g_latest(i), gamma(i), g_latest(i) - g_previous(i), feedforward(i));
    u(i) = gw.row(i).dot(phi);
  }
  return u;
}

ActuatorCommand mix(double collective_thrust, const Vector3& moment, const VehicleParameters& params)
{
  if (!std::isfinite(collective_thrust) || collective_thrust < 0.0 || !moment.allFinite()) {
    throw std::invalid_argument("mix: thrust must be finite and nonnegative, moment finite");
  }
  const double f_max = params.rotor_thrust_max();
  const Eigen::Matrix4d inverse = RotorLayout::allocation_inverse(params);

  double thrust = collective_thrust;
  const bool thrust_clipped = thrust > 4.0 * f_max;
  thrust = std::min(thrust, 4.0 * f_max);

  const Vector4 base = inverse * Vector4(thrust, 0.0, 0.0, 0.0);
  const Vector4 roll_pitch = inverse * Vector4(0.0, moment.x(), moment.y(), 0.0);
  const Vector4 yaw = inverse * Vector4(0.0, 0.0, 0.0, moment.z());

  const double s_rp = feasible_scale(base, roll_pitch, f_max);
  const Vector4 with_rp = base + s_rp * roll_pitch;
  const double s_yaw = feasible_scale(with_rp, yaw, f_max);
  const Vector4 forces = (with_rp + s_yaw * yaw).cwiseMax(0.0).cwiseMin(f_max);

  ActuatorCommand cmd;
  cmd.rotor_speeds = (forces / params.thrust_coeff).cwiseSqrt();
  if (thrust_clipped || s_rp < 1.0 || s_yaw < 1.0) {
    for (int i = 0; i < 4; ++i) {
      cmd.saturated[static_cast<std::size_t>(i)] =
        forces(i) <= 1e-12 * f_max || forces(i) >= f_max * (1.0 - 1e-12);
    }
  }
  return cmd;
}

Autopilot::Autopilot(const AutopilotConfig& config, const GainSet& initial, GainMode mode,
                     const RcacTable& rcac)
: config_(config), mode_(mode)
{
  config_.validate();
  config_.nominal.mass_scale = 1.0;
  for (auto block : kBlocks) {
    rcac.row(block).validate();
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::VectorXd theta = channel_gains(initial, block, axis) / scale_of(block);
      channels_[channel_index(block, axis)] = SisoController<double>(
        structure_of(block), rcac.row(block), mode == GainMode::adaptive,
        SisoController<double>::State::Vector(theta));
    }
  }
  position_divider_ = static_cast<std::uint64_t>(std::llround(config_.rates.rate_hz / config_.rates.position_hz));
  attitude_divider_ = static_cast<std::uint64_t>(std::llround(config_.rates.rate_hz / config_.rates.attitude_hz));

  const double limit = config_.thrust_limit();
  envelope_.mass = config_.nominal_mass();
  envelope_.z_min = config_.thrust_min_fraction * limit;
  envelope_.z_max = config_.thrust_max_fraction * limit;
  envelope_.total_max = config_.thrust_max_fraction * limit;
  envelope_.tilt_max = config_.tilt_max;
  moment_scale_ = config_.moment_scale();
}

double Autopilot::scale_of(ControllerBlock block) const
{
  return config_.output_scale(static_cast<int>(block));
}

SisoController<double>& Autopilot::channel(ControllerBlock block, int axis)
{
  return channels_[channel_index(block, axis)];
}

const SisoController<double>& Autopilot::controller(ControllerBlock block, int axis) const
{
  return channels_.at(channel_index(block, axis));
}

GainSet Autopilot::gains() const
{
  GainSet g;
  g.mode = mode_;
  for (auto block : kBlocks) {
    for (int axis = 0; axis < 3; ++axis) {
      const auto& ch = channels_[channel_index(block, axis)];
      set_channel_gains(g, block, axis, Eigen::VectorXd(ch.gains()) * scale_of(block));
      g.steps[channel_index(block, axis)] = ch.adaptive() ? ch.state().step : 0;
    }
  }
  return g;
}

ActuatorCommand Autopilot::step(const Measurement& measurement, const GuidanceCommand& guidance)
{
  if (tick_ % position_divider_ == 0) {
    run_position_loops(measurement, guidance);
  }
  if (tick_ % attitude_divider_ == 0) {
    setpoints_.azimuth_rate_sp = guidance.azimuth_rate;
    run_attitude_loop(measurement);
  }
  run_rate_loop(measurement);
  ++tick_;
  return command_;
}

void Autopilot::run_position_loops(const Measurement& m, const GuidanceCommand& guidance)
{
  setpoints_.position_sp = guidance.position;
  setpoints_.velocity_sp = guidance.velocity;
  setpoints_.azimuth_sp = guidance.azimuth;
  setpoints_.azimuth_rate_sp = guidance.azimuth_rate;

  errors_.position = guidance.position - m.position;
  Vector3 command;
  for (int i = 0; i < 3; ++i) {
    command(i) = scale_of(ControllerBlock::position) * channel(ControllerBlock::position, i).step(errors_.position(i)) +
                 guidance.velocity(i);
  }
  const double xy = command.head<2>().norm();
  if (xy > config_.velocity_max_xy) {
    command.head<2>() *= config_.velocity_max_xy / xy;
  }
  command.z() = std::clamp(command.z(), -config_.velocity_max_z, config_.velocity_max_z);
  require_finite(command, "G_r (position loop)");
  for (int i = 0; i < 3; ++i) {
    channel(ControllerBlock::position, i)
      .set_applied_control((command(i) - guidance.velocity(i)) / scale_of(ControllerBlock::position));
  }
  setpoints_.velocity_command = command;

  errors_.velocity = command - m.velocity;
  Vector3 accel;
  for (int i = 0; i < 3; ++i) {
    accel(i) = scale_of(ControllerBlock::velocity) * channel(ControllerBlock::velocity, i)
                 .step(errors_.velocity(i), 0.0, velocity_saturated_[static_cast<std::size_t>(i)]);
  }
  require_finite(accel, "G_v (velocity loop)");
  const ClampedThrust clamped = thrust_from_acceleration(accel, envelope_);
  const Vector3 applied = clamped.thrust / envelope_.mass - kGravity * Vector3::UnitZ();
  for (int i = 0; i < 3; ++i) {
    channel(ControllerBlock::velocity, i).set_applied_control(applied(i) / scale_of(ControllerBlock::velocity));
  }
  velocity_saturated_ = clamped.saturated;
  setpoints_.thrust_vector_sp = clamped.thrust;

  const AttitudeSetpoint att =
    attitude_setpoint(clamped.thrust, guidance.azimuth, setpoints_.attitude_sp, config_.thrust_epsilon);
  setpoints_.attitude_sp = att.attitude;
  setpoints_.collective_thrust = att.collective_thrust;
  attitude_held_ = att.held;
  require_finite(setpoints_.attitude_sp.coeffs(), "attitude setpoint");
}

void Autopilot::run_attitude_loop(const Measurement& m)
{
  errors_.attitude = attitude_error(setpoints_.attitude_sp, m.attitude);
  const Vector3 yaw_feedforward = m.attitude.conjugate() * (setpoints_.azimuth_rate_sp * Vector3::UnitZ());

  Vector3 rate_sp;
  for (int i = 0; i < 3; ++i) {
    rate_sp(i) = scale_of(ControllerBlock::attitude) * channel(ControllerBlock::attitude, i).step(errors_.attitude(i)) +
                 yaw_feedforward(i);
  }
  require_finite(rate_sp, "G_q (attitude loop)");
  rate_sp = rate_sp.cwiseMax(-config_.rate_max).cwiseMin(config_.rate_max);
  for (int i = 0; i < 3; ++i) {
    channel(ControllerBlock::attitude, i)
      .set_applied_control((rate_sp(i) - yaw_feedforward(i)) / scale_of(ControllerBlock::attitude));
  }
  setpoints_.rate_sp = rate_sp;
}

void Autopilot::run_rate_loop(const Measurement& m)
{
  errors_.rate = setpoints_.rate_sp - m.angular_rate;
  Vector3 u;
  for (int i = 0; i < 3; ++i) {
    u(i) = scale_of(ControllerBlock::rate) * channel(ControllerBlock::rate, i)
             .step(errors_.rate(i), setpoints_.rate_sp(i), rate_saturated_[static_cast<std::size_t>(i)]);
  }
  require_finite(u, "G_w (rate loop)");
  const Vector3 clamped = u.cwiseMax(-1.0).cwiseMin(1.0);
  for (int i = 0; i < 3; ++i) {
    channel(ControllerBlock::rate, i).set_applied_control(clamped(i) / scale_of(ControllerBlock::rate));
    rate_saturated_[static_cast<std::size_t>(i)] = clamped(i) != u(i);
  }
  setpoints_.moment_sp = clamped.cwiseProduct(moment_scale_);

  command_ = mix(setpoints_.collective_thrust, setpoints_.moment_sp, config_.nominal);
  require_finite(command_.rotor_speeds, "mixer");
}

}  // namespace quadtune
