#include <quadtune/guidance.hpp>

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace quadtune
{
void GuidanceLimits::validate() const
{
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(v_max) || !positive(a_max) || !positive(psi_rate_max) || !positive(psi_accel_max)) {
    throw std::invalid_argument("guidance limits must all be strictly positive");
  }
}

DistanceProfile plan_distance(double distance, double v_max, double a_max)
{
  if (!std::isfinite(distance) || distance < 0.0) {
    throw std::invalid_argument("plan_distance: distance must be finite and nonnegative");
  }
  if (!(v_max > 0.0) || !(a_max > 0.0) || !std::isfinite(v_max) || !std::isfinite(a_max)) {
    throw std::invalid_argument("plan_distance: speed and acceleration limits must be positive");
  }
  DistanceProfile p;
  p.distance = distance;
  p.accel = a_max;
  if (distance == 0.0) {
    return p;
  }
  if (distance >= v_max * v_max / a_max) {
    p.shape = ProfileShape::trapezoid;
    p.t1 = v_max / a_max;
    p.t2 = distance / v_max;
    p.tf = p.t1 + p.t2;
    p.v_peak = v_max;
  } else {
    p.shape = ProfileShape::triangle;
    p.t1 = std::sqrt(distance / a_max);
    p.t2 = p.t1;
    p.tf = 2.0 * p.t1;
    p.v_peak = std::sqrt(distance * a_max);
  }
  return p;
}

double distance_at(const DistanceProfile& p, double t)
{
  if (t <= 0.0) {
    return 0.0;
  }
  if (t >= p.tf) {
    return p.distance;
  }
  const double q1 = 0.5 * p.accel * p.t1 * p.t1;
  if (t < p.t1) {
    return 0.5 * p.accel * t * t;
  }
  if (t < p.t2) {
    return q1 + p.v_peak * (t - p.t1);
  }
  const double q2 = q1 + p.v_peak * (p.t2 - p.t1);
  const double s = t - p.t2;
  return q2 + p.v_peak * s - 0.5 * p.accel * s * s;
}

double speed_at(const DistanceProfile& p, double t)
{
  if (t <= 0.0 || t >= p.tf) {
    return 0.0;
  }
  if (t < p.t1) {
    return p.accel * t;
  }
  if (t < p.t2) {
    return p.v_peak;
  }
  return p.v_peak - p.accel * (t - p.t2);
}

double acceleration_at(const DistanceProfile& p, double t)
{
  if (t <= 0.0 || t >= p.tf) {
    return 0.0;
  }
  if (t < p.t1) {
    return p.accel;
  }
  if (t < p.t2) {
    return 0.0;
  }
  return -p.accel;
}

GuidanceProfile plan_leg(const Vector3& start, const Vector3& end, const GuidanceLimits& limits)
{
  limits.validate();
  if (!start.allFinite() || !end.allFinite()) {
    throw std::invalid_argument("plan_leg: non-finite waypoint");
  }
  GuidanceProfile profile;
  profile.start = start;
  profile.end = end;
  profile.motion = plan_distance((end - start).norm(), limits.v_max, limits.a_max);
  return profile;
}

PositionSetpoint setpoint_at(const GuidanceProfile& profile, double t)
{
  const double d = profile.motion.distance;
  if (d <= 0.0) {
    return {profile.start, Vector3::Zero()};
  }
  if (t >= profile.motion.tf) {
    return {profile.end, Vector3::Zero()};
  }
  const Vector3 direction = (profile.end - profile.start) / d;
  return {profile.start + direction * distance_at(profile.motion, t),
          direction * speed_at(profile.motion, t)};
}

double wrap_angle(double angle)
{
  double wrapped = std::remainder(angle, 2.0 * std::numbers::pi);
  if (wrapped <= -std::numbers::pi) {
    wrapped += 2.0 * std::numbers::pi;
  }
  return wrapped;
}

double azimuth_delta(double from, double to)
{
  const double raw = to - from;
  if (std::abs(raw) <= std::numbers::pi) {
    return raw;
  }
  return wrap_angle(raw);
}

AzimuthProfile plan_azimuth(double from, double to, const GuidanceLimits& limits)
{
  limits.validate();
  if (!std::isfinite(from) || !std::isfinite(to)) {
    throw std::invalid_argument("plan_azimuth: non-finite azimuth");
  }
  const double delta = azimuth_delta(from, to);
  AzimuthProfile profile;
  profile.start = from;
  profile.direction = delta < 0.0 ? -1.0 : 1.0;
  profile.motion = plan_distance(std::abs(delta), limits.psi_rate_max, limits.psi_accel_max);
  return profile;
}

AzimuthSetpoint azimuth_setpoint_at(const AzimuthProfile& profile, double t)
{
  return {wrap_angle(profile.start + profile.direction * distance_at(profile.motion, t)),
          profile.direction * speed_at(profile.motion, t)};
}

AzimuthSetpoint azimuth_setpoint_at(double from, double to, const GuidanceLimits& limits, double t)
{
  return azimuth_setpoint_at(plan_azimuth(from, to, limits), t);
}

}  // namespace quadtune
