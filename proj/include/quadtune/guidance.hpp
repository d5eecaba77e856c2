#pragma once

// Straight-line waypoint guidance with a trapezoidal speed profile that degrades to
// a triangular one when the leg is too short to reach cruise speed. The same 1-D
// profile drives the azimuth setpoint.

#include <quadtune/types.hpp>

namespace quadtune
{
struct GuidanceLimits
{
  double v_max = 1.0;          // m/s
  double a_max = 1.0;          // m/s^2
  double psi_rate_max = 1.0;   // rad/s
  double psi_accel_max = 1.0;  // rad/s^2

  void validate() const;
};

enum class ProfileShape { trapezoid, triangle };

/// Distance-along-path profile q(t) with q(0) = 0 and q(tf) = distance.
struct DistanceProfile
{
  double distance = 0.0;
  ProfileShape shape = ProfileShape::triangle;
  double accel = 1.0;   // magnitude of acceleration and deceleration
  double t1 = 0.0;      // end of acceleration
  double t2 = 0.0;      // start of deceleration (equals t1 for a triangle)
  double tf = 0.0;
  double v_peak = 0.0;
};

DistanceProfile plan_distance(double distance, double v_max, double a_max);

/// q(t); clamps to [0, distance] outside [0, tf].
double distance_at(const DistanceProfile& profile, double t);
double speed_at(const DistanceProfile& profile, double t);
double acceleration_at(const DistanceProfile& profile, double t);

struct GuidanceProfile
{
  Vector3 start = Vector3::Zero();
  Vector3 end = Vector3::Zero();
  DistanceProfile motion;

  double distance() const { return motion.distance; }
  double duration() const { return motion.tf; }
  ProfileShape shape() const { return motion.shape; }
};

/// Throws std::invalid_argument for non-finite waypoints or invalid limits.
GuidanceProfile plan_leg(const Vector3& start, const Vector3& end, const GuidanceLimits& limits);

struct PositionSetpoint
{
  Vector3 position = Vector3::Zero();
  Vector3 velocity = Vector3::Zero();
};

PositionSetpoint setpoint_at(const GuidanceProfile& profile, double t);

/// Signed turn from `from` to `to`. Differences already within [-pi, pi] are kept as
/// is, so 0 -> pi turns counterclockwise and pi -> 0 clockwise; larger differences
/// wrap to the shortest way round.
double azimuth_delta(double from, double to);

/// Wraps to (-pi, pi].
double wrap_angle(double angle);

struct AzimuthProfile
{
  double start = 0.0;
  double direction = 1.0;  // +1 counterclockwise, -1 clockwise
  DistanceProfile motion;

  double duration() const { return motion.tf; }
};

AzimuthProfile plan_azimuth(double from, double to, const GuidanceLimits& limits);

struct AzimuthSetpoint
{
  double azimuth = 0.0;  // rad, wrapped to (-pi, pi]
  double rate = 0.0;     // rad/s
};

AzimuthSetpoint azimuth_setpoint_at(const AzimuthProfile& profile, double t);
AzimuthSetpoint azimuth_setpoint_at(double from, double to, const GuidanceLimits& limits, double t);

}  // namespace quadtune
