#pragma once

#include <quadtune/guidance.hpp>
#include <quadtune/types.hpp>

#include <json.hpp>

#include <algorithm>
#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace quadtune
{
struct Waypoint
{
  double x = 0.0;  // m, ENU
  double y = 0.0;
  double z = 0.0;
  double psi = 0.0;  // rad

  Vector3 position() const { return {x, y, z}; }
  bool operator==(const Waypoint&) const = default;
};

struct MissionPlan
{
  std::string name;
  std::vector<Waypoint> waypoints;
  GuidanceLimits limits;
  double acceptance_radius = 0.3;  // m
  double hold_time = 2.0;          // s
  // Stall guard: after hold_time past the end of the profile the leg is accepted
  // if the vehicle is within this radius.
  double stall_radius = 1.0;       // m
  // A leg aborts once its elapsed time exceeds tf + max(factor * tf, minimum).
  double leg_timeout_factor = 3.0;
  double leg_timeout_min = 15.0;   // s
  double divergence_radius = 50.0; // m

  /// Throws ConfigError.
  void validate() const;
};

/// The 13-waypoint excitation trajectory: vertical, lateral and longitudinal
/// doublets about the hover point, three yaw turns, then landing.
MissionPlan learning_mission(double z_hov, double x_inc, double y_inc, double z_inc,
                             const GuidanceLimits& limits);

/// Cell coordinates of the Hilbert curve of the given order, in curve order.
std::vector<Eigen::Vector2i> hilbert_cells(int order);

/// Hilbert-curve vertices on a side x side square centered on the origin at
/// altitude z_alt, with a takeoff waypoint above the first vertex and a landing
/// waypoint below the last.
MissionPlan hilbert_mission(int order, double side, double z_alt, const GuidanceLimits& limits);

void to_json(nlohmann::json& j, const Waypoint& w);
void from_json(const nlohmann::json& j, Waypoint& w);
void to_json(nlohmann::json& j, const GuidanceLimits& l);
void from_json(const nlohmann::json& j, GuidanceLimits& l);
void to_json(nlohmann::json& j, const MissionPlan& m);
void from_json(const nlohmann::json& j, MissionPlan& m);

MissionPlan load_mission(const std::string& path);
void save_mission(const MissionPlan& plan, const std::string& path);

struct GuidanceLeg
{
  std::size_t target = 0;  // index of the waypoint this leg flies to
  GuidanceProfile translation;
  AzimuthProfile azimuth;
  double start_time = 0.0;

  double duration() const { return std::max(translation.duration(), azimuth.duration()); }
};

struct MissionSetpoint
{
  PositionSetpoint position;
  AzimuthSetpoint azimuth;
};

/// Waypoint sequencer. Legs start from the previous leg's terminal setpoint and
/// switch once the profile has finished and the vehicle is inside the acceptance
/// radius (or the stall guard fires).
class MissionRunner
{
public:
  MissionRunner(MissionPlan plan, const Vector3& start_position, double start_azimuth, double start_time = 0.0);

  /// Updates leg switching for the given time and position. Throws MissionAbort on
  /// stall or divergence.
  const GuidanceLeg& advance(const Vector3& position, double time);

  MissionSetpoint setpoint(double time) const;

  bool complete() const { return complete_; }
  const GuidanceLeg& current_leg() const { return leg_; }
  std::size_t legs_completed() const { return legs_completed_; }
  std::optional<double> completion_time() const { return completion_time_; }
  const MissionPlan& plan() const { return plan_; }

private:
  void start_leg(std::size_t target, const Vector3& from, double from_azimuth, double time);

  MissionPlan plan_;
  GuidanceLeg leg_;
  bool complete_ = false;
  std::size_t legs_completed_ = 0;
  std::optional<double> completion_time_;
};

}  // namespace quadtune
