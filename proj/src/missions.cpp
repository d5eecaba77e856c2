#include <quadtune/missions.hpp>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <numbers>
#include <utility>

namespace quadtune
{
void MissionPlan::validate() const
{
  if (waypoints.size() < 2) {
    throw ConfigError(fmt::format("mission '{}': at least two waypoints are required", name));
  }
  for (std::size_t i = 0; i < waypoints.size(); ++i) {
    const Waypoint& w = waypoints[i];
    if (!std::isfinite(w.x) || !std::isfinite(w.y) || !std::isfinite(w.z) || !std::isfinite(w.psi)) {
      throw ConfigError(fmt::format("mission '{}': waypoint {} is not finite", name, i + 1));
    }
    if (w.z < 0.0) {
      throw ConfigError(fmt::format("mission '{}': waypoint {} is below ground", name, i + 1));
    }
  }
  try {
    limits.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("mission '{}': {}", name, e.what()));
  }
  if (!(acceptance_radius > 0.0) || !(hold_time >= 0.0) || !(stall_radius >= acceptance_radius) ||
      !(leg_timeout_factor > 0.0) || !(leg_timeout_min > 0.0) || !(divergence_radius > stall_radius)) {
    throw ConfigError(fmt::format("mission '{}': invalid waypoint switching parameters", name));
  }
}

MissionPlan learning_mission(double z_hov, double x_inc, double y_inc, double z_inc,
                             const GuidanceLimits& limits)
{
  if (!(z_hov > 0.0) || !(x_inc > 0.0) || !(y_inc > 0.0) || !(z_inc > 0.0)) {
    throw ConfigError("learning_mission: hover altitude and increments must be positive");
  }
  constexpr double pi = std::numbers::pi;
  MissionPlan plan;
  plan.name = "learning";
  plan.limits = limits;
  plan.waypoints = {
    {0.0, 0.0, z_hov, 0.0},           // take-off
    {0.0, 0.0, z_hov + z_inc, 0.0},   // +z
    {0.0, 0.0, z_hov, 0.0},           // -z
    {0.0, y_inc, z_hov, 0.0},         // +y
    {0.0, -y_inc, z_hov, 0.0},        // -y
    {0.0, 0.0, z_hov, 0.0},           // +y
    {x_inc, 0.0, z_hov, 0.0},         // +x
    {-x_inc, 0.0, z_hov, 0.0},        // -x
    {0.0, 0.0, z_hov, 0.0},           // +x
    {0.0, 0.0, z_hov, pi / 2.0},      // turn counterclockwise
    {0.0, 0.0, z_hov, pi},            // turn counterclockwise
    {0.0, 0.0, z_hov, 0.0},           // turn clockwise
    {0.0, 0.0, 0.0, 0.0},             // land
  };
  plan.validate();
  return plan;
}

std::vector<Eigen::Vector2i> hilbert_cells(int order)
{
  if (order < 1 || order > 15) {
    throw ConfigError("hilbert_cells: order must lie in [1, 15]");
  }
  const int n = 1 << order;
  std::vector<Eigen::Vector2i> cells;
  cells.reserve(static_cast<std::size_t>(n) * n);
  for (int d = 0; d < n * n; ++d) {
    int x = 0;
    int y = 0;
    int t = d;
    for (int s = 1; s < n; s *= 2) {
      const int rx = 1 & (t / 2);
      const int ry = 1 & (t ^ rx);
      if (ry == 0) {
        if (rx == 1) {
          x = s - 1 - x;
          y = s - 1 - y;
        }
        std::swap(x, y);
      }
      x += s * rx;
      y += s * ry;
      t /= 4;
    }
    cells.emplace_back(x, y);
  }
  return cells;
}

MissionPlan hilbert_mission(int order, double side, double z_alt, const GuidanceLimits& limits)
{
  if (!(side > 0.0) || !(z_alt > 0.0)) {
    throw ConfigError("hilbert_mission: side and altitude must be positive");
  }
  const auto cells = hilbert_cells(order);
  const double spacing = side / static_cast<double>((1 << order) - 1);

  MissionPlan plan;
  plan.name = fmt::format("hilbert{}", order);
  plan.limits = limits;
  const auto vertex = [&](const Eigen::Vector2i& c) {
    return Waypoint{c.x() * spacing - 0.5 * side, c.y() * spacing - 0.5 * side, z_alt, 0.0};
  };
  plan.waypoints.push_back(vertex(cells.front()));
  for (const auto& c : cells) {
    plan.waypoints.push_back(vertex(c));
  }
  Waypoint land = vertex(cells.back());
  land.z = 0.0;
  plan.waypoints.push_back(land);
  plan.validate();
  return plan;
}

void to_json(nlohmann::json& j, const Waypoint& w)
{
  j = nlohmann::json{{"x", w.x}, {"y", w.y}, {"z", w.z}, {"psi", w.psi}};
}

void from_json(const nlohmann::json& j, Waypoint& w)
{
  j.at("x").get_to(w.x);
  j.at("y").get_to(w.y);
  j.at("z").get_to(w.z);
  w.psi = j.value("psi", 0.0);
}

void to_json(nlohmann::json& j, const GuidanceLimits& l)
{
  j = nlohmann::json{{"v_max", l.v_max},
                     {"a_max", l.a_max},
                     {"psi_rate_max", l.psi_rate_max},
                     {"psi_accel_max", l.psi_accel_max}};
}

void from_json(const nlohmann::json& j, GuidanceLimits& l)
{
  j.at("v_max").get_to(l.v_max);
  j.at("a_max").get_to(l.a_max);
  j.at("psi_rate_max").get_to(l.psi_rate_max);
  j.at("psi_accel_max").get_to(l.psi_accel_max);
}

void to_json(nlohmann::json& j, const MissionPlan& m)
{
  j = nlohmann::json{{"name", m.name},
                     {"waypoints", m.waypoints},
                     {"limits", m.limits},
                     {"acceptance_radius", m.acceptance_radius},
                     {"hold_time", m.hold_time},
                     {"stall_radius", m.stall_radius},
                     {"leg_timeout_factor", m.leg_timeout_factor},
                     {"leg_timeout_min", m.leg_timeout_min},
                     {"divergence_radius", m.divergence_radius}};
}

void from_json(const nlohmann::json& j, MissionPlan& m)
{
  const MissionPlan defaults;
  m.name = j.value("name", std::string("custom"));
  j.at("waypoints").get_to(m.waypoints);
  j.at("limits").get_to(m.limits);
  m.acceptance_radius = j.value("acceptance_radius", defaults.acceptance_radius);
  m.hold_time = j.value("hold_time", defaults.hold_time);
  m.stall_radius = j.value("stall_radius", defaults.stall_radius);
  m.leg_timeout_factor = j.value("leg_timeout_factor", defaults.leg_timeout_factor);
  m.leg_timeout_min = j.value("leg_timeout_min", defaults.leg_timeout_min);
  m.divergence_radius = j.value("divergence_radius", defaults.divergence_radius);
}

MissionPlan load_mission(const std::string& path)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open mission file '{}'", path));
  }
  MissionPlan plan;
  try {
    plan = nlohmann::json::parse(in).get<MissionPlan>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("mission file '{}': {}", path, e.what()));
  }
  plan.validate();
  return plan;
}

void save_mission(const MissionPlan& plan, const std::string& path)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write mission file '{}'", path));
  }
  out << nlohmann::json(plan).dump(2) << '\n';
}

MissionRunner::MissionRunner(MissionPlan plan, const Vector3& start_position, double start_azimuth,
                             double start_time)
: plan_(std::move(plan))
{
  plan_.validate();
  start_leg(0, start_position, start_azimuth, start_time);
}

void MissionRunner::start_leg(std::size_t target, const Vector3& from, double from_azimuth, double time)
{
  const Waypoint& w = plan_.waypoints.at(target);
  leg_.target = target;
  leg_.translation = plan_leg(from, w.position(), plan_.limits);
  leg_.azimuth = plan_azimuth(from_azimuth, w.psi, plan_.limits);
  leg_.start_time = time;
}

const GuidanceLeg& MissionRunner::advance(const Vector3& position, double time)
{
  if (complete_) {
    return leg_;
  }
  const Waypoint& target = plan_.waypoints[leg_.target];
  const double error = (position - target.position()).norm();
  const double elapsed = time - leg_.start_time;
  const double duration = leg_.duration();

  if (error > plan_.divergence_radius) {
    throw MissionAbort(fmt::format("mission '{}': leg {} diverged, {:.3f} m from waypoint {}", plan_.name,
                                   legs_completed_ + 1, error, leg_.target + 1));
  }

  const bool profile_done = elapsed >= duration;
  const bool accepted = error < plan_.acceptance_radius;
  const bool stall_guard = elapsed >= duration + plan_.hold_time && error < plan_.stall_radius;
  if (profile_done && (accepted || stall_guard)) {
    ++legs_completed_;
    if (leg_.target + 1 == plan_.waypoints.size()) {
      complete_ = true;
      completion_time_ = time;
      return leg_;
    }
    start_leg(leg_.target + 1, target.position(), target.psi, time);
    return leg_;
  }

  const double timeout = duration + std::max(plan_.leg_timeout_factor * duration, plan_.leg_timeout_min);
  if (elapsed > timeout) {
    throw MissionAbort(fmt::format("mission '{}': leg {} to waypoint {} stalled, {:.3f} m away after {:.2f} s",
                                   plan_.name, legs_completed_ + 1, leg_.target + 1, error, elapsed));
  }
  return leg_;
}

MissionSetpoint MissionRunner::setpoint(double time) const
{
  const double elapsed = time - leg_.start_time;
  return {setpoint_at(leg_.translation, elapsed), azimuth_setpoint_at(leg_.azimuth, elapsed)};
}

}  // namespace quadtune
