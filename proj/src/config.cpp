#include <quadtune/config.hpp>

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <cmath>
#include <filesystem>
#include <numbers>

namespace quadtune
{
namespace
{
namespace fs = std::filesystem;

template <typename T>
void read(const YAML::Node& node, const char* key, T& out)
{
  if (const YAML::Node v = node[key]) {
    out = v.as<T>();
  }
}

void read_vector(const YAML::Node& node, const char* key, Vector3& out)
{
  if (const YAML::Node v = node[key]) {
    const auto values = v.as<std::vector<double>>();
    if (values.size() != 3) {
      throw ConfigError(fmt::format("'{}' needs 3 entries", key));
    }
    out = Vector3(values[0], values[1], values[2]);
  }
}

void read_degrees(const YAML::Node& node, const char* key, double& out_rad)
{
  if (const YAML::Node v = node[key]) {
    out_rad = v.as<double>() * std::numbers::pi / 180.0;
  }
}

std::string resolve(const fs::path& base, const std::string& path)
{
  if (path.empty()) {
    return path;
  }
  const fs::path p(path);
  return p.is_absolute() ? path : (base / p).lexically_normal().string();
}

YAML::Node load_yaml(const std::string& path)
{
  try {
    return YAML::LoadFile(path);
  } catch (const YAML::BadFile&) {
    throw ConfigError(fmt::format("cannot open config file '{}'", path));
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

void read_rcac_row(const YAML::Node& node, RcacHyperparameters& row)
{
  read(node, "p0", row.p0);
  read(node, "ru", row.ru);
  read(node, "rz", row.rz);
  read(node, "sigma", row.sigma);
  if (const YAML::Node v = node["normalization"]) {
    row.normalization = normalization_from_string(v.as<std::string>());
  }
}

MissionKind mission_kind_from_string(const std::string& name)
{
  for (auto k : {MissionKind::learning, MissionKind::hilbert, MissionKind::custom}) {
    if (to_string(k) == name) {
      return k;
    }
  }
  throw ConfigError(fmt::format("unknown mission kind '{}'", name));
}

GainSource gain_source_from_string(const std::string& name)
{
  for (auto s : {GainSource::default_file, GainSource::autotuned_snapshot, GainSource::zero}) {
    if (to_string(s) == name) {
      return s;
    }
  }
  throw ConfigError(fmt::format("unknown gain source '{}'", name));
}

void apply_overrides(ScenarioConfig& c, const YAML::Node& doc, const fs::path& base)
{
  read(doc, "scenario_id", c.scenario_id);
  if (const YAML::Node v = doc["vehicle_file"]) {
    c.vehicle_file = resolve(base, v.as<std::string>());
  }
  read(doc, "alpha", c.alpha);
  read(doc, "log_rate_hz", c.log_rate_hz);
  read(doc, "max_flight_time", c.max_flight_time);
  if (const YAML::Node v = doc["output_dir"]) {
    c.output_dir = resolve(base, v.as<std::string>());
  }

  if (const YAML::Node m = doc["mission"]) {
    if (const YAML::Node v = m["kind"]) {
      c.mission = mission_kind_from_string(v.as<std::string>());
    }
    if (const YAML::Node v = m["file"]) {
      c.mission_file = resolve(base, v.as<std::string>());
    }
    if (const YAML::Node l = m["learning"]) {
      read(l, "z_hov", c.learning.z_hov);
      read(l, "x_inc", c.learning.x_inc);
      read(l, "y_inc", c.learning.y_inc);
      read(l, "z_inc", c.learning.z_inc);
    }
    if (const YAML::Node h = m["hilbert"]) {
      read(h, "order", c.test.order);
      read(h, "side", c.test.side);
      read(h, "altitude", c.test.altitude);
    }
    if (const YAML::Node l = m["limits"]) {
      read(l, "v_max", c.limits.v_max);
      read(l, "a_max", c.limits.a_max);
      read(l, "psi_rate_max", c.limits.psi_rate_max);
      read(l, "psi_accel_max", c.limits.psi_accel_max);
    }
    read(m, "acceptance_radius", c.acceptance_radius);
    read(m, "hold_time", c.hold_time);
  }

  if (const YAML::Node g = doc["gains"]) {
    if (const YAML::Node v = g["source"]) {
      c.gain_source = gain_source_from_string(v.as<std::string>());
    }
    if (const YAML::Node v = g["default_file"]) {
      c.default_gain_file = resolve(base, v.as<std::string>());
    }
    if (const YAML::Node v = g["snapshot_file"]) {
      c.snapshot_file = resolve(base, v.as<std::string>());
    }
  }

  if (const YAML::Node r = doc["rcac"]) {
    for (auto b : {ControllerBlock::position, ControllerBlock::velocity, ControllerBlock::attitude,
                   ControllerBlock::rate}) {
      if (const YAML::Node row = r[std::string(block_name(b))]) {
        read_rcac_row(row, c.rcac.row(b));
      }
    }
  }

  if (const YAML::Node a = doc["autopilot"]) {
    read(a, "position_hz", c.autopilot.rates.position_hz);
    read(a, "attitude_hz", c.autopilot.rates.attitude_hz);
    read(a, "rate_hz", c.autopilot.rates.rate_hz);
    read_degrees(a, "tilt_max_deg", c.autopilot.tilt_max);
    read(a, "thrust_min_fraction", c.autopilot.thrust_min_fraction);
    read(a, "thrust_max_fraction", c.autopilot.thrust_max_fraction);
    read(a, "velocity_max_xy", c.autopilot.velocity_max_xy);
    read(a, "velocity_max_z", c.autopilot.velocity_max_z);
    if (const YAML::Node v = a["output_scale"]) {
      const auto values = v.as<std::vector<double>>();
      if (values.size() != 4) {
        throw ConfigError("'output_scale' needs 4 entries");
      }
      c.autopilot.output_scale = Vector4(values[0], values[1], values[2], values[3]);
    }
    if (const YAML::Node v = a["rate_max_deg"]) {
      Vector3 deg;
      read_vector(a, "rate_max_deg", deg);
      c.autopilot.rate_max = deg * std::numbers::pi / 180.0;
    }
  }
}

}  // namespace

VehicleConfig load_vehicle_config(const std::string& path)
{
  const YAML::Node doc = load_yaml(path);
  VehicleConfig vc;
  try {
    if (const YAML::Node v = doc["vehicle"]) {
      VehicleParameters& p = vc.params;
      read(v, "mass", p.mass);
      read_vector(v, "inertia", p.inertia);
      read(v, "arm_length", p.arm_length);
      read(v, "thrust_coeff", p.thrust_coeff);
      read(v, "torque_coeff", p.torque_coeff);
      read(v, "rotor_time_constant", p.rotor_time_constant);
      read(v, "rotor_speed_max", p.rotor_speed_max);
      read(v, "drag_coeff", p.drag_coeff);
      read(v, "mass_scale", p.mass_scale);
      read_vector(v, "wind", p.wind);
      read(v, "ground_contact", p.ground_contact);
    }
    if (const YAML::Node n = doc["noise"]) {
      read(n, "enabled", vc.noise.enabled);
      read(n, "position_std", vc.noise.position_std);
      read(n, "velocity_std", vc.noise.velocity_std);
      read(n, "attitude_std", vc.noise.attitude_std);
      read(n, "angular_rate_std", vc.noise.angular_rate_std);
    }
    read(doc, "seed", vc.seed);
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  const MeasurementNoise& n = vc.noise;
  for (double s : {n.position_std, n.velocity_std, n.attitude_std, n.angular_rate_std}) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw ConfigError(fmt::format("{}: noise standard deviations must be finite and non-negative", path));
    }
  }
  try {
    vc.params.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
  return vc;
}

void apply_vehicle_file(ScenarioConfig& config)
{
  const VehicleConfig vc = load_vehicle_config(config.vehicle_file);
  config.vehicle = vc.params;
  config.noise = vc.noise;
  config.seed = vc.seed;
  config.autopilot.nominal = vc.params;
  config.autopilot.nominal.mass_scale = 1.0;
}

ScenarioConfig default_scenario(std::string_view profile)
{
  ScenarioConfig c = scenario_profile(profile);
  apply_vehicle_file(c);
  return c;
}

ScenarioConfig load_scenario_config(const std::string& path)
{
  const YAML::Node doc = load_yaml(path);
  const fs::path base = fs::path(path).parent_path();
  try {
    ScenarioConfig c = scenario_profile(doc["profile"] ? doc["profile"].as<std::string>() : std::string("sim"));
    c.output_dir = resolve(base, c.output_dir);
    apply_overrides(c, doc, base);
    apply_vehicle_file(c);
    read(doc, "seed", c.seed);
    c.validate();
    return c;
  } catch (const YAML::Exception& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  } catch (const std::invalid_argument& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path, e.what()));
  }
}

}  // namespace quadtune
