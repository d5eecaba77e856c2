#pragma once

// YAML configuration: the vehicle file (physical parameters, noise, seed) and the
// scenario file (profile name plus overrides of any ScenarioConfig field).

#include <quadtune/harness.hpp>

#include <string>

namespace quadtune
{
struct VehicleConfig
{
  VehicleParameters params;
  MeasurementNoise noise;
  std::uint64_t seed = 1;
};

/// Throws ConfigError with the file path on any missing, malformed or invalid entry.
VehicleConfig load_vehicle_config(const std::string& path);

/// Reads config.vehicle_file into the vehicle, noise, seed and autopilot nominal model.
void apply_vehicle_file(ScenarioConfig& config);

/// Starts from the built-in profile named by the file's `profile` key (default "sim"),
/// applies the file's overrides and loads the referenced vehicle file. Relative paths
/// are resolved against the scenario file's directory.
ScenarioConfig load_scenario_config(const std::string& path);

/// Built-in profile with its default vehicle file applied.
ScenarioConfig default_scenario(std::string_view profile);

}  // namespace quadtune
