#pragma once

// The 27 autopilot gains and their JSON form.
//
// Gains are stored in the discrete form consumed by the regressor
// [g(z), sum g(z), delta g(z), r]: the integral gain multiplies a plain sum and the
// derivative gain a plain first difference. Documents in "continuous" form (for
// example flight-stack parameter files, which use I per second and D in seconds)
// are converted with the loop period on load.

#include <quadtune/types.hpp>

#include <json.hpp>

#include <array>
#include <cstdint>
#include <string>
#include <string_view>

namespace quadtune
{
enum class GainMode { fixed_default, adaptive };

std::string_view to_string(GainMode mode);

struct LoopRates
{
  double position_hz = 50.0;   // G_r and G_v
  double attitude_hz = 250.0;  // G_q
  double rate_hz = 1000.0;     // G_w, and the physics step

  void validate() const;
};

enum class ControllerBlock { position = 0, velocity = 1, attitude = 2, rate = 3 };

std::string_view block_name(ControllerBlock block);
std::string_view axis_name(ControllerBlock block, int axis);

struct GainSet
{
  static constexpr int kCount = 27;
  static constexpr int kChannels = 12;

  Vector3 position = Vector3::Zero();                                 // G_r, per ENU axis
  Eigen::Matrix3d velocity = Eigen::Matrix3d::Zero();                 // G_v, rows x y z; cols P I D
  Vector3 attitude = Vector3::Zero();                                 // G_q, per body axis
  Eigen::Matrix<double, 3, 4> rate = Eigen::Matrix<double, 3, 4>::Zero();  // G_w; cols P I D FF
  GainMode mode = GainMode::fixed_default;
  std::array<std::uint64_t, kChannels> steps{};  // adaptation steps taken per channel

  Eigen::Matrix<double, kCount, 1> flatten() const;
  static GainSet from_flat(const Eigen::Matrix<double, kCount, 1>& flat, GainMode mode);

  bool operator==(const GainSet&) const = default;
};

/// Channel gains (length 1, 3 or 4) for block/axis.
Eigen::VectorXd channel_gains(const GainSet& gains, ControllerBlock block, int axis);
void set_channel_gains(GainSet& gains, ControllerBlock block, int axis, const Eigen::VectorXd& theta);

nlohmann::json to_json(const GainSet& gains);

/// Parses a gain document; continuous-form documents are discretized with `rates`.
/// Throws ConfigError on schema violations.
GainSet gain_set_from_json(const nlohmann::json& doc, const LoopRates& rates);

GainSet load_gain_set(const std::string& path, const LoopRates& rates);
void save_gain_set(const GainSet& gains, const std::string& path);

}  // namespace quadtune
