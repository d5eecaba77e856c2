#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <stdexcept>
#include <string>

namespace quadtune
{
using Vector3 = Eigen::Vector3d;
using Vector4 = Eigen::Vector4d;
using Matrix3 = Eigen::Matrix3d;
using Quaternion = Eigen::Quaterniond;

inline constexpr double kGravity = 9.80665;  // m/s^2

/// Raised when a mission cannot be completed (stall, divergence). CLI exit code 2.
class MissionAbort : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Raised when a non-finite value or an ill-conditioned update is detected. CLI exit code 3.
class NumericalAbort : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

/// Raised for malformed configuration, mission or gain documents. CLI exit code 64.
class ConfigError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

}  // namespace quadtune
