#include <quadtune/adaptive_law.hpp>

#include <cmath>
#include <string>

namespace quadtune
{
void RcacHyperparameters::validate() const
{
  if (!(p0 > 0.0) || !std::isfinite(p0)) {
    throw std::invalid_argument("RCAC hyperparameters: P0 must be positive");
  }
  if (!(rz > 0.0) || !std::isfinite(rz)) {
    throw std::invalid_argument("RCAC hyperparameters: Rz must be positive");
  }
  if (!(ru >= 0.0) || !std::isfinite(ru)) {
    throw std::invalid_argument("RCAC hyperparameters: Ru must be nonnegative");
  }
  if (sigma != 1.0 && sigma != -1.0) {
    throw std::invalid_argument("RCAC hyperparameters: sigma must be +1 or -1");
  }
}

std::string_view to_string(ControllerKind kind)
{
  switch (kind) {
    case ControllerKind::P:
      return "P";
    case ControllerKind::PID:
      return "PID";
    case ControllerKind::PID_FF:
      return "PID_FF";
  }
  return "?";
}

std::string_view to_string(Normalization normalization)
{
  switch (normalization) {
    case Normalization::identity:
      return "identity";
    case Normalization::scaled_erf:
      return "scaled_erf";
  }
  return "?";
}

ControllerKind controller_kind_from_string(std::string_view name)
{
  if (name == "P") return ControllerKind::P;
  if (name == "PID") return ControllerKind::PID;
  if (name == "PID_FF") return ControllerKind::PID_FF;
  throw std::invalid_argument("unknown controller structure '" + std::string(name) + "'");
}

Normalization normalization_from_string(std::string_view name)
{
  if (name == "identity") return Normalization::identity;
  if (name == "scaled_erf") return Normalization::scaled_erf;
  throw std::invalid_argument("unknown error normalization '" + std::string(name) + "'");
}

}  // namespace quadtune
