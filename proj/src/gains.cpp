#include <quadtune/gains.hpp>

#include <fmt/format.h>

#include <cmath>
#include <fstream>
#include <set>
#include <utility>

namespace quadtune
{
namespace
{
constexpr std::array<ControllerBlock, 4> kBlocks = {ControllerBlock::position, ControllerBlock::velocity,
                                                    ControllerBlock::attitude, ControllerBlock::rate};

int channel_length(ControllerBlock block)
{
  switch (block) {
    case ControllerBlock::position:
    case ControllerBlock::attitude:
      return 1;
    case ControllerBlock::velocity:
      return 3;
    case ControllerBlock::rate:
      return 4;
  }
  return 0;
}

std::string_view structure_name(ControllerBlock block)
{
  switch (channel_length(block)) {
    case 1:
      return "P";
    case 3:
      return "PID";
    default:
      return "PID_FF";
  }
}

ControllerBlock block_from_name(const std::string& name)
{
  for (auto b : kBlocks) {
    if (block_name(b) == name) {
      return b;
    }
  }
  throw ConfigError(fmt::format("gain document: unknown controller '{}'", name));
}

int axis_from_name(ControllerBlock block, const std::string& name)
{
  for (int i = 0; i < 3; ++i) {
    if (axis_name(block, i) == name) {
      return i;
    }
  }
  throw ConfigError(fmt::format("gain document: unknown axis '{}' for {}", name, block_name(block)));
}

double loop_period(ControllerBlock block, const LoopRates& rates)
{
  switch (block) {
    case ControllerBlock::position:
    case ControllerBlock::velocity:
      return 1.0 / rates.position_hz;
    case ControllerBlock::attitude:
      return 1.0 / rates.attitude_hz;
    case ControllerBlock::rate:
      return 1.0 / rates.rate_hz;
  }
  return 1.0;
}

}  // namespace

std::string_view to_string(GainMode mode)
{
  return mode == GainMode::adaptive ? "adaptive" : "fixed_default";
}

void LoopRates::validate() const
{
  if (!(position_hz > 0.0) || !(attitude_hz > 0.0) || !(rate_hz > 0.0)) {
    throw ConfigError("loop rates must be positive");
  }
  const double att_div = rate_hz / attitude_hz;
  const double pos_div = rate_hz / position_hz;
  if (std::abs(att_div - std::round(att_div)) > 1e-9 || std::abs(pos_div - std::round(pos_div)) > 1e-9) {
    throw ConfigError("attitude and position loop rates must divide the rate-loop rate");
  }
}

std::string_view block_name(ControllerBlock block)
{
  switch (block) {
    case ControllerBlock::position:
      return "G_r";
    case ControllerBlock::velocity:
      return "G_v";
    case ControllerBlock::attitude:
      return "G_q";
    case ControllerBlock::rate:
      return "G_w";
  }
  return "?";
}

std::string_view axis_name(ControllerBlock block, int axis)
{
  static constexpr std::array<std::string_view, 3> world = {"x", "y", "z"};
  static constexpr std::array<std::string_view, 3> body = {"roll", "pitch", "yaw"};
  const bool is_world = block == ControllerBlock::position || block == ControllerBlock::velocity;
  return is_world ? world.at(axis) : body.at(axis);
}

Eigen::Matrix<double, GainSet::kCount, 1> GainSet::flatten() const
{
  Eigen::Matrix<double, kCount, 1> flat;
  int k = 0;
  for (auto b : kBlocks) {
    for (int axis = 0; axis < 3; ++axis) {
      const Eigen::VectorXd g = channel_gains(*this, b, axis);
      flat.segment(k, g.size()) = g;
      k += static_cast<int>(g.size());
    }
  }
  return flat;
}

GainSet GainSet::from_flat(const Eigen::Matrix<double, kCount, 1>& flat, GainMode mode)
{
  GainSet gains;
  gains.mode = mode;
  int k = 0;
  for (auto b : kBlocks) {
    for (int axis = 0; axis < 3; ++axis) {
      const int n = channel_length(b);
      set_channel_gains(gains, b, axis, flat.segment(k, n));
      k += n;
    }
  }
  return gains;
}

Eigen::VectorXd channel_gains(const GainSet& gains, ControllerBlock block, int axis)
{
  switch (block) {
    case ControllerBlock::position:
      return Eigen::VectorXd::Constant(1, gains.position(axis));
    case ControllerBlock::velocity:
      return gains.velocity.row(axis).transpose();
    case ControllerBlock::attitude:
      return Eigen::VectorXd::Constant(1, gains.attitude(axis));
    case ControllerBlock::rate:
      return gains.rate.row(axis).transpose();
  }
  return {};
}

void set_channel_gains(GainSet& gains, ControllerBlock block, int axis, const Eigen::VectorXd& theta)
{
  if (theta.size() != channel_length(block)) {
    throw std::invalid_argument("set_channel_gains: wrong gain count for channel");
  }
  switch (block) {
    case ControllerBlock::position:
      gains.position(axis) = theta(0);
      break;
    case ControllerBlock::velocity:
      gains.velocity.row(axis) = theta.transpose();
      break;
    case ControllerBlock::attitude:
      gains.attitude(axis) = theta(0);
      break;
    case ControllerBlock::rate:
      gains.rate.row(axis) = theta.transpose();
      break;
  }
}

nlohmann::json to_json(const GainSet& gains)
{
  nlohmann::json controllers = nlohmann::json::array();
  int channel = 0;
  for (auto b : kBlocks) {
    for (int axis = 0; axis < 3; ++axis, ++channel) {
      const Eigen::VectorXd theta = channel_gains(gains, b, axis);
      controllers.push_back({{"controller", block_name(b)},
                             {"axis", axis_name(b, axis)},
                             {"structure", structure_name(b)},
                             {"theta", std::vector<double>(theta.data(), theta.data() + theta.size())},
                             {"step", gains.steps[static_cast<std::size_t>(channel)]}});
    }
  }
  return {{"mode", to_string(gains.mode)}, {"gain_form", "discrete"}, {"controllers", controllers}};
}

GainSet gain_set_from_json(const nlohmann::json& doc, const LoopRates& rates)
{
  rates.validate();
  GainSet gains;
  try {
    const std::string mode = doc.value("mode", std::string("fixed_default"));
    if (mode == "adaptive") {
      gains.mode = GainMode::adaptive;
    } else if (mode == "fixed_default") {
      gains.mode = GainMode::fixed_default;
    } else {
      throw ConfigError(fmt::format("gain document: unknown mode '{}'", mode));
    }
    const std::string form = doc.value("gain_form", std::string("discrete"));
    if (form != "discrete" && form != "continuous") {
      throw ConfigError(fmt::format("gain document: unknown gain_form '{}'", form));
    }

    std::set<std::pair<int, int>> seen;
    for (const auto& entry : doc.at("controllers")) {
      const ControllerBlock block = block_from_name(entry.at("controller").get<std::string>());
      const int axis = axis_from_name(block, entry.at("axis").get<std::string>());
      if (!seen.emplace(static_cast<int>(block), axis).second) {
        throw ConfigError(fmt::format("gain document: duplicate entry {} {}", block_name(block),
                                      axis_name(block, axis)));
      }
      const auto values = entry.at("theta").get<std::vector<double>>();
      if (static_cast<int>(values.size()) != channel_length(block)) {
        throw ConfigError(fmt::format("gain document: {} {} needs {} gains", block_name(block),
                                      axis_name(block, axis), channel_length(block)));
      }
      Eigen::VectorXd theta = Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
      if (!theta.allFinite()) {
        throw ConfigError("gain document: non-finite gain");
      }
      if (form == "continuous" && theta.size() >= 3) {
        const double dt = loop_period(block, rates);
        theta(1) *= dt;
        theta(2) /= dt;
      }
      set_channel_gains(gains, block, axis, theta);
      const std::size_t channel = static_cast<std::size_t>(static_cast<int>(block) * 3 + axis);
      gains.steps[channel] = entry.value("step", std::uint64_t{0});
    }
    if (seen.size() != static_cast<std::size_t>(GainSet::kChannels)) {
      throw ConfigError(fmt::format("gain document: expected 12 controller entries, found {}", seen.size()));
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("gain document: {}", e.what()));
  }
  return gains;
}

GainSet load_gain_set(const std::string& path, const LoopRates& rates)
{
  std::ifstream in(path);
  if (!in) {
    throw ConfigError(fmt::format("cannot open gain file '{}'", path));
  }
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(fmt::format("gain file '{}': {}", path, e.what()));
  }
  return gain_set_from_json(doc, rates);
}

void save_gain_set(const GainSet& gains, const std::string& path)
{
  std::ofstream out(path);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot write gain file '{}'", path));
  }
  out << to_json(gains).dump(2) << '\n';
}

}  // namespace quadtune
