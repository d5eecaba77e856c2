#include <quadtune/outputs.hpp>

#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iterator>

namespace quadtune
{
namespace
{
namespace fs = std::filesystem;

constexpr std::array<const char*, 4> kBlockNames = {"G_r", "G_v", "G_q", "G_w"};

void append_xyz(std::vector<std::string>& header, std::string_view prefix, std::string_view unit,
                std::array<std::string_view, 3> axes = {"x", "y", "z"})
{
  for (auto a : axes) {
    header.push_back(fmt::format("{}{} [{}]", prefix, a, unit));
  }
}

void append_values(fmt::memory_buffer& buf, const Vector3& v)
{
  fmt::format_to(std::back_inserter(buf), ",{},{},{}", v.x(), v.y(), v.z());
}

std::string join_header(const std::vector<std::string>& header)
{
  std::string line;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (i > 0) {
      line += ',';
    }
    line += csv_field(header[i]);
  }
  line += "\r\n";
  return line;
}

std::vector<std::string> gain_names()
{
  static constexpr std::array<std::string_view, 4> terms = {"P", "I", "D", "FF"};
  static constexpr std::array<int, 4> lengths = {1, 3, 1, 4};
  std::vector<std::string> names;
  for (int b = 0; b < 4; ++b) {
    const auto block = static_cast<ControllerBlock>(b);
    for (int axis = 0; axis < 3; ++axis) {
      for (int k = 0; k < lengths[static_cast<std::size_t>(b)]; ++k) {
        names.push_back(fmt::format("{}.{}.{}", kBlockNames[static_cast<std::size_t>(b)], axis_name(block, axis),
                                    terms[static_cast<std::size_t>(k)]));
      }
    }
  }
  return names;
}

std::string optional_number(const std::optional<double>& v)
{
  return v ? fmt::format("{}", *v) : std::string();
}

}  // namespace

std::string csv_field(std::string_view value)
{
  if (value.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(value);
  }
  std::string quoted = "\"";
  for (char c : value) {
    if (c == '"') {
      quoted += '"';
    }
    quoted += c;
  }
  quoted += '"';
  return quoted;
}

std::string telemetry_csv(const FlightLog& log)
{
  std::vector<std::string> header = {"t [s]", "leg [-]", "in_window [-]"};
  append_xyz(header, "pos_sp_", "m");
  append_xyz(header, "vel_sp_", "m/s");
  header.push_back("psi_sp [rad]");
  append_xyz(header, "pos_", "m");
  append_xyz(header, "vel_", "m/s");
  for (auto c : {"w", "x", "y", "z"}) {
    header.push_back(fmt::format("q{} [-]", c));
  }
  append_xyz(header, "rate_", "rad/s", {"p", "q", "r"});
  append_xyz(header, "err_pos_", "m");
  append_xyz(header, "err_vel_", "m/s");
  append_xyz(header, "err_att_", "rad", {"roll", "pitch", "yaw"});
  append_xyz(header, "err_rate_", "rad/s", {"roll", "pitch", "yaw"});
  append_xyz(header, "vel_cmd_", "m/s");
  append_xyz(header, "thrust_sp_", "N");
  append_xyz(header, "rate_sp_", "rad/s", {"p", "q", "r"});
  append_xyz(header, "moment_sp_", "N m");
  for (int i = 1; i <= 4; ++i) {
    header.push_back(fmt::format("rotor{} [rad/s]", i));
  }

  fmt::memory_buffer buf;
  const std::string head = join_header(header);
  buf.append(head.data(), head.data() + head.size());
  for (const LogRow& r : log.rows) {
    fmt::format_to(std::back_inserter(buf), "{},{},{}", r.t, r.leg, r.in_window ? 1 : 0);
    append_values(buf, r.position_sp);
    append_values(buf, r.velocity_sp);
    fmt::format_to(std::back_inserter(buf), ",{}", r.azimuth_sp);
    append_values(buf, r.position);
    append_values(buf, r.velocity);
    fmt::format_to(std::back_inserter(buf), ",{},{},{},{}", r.attitude.w(), r.attitude.x(), r.attitude.y(),
                   r.attitude.z());
    append_values(buf, r.angular_rate);
    append_values(buf, r.position_error);
    append_values(buf, r.loop_errors.velocity);
    append_values(buf, r.loop_errors.attitude);
    append_values(buf, r.loop_errors.rate);
    append_values(buf, r.velocity_command);
    append_values(buf, r.thrust_vector_sp);
    append_values(buf, r.rate_sp);
    append_values(buf, r.moment_sp);
    for (int i = 0; i < 4; ++i) {
      fmt::format_to(std::back_inserter(buf), ",{}", r.rotor_speeds(i));
    }
    buf.append(std::string_view("\r\n"));
  }
  return fmt::to_string(buf);
}

std::string gain_trajectory_csv(const FlightLog& log)
{
  std::vector<std::string> header = {"t [s]"};
  for (auto& name : gain_names()) {
    header.push_back(std::move(name));
  }
  fmt::memory_buffer buf;
  const std::string head = join_header(header);
  buf.append(head.data(), head.data() + head.size());
  for (const LogRow& r : log.rows) {
    fmt::format_to(std::back_inserter(buf), "{}", r.t);
    for (Eigen::Index i = 0; i < r.gains.size(); ++i) {
      fmt::format_to(std::back_inserter(buf), ",{}", r.gains(i));
    }
    buf.append(std::string_view("\r\n"));
  }
  return fmt::to_string(buf);
}

std::string sweep_csv(const SweepResult& sweep)
{
  std::string out = join_header({"alpha [-]", "J_default [m^2/s]", "J_autotuned [m^2/s]", "improvement [-]",
                                 "default_gain_sha256", "error"});
  for (const SweepRow& row : sweep.rows) {
    out += fmt::format("{},{},{},{},{},{}\r\n", row.alpha, optional_number(row.cost_default),
                       optional_number(row.cost_autotuned), optional_number(row.improvement),
                       csv_field(row.default_gain_hash), csv_field(row.error));
  }
  return out;
}

FlightLog read_telemetry_csv(const std::string& path)
{
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError(fmt::format("cannot open telemetry file '{}'", path));
  }
  auto split = [](std::string line) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    std::vector<std::string> fields;
    std::string field;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          field += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        fields.push_back(std::move(field));
        field.clear();
      } else {
        field += c;
      }
    }
    fields.push_back(std::move(field));
    return fields;
  };

  std::string line;
  if (!std::getline(in, line)) {
    throw ConfigError(fmt::format("{}: empty telemetry file", path));
  }
  const std::vector<std::string> header = split(line);
  auto column = [&](std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) {
        return i;
      }
    }
    throw ConfigError(fmt::format("{}: missing column '{}'", path, name));
  };
  const std::size_t t_col = column("t [s]");
  const std::size_t w_col = column("in_window [-]");
  const std::array<std::size_t, 3> e_col = {column("err_pos_x [m]"), column("err_pos_y [m]"),
                                            column("err_pos_z [m]")};

  FlightLog log;
  log.scenario = fs::path(path).stem().string();
  std::vector<double> window_times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") {
      continue;
    }
    const std::vector<std::string> f = split(line);
    if (f.size() != header.size()) {
      throw ConfigError(fmt::format("{}:{}: expected {} fields, found {}", path, line_no, header.size(), f.size()));
    }
    LogRow row;
    try {
      row.t = std::stod(f[t_col]);
      row.in_window = std::stoi(f[w_col]) != 0;
      for (int k = 0; k < 3; ++k) {
        row.position_error(k) = std::stod(f[e_col[static_cast<std::size_t>(k)]]);
      }
    } catch (const std::exception&) {
      throw ConfigError(fmt::format("{}:{}: malformed number", path, line_no));
    }
    if (row.in_window) {
      window_times.push_back(row.t);
    }
    log.rows.push_back(std::move(row));
  }
  if (window_times.empty()) {
    throw ConfigError(fmt::format("{}: no rows in the cost window", path));
  }
  const double period = window_times.size() > 1 ? window_times[1] - window_times[0] : 0.0;
  log.window_start = window_times.front();
  log.window_end = window_times.back() + period;
  log.log_rate_hz = period > 0.0 ? 1.0 / period : 0.0;
  log.completed = true;
  return log;
}

nlohmann::json cost_report_json(const CostReport& report, const std::string& scenario, double alpha)
{
  return {{"scenario", scenario},
          {"alpha", alpha},
          {"J", report.cost},
          {"J_unit", "m^2/s"},
          {"T", report.duration},
          {"N", report.samples},
          {"rms", {report.rms.x(), report.rms.y(), report.rms.z()}},
          {"completed", report.completed}};
}

void write_text_file(const std::string& path, const std::string& content)
{
  std::error_code ec;
  const fs::path parent = fs::path(path).parent_path();
  if (!parent.empty()) {
    fs::create_directories(parent, ec);
    if (ec) {
      throw std::runtime_error(fmt::format("cannot create directory '{}': {}", parent.string(), ec.message()));
    }
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw std::runtime_error(fmt::format("cannot open '{}' for writing", path));
  }
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!out) {
    throw std::runtime_error(fmt::format("write to '{}' failed", path));
  }
}

std::vector<std::string> emit_flight(const FlightLog& log, const std::string& out_dir)
{
  const fs::path dir(out_dir);
  const std::string telemetry = (dir / (log.scenario + "_telemetry.csv")).string();
  const std::string gains = (dir / (log.scenario + "_gains.csv")).string();
  write_text_file(telemetry, telemetry_csv(log));
  write_text_file(gains, gain_trajectory_csv(log));
  return {telemetry, gains};
}

std::vector<std::string> emit_test(const TestResult& test, double alpha, const std::string& out_dir)
{
  std::vector<std::string> paths = emit_flight(test.log, out_dir);
  const std::string cost = (fs::path(out_dir) / (test.log.scenario + "_cost.json")).string();
  write_text_file(cost, cost_report_json(test.report, test.log.scenario, alpha).dump(2) + "\n");
  paths.push_back(cost);
  return paths;
}

std::vector<std::string> emit_autotune(const AutotuneResult& tuned, const std::string& out_dir)
{
  std::vector<std::string> paths = emit_flight(tuned.log, out_dir);
  const std::string snapshot = (fs::path(out_dir) / (tuned.log.scenario + "_snapshot.json")).string();
  write_text_file(snapshot, to_json(tuned.snapshot).dump(2) + "\n");
  paths.push_back(snapshot);
  return paths;
}

std::vector<std::string> emit_sweep(const SweepResult& sweep, const std::string& scenario_id,
                                    const std::string& out_dir)
{
  std::vector<std::string> paths;
  for (const SweepScenario& s : sweep.scenarios) {
    for (const auto* test : {&s.test_default, &s.test_autotuned}) {
      if (*test) {
        const auto written = emit_test(**test, s.alpha, out_dir);
        paths.insert(paths.end(), written.begin(), written.end());
      }
    }
    if (s.autotune) {
      const std::string snapshot = (fs::path(out_dir) / (s.autotune->log.scenario + "_snapshot.json")).string();
      write_text_file(snapshot, to_json(s.autotune->snapshot).dump(2) + "\n");
      paths.push_back(snapshot);
    }
  }
  const std::string table = (fs::path(out_dir) / (scenario_id + "_sweep.csv")).string();
  write_text_file(table, sweep_csv(sweep));
  paths.push_back(table);
  return paths;
}

}  // namespace quadtune
