#pragma once

// Tidy CSV and JSON artifacts for flights and sweeps. Numbers are written in
// shortest round-trip form so that equal runs produce equal bytes.

#include <quadtune/harness.hpp>

#include <json.hpp>

#include <string>
#include <vector>

namespace quadtune
{
/// RFC 4180 field: quoted when it contains a comma, quote or line break.
std::string csv_field(std::string_view value);

std::string telemetry_csv(const FlightLog& log);
std::string gain_trajectory_csv(const FlightLog& log);
std::string sweep_csv(const SweepResult& sweep);

/// Reads the time, cost-window flag and position-error columns of a telemetry CSV.
/// The window spans the flagged rows plus one sample period. Throws ConfigError.
FlightLog read_telemetry_csv(const std::string& path);

nlohmann::json cost_report_json(const CostReport& report, const std::string& scenario, double alpha);

/// Output files are named after the log's scenario, which embeds the scenario id and alpha.
/// Throws std::runtime_error naming the path on I/O failure.
void write_text_file(const std::string& path, const std::string& content);

std::vector<std::string> emit_flight(const FlightLog& log, const std::string& out_dir);
std::vector<std::string> emit_test(const TestResult& test, double alpha, const std::string& out_dir);
std::vector<std::string> emit_autotune(const AutotuneResult& tuned, const std::string& out_dir);

/// Per alpha: both test flights (telemetry, gains, cost) and the autotuned snapshot,
/// plus one summary table.
std::vector<std::string> emit_sweep(const SweepResult& sweep, const std::string& scenario_id,
                                    const std::string& out_dir);

}  // namespace quadtune
