#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace beamupdate {

struct ParameterRow {
  std::string name;
  double initial = 0.0;
  double mean = 0.0;
  double stddev = 0.0;

  friend bool operator==(const ParameterRow&, const ParameterRow&) = default;
};

struct ModeRow {
  int mode = 0;
  double measured = 0.0;
  double initial = 0.0;
  double initial_error_pct = 0.0;
  double updated = 0.0;
  double updated_error_pct = 0.0;

  friend bool operator==(const ModeRow&, const ModeRow&) = default;
};

struct ReportDiagnostics {
  double acceptance_rate = 0.0;
  std::vector<double> ess;
  std::vector<bool> ess_degenerate;
  std::int64_t target_evaluations = 0;
  std::int64_t proposals = 0;

  friend bool operator==(const ReportDiagnostics&, const ReportDiagnostics&) = default;
};

struct Report {
  std::string case_name;
  std::string sampler;
  std::uint64_t seed = 0;
  int n_samples = 0;
  int retained = 0;
  int burn_in = 0;
  std::string metric;
  std::string prior_mean;
  std::vector<ParameterRow> parameters;
  std::vector<ModeRow> modes;
  ReportDiagnostics diagnostics;
  std::vector<std::string> notes;
  std::optional<std::string> error;

  friend bool operator==(const Report&, const Report&) = default;
};

/// 100·|value − measured| / measured.
double percentage_error(double value, double measured);

double mean_initial_error_pct(const Report& r);
double mean_updated_error_pct(const Report& r);

enum class ReportFormat { text_table, machine_readable };

nlohmann::json to_json(const Report& r);
Report report_from_json(const nlohmann::json& j);

/// Mode | Measured | Initial | Error% | Updated | Error%, preceded by the
/// parameter table and followed by diagnostics.
std::string format_report_table(const Report& r, std::optional<double> wall_time_seconds = std::nullopt);

/// Side-by-side frequency table for several runs of the same case.
std::string format_comparison(const std::vector<Report>& reports);

/// Throws IoError when the file cannot be written.
void emit_report(const Report& r, ReportFormat format, const std::filesystem::path& path,
                 std::optional<double> wall_time_seconds = std::nullopt);

void write_text_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace beamupdate
