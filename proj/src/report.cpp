#include "beamupdate/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

#include "beamupdate/errors.hpp"

namespace beamupdate {

namespace {

// JSON has no NaN; failed runs carry nulls for quantities never computed.
nlohmann::json number(double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); }

double number_from(const nlohmann::json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

std::string fmt(const char* spec, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

double mean_of(const std::vector<ModeRow>& rows, double ModeRow::*field) {
  if (rows.empty()) return 0.0;
  double acc = 0.0;
  for (const auto& r : rows) acc += r.*field;
  return acc / static_cast<double>(rows.size());
}

}  // namespace

double percentage_error(double value, double measured) { return 100.0 * std::abs(value - measured) / measured; }

double mean_initial_error_pct(const Report& r) { return mean_of(r.modes, &ModeRow::initial_error_pct); }
double mean_updated_error_pct(const Report& r) { return mean_of(r.modes, &ModeRow::updated_error_pct); }

nlohmann::json to_json(const Report& r) {
  nlohmann::json j;
  j["case"] = r.case_name;
  j["sampler"] = r.sampler;
  j["seed"] = r.seed;
  j["n_samples"] = r.n_samples;
  j["retained"] = r.retained;
  j["burn_in"] = r.burn_in;
  j["metric"] = r.metric;
  j["prior_mean"] = r.prior_mean;
  j["parameters"] = nlohmann::json::array();
  for (const auto& p : r.parameters) {
    j["parameters"].push_back(
        {{"name", p.name}, {"initial", number(p.initial)}, {"mean", number(p.mean)}, {"stddev", number(p.stddev)}});
  }
  j["modes"] = nlohmann::json::array();
  for (const auto& m : r.modes) {
    j["modes"].push_back({{"mode", m.mode},
                          {"measured_hz", number(m.measured)},
                          {"initial_hz", number(m.initial)},
                          {"initial_error_pct", number(m.initial_error_pct)},
                          {"updated_hz", number(m.updated)},
                          {"updated_error_pct", number(m.updated_error_pct)}});
  }
  auto& d = j["diagnostics"];
  d["acceptance_rate"] = number(r.diagnostics.acceptance_rate);
  d["ess"] = nlohmann::json::array();
  for (double e : r.diagnostics.ess) d["ess"].push_back(number(e));
  d["ess_degenerate"] = r.diagnostics.ess_degenerate;
  d["target_evaluations"] = r.diagnostics.target_evaluations;
  d["proposals"] = r.diagnostics.proposals;
  j["notes"] = r.notes;
  j["error"] = r.error ? nlohmann::json(*r.error) : nlohmann::json(nullptr);
  return j;
}

Report report_from_json(const nlohmann::json& j) {
  Report r;
  r.case_name = j.at("case").get<std::string>();
  r.sampler = j.at("sampler").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.n_samples = j.at("n_samples").get<int>();
  r.retained = j.at("retained").get<int>();
  r.burn_in = j.at("burn_in").get<int>();
  r.metric = j.at("metric").get<std::string>();
  r.prior_mean = j.at("prior_mean").get<std::string>();
  for (const auto& p : j.at("parameters")) {
    r.parameters.push_back({p.at("name").get<std::string>(), number_from(p.at("initial")),
                            number_from(p.at("mean")), number_from(p.at("stddev"))});
  }
  for (const auto& m : j.at("modes")) {
    r.modes.push_back({m.at("mode").get<int>(), number_from(m.at("measured_hz")), number_from(m.at("initial_hz")),
                       number_from(m.at("initial_error_pct")), number_from(m.at("updated_hz")),
                       number_from(m.at("updated_error_pct"))});
  }
  const auto& d = j.at("diagnostics");
  r.diagnostics.acceptance_rate = number_from(d.at("acceptance_rate"));
  for (const auto& e : d.at("ess")) r.diagnostics.ess.push_back(number_from(e));
  r.diagnostics.ess_degenerate = d.at("ess_degenerate").get<std::vector<bool>>();
  r.diagnostics.target_evaluations = d.at("target_evaluations").get<std::int64_t>();
  r.diagnostics.proposals = d.at("proposals").get<std::int64_t>();
  r.notes = j.at("notes").get<std::vector<std::string>>();
  if (!j.at("error").is_null()) r.error = j.at("error").get<std::string>();
  return r;
}

std::string format_report_table(const Report& r, std::optional<double> wall_time_seconds) {
  std::ostringstream os;
  os << "Case: " << r.case_name << "   sampler: " << r.sampler << "   seed: " << r.seed << "   N_s: " << r.n_samples
     << " (retained " << r.retained << ", burn-in " << r.burn_in << ")\n";
  os << "Error metric: " << r.metric << "   prior mean: " << r.prior_mean << "\n\n";

  char line[256];
  std::snprintf(line, sizeof line, "%-10s %14s %14s %14s\n", "Parameter", "Initial", "Posterior mean", "Std. dev.");
  os << line;
  for (const auto& p : r.parameters) {
    std::snprintf(line, sizeof line, "%-10s %14.4e %14.4e %14.4e\n", p.name.c_str(), p.initial, p.mean, p.stddev);
    os << line;
  }
  os << '\n';
  std::snprintf(line, sizeof line, "%-5s %14s %14s %9s %14s %9s\n", "Mode", "Measured (Hz)", "Initial (Hz)",
                "Error (%)", "Updated (Hz)", "Error (%)");
  os << line;
  for (const auto& m : r.modes) {
    std::snprintf(line, sizeof line, "%-5d %14.2f %14.2f %9.2f %14.2f %9.2f\n", m.mode, m.measured, m.initial,
                  m.initial_error_pct, m.updated, m.updated_error_pct);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-5s %14s %14s %9.2f %14s %9.2f\n", "mean", "", "", mean_initial_error_pct(r), "",
                mean_updated_error_pct(r));
  os << line << '\n';

  os << "Acceptance rate: " << fmt("%.3f", r.diagnostics.acceptance_rate) << '\n';
  os << "Effective sample size:";
  for (std::size_t i = 0; i < r.diagnostics.ess.size(); ++i) {
    os << ' ' << fmt("%.1f", r.diagnostics.ess[i]);
    if (i < r.diagnostics.ess_degenerate.size() && r.diagnostics.ess_degenerate[i]) os << "(degenerate)";
  }
  os << '\n';
  os << "Target (FEM) evaluations: " << r.diagnostics.target_evaluations << "   proposals: " << r.diagnostics.proposals
     << '\n';
  if (wall_time_seconds) os << "Wall time: " << fmt("%.2f", *wall_time_seconds) << " s\n";
  for (const auto& n : r.notes) os << "Note: " << n << '\n';
  if (r.error) os << "\nERROR: " << *r.error << '\n';
  return os.str();
}

std::string format_comparison(const std::vector<Report>& reports) {
  std::ostringstream os;
  if (reports.empty()) return {};
  os << "Case: " << reports.front().case_name << "   seed: " << reports.front().seed << "\n\n";
  char cell[128];
  std::snprintf(cell, sizeof cell, "%-5s %12s %12s %9s", "Mode", "Measured", "Initial", "Error (%)");
  os << cell;
  for (const auto& r : reports) {
    std::snprintf(cell, sizeof cell, " %12s %9s", r.sampler.c_str(), "Error (%)");
    os << cell;
  }
  os << '\n';
  const auto& first = reports.front();
  for (std::size_t i = 0; i < first.modes.size(); ++i) {
    const auto& m = first.modes[i];
    std::snprintf(cell, sizeof cell, "%-5d %12.2f %12.2f %9.2f", m.mode, m.measured, m.initial, m.initial_error_pct);
    os << cell;
    for (const auto& r : reports) {
      const ModeRow& rm = r.modes.at(i);
      std::snprintf(cell, sizeof cell, " %12.2f %9.2f", rm.updated, rm.updated_error_pct);
      os << cell;
    }
    os << '\n';
  }
  std::snprintf(cell, sizeof cell, "%-5s %12s %12s %9.2f", "mean", "", "", mean_initial_error_pct(first));
  os << cell;
  for (const auto& r : reports) {
    std::snprintf(cell, sizeof cell, " %12s %9.2f", "", mean_updated_error_pct(r));
    os << cell;
  }
  os << "\n\n";
  std::snprintf(cell, sizeof cell, "%-10s", "Parameter");
  os << cell;
  for (const auto& r : reports) {
    std::snprintf(cell, sizeof cell, " %12s", r.sampler.c_str());
    os << cell;
  }
  os << '\n';
  for (std::size_t i = 0; i < first.parameters.size(); ++i) {
    std::snprintf(cell, sizeof cell, "%-10s", first.parameters[i].name.c_str());
    os << cell;
    for (const auto& r : reports) {
      std::snprintf(cell, sizeof cell, " %12.4e", r.parameters.at(i).mean);
      os << cell;
    }
    os << '\n';
  }
  os << '\n';
  for (const auto& r : reports) {
    os << r.sampler << ": acceptance " << fmt("%.3f", r.diagnostics.acceptance_rate) << ", FEM evaluations "
       << r.diagnostics.target_evaluations;
    if (r.error) os << ", ERROR: " << *r.error;
    os << '\n';
  }
  return os.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

void emit_report(const Report& r, ReportFormat format, const std::filesystem::path& path,
                 std::optional<double> wall_time_seconds) {
  if (format == ReportFormat::text_table) {
    write_text_file(path, format_report_table(r, wall_time_seconds));
  } else {
    write_text_file(path, to_json(r).dump(2) + "\n");
  }
}

}  // namespace beamupdate
