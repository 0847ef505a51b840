#ifndef CARATE_REPORT_HPP
#define CARATE_REPORT_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "carate/estimators.hpp"
#include "carate/mc.hpp"
#include "carate/scenario.hpp"

namespace carate {

inline constexpr int kReportSchemaVersion = 1;

enum class ReportFormat { Json, Csv, Text };
ReportFormat report_format_from_string(const std::string& name);

// Analysis report (one dataset, several estimators). All three formats carry
// the same numbers; CSV/text print them with 17 significant digits, JSON
// uses exact round-trip doubles.
void write_analysis(std::ostream& out, const std::vector<EstimateReport>& reports,
                    const std::vector<StratumSummary>& summaries, ReportFormat format,
                    double alpha);

// Simulation metrics. JSON: one object per (scenario, estimator) with all
// metric fields. CSV: plot-ready long format, one row per
// (scenario, estimator, metric).
void write_simulation_json(std::ostream& out,
                           const std::vector<ScenarioRun>& runs,
                           const std::vector<MCResult>& results);
void write_simulation_csv(std::ostream& out,
                          const std::vector<ScenarioRun>& runs,
                          const std::vector<MCResult>& results);

// Machine-readable error object used on validation failures (exit code 2/3).
void write_error_json(std::ostream& out, const std::string& kind, const std::string& message);

} // namespace carate

#endif
