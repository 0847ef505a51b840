#include "carate/report.hpp"

#include <json.hpp>
#include <ostream>

#include "carate/csv.hpp"

namespace carate {

using nlohmann::json;

namespace {

json ci_to_json(const ConfidenceInterval& ci) {
    return json{{"lo", ci.lo}, {"hi", ci.hi}};
}

json estimate_to_json(const EstimateReport& report) {
    json j{
        {"estimator", to_string(report.kind)},
        {"tau_hat", report.tau_hat},
        {"stratum_effects", report.stratum_effects},
        {"stratum_shares", report.stratum_shares},
        {"pseudo_inverse_used", report.pseudo_used},
    };
    if (report.inference_filled) {
        j["sigma2_hat"] = report.sigma2_hat;
        j["se"] = report.se;
        j["ci"] = ci_to_json(report.ci);
        j["clamped"] = report.clamped;
    }
    if (report.diag_bias) j["diag_bias"] = *report.diag_bias;
    if (report.components) {
        const auto& c = *report.components;
        j["variance_components"] = json{
            {"zeta2_H", c.zeta2_H},
            {"zeta2_I", c.zeta2_I},
            {"sigma2_Y", c.sigma2_Y},
            {"sigma2_I_eta", c.sigma2_I_eta},
            {"sigma_I_eta10", c.sigma_I_eta10},
            {"zeta2_II", c.zeta2_II},
            {"zeta2_II_Y1", c.zeta2_II_Y1},
            {"zeta2_II_Y0", c.zeta2_II_Y0},
            {"zeta2_II_Y10", c.zeta2_II_Y10},
            {"oracle_mode", c.oracle_mode},
        };
    }
    return j;
}

json stratum_to_json(const StratumSummary& s) {
    json j{
        {"label", s.label},          {"n", s.n_units},
        {"n_treated", s.n_treated},  {"n_control", s.n_control},
        {"share", s.share},          {"treated_fraction", s.treated_fraction},
    };
    if (s.mean_treated) j["mean_treated"] = *s.mean_treated;
    if (s.mean_control) j["mean_control"] = *s.mean_control;
    return j;
}

json config_to_json(const ScenarioRun& run, const MCResult& result) {
    const auto& config = run.config;
    json j{
        {"scenario", run.name},
        {"model", config.model == Model::One ? 1 : 2},
        {"n", config.n},
        {"p", config.p},
        {"p0", config.p0},
        {"ratio", run.ratio >= 0.0 ? json(run.ratio) : json()},
        {"scale", config.scale == ScaleKind::Ar1 ? "ar1" : "identity"},
        {"rho", config.ar_rho},
        {"nu", config.t_dof},
        {"stratum_probs", config.stratum_probs},
        {"noise_sd", config.noise_sd},
        {"coef_seed", config.coef_seed},
        {"scheme", to_string(config.scheme.kind)},
        {"block_size", config.scheme.block_size},
        {"lambda", config.scheme.lambda},
        {"target_pi", config.scheme.target_pi},
        {"alpha", config.alpha},
        {"replicates", result.replicates},
        {"seed", result.master_seed},
        {"true_tau", result.true_tau},
        {"true_tau_mc_se", result.true_tau_se},
    };
    return j;
}

} // namespace

ReportFormat report_format_from_string(const std::string& name) {
    if (name == "json") return ReportFormat::Json;
    if (name == "csv") return ReportFormat::Csv;
    if (name == "text") return ReportFormat::Text;
    throw ValidationError("unknown output format: " + name);
}

void write_analysis(std::ostream& out, const std::vector<EstimateReport>& reports,
                    const std::vector<StratumSummary>& summaries, ReportFormat format,
                    double alpha) {
    switch (format) {
        case ReportFormat::Json: {
            json j{{"schema_version", kReportSchemaVersion}, {"alpha", alpha}};
            j["estimates"] = json::array();
            for (const auto& report : reports) j["estimates"].push_back(estimate_to_json(report));
            j["strata"] = json::array();
            for (const auto& s : summaries) j["strata"].push_back(stratum_to_json(s));
            out << j.dump(2) << '\n';
            break;
        }
        case ReportFormat::Csv: {
            out << "estimator,tau_hat,sigma2_hat,se,ci_lo,ci_hi,pseudo_inverse_used,"
                   "clamped,diag_bias\n";
            for (const auto& report : reports) {
                out << to_string(report.kind) << ',' << format_double(report.tau_hat) << ',';
                if (report.inference_filled) {
                    out << format_double(report.sigma2_hat) << ',' << format_double(report.se)
                        << ',' << format_double(report.ci.lo) << ','
                        << format_double(report.ci.hi);
                } else {
                    out << ",,,";
                }
                out << ',' << (report.pseudo_used ? 1 : 0) << ',' << (report.clamped ? 1 : 0)
                    << ',';
                if (report.diag_bias) out << format_double(*report.diag_bias);
                out << '\n';
            }
            break;
        }
        case ReportFormat::Text: {
            out << "stratum summary (K = " << summaries.size() << ")\n";
            out << "  label n n1 n0 share pi_n mean1 mean0\n";
            for (const auto& s : summaries) {
                out << "  " << s.label << ' ' << s.n_units << ' ' << s.n_treated << ' '
                    << s.n_control << ' ' << format_double(s.share) << ' '
                    << format_double(s.treated_fraction) << ' '
                    << (s.mean_treated ? format_double(*s.mean_treated) : "-") << ' '
                    << (s.mean_control ? format_double(*s.mean_control) : "-") << '\n';
            }
            for (const auto& report : reports) {
                out << to_string(report.kind) << ": tau_hat = " << format_double(report.tau_hat);
                if (report.inference_filled) {
                    out << ", se = " << format_double(report.se) << ", "
                        << format_double(100.0 * (1.0 - alpha)) << "% ci = ["
                        << format_double(report.ci.lo) << ", " << format_double(report.ci.hi)
                        << ']';
                }
                if (report.pseudo_used) out << " [pseudo-inverse used]";
                if (report.clamped) out << " [variance clamped]";
                if (report.diag_bias) out << " (diag bias " << format_double(*report.diag_bias) << ')';
                out << '\n';
            }
            break;
        }
    }
}

void write_simulation_json(std::ostream& out, const std::vector<ScenarioRun>& runs,
                           const std::vector<MCResult>& results) {
    json rows = json::array();
    for (std::size_t i = 0; i < results.size(); ++i) {
        for (const auto kind : results[i].kinds) {
            const auto& m = results[i].metrics.at(kind);
            json row = config_to_json(runs[i], results[i]);
            row["schema_version"] = kReportSchemaVersion;
            row["estimator"] = to_string(kind);
            row["abs_bias"] = m.abs_bias;
            row["sd"] = m.sd;
            row["mean_se"] = m.mean_se;
            row["sd_over_se"] = m.sd_over_se;
            row["coverage"] = m.coverage;
            row["mc_coverage"] = m.mc_coverage;
            rows.push_back(std::move(row));
        }
    }
    out << rows.dump(2) << '\n';
}

void write_simulation_csv(std::ostream& out, const std::vector<ScenarioRun>& runs,
                          const std::vector<MCResult>& results) {
    out << "scenario,model,n,p,estimator,metric,value\n";
    for (std::size_t i = 0; i < results.size(); ++i) {
        const auto& run = runs[i];
        for (const auto kind : results[i].kinds) {
            const auto& m = results[i].metrics.at(kind);
            const std::string prefix = run.name + ',' +
                                       (run.config.model == Model::One ? "1" : "2") + ',' +
                                       std::to_string(run.config.n) + ',' +
                                       std::to_string(run.config.p) + ',' + to_string(kind) + ',';
            out << prefix << "abs_bias," << format_double(m.abs_bias) << '\n';
            out << prefix << "sd," << format_double(m.sd) << '\n';
            out << prefix << "mean_se," << format_double(m.mean_se) << '\n';
            out << prefix << "sd_over_se," << format_double(m.sd_over_se) << '\n';
            out << prefix << "coverage," << format_double(m.coverage) << '\n';
            out << prefix << "mc_coverage," << format_double(m.mc_coverage) << '\n';
            out << prefix << "true_tau," << format_double(results[i].true_tau) << '\n';
        }
    }
}

void write_error_json(std::ostream& out, const std::string& kind, const std::string& message) {
    out << json{{"error", {{"kind", kind}, {"message", message}}}}.dump() << '\n';
}

} // namespace carate
