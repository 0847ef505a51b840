// carate: covariate-adjusted ATE estimation for covariate-adaptive
// randomized trials, plus the randomization and simulation tooling around it.
//
// Subcommands:
//   analyze    point + interval estimates for a trial CSV
//   simulate   Monte Carlo study from a scenario config file
//   randomize  generate a treatment assignment column for a strata CSV

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "carate/csv.hpp"
#include "carate/estimators.hpp"
#include "carate/mc.hpp"
#include "carate/report.hpp"
#include "carate/scenario.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUnexpected = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDegenerate = 3;

std::vector<std::string> split_commas(const std::string& text) {
    std::vector<std::string> items;
    std::stringstream stream(text);
    std::string item;
    while (std::getline(stream, item, ',')) {
        if (!item.empty()) items.push_back(item);
    }
    return items;
}

std::ostream& open_output(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path);
    if (!file) throw carate::ValidationError("cannot open output file: " + path);
    return file;
}

struct AnalyzeArgs {
    std::string input;
    std::string output;
    std::string outcome = "y";
    std::string arm = "arm";
    std::string stratum = "stratum";
    std::string covariates;
    std::string estimators = "unadjusted,ols,feasible";
    std::string format = "text";
    double alpha = 0.05;
    double rcond = carate::kDefaultRcond;
};

int run_analyze(const AnalyzeArgs& args) {
    carate::CsvSchema schema;
    schema.outcome = args.outcome;
    schema.arm = args.arm;
    schema.stratum = args.stratum;
    schema.covariates = split_commas(args.covariates);

    const auto format = carate::report_format_from_string(args.format);
    const auto data = carate::load_csv(args.input, schema);
    const auto summaries = carate::build_strata(data);

    std::vector<carate::EstimatorKind> kinds;
    for (const auto& name : split_commas(args.estimators)) {
        kinds.push_back(carate::estimator_kind_from_string(name));
    }
    carate::AnalysisOptions options;
    options.alpha = args.alpha;
    options.rcond = args.rcond;
    const auto reports = carate::analyze(data, kinds, options);

    std::ofstream file;
    auto& out = open_output(file, args.output);
    carate::write_analysis(out, reports, summaries, format, args.alpha);
    return kExitOk;
}

struct SimulateArgs {
    std::string config;
    std::string json_path;
    std::string csv_path;
    int replicates = -1;
    long long seed = -1;
    int workers = 0;
};

int run_simulate(const SimulateArgs& args) {
    auto runs = carate::load_scenarios(args.config);
    std::vector<carate::MCResult> results;
    results.reserve(runs.size());
    for (auto& run : runs) {
        if (args.replicates > 0) run.replicates = args.replicates;
        if (args.seed >= 0) run.seed = static_cast<std::uint64_t>(args.seed);
        auto result = carate::run_monte_carlo(run.config, run.kinds, run.replicates, run.seed,
                                              args.workers);
        std::cerr << "scenario " << run.name << ": " << run.replicates << " replicates in "
                  << result.wall_seconds << " s\n";
        results.push_back(std::move(result));
    }

    if (!args.json_path.empty()) {
        std::ofstream file;
        auto& out = open_output(file, args.json_path);
        carate::write_simulation_json(out, runs, results);
    }
    if (!args.csv_path.empty()) {
        std::ofstream file;
        auto& out = open_output(file, args.csv_path);
        carate::write_simulation_csv(out, runs, results);
    }
    if (args.json_path.empty() && args.csv_path.empty()) {
        carate::write_simulation_csv(std::cout, runs, results);
    }
    return kExitOk;
}

struct RandomizeArgs {
    std::string input;
    std::string output;
    std::string stratum = "stratum";
    std::string arm_column = "arm";
    std::string scheme = "permuted-block";
    std::string pi = "0.5";
    int block_size = 6;
    double lambda = 2.0 / 3.0;
    long long seed = 1;
};

int run_randomize(const RandomizeArgs& args) {
    auto table = carate::read_csv_file(args.input);
    const int stratum_col = table.column(args.stratum);
    if (stratum_col < 0) {
        throw carate::ValidationError("missing column '" + args.stratum + "'");
    }
    if (table.column(args.arm_column) >= 0) {
        throw carate::ValidationError("column '" + args.arm_column + "' already exists");
    }

    // Sorted-label order gives the dense stratum ids, as in build_strata.
    std::map<std::string, int> index_of;
    for (const auto& row : table.rows) index_of.emplace(row[stratum_col], 0);
    int next = 0;
    for (auto& [label, index] : index_of) index = next++;
    std::vector<int> strata;
    strata.reserve(table.rows.size());
    for (const auto& row : table.rows) strata.push_back(index_of.at(row[stratum_col]));
    if (strata.empty()) {
        throw carate::ValidationError("no data rows in " + args.input);
    }

    carate::RandomizationScheme scheme;
    scheme.kind = carate::scheme_kind_from_string(args.scheme);
    scheme.block_size = args.block_size;
    scheme.lambda = args.lambda;
    scheme.target_pi.clear();
    for (const auto& item : split_commas(args.pi)) {
        scheme.target_pi.push_back(std::stod(item));
    }

    const auto arm = carate::assign(scheme, strata, static_cast<std::uint64_t>(args.seed));

    table.header.push_back(args.arm_column);
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        table.rows[i].push_back(std::to_string(arm[static_cast<Eigen::Index>(i)]));
    }
    std::ofstream file;
    auto& out = open_output(file, args.output);
    carate::write_csv(out, table);
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"covariate-adjusted ATE estimation under covariate-adaptive randomization"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    auto* analyze = app.add_subcommand("analyze", "estimate treatment effects from a trial CSV");
    analyze->add_option("-i,--input", analyze_args.input, "trial CSV file")->required();
    analyze->add_option("-o,--output", analyze_args.output, "output file (default stdout)");
    analyze->add_option("--outcome", analyze_args.outcome, "outcome column name");
    analyze->add_option("--arm", analyze_args.arm, "assignment column name");
    analyze->add_option("--stratum", analyze_args.stratum, "stratum column name");
    analyze->add_option("--covariates", analyze_args.covariates,
                        "comma-separated covariate columns (default: all remaining)");
    analyze->add_option("--estimators", analyze_args.estimators,
                        "comma-separated: unadjusted,ols,feasible");
    analyze->add_option("--alpha", analyze_args.alpha, "confidence level is 1 - alpha");
    analyze->add_option("--rcond", analyze_args.rcond, "pseudo-inverse eigenvalue cutoff");
    analyze->add_option("--format", analyze_args.format, "text | json | csv");

    SimulateArgs simulate_args;
    auto* simulate = app.add_subcommand("simulate", "run a Monte Carlo scenario file");
    simulate->add_option("-c,--config", simulate_args.config, "scenario config file")->required();
    simulate->add_option("--json", simulate_args.json_path, "write JSON metrics here");
    simulate->add_option("--csv", simulate_args.csv_path, "write CSV metrics here");
    simulate->add_option("-R,--replicates", simulate_args.replicates, "override replicate count");
    simulate->add_option("--seed", simulate_args.seed, "override master seed");
    simulate->add_option("--workers", simulate_args.workers,
                         "worker threads (0 = hardware default; results identical)");

    RandomizeArgs randomize_args;
    auto* randomize = app.add_subcommand("randomize", "append an assignment column to a CSV");
    randomize->add_option("-i,--input", randomize_args.input, "CSV with a stratum column")
        ->required();
    randomize->add_option("-o,--output", randomize_args.output, "output file (default stdout)");
    randomize->add_option("--stratum", randomize_args.stratum, "stratum column name");
    randomize->add_option("--arm-column", randomize_args.arm_column, "name of the new column");
    randomize->add_option("--scheme", randomize_args.scheme,
                          "simple | permuted-block | biased-coin");
    randomize->add_option("--pi", randomize_args.pi,
                          "target treated proportion (scalar or per sorted stratum label)");
    randomize->add_option("--block-size", randomize_args.block_size, "permuted block size");
    randomize->add_option("--lambda", randomize_args.lambda, "biased coin bias in (1/2, 1]");
    randomize->add_option("--seed", randomize_args.seed, "randomization seed")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& err) {
        return app.exit(err) == 0 ? kExitOk : kExitValidation;
    }

    try {
        if (*analyze) return run_analyze(analyze_args);
        if (*simulate) return run_simulate(simulate_args);
        if (*randomize) return run_randomize(randomize_args);
    } catch (const carate::ValidationError& err) {
        carate::write_error_json(std::cerr, "validation", err.what());
        return kExitValidation;
    } catch (const carate::DegenerateStratumError& err) {
        carate::write_error_json(std::cerr, "degenerate_stratum", err.what());
        return kExitDegenerate;
    } catch (const carate::NumericError& err) {
        carate::write_error_json(std::cerr, "numeric", err.what());
        return kExitDegenerate;
    } catch (const std::exception& err) {
        carate::write_error_json(std::cerr, "unexpected", err.what());
        return kExitUnexpected;
    }
    return kExitValidation;
}
