// Acceptance suite: statistical and algebraic end-to-end checks, one
// PASS/FAIL line per criterion. Exits nonzero if any criterion fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "carate/estimators.hpp"
#include "carate/mc.hpp"
#include "carate/report.hpp"
#include "carate/scenario.hpp"
#include "naive_ref.hpp"

using namespace carate;

namespace {

struct Outcome {
    std::string id;
    bool pass = false;
    std::string detail;
};

std::vector<Outcome> outcomes;

void record(const std::string& id, bool pass, const std::string& detail) {
    outcomes.push_back({id, pass, detail});
    std::printf("%-4s %s  %s\n", id.c_str(), pass ? "PASS" : "FAIL", detail.c_str());
    std::fflush(stdout);
}

std::string fmt(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.4g", value);
    return buffer;
}

double elapsed_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

double mean_of(const std::vector<double>& values) {
    CompensatedSum sum;
    for (const double v : values) sum.add(v);
    return sum.value() / static_cast<double>(values.size());
}

double sd_of(const std::vector<double>& values) {
    const double mean = mean_of(values);
    CompensatedSum sq;
    for (const double v : values) sq.add((v - mean) * (v - mean));
    return std::sqrt(sq.value() / static_cast<double>(values.size() - 1));
}

// ---- P1 / P2: U-statistic naive-loop equivalence and the LOO identity ----

void run_p1_p2() {
    const auto start = std::chrono::steady_clock::now();
    std::mt19937_64 gen(1001);
    std::vector<StratumData> instances;
    for (int i = 0; i < 200; ++i) instances.push_back(naive::random_stratum(gen, 30, 5, 1));

    double max_rel_pair = 0.0;
    double max_rel_loo = 0.0;
    for (const auto& stratum : instances) {
        const auto gram = invert_or_pseudo(sample_gram(stratum.x));
        for (const int arm : {0, 1}) {
            const double fast = u_statistic_pair(stratum, gram.inverse, arm);
            const double slow = naive::u_pair(stratum, gram.inverse, arm);
            max_rel_pair =
                std::max(max_rel_pair, std::abs(fast - slow) / (1.0 + std::abs(slow)));
            const double loo = u_statistic_loo(stratum, gram.inverse, arm);
            max_rel_loo = std::max(max_rel_loo, std::abs(loo - fast) / (1.0 + std::abs(fast)));
        }
    }
    const double seconds = elapsed_since(start);
    record("P1", max_rel_pair <= 1e-10 && seconds < 5.0,
           "u-statistic vs naive double loop: max rel err " + fmt(max_rel_pair) + ", " +
               fmt(seconds) + " s (limit 5 s)");
    record("P2", max_rel_loo <= 1e-10,
           "leave-one-out identity: max rel err " + fmt(max_rel_loo));
}

// ---- P3: Sherman-Morrison downdates against direct re-inversion ----

void run_p3() {
    std::mt19937_64 gen(1003);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_int_distribution<int> p_dist(1, 20);
    double max_rel = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const int p = p_dist(gen);
        const int n = 3 * p + 2;
        Eigen::MatrixXd rows(n, p);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < p; ++j) rows(i, j) = normal(gen);
        }
        const Eigen::MatrixXd gram = sample_gram(rows);
        const Eigen::MatrixXd inverse = gram.fullPivLu().inverse();
        const Eigen::VectorXd u = rows.row(0).transpose();
        const Eigen::VectorXd v = rows.row(1).transpose();
        const double c = 1.0 / n;

        const Eigen::MatrixXd once = rank_one_downdate(inverse, u, c);
        const Eigen::MatrixXd once_direct =
            (gram - c * u * u.transpose()).fullPivLu().inverse();
        max_rel = std::max(max_rel, (once - once_direct).cwiseAbs().maxCoeff() /
                                        once_direct.cwiseAbs().maxCoeff());

        const Eigen::MatrixXd twice = rank_one_downdate(once, v, c);
        const Eigen::MatrixXd twice_direct =
            (gram - c * u * u.transpose() - c * v * v.transpose()).fullPivLu().inverse();
        max_rel = std::max(max_rel, (twice - twice_direct).cwiseAbs().maxCoeff() /
                                        twice_direct.cwiseAbs().maxCoeff());
    }
    record("P3", max_rel <= 1e-8,
           "rank-one downdate vs direct re-inversion: max rel err " + fmt(max_rel));
}

// ---- P4: oracle estimator is unbiased under within-stratum simple randomization ----

MCResult run_p4() {
    const auto start = std::chrono::steady_clock::now();
    DGPConfig config;
    config.n = 300;
    config.p = 10;
    config.coef_seed = 41;
    config.scheme.kind = RandomizationScheme::Kind::Simple;
    config.scheme.target_pi = {0.5};
    const auto result = run_monte_carlo(config, {EstimatorKind::Oracle}, 2000, 20250004, 0);
    const auto& m = result.metrics.at(EstimatorKind::Oracle);
    const double limit = 3.0 * m.sd / std::sqrt(2000.0);
    const double seconds = elapsed_since(start);
    record("P4", m.abs_bias <= limit && seconds < 120.0,
           "oracle unbiasedness: |bias| " + fmt(m.abs_bias) + " <= " + fmt(limit) + " (3 sd/sqrt(R)), " +
               fmt(seconds) + " s (limit 120 s)");
    return result;
}

// ---- P5: Model 1 desk-scale study ----

struct P5Runs {
    MCResult low;   // r = 0.05
    MCResult high;  // r = 0.30
};

P5Runs run_p5() {
    const auto start = std::chrono::steady_clock::now();
    const std::vector<EstimatorKind> kinds = {EstimatorKind::Unadjusted, EstimatorKind::Ols,
                                              EstimatorKind::Oracle, EstimatorKind::Feasible};
    DGPConfig config;
    config.n = 600;
    config.coef_seed = 51;
    config.scheme.kind = RandomizationScheme::Kind::PermutedBlock;
    config.scheme.block_size = 6;

    P5Runs runs;
    config.p = 30; // r = 0.05
    runs.low = run_monte_carlo(config, kinds, 1000, 20250005, 0);
    config.p = 180; // r = 0.30
    runs.high = run_monte_carlo(config, kinds, 1000, 20250005, 0);
    const double seconds = elapsed_since(start);

    const auto& low_f = runs.low.metrics.at(EstimatorKind::Feasible);
    const auto& high_f = runs.high.metrics.at(EstimatorKind::Feasible);
    const auto& high_ols = runs.high.metrics.at(EstimatorKind::Ols);

    const bool cp_ok = high_ols.coverage <= 0.93 && low_f.coverage >= 0.935 &&
                       low_f.coverage <= 0.975 && high_f.coverage >= 0.935 &&
                       high_f.coverage <= 0.975;
    record("P5a", cp_ok,
           "coverage: ols@r=.3 " + fmt(high_ols.coverage) + " <= 0.93, feasible " +
               fmt(low_f.coverage) + " / " + fmt(high_f.coverage) + " in [0.935, 0.975]");

    const double sd_u_low = runs.low.metrics.at(EstimatorKind::Unadjusted).sd;
    const double sd_u_high = runs.high.metrics.at(EstimatorKind::Unadjusted).sd;
    record("P5b", low_f.sd < sd_u_low && high_f.sd < sd_u_high,
           "efficiency: feasible sd " + fmt(low_f.sd) + " < unadj " + fmt(sd_u_low) + " and " +
               fmt(high_f.sd) + " < " + fmt(sd_u_high));

    record("P5c", low_f.abs_bias <= 0.15 * low_f.sd && high_f.abs_bias <= 0.15 * high_f.sd,
           "bias: " + fmt(low_f.abs_bias) + " <= " + fmt(0.15 * low_f.sd) + " and " +
               fmt(high_f.abs_bias) + " <= " + fmt(0.15 * high_f.sd));

    const bool ratio_ok = low_f.sd_over_se >= 0.80 && low_f.sd_over_se <= 1.10 &&
                          high_f.sd_over_se >= 0.80 && high_f.sd_over_se <= 1.10;
    record("P5d", ratio_ok,
           "sd/se: " + fmt(low_f.sd_over_se) + " and " + fmt(high_f.sd_over_se) +
               " in [0.80, 1.10]; " + fmt(seconds) + " s (target 900 s on 4 cores)");
    return runs;
}

// ---- P6: diagonal-bias curve, identity scale ----

std::vector<MCResult> run_p6() {
    const std::vector<EstimatorKind> kinds = {EstimatorKind::Ols, EstimatorKind::Oracle};
    DGPConfig config;
    config.n = 1000;
    config.scale = ScaleKind::Identity;
    config.coef_seed = 61;
    config.scheme.kind = RandomizationScheme::Kind::PermutedBlock;
    config.scheme.block_size = 6;

    std::vector<MCResult> results;
    std::vector<double> mean_diag;
    for (const int p : {5, 40, 60}) {
        config.p = p;
        results.push_back(run_monte_carlo(config, kinds, 1000, 20250006, 0));
        mean_diag.push_back(mean_of(results.back().diag_bias));
    }
    const bool monotone = mean_diag[0] < mean_diag[1] && mean_diag[1] < mean_diag[2];

    const auto& at60 = results.back();
    const double truth = at60.true_tau;
    const double bias_ols = std::abs(mean_of(at60.table.at(EstimatorKind::Ols).tau) - truth);
    const double bias_ora = std::abs(mean_of(at60.table.at(EstimatorKind::Oracle).tau) - truth);
    const double analytic = std::abs(mean_diag[2]);
    const bool agree = std::abs(bias_ols - analytic) <= 0.30 * analytic;
    const bool oracle_small = bias_ora <= 0.1 * bias_ols;

    record("P6", monotone && agree && oracle_small,
           "diag bias " + fmt(mean_diag[0]) + " < " + fmt(mean_diag[1]) + " < " +
               fmt(mean_diag[2]) + "; |bias_ols| " + fmt(bias_ols) + " vs analytic " +
               fmt(analytic) + " (30%); |bias_ora| " + fmt(bias_ora) + " <= 0.1 |bias_ols|");
    return results;
}

// ---- P7: variance estimator consistency in n ----

std::vector<MCResult> run_p7() {
    DGPConfig config;
    config.p = 10;
    config.coef_seed = 71;
    config.scheme.kind = RandomizationScheme::Kind::PermutedBlock;
    config.scheme.block_size = 6;

    std::vector<MCResult> results;
    std::vector<double> rel_err;
    for (const int n : {400, 800, 1600}) {
        config.n = n;
        results.push_back(run_monte_carlo(config, {EstimatorKind::Feasible}, 500, 20250007, 0));
        const auto& column = results.back().table.at(EstimatorKind::Feasible);
        const double mean_sigma2 = mean_of(column.sigma2);
        const double sd_tau = sd_of(column.tau);
        const double scaled_var = static_cast<double>(n) * sd_tau * sd_tau;
        rel_err.push_back(std::abs(mean_sigma2 - scaled_var) / scaled_var);
    }
    const bool monotone = rel_err[0] >= rel_err[1] && rel_err[1] >= rel_err[2];
    const bool tight = rel_err[2] <= 0.15;
    record("P7", monotone && tight,
           "variance consistency: rel err " + fmt(rel_err[0]) + " >= " + fmt(rel_err[1]) +
               " >= " + fmt(rel_err[2]) + ", last <= 0.15");
    return results;
}

// ---- P8: Model 2 binary-outcome study ----

MCResult run_p8() {
    DGPConfig config;
    config.model = Model::Two;
    config.n = 600;
    config.p = 180; // r = 0.3
    config.coef_seed = 81;
    config.scheme.kind = RandomizationScheme::Kind::PermutedBlock;
    config.scheme.block_size = 6;
    const auto result = run_monte_carlo(
        config, {EstimatorKind::Unadjusted, EstimatorKind::Feasible}, 1000, 20250008, 0);

    const auto& f = result.metrics.at(EstimatorKind::Feasible);
    const auto& u = result.metrics.at(EstimatorKind::Unadjusted);
    const bool ok = f.coverage >= 0.93 && f.coverage <= 0.98 && f.sd <= 1.02 * u.sd &&
                    f.abs_bias <= 0.15 * f.sd;
    record("P8", ok,
           "model 2: feasible cp " + fmt(f.coverage) + " in [0.93, 0.98], sd " + fmt(f.sd) +
               " <= 1.02 x " + fmt(u.sd) + ", |bias| " + fmt(f.abs_bias) + " <= " +
               fmt(0.15 * f.sd));
    return result;
}

// ---- P9: byte-identical simulate tables across worker counts ----

std::vector<MCResult> run_p9() {
    ScenarioRun run;
    run.name = "determinism";
    run.config.n = 200;
    run.config.p = 10;
    run.config.coef_seed = 91;
    run.replicates = 12;
    run.seed = 20250009;
    run.kinds = {EstimatorKind::Unadjusted, EstimatorKind::Ols, EstimatorKind::Feasible};

    auto render = [&run](const MCResult& result) {
        std::ostringstream csv, json;
        write_simulation_csv(csv, {run}, {result});
        write_simulation_json(json, {run}, {result});
        return csv.str() + "\x1e" + json.str();
    };
    const auto serial = run_monte_carlo(run.config, run.kinds, run.replicates, run.seed, 1);
    const auto parallel = run_monte_carlo(run.config, run.kinds, run.replicates, run.seed, 4);
    const bool identical = render(serial) == render(parallel);
    record("P9", identical, "workers 1 vs 4: output tables byte-identical");
    return {serial, parallel};
}

// ---- P10: structural invariants ----

void run_p10(const P5Runs& p5, const std::vector<const MCResult*>& all_runs) {
    std::mt19937_64 gen(1010);
    bool zeta_nonneg = true;
    for (int trial = 0; trial < 1000; ++trial) {
        const auto data = naive::random_dataset(gen, 4, 16, 3, 1);
        if (zeta_H_hat(data) < 0.0) zeta_nonneg = false;
    }
    record("P10a", zeta_nonneg, "zeta_H >= 0 on 1000 random datasets");

    bool consistency = true;
    int total = 0;
    for (const auto* result : all_runs) {
        consistency = consistency && result->consistency_checked == result->replicates;
        total += result->consistency_checked;
    }
    record("P10b", consistency,
           "consistency identity verified on every one of " + std::to_string(total) +
               " generated replicates");

    const auto& zeta = p5.high.zeta2_II;
    const double mean = mean_of(zeta);
    const double se = sd_of(zeta) / std::sqrt(static_cast<double>(zeta.size()));
    record("P10c", mean >= -3.0 * se,
           "mean zeta2_II at r=0.3 is " + fmt(mean) + " >= -3 x MC se " + fmt(se));
}

} // namespace

int main() {
    const auto start = std::chrono::steady_clock::now();
    std::printf("acceptance suite\n");

    run_p1_p2();
    run_p3();
    const auto p4 = run_p4();
    const auto p5 = run_p5();
    const auto p6 = run_p6();
    const auto p7 = run_p7();
    const auto p8 = run_p8();
    const auto p9 = run_p9();

    std::vector<const MCResult*> all_runs = {&p4, &p5.low, &p5.high, &p8};
    for (const auto& result : p6) all_runs.push_back(&result);
    for (const auto& result : p7) all_runs.push_back(&result);
    for (const auto& result : p9) all_runs.push_back(&result);
    run_p10(p5, all_runs);

    int failures = 0;
    for (const auto& outcome : outcomes) failures += outcome.pass ? 0 : 1;
    std::printf("%d/%zu criteria passed in %.1f s\n", static_cast<int>(outcomes.size()) - failures,
                outcomes.size(), elapsed_since(start));
    return failures == 0 ? 0 : 1;
}
