#include "carate/mc.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <mutex>
#include <thread>

namespace carate {

EstimatorMetrics summarize_metrics(const std::vector<double>& tau_hats,
                                   const std::vector<double>& ses,
                                   const std::vector<char>& covered, double true_tau,
                                   double alpha) {
    const std::size_t count = tau_hats.size();
    if (count < 2 || ses.size() != count || covered.size() != count) {
        throw ValidationError("summarize_metrics: need at least 2 replicates");
    }
    CompensatedSum tau_sum, se_sum, cover_sum;
    for (std::size_t r = 0; r < count; ++r) {
        tau_sum.add(tau_hats[r]);
        se_sum.add(ses[r]);
        cover_sum.add(covered[r] ? 1.0 : 0.0);
    }
    const double mean_tau = tau_sum.value() / static_cast<double>(count);
    CompensatedSum sq_sum;
    for (const double tau : tau_hats) {
        const double d = tau - mean_tau;
        sq_sum.add(d * d);
    }
    EstimatorMetrics m;
    m.abs_bias = std::abs(mean_tau - true_tau);
    m.sd = std::sqrt(sq_sum.value() / static_cast<double>(count - 1));
    m.mean_se = se_sum.value() / static_cast<double>(count);
    m.sd_over_se = m.sd / m.mean_se;
    m.coverage = cover_sum.value() / static_cast<double>(count);

    const double z = normal_upper_quantile(alpha);
    CompensatedSum mc_cover;
    for (const double tau : tau_hats) {
        mc_cover.add(std::abs(tau - true_tau) <= z * m.sd ? 1.0 : 0.0);
    }
    m.mc_coverage = mc_cover.value() / static_cast<double>(count);
    return m;
}

MCResult run_monte_carlo(const DGPConfig& config, const std::vector<EstimatorKind>& kinds,
                         int replicates, std::uint64_t master_seed, int workers) {
    const auto started = std::chrono::steady_clock::now();
    config.validate();
    if (kinds.empty()) throw ValidationError("no estimators requested");
    if (replicates < 2) throw ValidationError("need at least 2 replicates");

    bool want_oracle = false, want_ols = false, want_feasible = false;
    for (const auto kind : kinds) {
        want_oracle = want_oracle || kind == EstimatorKind::Oracle;
        want_ols = want_ols || kind == EstimatorKind::Ols;
        want_feasible = want_feasible || kind == EstimatorKind::Feasible;
    }

    std::vector<GramPair> oracle_grams;
    if (want_oracle) {
        oracle_grams.assign(config.n_strata(), true_gram(config));
    }

    MCResult result;
    result.config = config;
    result.replicates = replicates;
    result.master_seed = master_seed;
    result.alpha = config.alpha;
    result.kinds = kinds;
    const TrueTau truth = true_tau(config);
    result.true_tau = truth.value;
    result.true_tau_se = truth.mc_se;

    for (const auto kind : kinds) {
        auto& column = result.table[kind];
        column.tau.assign(replicates, 0.0);
        column.sigma2.assign(replicates, 0.0);
        column.se.assign(replicates, 0.0);
        column.covered.assign(replicates, 0);
        column.pseudo.assign(replicates, 0);
    }
    if (want_feasible) {
        result.zeta2_II.assign(replicates, 0.0);
        result.zeta2_H.assign(replicates, 0.0);
    }
    if (want_ols) {
        result.diag_bias.assign(replicates, 0.0);
    }

    if (workers <= 0) {
        workers = static_cast<int>(std::thread::hardware_concurrency());
        if (workers <= 0) workers = 1;
    }
    workers = std::min(workers, replicates);

    std::atomic<int> next{0};
    std::atomic<int> consistency_ok{0};
    std::mutex failure_mutex;
    int failed_replicate = -1;
    std::string failure_cause;

    auto record_failure = [&](int replicate, const std::string& cause) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (failed_replicate < 0 || replicate < failed_replicate) {
            failed_replicate = replicate;
            failure_cause = cause;
        }
    };

    auto worker = [&]() {
        for (;;) {
            const int r = next.fetch_add(1);
            if (r >= replicates) return;
            {
                std::lock_guard<std::mutex> lock(failure_mutex);
                if (failed_replicate >= 0) return;
            }
            try {
                const GeneratedTrial trial = generate_trial(config, master_seed, r);
                for (Eigen::Index i = 0; i < trial.data.n(); ++i) {
                    const double expected =
                        trial.data.assignments[i] == 1 ? trial.y1[i] : trial.y0[i];
                    if (trial.data.outcomes[i] != expected) {
                        throw NumericError("consistency identity violated");
                    }
                }
                consistency_ok.fetch_add(1);

                AnalysisOptions options;
                options.alpha = config.alpha;
                options.oracle_grams = want_oracle ? &oracle_grams : nullptr;
                const auto strata = split_by_stratum(trial.data);
                const auto reports = analyze(strata, kinds, options);

                for (std::size_t j = 0; j < kinds.size(); ++j) {
                    const auto& report = reports[j];
                    // .at(): the map structure is frozen before the pool starts.
                    auto& column = result.table.at(kinds[j]);
                    column.tau[r] = report.tau_hat;
                    column.sigma2[r] = report.sigma2_hat;
                    column.se[r] = report.se;
                    column.covered[r] =
                        report.ci.lo <= result.true_tau && result.true_tau <= report.ci.hi;
                    column.pseudo[r] = report.pseudo_used;
                    if (kinds[j] == EstimatorKind::Feasible && report.components) {
                        result.zeta2_II[r] = report.components->zeta2_II;
                        result.zeta2_H[r] = report.components->zeta2_H;
                    }
                    if (kinds[j] == EstimatorKind::Ols && report.diag_bias) {
                        result.diag_bias[r] = *report.diag_bias;
                    }
                }
            } catch (const std::exception& err) {
                record_failure(r, err.what());
            }
        }
    };

    if (workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        pool.reserve(workers);
        for (int t = 0; t < workers; ++t) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    if (failed_replicate >= 0) {
        throw NumericError("replicate " + std::to_string(failed_replicate) +
                           " failed: " + failure_cause);
    }
    result.consistency_checked = consistency_ok.load();

    for (const auto kind : kinds) {
        const auto& column = result.table[kind];
        result.metrics[kind] = summarize_metrics(column.tau, column.se, column.covered,
                                                 result.true_tau, config.alpha);
    }
    result.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

} // namespace carate
