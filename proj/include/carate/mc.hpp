#ifndef CARATE_MC_HPP
#define CARATE_MC_HPP

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "carate/dgp.hpp"
#include "carate/estimators.hpp"

namespace carate {

// Aggregated Monte Carlo metrics for one estimator.
struct EstimatorMetrics {
    double abs_bias = 0.0;
    double sd = 0.0;            // Monte Carlo standard deviation of tau_hat
    double mean_se = 0.0;
    double sd_over_se = 0.0;
    double coverage = 0.0;      // CI covers the truth
    double mc_coverage = 0.0;   // |tau_hat - tau| <= z * SD
};

// Raw per-replicate columns, kept so tests can form their own statistics
// (e.g. Monte Carlo standard errors of component means).
struct ReplicateTable {
    std::vector<double> tau;
    std::vector<double> sigma2;
    std::vector<double> se;
    std::vector<char> covered;
    std::vector<char> pseudo;
};

struct MCResult {
    DGPConfig config;
    int replicates = 0;
    std::uint64_t master_seed = 0;
    double true_tau = 0.0;
    double true_tau_se = 0.0;
    double alpha = 0.05;

    std::vector<EstimatorKind> kinds;
    std::map<EstimatorKind, EstimatorMetrics> metrics;
    std::map<EstimatorKind, ReplicateTable> table;

    std::vector<double> zeta2_II;       // feasible components, per replicate
    std::vector<double> zeta2_H;
    std::vector<double> diag_bias;      // ols diagnostic, per replicate
    int consistency_checked = 0;        // replicates passing Y = A Y(1) + (1-A) Y(0)

    // Wall time is reported on stderr by the CLI but never written into the
    // output tables, which must be byte-identical across reruns.
    double wall_seconds = 0.0;
};

// Metrics from per-replicate estimates; exposed for direct testing.
EstimatorMetrics summarize_metrics(const std::vector<double>& tau_hats,
                                   const std::vector<double>& ses,
                                   const std::vector<char>& covered, double true_tau,
                                   double alpha);

// Runs R replicates, seeds derived from (master_seed, replicate, purpose).
// Replicates are data-parallel across `workers` threads; aggregation is in
// replicate order so the result is identical for any worker count.
MCResult run_monte_carlo(const DGPConfig& config, const std::vector<EstimatorKind>& kinds,
                         int replicates, std::uint64_t master_seed, int workers = 0);

} // namespace carate

#endif
