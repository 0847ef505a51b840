#ifndef CARATE_VARIANCE_HPP
#define CARATE_VARIANCE_HPP

#include <vector>

#include "carate/data.hpp"
#include "carate/gram.hpp"

namespace carate {

inline constexpr double kVarianceFloor = 1e-12;

// Decomposition sigma2 = zeta2_H + zeta2_I + zeta2_II, with the pieces each
// term is assembled from. zeta2_I and zeta2_II are differences of
// U-statistics and can go negative in pathological samples; sigma2 handed to
// interval construction is floored at kVarianceFloor with `clamped` set.
struct VarianceComponents {
    double zeta2_H = 0.0;

    double zeta2_I = 0.0;
    double sigma2_Y = 0.0;       // arm-wise outcome variance term
    double sigma2_I_eta = 0.0;   // same-arm projection term
    double sigma_I_eta10 = 0.0;  // cross-arm projection term

    double zeta2_II = 0.0;
    double zeta2_II_Y1 = 0.0;
    double zeta2_II_Y0 = 0.0;
    double zeta2_II_Y10 = 0.0;
    double zeta2_II_Y1_diag = 0.0;  // [1] piece, treated
    double zeta2_II_Y1_pair = 0.0;  // [1,2] piece, treated
    double zeta2_II_Y0_diag = 0.0;
    double zeta2_II_Y0_pair = 0.0;

    double sigma2 = 0.0;         // zeta2_H + zeta2_I + zeta2_II, unclamped
    bool oracle_mode = false;
    bool pseudo_used = false;
    bool clamped = false;

    double sigma2_for_ci() const {
        return sigma2 < kVarianceFloor ? kVarianceFloor : sigma2;
    }
};

enum class BaselineVariance { Unadjusted, Ols };

struct ConfidenceInterval {
    double lo = 0.0;
    double hi = 0.0;
    bool clamped = false;
};

// zeta2_H estimate: p_nk-weighted squared double-centered arm-mean gaps.
// Always >= 0. Needs both arms in every stratum.
double zeta_H_hat(const std::vector<StratumSummary>& summaries);
double zeta_H_hat(const TrialDataset& data);

struct ZetaIParts {
    double value = 0.0;
    double sigma2_Y = 0.0;
    double sigma2_I_eta = 0.0;
    double sigma_I_eta10 = 0.0;
};

struct ZetaIIParts {
    double value = 0.0;
    double y1 = 0.0;
    double y0 = 0.0;
    double y10 = 0.0;
    double y1_diag = 0.0;
    double y1_pair = 0.0;
    double y0_diag = 0.0;
    double y0_pair = 0.0;
};

// The U-statistic pieces need two units per arm in every stratum; both
// throw DegenerateStratumError otherwise. `grams` holds one (pseudo-)inverse
// per stratum, sample or oracle.
ZetaIParts zeta_I_hat(const std::vector<StratumData>& strata,
                      const std::vector<GramPair>& grams);
ZetaIIParts zeta_II_hat(const std::vector<StratumData>& strata,
                        const std::vector<GramPair>& grams);

ZetaIParts zeta_I_hat(const TrialDataset& data, const std::vector<GramPair>& grams);
ZetaIIParts zeta_II_hat(const TrialDataset& data, const std::vector<GramPair>& grams);

enum class GramMode { Feasible, Oracle };

// Full variance estimate for the bias-corrected estimator. Feasible mode
// computes sample Grams internally; oracle mode uses the supplied population
// inverses in every kernel.
VarianceComponents sigma2_hat(const std::vector<StratumData>& strata, GramMode mode,
                              const std::vector<GramPair>* oracle_grams = nullptr,
                              double rcond = kDefaultRcond);
VarianceComponents sigma2_hat(const TrialDataset& data, GramMode mode,
                              const std::vector<GramPair>* oracle_grams = nullptr,
                              double rcond = kDefaultRcond);
// Core form with the per-stratum kernels already in hand; `mode` only labels
// the provenance recorded in the result.
VarianceComponents sigma2_hat(const std::vector<StratumData>& strata,
                              const std::vector<GramPair>& grams, GramMode mode);

// Plug-in variance for the baseline estimators: zeta2_H + sigma2_Y on raw
// outcomes (unadjusted), or zeta2_H + arm-wise residual variances with
// r_i = Y_i - x_i' beta_k, beta_k = (1-pi)beta(1) + pi beta(0) (ols).
double sigma2_baseline_hat(const std::vector<StratumData>& strata, BaselineVariance kind,
                           double rcond = kDefaultRcond);
double sigma2_baseline_hat(const TrialDataset& data, BaselineVariance kind,
                           double rcond = kDefaultRcond);
// Ols baseline with the sample Grams already in hand.
double sigma2_baseline_hat(const std::vector<StratumData>& strata, BaselineVariance kind,
                           const std::vector<GramPair>& grams);

// tau +- z_{1-alpha/2} sqrt(max(sigma2, floor)) / sqrt(n). alpha in (0, 1].
ConfidenceInterval wald_ci(double tau_hat, double sigma2, Eigen::Index n, double alpha);

} // namespace carate

#endif
