#ifndef CARATE_ESTIMATORS_HPP
#define CARATE_ESTIMATORS_HPP

#include <optional>
#include <string>
#include <vector>

#include "carate/data.hpp"
#include "carate/gram.hpp"
#include "carate/variance.hpp"

namespace carate {

enum class EstimatorKind { Unadjusted, Ols, Oracle, Feasible };

EstimatorKind estimator_kind_from_string(const std::string& name);
std::string to_string(EstimatorKind kind);

// Point estimate with optional inference fields. tau_hat always equals the
// share-weighted sum of stratum_effects (compensated, fixed stratum order).
struct EstimateReport {
    EstimatorKind kind = EstimatorKind::Unadjusted;
    double tau_hat = 0.0;
    std::vector<double> stratum_effects;   // per stratum, unweighted
    std::vector<double> stratum_shares;    // p_nk, same order

    bool inference_filled = false;
    double sigma2_hat = 0.0;               // variance of sqrt(n)(tau - truth)
    double se = 0.0;                       // sqrt(sigma2)/sqrt(n)
    ConfidenceInterval ci;

    bool pseudo_used = false;
    bool clamped = false;
    std::optional<double> diag_bias;       // ols only: treated-control diagonal term
    std::optional<VarianceComponents> components;
};

// Stratified difference in means. Every stratum needs both arms.
EstimateReport tau_unadjusted(const TrialDataset& data);
EstimateReport tau_unadjusted(const std::vector<StratumData>& strata);

// Arm-wise regression coefficients beta(a) = Ginv (1/n_ka) sum 1{A=a} x y.
struct OlsCoefficients {
    Eigen::VectorXd treated;
    Eigen::VectorXd control;
};
OlsCoefficients ols_coefficients(const StratumData& stratum, const GramPair& gram);

// Interacted OLS estimator.
EstimateReport tau_ols(const TrialDataset& data, double rcond = kDefaultRcond);
EstimateReport tau_ols(const std::vector<StratumData>& strata,
                       const std::vector<GramPair>& grams);

// Second-order U-statistic for one stratum and arm, kernel matrix M.
// Arm 1: [n_k(n_k-1)]^{-1} pi^{-2}      sum_{i!=j} (A_i - pi) x_i' M x_j A_j Y_j
// Arm 0: [n_k(n_k-1)]^{-1} (1-pi)^{-2}  sum_{i!=j} (pi - A_i) x_i' M x_j (1-A_j) Y_j
double u_statistic_pair(const StratumData& stratum,
                        const Eigen::Ref<const Eigen::MatrixXd>& m, int arm);

// Same value assembled from leave-one-out regression coefficients; agrees
// with u_statistic_pair to roundoff.
double u_statistic_loo(const StratumData& stratum,
                       const Eigen::Ref<const Eigen::MatrixXd>& m, int arm);

// Bias-corrected adjusted estimator. Oracle mode wants the population Gram
// inverses; feasible mode builds sample Grams (pseudo-inverse fallback, flag
// propagated into the report).
enum class AdjustedMode { Oracle, Feasible };
EstimateReport tau_adjusted(const TrialDataset& data, AdjustedMode mode,
                            const std::vector<GramPair>* oracle_grams = nullptr,
                            double rcond = kDefaultRcond);
EstimateReport tau_adjusted(const std::vector<StratumData>& strata, AdjustedMode mode,
                            const std::vector<GramPair>* oracle_grams = nullptr,
                            double rcond = kDefaultRcond);
// Same estimator with the per-stratum kernels already in hand.
EstimateReport tau_adjusted(const std::vector<StratumData>& strata,
                            const std::vector<GramPair>& grams, AdjustedMode mode);

// Sample Gram + (pseudo-)inverse per stratum; shared across estimators.
std::vector<GramPair> compute_sample_grams(const std::vector<StratumData>& strata,
                                           double rcond = kDefaultRcond);

// Diagonal term the V-statistic form of the OLS adjustment adds on top of
// the U-statistic: arm 1 is (1-pi)/n_k1^2 sum_i A_i x_i' M x_i Y_i, arm 0
// the mirrored pi/n_k0^2 sum over controls.
double ols_diag_bias(const StratumData& stratum,
                     const Eigen::Ref<const Eigen::MatrixXd>& m, int arm);

// Options for the one-call analysis used by the CLI and the simulation
// engine. Oracle estimators are only available when oracle_grams is set.
struct AnalysisOptions {
    double alpha = 0.05;
    double rcond = kDefaultRcond;
    const std::vector<GramPair>* oracle_grams = nullptr;
    bool with_inference = true;
};

std::vector<EstimateReport> analyze(const TrialDataset& data,
                                    const std::vector<EstimatorKind>& kinds,
                                    const AnalysisOptions& options = {});
std::vector<EstimateReport> analyze(const std::vector<StratumData>& strata,
                                    const std::vector<EstimatorKind>& kinds,
                                    const AnalysisOptions& options = {});

} // namespace carate

#endif
