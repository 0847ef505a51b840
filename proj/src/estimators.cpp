#include "carate/estimators.hpp"

#include <cmath>

namespace carate {

namespace {

void require_both_arms(const StratumSummary& summary) {
    if (summary.n_treated == 0) {
        throw DegenerateStratumError("stratum '" + summary.label + "' has no treated units");
    }
    if (summary.n_control == 0) {
        throw DegenerateStratumError("stratum '" + summary.label + "' has no control units");
    }
}

double compensated_mean(const Eigen::VectorXd& y, const Eigen::VectorXi& a, int arm) {
    CompensatedSum sum;
    long count = 0;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (a[i] == arm) {
            sum.add(y[i]);
            ++count;
        }
    }
    return sum.value() / static_cast<double>(count);
}

// Weighted combination of per-stratum effects; fixed stratum order.
void fill_total(EstimateReport& report) {
    CompensatedSum total;
    for (std::size_t k = 0; k < report.stratum_effects.size(); ++k) {
        total.add(report.stratum_shares[k] * report.stratum_effects[k]);
    }
    report.tau_hat = total.value();
}

} // namespace

std::vector<GramPair> compute_sample_grams(const std::vector<StratumData>& strata,
                                           double rcond) {
    std::vector<GramPair> grams;
    grams.reserve(strata.size());
    for (const auto& stratum : strata) {
        if (stratum.x.cols() == 0) {
            grams.push_back(GramPair{Eigen::MatrixXd(0, 0), Eigen::MatrixXd(0, 0),
                                     /*oracle=*/false, /*pseudo=*/false, rcond});
        } else {
            grams.push_back(invert_or_pseudo(sample_gram(stratum.x), rcond));
        }
    }
    return grams;
}

EstimatorKind estimator_kind_from_string(const std::string& name) {
    if (name == "unadjusted" || name == "unadj") return EstimatorKind::Unadjusted;
    if (name == "ols") return EstimatorKind::Ols;
    if (name == "oracle") return EstimatorKind::Oracle;
    if (name == "feasible") return EstimatorKind::Feasible;
    throw ValidationError("unknown estimator: " + name);
}

std::string to_string(EstimatorKind kind) {
    switch (kind) {
        case EstimatorKind::Unadjusted: return "unadjusted";
        case EstimatorKind::Ols: return "ols";
        case EstimatorKind::Oracle: return "oracle";
        case EstimatorKind::Feasible: return "feasible";
    }
    return "?";
}

EstimateReport tau_unadjusted(const std::vector<StratumData>& strata) {
    EstimateReport report;
    report.kind = EstimatorKind::Unadjusted;
    for (const auto& stratum : strata) {
        require_both_arms(stratum.summary);
        const double mean1 = compensated_mean(stratum.y, stratum.a, 1);
        const double mean0 = compensated_mean(stratum.y, stratum.a, 0);
        report.stratum_effects.push_back(mean1 - mean0);
        report.stratum_shares.push_back(stratum.summary.share);
    }
    fill_total(report);
    return report;
}

EstimateReport tau_unadjusted(const TrialDataset& data) {
    return tau_unadjusted(split_by_stratum(data));
}

OlsCoefficients ols_coefficients(const StratumData& stratum, const GramPair& gram) {
    require_both_arms(stratum.summary);
    const Eigen::Index dim = stratum.x.cols();
    OlsCoefficients out{Eigen::VectorXd::Zero(dim), Eigen::VectorXd::Zero(dim)};
    if (dim == 0) return out;
    Eigen::VectorXd sum1 = Eigen::VectorXd::Zero(dim);
    Eigen::VectorXd sum0 = Eigen::VectorXd::Zero(dim);
    for (Eigen::Index i = 0; i < stratum.x.rows(); ++i) {
        if (stratum.a[i] == 1) {
            sum1 += stratum.x.row(i).transpose() * stratum.y[i];
        } else {
            sum0 += stratum.x.row(i).transpose() * stratum.y[i];
        }
    }
    out.treated = gram.inverse * (sum1 / stratum.summary.n_treated);
    out.control = gram.inverse * (sum0 / stratum.summary.n_control);
    return out;
}

EstimateReport tau_ols(const std::vector<StratumData>& strata,
                       const std::vector<GramPair>& grams) {
    if (grams.size() != strata.size()) {
        throw ValidationError("tau_ols: need one Gram per stratum");
    }
    EstimateReport report;
    report.kind = EstimatorKind::Ols;
    CompensatedSum diag_total;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto& stratum = strata[k];
        require_both_arms(stratum.summary);
        const auto beta = ols_coefficients(stratum, grams[k]);
        const double pi = stratum.summary.treated_fraction;
        const double mean1 = compensated_mean(stratum.y, stratum.a, 1);
        const double mean0 = compensated_mean(stratum.y, stratum.a, 0);

        double adj1 = 0.0, adj0 = 0.0;
        if (stratum.x.cols() > 0) {
            const Eigen::VectorXd fit1 = stratum.x * beta.treated;
            const Eigen::VectorXd fit0 = stratum.x * beta.control;
            for (Eigen::Index i = 0; i < stratum.x.rows(); ++i) {
                const double centered = stratum.a[i] - pi;
                adj1 += centered * fit1[i];
                adj0 -= centered * fit0[i];
            }
            adj1 /= stratum.summary.n_treated;
            adj0 /= stratum.summary.n_control;
        }
        report.stratum_effects.push_back((mean1 - adj1) - (mean0 - adj0));
        report.stratum_shares.push_back(stratum.summary.share);
        report.pseudo_used = report.pseudo_used || grams[k].pseudo;

        diag_total.add(stratum.summary.share * (ols_diag_bias(stratum, grams[k].inverse, 1) -
                                                ols_diag_bias(stratum, grams[k].inverse, 0)));
    }
    fill_total(report);
    report.diag_bias = diag_total.value();
    return report;
}

EstimateReport tau_ols(const TrialDataset& data, double rcond) {
    const auto strata = split_by_stratum(data);
    return tau_ols(strata, compute_sample_grams(strata, rcond));
}

double u_statistic_pair(const StratumData& stratum,
                        const Eigen::Ref<const Eigen::MatrixXd>& m, int arm) {
    const auto& summary = stratum.summary;
    const int nk = summary.n_units;
    if (nk < 2) {
        throw DegenerateStratumError("stratum '" + summary.label +
                                     "' needs at least 2 units for the U-statistic");
    }
    const double pi = summary.treated_fraction;
    if (!(pi > 0.0 && pi < 1.0)) {
        throw DegenerateStratumError("stratum '" + summary.label +
                                     "' has a degenerate treated fraction");
    }
    if (stratum.x.cols() == 0) return 0.0;

    Eigen::VectorXd w(nk), v(nk);
    for (int i = 0; i < nk; ++i) {
        if (arm == 1) {
            w[i] = stratum.a[i] - pi;
            v[i] = stratum.a[i] * stratum.y[i];
        } else {
            w[i] = pi - stratum.a[i];
            v[i] = (1 - stratum.a[i]) * stratum.y[i];
        }
    }
    const double ratio = arm == 1 ? pi : 1.0 - pi;
    const double prefactor =
        1.0 / (static_cast<double>(nk) * (nk - 1) * ratio * ratio);
    return prefactor * bilinear_offdiag_sum(stratum.x, w, v, m);
}

double u_statistic_loo(const StratumData& stratum,
                       const Eigen::Ref<const Eigen::MatrixXd>& m, int arm) {
    const auto& summary = stratum.summary;
    const int nk = summary.n_units;
    if (nk < 2) {
        throw DegenerateStratumError("stratum '" + summary.label +
                                     "' needs at least 2 units for the U-statistic");
    }
    const double pi = summary.treated_fraction;
    if (!(pi > 0.0 && pi < 1.0)) {
        throw DegenerateStratumError("stratum '" + summary.label +
                                     "' has a degenerate treated fraction");
    }
    if (stratum.x.cols() == 0) return 0.0;

    const double ratio = arm == 1 ? pi : 1.0 - pi;
    const int n_arm = arm == 1 ? summary.n_treated : summary.n_control;

    // weight_a(A_j) x_j y_j summed once; each leave-one-out coefficient is
    // that sum minus unit i's own term.
    Eigen::VectorXd weighted(nk);
    for (int i = 0; i < nk; ++i) {
        const int in_arm = arm == 1 ? stratum.a[i] : 1 - stratum.a[i];
        weighted[i] = in_arm / ratio * stratum.y[i];
    }
    const Eigen::VectorXd total = stratum.x.transpose() * weighted;
    const Eigen::VectorXd m_total = m * total;
    const Eigen::MatrixXd xm = stratum.x * m;
    const Eigen::VectorXd quad = xm.cwiseProduct(stratum.x).rowwise().sum();

    CompensatedSum acc;
    for (int i = 0; i < nk; ++i) {
        const double sign_weight = arm == 1 ? stratum.a[i] - pi : pi - stratum.a[i];
        const double dot = stratum.x.row(i).dot(m_total) - weighted[i] * quad[i];
        acc.add(sign_weight * dot / (nk - 1));
    }
    return acc.value() / n_arm;
}

EstimateReport tau_adjusted(const std::vector<StratumData>& strata, AdjustedMode mode,
                            const std::vector<GramPair>* oracle_grams, double rcond) {
    if (mode == AdjustedMode::Oracle) {
        if (oracle_grams == nullptr || oracle_grams->size() != strata.size()) {
            throw ValidationError("oracle mode needs one population Gram per stratum");
        }
        return tau_adjusted(strata, *oracle_grams, mode);
    }
    return tau_adjusted(strata, compute_sample_grams(strata, rcond), mode);
}

EstimateReport tau_adjusted(const std::vector<StratumData>& strata,
                            const std::vector<GramPair>& grams, AdjustedMode mode) {
    if (grams.size() != strata.size()) {
        throw ValidationError("tau_adjusted: need one Gram per stratum");
    }
    EstimateReport report;
    report.kind = mode == AdjustedMode::Oracle ? EstimatorKind::Oracle : EstimatorKind::Feasible;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto& stratum = strata[k];
        require_both_arms(stratum.summary);
        const double mean1 = compensated_mean(stratum.y, stratum.a, 1);
        const double mean0 = compensated_mean(stratum.y, stratum.a, 0);
        const double u1 = u_statistic_pair(stratum, grams[k].inverse, 1);
        const double u0 = u_statistic_pair(stratum, grams[k].inverse, 0);
        report.stratum_effects.push_back((mean1 - u1) - (mean0 - u0));
        report.stratum_shares.push_back(stratum.summary.share);
        report.pseudo_used = report.pseudo_used || grams[k].pseudo;
    }
    fill_total(report);
    return report;
}

EstimateReport tau_adjusted(const TrialDataset& data, AdjustedMode mode,
                            const std::vector<GramPair>* oracle_grams, double rcond) {
    return tau_adjusted(split_by_stratum(data), mode, oracle_grams, rcond);
}

double ols_diag_bias(const StratumData& stratum,
                     const Eigen::Ref<const Eigen::MatrixXd>& m, int arm) {
    const auto& summary = stratum.summary;
    const int n_arm = arm == 1 ? summary.n_treated : summary.n_control;
    if (n_arm == 0) {
        throw DegenerateStratumError("stratum '" + summary.label + "' has no " +
                                     (arm == 1 ? "treated" : "control") + " units");
    }
    if (stratum.x.cols() == 0) return 0.0;
    const double pi = summary.treated_fraction;
    const Eigen::VectorXd quad = (stratum.x * m).cwiseProduct(stratum.x).rowwise().sum();
    CompensatedSum acc;
    for (Eigen::Index i = 0; i < stratum.x.rows(); ++i) {
        const int in_arm = arm == 1 ? stratum.a[i] : 1 - stratum.a[i];
        if (in_arm) acc.add(quad[i] * stratum.y[i]);
    }
    const double weight = arm == 1 ? 1.0 - pi : pi;
    return weight / (static_cast<double>(n_arm) * n_arm) * acc.value();
}

std::vector<EstimateReport> analyze(const std::vector<StratumData>& strata,
                                    const std::vector<EstimatorKind>& kinds,
                                    const AnalysisOptions& options) {
    if (kinds.empty()) {
        throw ValidationError("no estimators requested");
    }
    Eigen::Index total = 0;
    for (const auto& stratum : strata) total += stratum.summary.n_units;

    bool need_sample_grams = false;
    for (const auto kind : kinds) {
        need_sample_grams = need_sample_grams ||
                            kind == EstimatorKind::Ols || kind == EstimatorKind::Feasible;
    }
    std::vector<GramPair> grams;
    if (need_sample_grams) grams = compute_sample_grams(strata, options.rcond);

    std::vector<EstimateReport> reports;
    reports.reserve(kinds.size());
    for (const auto kind : kinds) {
        EstimateReport report;
        switch (kind) {
            case EstimatorKind::Unadjusted:
                report = tau_unadjusted(strata);
                if (options.with_inference) {
                    report.sigma2_hat = sigma2_baseline_hat(strata, BaselineVariance::Unadjusted);
                    report.inference_filled = true;
                }
                break;
            case EstimatorKind::Ols:
                report = tau_ols(strata, grams);
                if (options.with_inference) {
                    report.sigma2_hat = sigma2_baseline_hat(strata, BaselineVariance::Ols, grams);
                    report.inference_filled = true;
                }
                break;
            case EstimatorKind::Feasible: {
                report = tau_adjusted(strata, grams, AdjustedMode::Feasible);
                if (options.with_inference) {
                    auto components = sigma2_hat(strata, grams, GramMode::Feasible);
                    components.pseudo_used = report.pseudo_used;
                    report.sigma2_hat = components.sigma2;
                    report.components = components;
                    report.inference_filled = true;
                }
                break;
            }
            case EstimatorKind::Oracle: {
                if (options.oracle_grams == nullptr ||
                    options.oracle_grams->size() != strata.size()) {
                    throw ValidationError("oracle estimator requested without oracle Grams");
                }
                report = tau_adjusted(strata, *options.oracle_grams, AdjustedMode::Oracle);
                if (options.with_inference) {
                    auto components = sigma2_hat(strata, *options.oracle_grams, GramMode::Oracle);
                    report.sigma2_hat = components.sigma2;
                    report.components = components;
                    report.inference_filled = true;
                }
                break;
            }
        }
        if (report.inference_filled) {
            report.ci = wald_ci(report.tau_hat, report.sigma2_hat, total, options.alpha);
            report.clamped = report.ci.clamped;
            const double floored =
                report.sigma2_hat < kVarianceFloor ? kVarianceFloor : report.sigma2_hat;
            report.se = std::sqrt(floored / static_cast<double>(total));
            if (report.components) report.components->clamped = report.clamped;
        }
        reports.push_back(std::move(report));
    }
    return reports;
}

std::vector<EstimateReport> analyze(const TrialDataset& data,
                                    const std::vector<EstimatorKind>& kinds,
                                    const AnalysisOptions& options) {
    return analyze(split_by_stratum(data), kinds, options);
}

} // namespace carate
