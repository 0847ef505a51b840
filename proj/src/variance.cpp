#include "carate/variance.hpp"

#include <cmath>

#include "carate/estimators.hpp"

namespace carate {

namespace {

void require_arm_pairs(const StratumSummary& summary) {
    if (summary.n_treated < 2 || summary.n_control < 2) {
        throw DegenerateStratumError("stratum '" + summary.label +
                                     "' needs at least 2 units per arm for the "
                                     "U-statistic variance terms");
    }
}

// Everything the per-stratum variance pieces need from one stratum. The
// kernel matrix is symmetric here (it is a (pseudo-)inverse), which lets the
// squared-kernel traces share the two M*B products.
struct StratumTerms {
    double pi = 0.0;
    int n1 = 0, n0 = 0, nk = 0;
    double mean1 = 0.0, mean0 = 0.0;
    double var1 = 0.0, var0 = 0.0;        // 1/n_ka normalization
    double bil_tt = 0.0, bil_cc = 0.0, bil_tc = 0.0;
    double sq_tt = 0.0, sq_cc = 0.0, sq_tc = 0.0;
    double diag1 = 0.0, diag0 = 0.0;      // sum 1{A=a} q_i y_i^2
};

StratumTerms stratum_terms(const StratumData& stratum, const Eigen::MatrixXd& kernel) {
    const auto& s = stratum.summary;
    StratumTerms t;
    t.pi = s.treated_fraction;
    t.n1 = s.n_treated;
    t.n0 = s.n_control;
    t.nk = s.n_units;

    CompensatedSum sum1, sum0;
    for (Eigen::Index i = 0; i < stratum.y.size(); ++i) {
        (stratum.a[i] == 1 ? sum1 : sum0).add(stratum.y[i]);
    }
    t.mean1 = sum1.value() / t.n1;
    t.mean0 = sum0.value() / t.n0;
    CompensatedSum ss1, ss0;
    for (Eigen::Index i = 0; i < stratum.y.size(); ++i) {
        if (stratum.a[i] == 1) {
            const double d = stratum.y[i] - t.mean1;
            ss1.add(d * d);
        } else {
            const double d = stratum.y[i] - t.mean0;
            ss0.add(d * d);
        }
    }
    t.var1 = ss1.value() / t.n1;
    t.var0 = ss0.value() / t.n0;

    if (stratum.x.cols() == 0) return t;

    const Eigen::Index nk = stratum.x.rows();
    Eigen::VectorXd tw(nk), cw(nk);
    for (Eigen::Index i = 0; i < nk; ++i) {
        tw[i] = stratum.a[i] * stratum.y[i];
        cw[i] = (1 - stratum.a[i]) * stratum.y[i];
    }

    const Eigen::VectorXd st = stratum.x.transpose() * tw;
    const Eigen::VectorXd sc = stratum.x.transpose() * cw;
    const Eigen::VectorXd m_st = kernel * st;
    const Eigen::VectorXd m_sc = kernel * sc;
    const Eigen::VectorXd quad =
        (stratum.x * kernel).cwiseProduct(stratum.x).rowwise().sum();

    double d_tt = 0.0, d_cc = 0.0, q_tt = 0.0, q_cc = 0.0;
    for (Eigen::Index i = 0; i < nk; ++i) {
        d_tt += tw[i] * tw[i] * quad[i];
        d_cc += cw[i] * cw[i] * quad[i];
        q_tt += tw[i] * tw[i] * quad[i] * quad[i];
        q_cc += cw[i] * cw[i] * quad[i] * quad[i];
        if (stratum.a[i] == 1) {
            t.diag1 += quad[i] * stratum.y[i] * stratum.y[i];
        } else {
            t.diag0 += quad[i] * stratum.y[i] * stratum.y[i];
        }
    }
    // t_i c_i = 0 for every i, so the cross diagonals vanish identically.
    t.bil_tt = st.dot(m_st) - d_tt;
    t.bil_cc = sc.dot(m_sc) - d_cc;
    t.bil_tc = st.dot(m_sc);

    const Eigen::MatrixXd bt = stratum.x.transpose() * tw.asDiagonal() * stratum.x;
    const Eigen::MatrixXd bc = stratum.x.transpose() * cw.asDiagonal() * stratum.x;
    const Eigen::MatrixXd mt = kernel * bt;
    const Eigen::MatrixXd mc = kernel * bc;
    t.sq_tt = mt.cwiseProduct(mt.transpose()).sum() - q_tt;
    t.sq_cc = mc.cwiseProduct(mc.transpose()).sum() - q_cc;
    t.sq_tc = mc.cwiseProduct(mt.transpose()).sum();
    return t;
}

} // namespace

double zeta_H_hat(const std::vector<StratumSummary>& summaries) {
    CompensatedSum grand1, grand0;
    for (const auto& s : summaries) {
        if (!s.mean_treated || !s.mean_control) {
            throw DegenerateStratumError("stratum '" + s.label + "' has an empty arm");
        }
        grand1.add(s.share * *s.mean_treated);
        grand0.add(s.share * *s.mean_control);
    }
    const double overall1 = grand1.value();
    const double overall0 = grand0.value();
    CompensatedSum acc;
    for (const auto& s : summaries) {
        const double gap = (*s.mean_treated - overall1) - (*s.mean_control - overall0);
        acc.add(s.share * gap * gap);
    }
    return acc.value();
}

double zeta_H_hat(const TrialDataset& data) { return zeta_H_hat(build_strata(data)); }

namespace {

std::vector<StratumTerms> terms_for(const std::vector<StratumData>& strata,
                                    const std::vector<GramPair>& grams,
                                    const char* caller) {
    if (grams.size() != strata.size()) {
        throw ValidationError(std::string(caller) + ": need one Gram per stratum");
    }
    std::vector<StratumTerms> terms;
    terms.reserve(strata.size());
    for (std::size_t k = 0; k < strata.size(); ++k) {
        require_arm_pairs(strata[k].summary);
        terms.push_back(stratum_terms(strata[k], grams[k].inverse));
    }
    return terms;
}

ZetaIParts zeta_I_from_terms(const std::vector<StratumData>& strata,
                             const std::vector<StratumTerms>& terms) {
    CompensatedSum sig_y, sig_eta, sig_cross;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto& t = terms[k];
        const double share = strata[k].summary.share;
        const double pi = t.pi;

        sig_y.add(share * (t.var1 / pi + t.var0 / (1.0 - pi)));
        sig_eta.add(share * ((1.0 - pi) / pi * t.bil_tt /
                                 (static_cast<double>(t.n1) * (t.n1 - 1)) +
                             pi / (1.0 - pi) * t.bil_cc /
                                 (static_cast<double>(t.n0) * (t.n0 - 1))));
        sig_cross.add(share * t.bil_tc / (static_cast<double>(t.n1) * t.n0));
    }
    ZetaIParts out;
    out.sigma2_Y = sig_y.value();
    out.sigma2_I_eta = sig_eta.value();
    out.sigma_I_eta10 = sig_cross.value();
    out.value = out.sigma2_Y - out.sigma2_I_eta - 2.0 * out.sigma_I_eta10;
    return out;
}

ZetaIIParts zeta_II_from_terms(const std::vector<StratumData>& strata,
                               const std::vector<StratumTerms>& terms) {
    CompensatedSum y1, y0, y10, y1_diag, y1_pair, y0_diag, y0_pair;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto& t = terms[k];
        const double pi = t.pi;
        const double prefactor = strata[k].summary.share / (t.nk - 1);

        const double s1_diag = t.diag1 / t.n1;
        const double s1_pair = t.sq_tt / (static_cast<double>(t.n1) * (t.n1 - 1));
        const double s0_diag = t.diag0 / t.n0;
        const double s0_pair = t.sq_cc / (static_cast<double>(t.n0) * (t.n0 - 1));
        const double cross = t.sq_tc / (static_cast<double>(t.n1) * t.n0);

        const double w1_diag = (1.0 - pi) / (pi * pi);
        const double w1_pair = (1.0 - pi) * (1.0 - pi) / (pi * pi);
        const double w0_diag = pi / ((1.0 - pi) * (1.0 - pi));
        const double w0_pair = pi * pi / ((1.0 - pi) * (1.0 - pi));

        y1_diag.add(prefactor * w1_diag * s1_diag);
        y1_pair.add(prefactor * w1_pair * s1_pair);
        y0_diag.add(prefactor * w0_diag * s0_diag);
        y0_pair.add(prefactor * w0_pair * s0_pair);
        y1.add(prefactor * (w1_diag * s1_diag + w1_pair * s1_pair));
        y0.add(prefactor * (w0_diag * s0_diag + w0_pair * s0_pair));
        y10.add(prefactor * cross);
    }
    ZetaIIParts out;
    out.y1 = y1.value();
    out.y0 = y0.value();
    out.y10 = y10.value();
    out.y1_diag = y1_diag.value();
    out.y1_pair = y1_pair.value();
    out.y0_diag = y0_diag.value();
    out.y0_pair = y0_pair.value();
    out.value = out.y1 + out.y0 - 2.0 * out.y10;
    return out;
}

} // namespace

ZetaIParts zeta_I_hat(const std::vector<StratumData>& strata,
                      const std::vector<GramPair>& grams) {
    return zeta_I_from_terms(strata, terms_for(strata, grams, "zeta_I_hat"));
}

ZetaIIParts zeta_II_hat(const std::vector<StratumData>& strata,
                        const std::vector<GramPair>& grams) {
    return zeta_II_from_terms(strata, terms_for(strata, grams, "zeta_II_hat"));
}

ZetaIParts zeta_I_hat(const TrialDataset& data, const std::vector<GramPair>& grams) {
    return zeta_I_hat(split_by_stratum(data), grams);
}

ZetaIIParts zeta_II_hat(const TrialDataset& data, const std::vector<GramPair>& grams) {
    return zeta_II_hat(split_by_stratum(data), grams);
}

VarianceComponents sigma2_hat(const std::vector<StratumData>& strata, GramMode mode,
                              const std::vector<GramPair>* oracle_grams, double rcond) {
    if (mode == GramMode::Oracle) {
        if (oracle_grams == nullptr || oracle_grams->size() != strata.size()) {
            throw ValidationError("oracle variance needs one population Gram per stratum");
        }
        return sigma2_hat(strata, *oracle_grams, mode);
    }
    return sigma2_hat(strata, compute_sample_grams(strata, rcond), mode);
}

VarianceComponents sigma2_hat(const std::vector<StratumData>& strata,
                              const std::vector<GramPair>& grams, GramMode mode) {
    // One pass over the kernels feeds both zeta components.
    const auto terms = terms_for(strata, grams, "sigma2_hat");

    VarianceComponents out;
    out.oracle_mode = mode == GramMode::Oracle;
    for (const auto& gram : grams) out.pseudo_used = out.pseudo_used || gram.pseudo;

    std::vector<StratumSummary> summaries;
    summaries.reserve(strata.size());
    for (const auto& stratum : strata) summaries.push_back(stratum.summary);
    out.zeta2_H = zeta_H_hat(summaries);

    const auto zi = zeta_I_from_terms(strata, terms);
    out.zeta2_I = zi.value;
    out.sigma2_Y = zi.sigma2_Y;
    out.sigma2_I_eta = zi.sigma2_I_eta;
    out.sigma_I_eta10 = zi.sigma_I_eta10;

    const auto zii = zeta_II_from_terms(strata, terms);
    out.zeta2_II = zii.value;
    out.zeta2_II_Y1 = zii.y1;
    out.zeta2_II_Y0 = zii.y0;
    out.zeta2_II_Y10 = zii.y10;
    out.zeta2_II_Y1_diag = zii.y1_diag;
    out.zeta2_II_Y1_pair = zii.y1_pair;
    out.zeta2_II_Y0_diag = zii.y0_diag;
    out.zeta2_II_Y0_pair = zii.y0_pair;

    out.sigma2 = out.zeta2_H + out.zeta2_I + out.zeta2_II;
    out.clamped = out.sigma2 < kVarianceFloor;
    return out;
}

VarianceComponents sigma2_hat(const TrialDataset& data, GramMode mode,
                              const std::vector<GramPair>* oracle_grams, double rcond) {
    return sigma2_hat(split_by_stratum(data), mode, oracle_grams, rcond);
}

double sigma2_baseline_hat(const std::vector<StratumData>& strata, BaselineVariance kind,
                           const std::vector<GramPair>& grams) {
    if (kind == BaselineVariance::Ols && grams.size() != strata.size()) {
        throw ValidationError("ols baseline variance needs one Gram per stratum");
    }
    std::vector<StratumSummary> summaries;
    summaries.reserve(strata.size());
    for (const auto& stratum : strata) summaries.push_back(stratum.summary);
    const double heterogeneity = zeta_H_hat(summaries);

    CompensatedSum acc;
    for (std::size_t k = 0; k < strata.size(); ++k) {
        const auto& stratum = strata[k];
        const auto& s = stratum.summary;
        if (s.n_treated == 0 || s.n_control == 0) {
            throw DegenerateStratumError("stratum '" + s.label + "' has an empty arm");
        }
        const double pi = s.treated_fraction;

        Eigen::VectorXd residual = stratum.y;
        if (kind == BaselineVariance::Ols && stratum.x.cols() > 0) {
            const auto coef = ols_coefficients(stratum, grams[k]);
            const Eigen::VectorXd pooled = (1.0 - pi) * coef.treated + pi * coef.control;
            residual -= stratum.x * pooled;
        }
        CompensatedSum m1, m0;
        for (Eigen::Index i = 0; i < residual.size(); ++i) {
            (stratum.a[i] == 1 ? m1 : m0).add(residual[i]);
        }
        const double mean1 = m1.value() / s.n_treated;
        const double mean0 = m0.value() / s.n_control;
        CompensatedSum v1, v0;
        for (Eigen::Index i = 0; i < residual.size(); ++i) {
            if (stratum.a[i] == 1) {
                const double d = residual[i] - mean1;
                v1.add(d * d);
            } else {
                const double d = residual[i] - mean0;
                v0.add(d * d);
            }
        }
        acc.add(s.share * (v1.value() / s.n_treated / pi +
                           v0.value() / s.n_control / (1.0 - pi)));
    }
    return heterogeneity + acc.value();
}

double sigma2_baseline_hat(const std::vector<StratumData>& strata, BaselineVariance kind,
                           double rcond) {
    if (kind == BaselineVariance::Ols) {
        return sigma2_baseline_hat(strata, kind, compute_sample_grams(strata, rcond));
    }
    return sigma2_baseline_hat(strata, kind, std::vector<GramPair>(strata.size()));
}

double sigma2_baseline_hat(const TrialDataset& data, BaselineVariance kind, double rcond) {
    return sigma2_baseline_hat(split_by_stratum(data), kind, rcond);
}

ConfidenceInterval wald_ci(double tau_hat, double sigma2, Eigen::Index n, double alpha) {
    if (!(alpha > 0.0 && alpha <= 1.0)) {
        throw ValidationError("alpha must lie in (0, 1]");
    }
    if (n < 1) {
        throw ValidationError("wald_ci: need n >= 1");
    }
    if (std::isnan(sigma2)) {
        throw NumericError("wald_ci: variance is NaN");
    }
    ConfidenceInterval ci;
    ci.clamped = sigma2 < kVarianceFloor;
    const double floored = ci.clamped ? kVarianceFloor : sigma2;
    const double z = alpha == 1.0 ? 0.0 : normal_upper_quantile(alpha);
    const double width = z * std::sqrt(floored / static_cast<double>(n));
    ci.lo = tau_hat - width;
    ci.hi = tau_hat + width;
    return ci;
}

} // namespace carate
