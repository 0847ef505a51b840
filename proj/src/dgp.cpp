#include "carate/dgp.hpp"

#include <Eigen/Cholesky>
#include <Eigen/LU>
#include <cmath>

namespace carate {

namespace {

double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

double t_variance_factor(int dof) {
    return static_cast<double>(dof) / (dof - 2);
}

// Mean outcome surfaces given the base covariates of one unit. `stratum_value`
// is the label value 1..K, which enters Model 1 directly.
struct OutcomePieces {
    double mean0 = 0.0;
    double mean1 = 0.0;
};

} // namespace

void DGPConfig::validate() const {
    if (n < 2 * n_strata()) {
        throw ValidationError("need n >= 2K units");
    }
    if (p0 < 1) throw ValidationError("p0 must be >= 1");
    if (p < 0) throw ValidationError("p must be >= 0");
    if (t_dof <= 2) throw ValidationError("t degrees of freedom must exceed 2");
    double total = 0.0;
    for (const double prob : stratum_probs) {
        if (prob <= 0.0) throw ValidationError("stratum probabilities must be positive");
        total += prob;
    }
    if (stratum_probs.empty() || std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("stratum probabilities must sum to 1");
    }
    if (noise_sd < 0.0) throw ValidationError("noise sd must be >= 0");
    if (!(alpha > 0.0 && alpha < 1.0)) throw ValidationError("alpha must lie in (0, 1)");
    scheme.validate(n_strata());
}

Eigen::MatrixXd scale_matrix(const DGPConfig& config) {
    Eigen::MatrixXd scale = Eigen::MatrixXd::Identity(config.p0, config.p0);
    if (config.scale == ScaleKind::Ar1) {
        for (int i = 0; i < config.p0; ++i) {
            for (int j = 0; j < config.p0; ++j) {
                scale(i, j) = std::pow(config.ar_rho, std::abs(i - j));
            }
        }
    }
    return scale;
}

Eigen::VectorXd model1_beta0(const DGPConfig& config) {
    if (config.zero_beta0) return Eigen::VectorXd::Zero(config.p0);
    Rng rng = Rng::stream(config.coef_seed, 0, stream_tag::kCoefficients);
    Eigen::VectorXd beta(config.p0);
    for (int j = 0; j < config.p0; ++j) beta[j] = rng.next_uniform(-1.0, 1.0);
    const double norm = beta.norm();
    if (norm > 0.0) beta /= norm;
    return beta;
}

Eigen::MatrixXd sample_x0_block(const DGPConfig& config, Rng& rng, int count) {
    const Eigen::MatrixXd scale = scale_matrix(config);
    const Eigen::MatrixXd chol = scale.llt().matrixL();
    Eigen::MatrixXd x0(count, config.p0);
    Eigen::VectorXd z(config.p0);
    for (int i = 0; i < count; ++i) {
        for (int j = 0; j < config.p0; ++j) z[j] = rng.next_normal();
        const double mix = rng.next_chi_squared(config.t_dof) / config.t_dof;
        x0.row(i) = (chol * z).transpose() / std::sqrt(mix);
    }
    return x0;
}

GeneratedTrial generate_trial(const DGPConfig& config, std::uint64_t master_seed,
                              std::uint64_t replicate) {
    config.validate();
    const int n = config.n;
    const int p0 = config.p0;
    const int p = config.p;
    const int extra = p > p0 ? p - p0 : 0;

    GeneratedTrial trial;
    trial.stratum_ids =
        draw_strata(config.stratum_probs, n, mix_seed(master_seed, replicate, stream_tag::kStrata));

    Rng cov_rng = Rng::stream(master_seed, replicate, stream_tag::kCovariates);
    const Eigen::MatrixXd x0 = sample_x0_block(config, cov_rng, n);
    Eigen::MatrixXd extra_cols(n, extra);
    for (int i = 0; i < n; ++i) {
        for (int q = 0; q < extra; ++q) {
            extra_cols(i, q) = cov_rng.next_student_t(config.t_dof);
        }
    }

    const Eigen::VectorXd beta0 = model1_beta0(config);
    const Eigen::MatrixXd scale = scale_matrix(config);
    Eigen::MatrixXd scale_inverse;
    if (config.model == Model::One && !config.zero_mahalanobis) {
        scale_inverse = scale.inverse();
    }

    Eigen::VectorXd beta1_m2 = Eigen::VectorXd::Constant(p0, 0.5);
    Eigen::VectorXd beta0_m2 = Eigen::VectorXd::Constant(p0, 1.5);

    Rng out_rng = Rng::stream(master_seed, replicate, stream_tag::kOutcome);
    trial.y0.resize(n);
    trial.y1.resize(n);
    for (int i = 0; i < n; ++i) {
        const double stratum_value = trial.stratum_ids[i] + 1;
        const Eigen::VectorXd xi = x0.row(i).transpose();
        if (config.model == Model::One) {
            double mean0 = stratum_value + 2.0 * xi.dot(beta0);
            if (!config.zero_quadratic) mean0 -= 0.5 * xi[3] * xi[3];
            double mean1 = stratum_value;
            if (!config.zero_mahalanobis) mean1 += 0.05 * xi.dot(scale_inverse * xi);
            trial.y0[i] = mean0 + config.noise_sd * out_rng.next_normal();
            trial.y1[i] = mean1 + config.noise_sd * out_rng.next_normal();
        } else {
            const double prob0 = expit(config.model2_intercept0 + xi.dot(beta0_m2) -
                                       2.0 * xi[0] * xi[0]);
            const double prob1 = expit(config.model2_intercept1 + xi.dot(beta1_m2) +
                                       2.0 * xi[1] * xi[1] + 0.5 * std::pow(xi[2], 4));
            trial.y0[i] = out_rng.next_bernoulli(prob0) ? 1.0 : 0.0;
            trial.y1[i] = out_rng.next_bernoulli(prob1) ? 1.0 : 0.0;
        }
    }

    const Eigen::VectorXi arm =
        assign(config.scheme, trial.stratum_ids, mix_seed(master_seed, replicate, stream_tag::kAssign));

    TrialDataset data;
    data.assignments = arm;
    data.outcomes.resize(n);
    data.strata.resize(n);
    for (int i = 0; i < n; ++i) {
        data.outcomes[i] = arm[i] == 1 ? trial.y1[i] : trial.y0[i];
        data.strata[i] = std::to_string(trial.stratum_ids[i] + 1);
    }
    data.covariates.resize(n, p);
    if (p <= p0) {
        data.covariates = x0.leftCols(p);
    } else {
        data.covariates.leftCols(p0) = x0;
        data.covariates.rightCols(extra) = extra_cols;
    }
    data.covariate_names.resize(p);
    for (int c = 0; c < p; ++c) data.covariate_names[c] = "x" + std::to_string(c + 1);

    trial.data = std::move(data);
    return trial;
}

TrueTau true_tau_mc(const DGPConfig& config, std::int64_t draws, std::uint64_t seed) {
    config.validate();
    if (draws < 2) throw ValidationError("need at least 2 truth draws");
    Rng rng = Rng::stream(seed, 0, stream_tag::kTruth);

    const Eigen::MatrixXd scale = scale_matrix(config);
    const Eigen::MatrixXd chol = scale.llt().matrixL();
    Eigen::MatrixXd scale_inverse;
    if (config.model == Model::One && !config.zero_mahalanobis) {
        scale_inverse = scale.inverse();
    }
    const Eigen::VectorXd beta0_m1 = model1_beta0(config);
    const Eigen::VectorXd beta1_m2 = Eigen::VectorXd::Constant(config.p0, 0.5);
    const Eigen::VectorXd beta0_m2 = Eigen::VectorXd::Constant(config.p0, 1.5);

    // Conditional-mean differences: for Model 2 the Bernoulli layer adds no
    // bias, so averaging the expit gap over X draws estimates tau directly.
    CompensatedSum sum, sum_sq;
    Eigen::VectorXd z(config.p0), xi(config.p0);
    for (std::int64_t d = 0; d < draws; ++d) {
        for (int j = 0; j < config.p0; ++j) z[j] = rng.next_normal();
        const double mix = rng.next_chi_squared(config.t_dof) / config.t_dof;
        xi = (chol * z) / std::sqrt(mix);
        double gap;
        if (config.model == Model::One) {
            double mean0 = 2.0 * xi.dot(beta0_m1);
            if (!config.zero_quadratic) mean0 -= 0.5 * xi[3] * xi[3];
            double mean1 = 0.0;
            if (!config.zero_mahalanobis) mean1 += 0.05 * xi.dot(scale_inverse * xi);
            gap = mean1 - mean0;
        } else {
            const double prob0 =
                expit(config.model2_intercept0 + xi.dot(beta0_m2) - 2.0 * xi[0] * xi[0]);
            const double prob1 = expit(config.model2_intercept1 + xi.dot(beta1_m2) +
                                       2.0 * xi[1] * xi[1] + 0.5 * std::pow(xi[2], 4));
            gap = prob1 - prob0;
        }
        sum.add(gap);
        sum_sq.add(gap * gap);
    }
    TrueTau out;
    const double mean = sum.value() / static_cast<double>(draws);
    const double var =
        (sum_sq.value() / static_cast<double>(draws) - mean * mean) * draws / (draws - 1.0);
    out.value = mean;
    out.mc_se = std::sqrt(var / static_cast<double>(draws));
    return out;
}

TrueTau true_tau(const DGPConfig& config) {
    config.validate();
    if (config.model == Model::One) {
        // E[X0' S^-1 X0] = f p0 and E[X0_4^2] = f S_44 with f = dof/(dof-2);
        // the linear term and the noise are mean zero.
        const double factor = t_variance_factor(config.t_dof);
        double value = 0.0;
        if (!config.zero_mahalanobis) value += 0.05 * factor * config.p0;
        if (!config.zero_quadratic) value += 0.5 * factor * scale_matrix(config)(3, 3);
        return TrueTau{value, 0.0};
    }
    return true_tau_mc(config, 10'000'000, 0x4341524154455441ULL);
}

GramPair true_gram(const DGPConfig& config, int) {
    config.validate();
    const double factor = t_variance_factor(config.t_dof);
    const int p = config.p;
    Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(p, p);
    const Eigen::MatrixXd scale = scale_matrix(config);
    const int base = std::min(p, config.p0);
    gram.topLeftCorner(base, base) = factor * scale.topLeftCorner(base, base);
    for (int j = config.p0; j < p; ++j) gram(j, j) = factor;

    GramPair out = invert_or_pseudo(gram, kDefaultRcond);
    out.oracle = true;
    return out;
}

} // namespace carate
