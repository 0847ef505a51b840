#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "carate/dgp.hpp"
#include "carate/estimators.hpp"
#include "naive_ref.hpp"

using namespace carate;

namespace {

// Stratum A: treated {2, 4}, control {1}; stratum B: treated {0}, control {0, 2}.
TrialDataset two_strata_dataset() {
    TrialDataset data;
    data.outcomes.resize(6);
    data.outcomes << 2, 4, 1, 0, 0, 2;
    data.assignments.resize(6);
    data.assignments << 1, 1, 0, 1, 0, 0;
    data.strata = {"A", "A", "A", "B", "B", "B"};
    data.covariates.resize(6, 0);
    return data;
}

// One stratum: treated (x, y) = (1,2), (2,4); control (1,0), (2,0).
StratumData regression_stratum() {
    TrialDataset data;
    data.outcomes.resize(4);
    data.outcomes << 2, 4, 0, 0;
    data.assignments.resize(4);
    data.assignments << 1, 1, 0, 0;
    data.strata = {"s", "s", "s", "s"};
    data.covariates.resize(4, 1);
    data.covariates << 1, 2, 1, 2;
    return split_by_stratum(data)[0];
}

StratumData pair_stratum() {
    TrialDataset data;
    data.outcomes.resize(2);
    data.outcomes << 3, 5;
    data.assignments.resize(2);
    data.assignments << 1, 0;
    data.strata = {"s", "s"};
    data.covariates.resize(2, 1);
    data.covariates << 1, 2;
    return split_by_stratum(data)[0];
}

} // namespace

TEST_CASE("unadjusted estimator, hand example") {
    const auto report = tau_unadjusted(two_strata_dataset());
    CHECK(report.tau_hat == doctest::Approx(0.5).epsilon(1e-14));
    REQUIRE(report.stratum_effects.size() == 2);
    CHECK(report.stratum_effects[0] == doctest::Approx(2.0));
    CHECK(report.stratum_effects[1] == doctest::Approx(-1.0));

    double weighted = 0.0;
    for (std::size_t k = 0; k < report.stratum_effects.size(); ++k) {
        weighted += report.stratum_shares[k] * report.stratum_effects[k];
    }
    CHECK(std::abs(report.tau_hat - weighted) <= 1e-12);
}

TEST_CASE("constant outcomes estimate zero effect") {
    TrialDataset data = two_strata_dataset();
    data.outcomes.setConstant(3.25);
    CHECK(tau_unadjusted(data).tau_hat == 0.0);
}

TEST_CASE("unadjusted estimator requires both arms") {
    TrialDataset data = two_strata_dataset();
    data.assignments << 1, 1, 1, 1, 0, 0; // stratum A all treated
    CHECK_THROWS_AS(tau_unadjusted(data), DegenerateStratumError);
}

TEST_CASE("ols coefficients, hand example") {
    const auto stratum = regression_stratum();
    const auto gram = invert_or_pseudo(sample_gram(stratum.x));
    CHECK(gram.matrix(0, 0) == doctest::Approx(2.5));
    const auto beta = ols_coefficients(stratum, gram);
    CHECK(beta.treated[0] == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(beta.control[0] == doctest::Approx(0.0));
}

TEST_CASE("ols coefficients are zero when the response is zero") {
    auto stratum = regression_stratum();
    stratum.y.setZero();
    const auto gram = invert_or_pseudo(sample_gram(stratum.x));
    const auto beta = ols_coefficients(stratum, gram);
    CHECK(beta.treated.cwiseAbs().maxCoeff() == 0.0);
    CHECK(beta.control.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("ols coefficients with p = 0 are empty") {
    auto stratum = regression_stratum();
    stratum.x.resize(4, 0);
    GramPair gram;
    gram.matrix.resize(0, 0);
    gram.inverse.resize(0, 0);
    const auto beta = ols_coefficients(stratum, gram);
    CHECK(beta.treated.size() == 0);
    CHECK(beta.control.size() == 0);
}

TEST_CASE("ols estimator, hand example") {
    const std::vector<StratumData> strata = {regression_stratum()};
    const auto report = tau_ols(strata, compute_sample_grams(strata));
    CHECK(report.tau_hat == doctest::Approx(3.0).epsilon(1e-12));
}

TEST_CASE("zero coefficients collapse ols to the unadjusted estimator") {
    TrialDataset data = two_strata_dataset();
    data.covariates.resize(6, 1);
    data.covariates << 1, -1, 2, 0.5, 1, -2;
    data.outcomes.setZero();
    CHECK(tau_ols(data).tau_hat == doctest::Approx(tau_unadjusted(data).tau_hat));
    CHECK(tau_ols(data).tau_hat == 0.0);
}

TEST_CASE("u statistic pair, two-unit stratum") {
    const auto stratum = pair_stratum();
    Eigen::MatrixXd kernel(1, 1);
    kernel << 1.0;
    CHECK(u_statistic_pair(stratum, kernel, 1) == doctest::Approx(-6.0).epsilon(1e-12));
    CHECK(u_statistic_pair(stratum, kernel, 0) == doctest::Approx(-10.0).epsilon(1e-12));
}

TEST_CASE("u statistic vanishes for zero outcomes or zero kernel") {
    auto stratum = pair_stratum();
    Eigen::MatrixXd kernel(1, 1);
    kernel << 1.0;
    auto zeroed = stratum;
    zeroed.y.setZero();
    CHECK(u_statistic_pair(zeroed, kernel, 1) == 0.0);
    CHECK(u_statistic_pair(zeroed, kernel, 0) == 0.0);
    CHECK(u_statistic_pair(stratum, Eigen::MatrixXd::Zero(1, 1), 1) == 0.0);
}

TEST_CASE("u statistic rejects degenerate strata") {
    auto stratum = pair_stratum();
    Eigen::MatrixXd kernel(1, 1);
    kernel << 1.0;
    stratum.a << 1, 1;
    stratum.summary.n_treated = 2;
    stratum.summary.n_control = 0;
    stratum.summary.treated_fraction = 1.0;
    CHECK_THROWS_AS(u_statistic_pair(stratum, kernel, 1), DegenerateStratumError);
}

TEST_CASE("leave-one-out form equals the pair form") {
    const auto stratum = pair_stratum();
    Eigen::MatrixXd kernel(1, 1);
    kernel << 1.0;
    CHECK(u_statistic_loo(stratum, kernel, 1) == doctest::Approx(-6.0).epsilon(1e-12));

    std::mt19937_64 gen(101);
    for (int trial = 0; trial < 100; ++trial) {
        const auto random = naive::random_stratum(gen);
        const Eigen::MatrixXd gram = sample_gram(random.x);
        const Eigen::MatrixXd m = invert_or_pseudo(gram).inverse;
        for (const int arm : {0, 1}) {
            const double pair = u_statistic_pair(random, m, arm);
            const double loo = u_statistic_loo(random, m, arm);
            CHECK(std::abs(loo - pair) <= 1e-10 * (1.0 + std::abs(pair)));
        }
    }
}

TEST_CASE("u statistic pair matches the naive double loop") {
    std::mt19937_64 gen(103);
    for (int trial = 0; trial < 100; ++trial) {
        const auto random = naive::random_stratum(gen);
        const Eigen::MatrixXd m = invert_or_pseudo(sample_gram(random.x)).inverse;
        for (const int arm : {0, 1}) {
            const double fast = u_statistic_pair(random, m, arm);
            const double slow = naive::u_pair(random, m, arm);
            CHECK(std::abs(fast - slow) <= 1e-10 * (1.0 + std::abs(slow)));
        }
    }
}

TEST_CASE("adjusted estimator is zero on zero outcomes") {
    TrialDataset data = two_strata_dataset();
    data.covariates.resize(6, 1);
    data.covariates << 1, -1, 2, 0.5, 1, -2;
    data.outcomes.setZero();
    CHECK(tau_adjusted(data, AdjustedMode::Feasible).tau_hat == 0.0);
}

TEST_CASE("feasible equals oracle when fed the sample Grams") {
    std::mt19937_64 gen(107);
    const auto data = naive::random_dataset(gen);
    const auto strata = split_by_stratum(data);
    const auto grams = compute_sample_grams(strata);
    const auto feasible = tau_adjusted(strata, AdjustedMode::Feasible);
    const auto oracle = tau_adjusted(strata, AdjustedMode::Oracle, &grams);
    CHECK(feasible.tau_hat == oracle.tau_hat);
}

TEST_CASE("adjusted estimator matches a from-scratch reference") {
    std::mt19937_64 gen(109);
    for (int trial = 0; trial < 50; ++trial) {
        const auto data = naive::random_dataset(gen, 1, 10, 2, 2);
        const auto strata = split_by_stratum(data);
        if (strata[0].x.cols() == 0) continue;
        const auto fast = tau_adjusted(strata, AdjustedMode::Feasible);
        const double slow = naive::tau_adjusted(strata, false);
        CHECK(std::abs(fast.tau_hat - slow) <= 1e-10 * (1.0 + std::abs(slow)));
    }
}

TEST_CASE("oracle mode requires the population Grams") {
    const auto data = two_strata_dataset();
    CHECK_THROWS_AS(tau_adjusted(data, AdjustedMode::Oracle), ValidationError);
}

TEST_CASE("p = 0 collapses every estimator to the unadjusted one") {
    const auto data = two_strata_dataset();
    const double unadjusted = tau_unadjusted(data).tau_hat;
    CHECK(tau_ols(data).tau_hat == unadjusted);
    CHECK(tau_adjusted(data, AdjustedMode::Feasible).tau_hat == unadjusted);
}

TEST_CASE("ols diagonal bias, hand example") {
    const auto stratum = regression_stratum();
    Eigen::MatrixXd kernel(1, 1);
    kernel << 0.4; // the sample Gram inverse
    CHECK(ols_diag_bias(stratum, kernel, 1) == doctest::Approx(0.9).epsilon(1e-12));

    auto zeroed = stratum;
    zeroed.y.setZero();
    CHECK(ols_diag_bias(zeroed, kernel, 1) == 0.0);
}

TEST_CASE("ols decomposes into the U-statistic plus its diagonal term") {
    // The OLS adjustment is a V-statistic with 1/n_k1^2 normalization, so
    // tau_ols = tau_feasible + sum_k p_nk [(U1k - U0k)/n_k - (D1k - D0k)]
    // holds exactly with the same kernels.
    std::mt19937_64 gen(113);
    for (int trial = 0; trial < 50; ++trial) {
        const auto data = naive::random_dataset(gen);
        const auto strata = split_by_stratum(data);
        const auto grams = compute_sample_grams(strata);
        const auto ols = tau_ols(strata, grams);
        const auto adjusted = tau_adjusted(strata, grams, AdjustedMode::Feasible);
        REQUIRE(ols.diag_bias.has_value());
        double u_scaled = 0.0;
        for (std::size_t k = 0; k < strata.size(); ++k) {
            if (strata[k].x.cols() == 0) continue;
            u_scaled += strata[k].summary.share / strata[k].summary.n_units *
                        (u_statistic_pair(strata[k], grams[k].inverse, 1) -
                         u_statistic_pair(strata[k], grams[k].inverse, 0));
        }
        const double reassembled = adjusted.tau_hat + u_scaled - *ols.diag_bias;
        CHECK(ols.tau_hat == doctest::Approx(reassembled).epsilon(1e-10));
    }
}

TEST_CASE("shifting treated outcomes by c shifts the unadjusted estimate by c") {
    const double shift = -1.5;
    auto data = two_strata_dataset();
    const double before = tau_unadjusted(data).tau_hat;
    for (Eigen::Index i = 0; i < data.n(); ++i) {
        if (data.assignments[i] == 1) data.outcomes[i] += shift;
    }
    CHECK(tau_unadjusted(data).tau_hat == doctest::Approx(before + shift).epsilon(1e-12));
}

TEST_CASE("shifting every outcome by c moves estimators by the Y = 1 adjustment") {
    std::mt19937_64 gen(127);
    const double shift = 2.75;
    for (int trial = 0; trial < 20; ++trial) {
        const auto data = naive::random_dataset(gen);
        const auto strata = split_by_stratum(data);
        const auto grams = compute_sample_grams(strata);

        auto shifted = data;
        shifted.outcomes.array() += shift;
        const auto shifted_strata = split_by_stratum(shifted);

        CHECK(tau_unadjusted(shifted_strata).tau_hat ==
              doctest::Approx(tau_unadjusted(strata).tau_hat).epsilon(1e-12));

        // Adjusted estimators move by exactly -c (U1 - U0) evaluated at Y = 1.
        auto ones = data;
        ones.outcomes.setOnes();
        const auto ones_strata = split_by_stratum(ones);
        CompensatedSum drift;
        for (std::size_t k = 0; k < strata.size(); ++k) {
            if (strata[k].x.cols() == 0) continue;
            drift.add(strata[k].summary.share *
                      (u_statistic_pair(ones_strata[k], grams[k].inverse, 1) -
                       u_statistic_pair(ones_strata[k], grams[k].inverse, 0)));
        }
        const double expected =
            tau_adjusted(strata, grams, AdjustedMode::Feasible).tau_hat - shift * drift.value();
        const double actual = tau_adjusted(shifted_strata, grams, AdjustedMode::Feasible).tau_hat;
        CHECK(actual == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("oracle estimator is unbiased under within-stratum simple randomization") {
    DGPConfig config;
    config.n = 120;
    config.p = 4;
    config.p0 = 8;
    config.coef_seed = 5;
    config.scheme.kind = RandomizationScheme::Kind::Simple;
    const double truth = true_tau(config).value;
    const auto oracle = true_gram(config);
    const std::vector<GramPair> grams(config.n_strata(), oracle);

    const int replicates = 400;
    CompensatedSum sum, sum_sq;
    for (int r = 0; r < replicates; ++r) {
        const auto trial = generate_trial(config, 555, r);
        const auto estimate = tau_adjusted(trial.data, AdjustedMode::Oracle, &grams);
        sum.add(estimate.tau_hat);
        sum_sq.add(estimate.tau_hat * estimate.tau_hat);
    }
    const double mean = sum.value() / replicates;
    const double var = sum_sq.value() / replicates - mean * mean;
    const double mc_se = std::sqrt(var / replicates);
    CHECK(std::abs(mean - truth) <= 4.0 * mc_se);
}
