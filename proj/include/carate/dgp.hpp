#ifndef CARATE_DGP_HPP
#define CARATE_DGP_HPP

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "carate/data.hpp"
#include "carate/gram.hpp"
#include "carate/randomize.hpp"
#include "carate/rng.hpp"

namespace carate {

enum class Model { One = 1, Two = 2 };
enum class ScaleKind { Ar1, Identity };

// Simulation scenario. Base covariates X0 are p0-dimensional multivariate t
// with `t_dof` degrees of freedom and the chosen scale matrix; the adjusted
// covariates are the first p columns of X0, padded with i.i.d. t columns
// when p > p0. Model 1 is the continuous outcome, Model 2 the binary one.
struct DGPConfig {
    Model model = Model::One;
    int n = 1000;
    int p0 = 30;
    int p = 30;                      // adjusted covariate dimension, >= 0
    ScaleKind scale = ScaleKind::Ar1;
    double ar_rho = 0.1;
    int t_dof = 5;                   // > 2 so the covariance exists
    std::vector<double> stratum_probs = {0.2, 0.2, 0.3, 0.3};
    double noise_sd = 0.1;           // Model 1 noise
    std::uint64_t coef_seed = 1;     // beta_0 drawn once per scenario
    RandomizationScheme scheme;
    double alpha = 0.05;

    // Test hooks; all off by default.
    bool zero_beta0 = false;
    bool zero_quadratic = false;     // drop the -0.5 X0_4^2 term (Model 1)
    bool zero_mahalanobis = false;   // drop the 0.05 X0' S^-1 X0 term (Model 1)
    double model2_intercept1 = -3.0;
    double model2_intercept0 = -1.0;

    int n_strata() const { return static_cast<int>(stratum_probs.size()); }
    void validate() const;
};

// Scale matrix S (p0 x p0) for the base covariates.
Eigen::MatrixXd scale_matrix(const DGPConfig& config);

// Model 1 coefficient vector: uniform [-1, 1] entries rescaled to unit norm,
// drawn once from coef_seed. Model 2 uses the fixed 1.5 / 0.5 patterns.
Eigen::VectorXd model1_beta0(const DGPConfig& config);

// Draws `count` rows of X0 ~ t_dof(0, S) via the Gaussian scale mixture,
// appending to nothing; used both by the trial generator and by streaming
// moment checks at n = 1e6.
Eigen::MatrixXd sample_x0_block(const DGPConfig& config, Rng& rng, int count);

// One generated replicate: the observed dataset plus the bookkeeping the
// evaluation needs (potential outcomes and the true stratum ids).
struct GeneratedTrial {
    TrialDataset data;
    Eigen::VectorXd y0;
    Eigen::VectorXd y1;
    std::vector<int> stratum_ids;    // 0-based
};

// Deterministic in (config, master_seed, replicate): all randomness comes
// from substreams of mix_seed(master_seed, replicate, tag).
GeneratedTrial generate_trial(const DGPConfig& config, std::uint64_t master_seed,
                              std::uint64_t replicate);

struct TrueTau {
    double value = 0.0;
    double mc_se = 0.0;              // 0 for the analytic Model 1 truth
};

// Model 1: closed form from the t moments. Model 2: Monte Carlo over a
// fixed internal stream (pure function of the config).
TrueTau true_tau(const DGPConfig& config);

// Monte Carlo truth with explicit draw count and seed, for replication
// checks and for Model 2's cached value.
TrueTau true_tau_mc(const DGPConfig& config, std::int64_t draws, std::uint64_t seed);

// Population Gram of the adjusted covariates; identical for every stratum
// because X is independent of the stratum label in both models.
GramPair true_gram(const DGPConfig& config, int stratum = 0);

} // namespace carate

#endif
