#ifndef CARATE_RANDOMIZE_HPP
#define CARATE_RANDOMIZE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

#include "carate/common.hpp"

namespace carate {

// Covariate-adaptive randomization schemes. All of them read only the
// stratum labels and the seed, never outcomes or covariates.
struct RandomizationScheme {
    enum class Kind { Simple, PermutedBlock, BiasedCoin };

    Kind kind = Kind::PermutedBlock;
    // Target treated proportion per stratum. A single entry broadcasts to
    // every stratum.
    std::vector<double> target_pi = {0.5};
    int block_size = 6;        // PermutedBlock only; block_size * pi integral
    double lambda = 2.0 / 3.0; // BiasedCoin only; Efron's classic 2/3

    double pi_for(int stratum, int n_strata) const;
    // Throws ValidationError when the parameters are inconsistent for a
    // design over `n_strata` strata.
    void validate(int n_strata) const;
};

RandomizationScheme::Kind scheme_kind_from_string(const std::string& name);
std::string to_string(RandomizationScheme::Kind kind);

// i.i.d. categorical draws over {0, .., K-1}; probs must sum to 1 within
// 1e-12. Deterministic given the seed.
std::vector<int> draw_strata(const std::vector<double>& probs, int n, std::uint64_t seed);

// Assignment vector (1 = treated) for units in arrival (row) order.
// Pure function of (scheme, strata, seed).
Eigen::VectorXi assign(const RandomizationScheme& scheme, const std::vector<int>& strata,
                       std::uint64_t seed);

} // namespace carate

#endif
