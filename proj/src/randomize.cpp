#include "carate/randomize.hpp"

#include <algorithm>
#include <cmath>

#include "carate/rng.hpp"

namespace carate {

namespace {

// Bounded draw via widening multiply; deterministic, bias O(n / 2^64).
std::uint64_t next_below(Rng& rng, std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(rng.next_u64()) * n) >> 64);
}

void shuffle_block(std::vector<int>& block, Rng& rng) {
    for (std::size_t i = block.size(); i > 1; --i) {
        std::swap(block[i - 1], block[next_below(rng, i)]);
    }
}

} // namespace

double RandomizationScheme::pi_for(int stratum, int n_strata) const {
    if (target_pi.size() == 1) return target_pi[0];
    if (stratum < 0 || stratum >= n_strata ||
        static_cast<std::size_t>(stratum) >= target_pi.size()) {
        throw ValidationError("stratum index out of range for target proportions");
    }
    return target_pi[static_cast<std::size_t>(stratum)];
}

void RandomizationScheme::validate(int n_strata) const {
    if (target_pi.empty()) {
        throw ValidationError("scheme needs at least one target proportion");
    }
    if (target_pi.size() != 1 && static_cast<int>(target_pi.size()) != n_strata) {
        throw ValidationError("target proportions must be scalar or one per stratum");
    }
    for (const double pi : target_pi) {
        if (!(pi > 0.0 && pi < 1.0)) {
            throw ValidationError("target proportion must lie in (0, 1)");
        }
    }
    if (kind == Kind::PermutedBlock) {
        if (block_size < 1) {
            throw ValidationError("block size must be >= 1");
        }
        for (const double pi : target_pi) {
            const double treated = block_size * pi;
            if (std::abs(treated - std::round(treated)) > 1e-9) {
                throw ValidationError("block size " + std::to_string(block_size) +
                                      " times proportion " + std::to_string(pi) +
                                      " is not an integer");
            }
        }
    }
    if (kind == Kind::BiasedCoin) {
        if (!(lambda > 0.5 && lambda <= 1.0)) {
            throw ValidationError("biased coin lambda must lie in (1/2, 1]");
        }
        for (const double pi : target_pi) {
            if (pi != 0.5) {
                throw ValidationError("biased coin design requires target proportion 1/2");
            }
        }
    }
}

RandomizationScheme::Kind scheme_kind_from_string(const std::string& name) {
    if (name == "simple") return RandomizationScheme::Kind::Simple;
    if (name == "permuted-block" || name == "block") return RandomizationScheme::Kind::PermutedBlock;
    if (name == "biased-coin") return RandomizationScheme::Kind::BiasedCoin;
    throw ValidationError("unknown randomization scheme: " + name);
}

std::string to_string(RandomizationScheme::Kind kind) {
    switch (kind) {
        case RandomizationScheme::Kind::Simple: return "simple";
        case RandomizationScheme::Kind::PermutedBlock: return "permuted-block";
        case RandomizationScheme::Kind::BiasedCoin: return "biased-coin";
    }
    return "?";
}

std::vector<int> draw_strata(const std::vector<double>& probs, int n, std::uint64_t seed) {
    if (n < 1) {
        throw ValidationError("need n >= 1 stratum draws");
    }
    double total = 0.0;
    for (const double p : probs) {
        if (p < 0.0) throw ValidationError("stratum probabilities must be non-negative");
        total += p;
    }
    if (probs.empty() || std::abs(total - 1.0) > 1e-12) {
        throw ValidationError("stratum probabilities must sum to 1");
    }

    Rng rng = Rng::stream(seed, 0, stream_tag::kStrata);
    std::vector<int> labels(static_cast<std::size_t>(n));
    const int top = static_cast<int>(probs.size()) - 1;
    for (auto& label : labels) {
        const double u = rng.next_double();
        double cum = 0.0;
        int k = top;
        for (int j = 0; j <= top; ++j) {
            cum += probs[static_cast<std::size_t>(j)];
            if (u < cum) {
                k = j;
                break;
            }
        }
        label = k;
    }
    return labels;
}

Eigen::VectorXi assign(const RandomizationScheme& scheme, const std::vector<int>& strata,
                       std::uint64_t seed) {
    int n_strata = 0;
    for (const int s : strata) {
        if (s < 0) throw ValidationError("negative stratum id");
        n_strata = std::max(n_strata, s + 1);
    }
    scheme.validate(n_strata);

    // Units of each stratum in arrival (row) order.
    std::vector<std::vector<int>> rows_of(static_cast<std::size_t>(n_strata));
    for (std::size_t i = 0; i < strata.size(); ++i) {
        rows_of[static_cast<std::size_t>(strata[i])].push_back(static_cast<int>(i));
    }

    Eigen::VectorXi arm = Eigen::VectorXi::Zero(static_cast<Eigen::Index>(strata.size()));
    for (int k = 0; k < n_strata; ++k) {
        const auto& rows = rows_of[static_cast<std::size_t>(k)];
        if (rows.empty()) continue;
        const double pi = scheme.pi_for(k, n_strata);
        // One substream per stratum: the draws for stratum k depend only on
        // how many units it has, never on the other strata.
        Rng rng = Rng::stream(seed, static_cast<std::uint64_t>(k), stream_tag::kAssign);

        switch (scheme.kind) {
            case RandomizationScheme::Kind::Simple: {
                for (const int row : rows) {
                    arm[row] = rng.next_bernoulli(pi) ? 1 : 0;
                }
                break;
            }
            case RandomizationScheme::Kind::PermutedBlock: {
                const int b = scheme.block_size;
                const int treated_per_block = static_cast<int>(std::llround(b * pi));
                std::vector<int> block(static_cast<std::size_t>(b));
                for (std::size_t start = 0; start < rows.size(); start += b) {
                    std::fill(block.begin(), block.end(), 0);
                    std::fill(block.begin(), block.begin() + treated_per_block, 1);
                    shuffle_block(block, rng);
                    const std::size_t len =
                        std::min<std::size_t>(b, rows.size() - start);
                    for (std::size_t j = 0; j < len; ++j) {
                        arm[rows[start + j]] = block[j];
                    }
                }
                break;
            }
            case RandomizationScheme::Kind::BiasedCoin: {
                int imbalance = 0; // treated minus control so far
                for (const int row : rows) {
                    double p = 0.5;
                    if (imbalance < 0) p = scheme.lambda;
                    else if (imbalance > 0) p = 1.0 - scheme.lambda;
                    const int a = rng.next_bernoulli(p) ? 1 : 0;
                    arm[row] = a;
                    imbalance += a == 1 ? 1 : -1;
                }
                break;
            }
        }
    }
    return arm;
}

} // namespace carate
