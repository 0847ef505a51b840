#ifndef CARATE_RNG_HPP
#define CARATE_RNG_HPP

#include <cmath>
#include <cstdint>

namespace carate {

// splitmix64, used both as a seed expander and as the stream-id hash.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream ids for deriving independent substreams from one master seed.
// Replicate r of a simulation uses mix_seed(master, r, tag) per purpose, so
// the draws of a replicate never depend on worker count or scheduling.
namespace stream_tag {
inline constexpr std::uint64_t kStrata = 0x5354524154414c00ULL;
inline constexpr std::uint64_t kAssign = 0x41535349474e0000ULL;
inline constexpr std::uint64_t kCovariates = 0x434f564152000000ULL;
inline constexpr std::uint64_t kOutcome = 0x4f5554434f4d4500ULL;
inline constexpr std::uint64_t kCoefficients = 0x434f454646000000ULL;
inline constexpr std::uint64_t kTruth = 0x5452555448000000ULL;
} // namespace stream_tag

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
    std::uint64_t s = a;
    std::uint64_t h = splitmix64(s);
    s ^= b + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
    s ^= c + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    h ^= splitmix64(s);
    return h;
}

// xoshiro256++ with splitmix64 seeding. Hand-rolled so that every stream is
// bit-reproducible across platforms and standard library versions; the
// <random> distributions make no such promise.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t s = seed;
        for (auto& word : state_) word = splitmix64(s);
    }

    static Rng stream(std::uint64_t master, std::uint64_t index, std::uint64_t tag) {
        return Rng(mix_seed(master, index, tag));
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0, 1), never exactly 0 (safe under log()).
    double next_open_double() {
        return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
    }

    double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool next_bernoulli(double prob) { return next_double() < prob; }

    // Box-Muller; the paired draw is cached so consecutive calls cost one
    // transform per two variates.
    double next_normal() {
        if (has_cached_) {
            has_cached_ = false;
            return cached_;
        }
        const double u1 = next_open_double();
        const double u2 = next_double();
        const double radius = std::sqrt(-2.0 * std::log(u1));
        const double angle = 6.283185307179586476925287 * u2;
        cached_ = radius * std::sin(angle);
        has_cached_ = true;
        return radius * std::cos(angle);
    }

    // Chi-squared with integer degrees of freedom (all we need: t mixing).
    double next_chi_squared(int dof) {
        double acc = 0.0;
        for (int i = 0; i < dof; ++i) {
            const double z = next_normal();
            acc += z * z;
        }
        return acc;
    }

    // Student t via the normal / chi-squared ratio.
    double next_student_t(int dof) {
        const double z = next_normal();
        const double g = next_chi_squared(dof);
        return z / std::sqrt(g / static_cast<double>(dof));
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }

    std::uint64_t state_[4] = {};
    double cached_ = 0.0;
    bool has_cached_ = false;
};

} // namespace carate

#endif
