#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace lfmpc {

/// splitmix64 output function (java.util.SplittableRandom).
inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
}

/// Hashes a list of tags (run seed, domain, step, particle index, ...) into
/// one stream seed. Streams derived from distinct tag tuples are independent
/// for Monte Carlo purposes, which keeps results reproducible at any worker
/// count: a stream's draws never depend on evaluation order elsewhere.
inline std::uint64_t mix_seed(std::initializer_list<std::uint64_t> tags) {
    std::uint64_t h = 0x6a09e667f3bcc909ull;
    for (std::uint64_t t : tags) {
        h = mix64(h ^ (t + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2)));
    }
    return h;
}

/// Counter-free splitmix64 generator with uniform and Gaussian draws.
/// Deterministic given its seed; cheap enough to construct per particle.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        return mix64(state_);
    }

    /// Uniform double in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller (second value cached).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform(); // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        have_spare_ = true;
        return r * std::cos(theta);
    }

private:
    std::uint64_t state_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

/// RNG domains of a closed-loop run. Every random draw in an experiment
/// comes from a stream keyed by (run seed, domain, step, index).
enum class RngDomain : std::uint64_t {
    TruthInit = 1,
    TruthLatent = 2,
    Measurement = 3,
    FilterInit = 4,
    FilterStep = 5,
    Scenario = 6,
};

inline Rng make_stream(std::uint64_t seed, RngDomain domain, std::uint64_t a = 0,
                       std::uint64_t b = 0) {
    return Rng(mix_seed({seed, static_cast<std::uint64_t>(domain), a, b}));
}

} // namespace lfmpc
