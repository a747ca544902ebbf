#pragma once

#include <cstdint>
#include <span>
#include <stdexcept>

namespace few {

// Counter-based generator built on splitmix64. Every stream is a pure
// function of (key, counter), so substreams derived by index are stable
// no matter which order the call sites consume them in.
class Rng {
public:
    explicit Rng(std::uint64_t key) : key_(key), counter_(0) {}

    static std::uint64_t mix(std::uint64_t z) {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Derives an independent stream; index may be a group id, sweep cell,
    // seed replicate, etc.
    Rng split(std::uint64_t index) const {
        return Rng(mix(key_ ^ mix(index + 0x632be59bd9b4e019ULL)));
    }

    std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

    // Uniform in [0,1).
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    // Uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        if (n == 0) throw std::invalid_argument("next_below: n must be positive");
        return next_u64() % n;
    }

    // Samples an index from an (unnormalized is fine) non-negative weight vector.
    int sample_discrete(std::span<const double> weights) {
        double total = 0.0;
        for (double w : weights) total += w;
        if (!(total > 0.0)) throw std::invalid_argument("sample_discrete: weights sum to zero");
        double u = next_double() * total;
        double acc = 0.0;
        for (std::size_t k = 0; k < weights.size(); ++k) {
            acc += weights[k];
            if (u < acc) return static_cast<int>(k);
        }
        return static_cast<int>(weights.size()) - 1;
    }

    std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_;
};

} // namespace few
