#pragma once

#include <cmath>
#include <cstdint>

namespace seqforge {

// Deterministic counter-style random stream (splitmix64 core).
//
// The whole pipeline's reproducibility contract rests on this type: the state
// is a single u64 that serializes into checkpoints, and the outputs are
// identical across platforms (no dependence on libstdc++ distribution
// internals).
class RngStream {
public:
    explicit RngStream(uint64_t seed = 0) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in [0,1) with 53 bits of mantissa.
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n), n >= 1.
    int uniform_int(int n) {
        return int((static_cast<unsigned __int128>(next_u64()) *
                    static_cast<unsigned __int128>(n)) >> 64);
    }

    // Standard normal via Box-Muller. Both uniforms are drawn fresh on every
    // call so the stream state stays a single u64.
    double normal() {
        double u1 = (double(next_u64() >> 11) + 0.5) * 0x1.0p-53;  // (0,1)
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    // Derives an independent child stream; used to give every sample /
    // worker its own seed without correlating draws.
    RngStream fork(uint64_t salt) const {
        uint64_t z = state_ ^ (0x9E3779B97F4A7C15ull * (salt + 1));
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return RngStream(z ^ (z >> 31));
    }

    uint64_t state() const { return state_; }
    void set_state(uint64_t s) { state_ = s; }

private:
    uint64_t state_;
};

}  // namespace seqforge
