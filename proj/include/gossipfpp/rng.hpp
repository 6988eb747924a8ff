#pragma once

#include <cstdint>
#include <cmath>
#include <initializer_list>

// Deterministic random number generation. All simulation results must be
// reproducible bit-for-bit from a master seed regardless of platform or
// thread count, so we do not use <random> distributions (their output is
// implementation-defined). Streams are derived from the master seed with
// a splitmix64 counter scheme; the generator is xoshiro256++.

namespace gossipfpp {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Hash a master seed together with stream tags (replicate index, agent id,
// channel id, ...) into an independent stream seed.
inline std::uint64_t seed_mix(std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = 0x8f1bbcdcbfa53e0bULL;
    for (std::uint64_t p : parts) {
        s ^= p + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
        s = splitmix64(s);
    }
    return s;
}

class Rng {
public:
    explicit Rng(std::uint64_t seed = 1) { reseed(seed); }

    void reseed(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform on [0,1).
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Uniform on (0,1]; safe as a log() argument.
    double uniform01_open0() {
        return static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
    }

    double uniform(double a, double b) { return a + (b - a) * uniform01(); }

    // Exponential with the given rate. rate == 0 yields +infinity.
    double exponential(double rate) { return -std::log(uniform01_open0()) / rate; }

    // Unit-mean exponential.
    double exp1() { return -std::log(uniform01_open0()); }

    // Uniform integer in [0, n). Lemire's method with rejection (unbiased).
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        std::uint64_t x = next();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        auto lo = static_cast<std::uint64_t>(m);
        if (lo < n) {
            const std::uint64_t threshold = (0 - n) % n;
            while (lo < threshold) {
                x = next();
                m = static_cast<__uint128_t>(x) * n;
                lo = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) {
        return (x << k) | (x >> (64 - k));
    }
    std::uint64_t s_[4];
};

// One-word generator for contexts that need a compact per-entity stream
// (e.g. one stream per lattice vertex).
class SmallRng {
public:
    explicit SmallRng(std::uint64_t seed = 1) : state_(seed) {}
    std::uint64_t next() { return splitmix64(state_); }
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
    double exp1() {
        const double u = static_cast<double>((next() >> 11) + 1) * 0x1.0p-53;
        return -std::log(u);
    }

private:
    std::uint64_t state_;
};

}  // namespace gossipfpp
