#pragma once

#include <cstdint>
#include <random>

namespace i2ipr {

// splitmix64 step; used to derive independent child seeds from a master seed.
inline uint64_t mix_seed(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic child seed for (master, index) pairs, e.g. per-restart or
// per-step draws.  Order-independent: seed i does not depend on seed i-1.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
    return mix_seed(master ^ mix_seed(index + 0x6a09e667f3bcc909ULL));
}

class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    double normal() { return normal_(engine_); }
    double uniform() { return uniform_(engine_); }

    // Uniform angle on [0, 2*pi).
    double angle() { return uniform() * 6.283185307179586476925286766559; }

    uint64_t next_u64() { return engine_(); }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

} // namespace i2ipr
