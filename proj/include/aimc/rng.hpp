#pragma once

#include <cmath>
#include <cstdint>

namespace aimc {

// SplitMix64 finalizer. All randomness in the project is derived by hashing
// (master_seed, stream tags..., counter) tuples through this, so every draw is
// a pure function of its key and results do not depend on evaluation order.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t key_combine(std::uint64_t a, std::uint64_t b) {
    return mix64(a ^ (mix64(b) + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2)));
}

template <typename... Rest>
std::uint64_t key_combine(std::uint64_t a, std::uint64_t b, Rest... rest) {
    return key_combine(key_combine(a, b), rest...);
}

// Small counter-based generator. Cheap to construct, so callers make one per
// (work item, purpose) key instead of sharing state across threads.
class Rng {
public:
    explicit Rng(std::uint64_t key) : state_(mix64(key ^ 0xa0761d6478bd642fULL)) {}

    std::uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // [0, 1)
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // (0, 1]; safe for log()
    double uniform_open() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [lo, hi] inclusive
    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(next_u64() % static_cast<std::uint64_t>(hi - lo + 1));
    }

    // Box-Muller; consumes exactly two uniforms per sample so draw accounting
    // stays predictable.
    double normal() {
        double u1 = uniform_open();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
    }

    double normal(double mean, double std) { return mean + std * normal(); }

private:
    std::uint64_t state_;
};

}  // namespace aimc
