#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

#include "tps/errors.hpp"

namespace tps {

// splitmix64, the standard seed scrambler.
inline uint64_t mix64(uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

inline uint64_t hash_tag(std::string_view tag) {
    uint64_t h = 0xCBF29CE484222325ull;  // FNV-1a
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001B3ull;
    }
    return h;
}

// All randomness in the pipeline funnels through one root seed. Module and
// per-item streams are derived, never shared, so parallel order cannot change
// what any consumer draws. The engine is mt19937_64 (its raw output is fully
// specified by the standard); distributions are hand-rolled below because the
// std ones are implementation-defined.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(mix64(seed)) {}

    static Rng derive(uint64_t root, std::string_view tag) {
        return Rng(mix64(root ^ hash_tag(tag)));
    }
    static Rng derive(uint64_t root, std::string_view tag, uint64_t index) {
        return Rng(mix64(mix64(root ^ hash_tag(tag)) + index));
    }

    uint64_t next() { return eng_(); }

    // [0, 1)
    double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) {
        if (!(lo <= hi)) throw RangeError("uniform: lo > hi");
        return lo + (hi - lo) * uniform();
    }

    // inclusive on both ends
    int64_t uniform_int(int64_t lo, int64_t hi) {
        if (lo > hi) throw RangeError("uniform_int: lo > hi");
        uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
        // rejection sampling keeps it unbiased
        uint64_t limit = UINT64_MAX - UINT64_MAX % span;
        uint64_t x;
        do { x = next(); } while (x >= limit);
        return lo + static_cast<int64_t>(x % span);
    }

    // Box-Muller; one value per call, the pair partner is cached.
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1, u2;
        do { u1 = uniform(); } while (u1 <= 0.0);
        u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace tps
