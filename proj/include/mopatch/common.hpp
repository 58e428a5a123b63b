#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace mopatch {

// Library errors carry a module:operation prefix so the CLI can report
// where a failure came from.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

[[noreturn]] inline void fail(const std::string& msg) { throw Error(msg); }

// Deterministic RNG used everywhere randomness is needed. Distributions are
// hand-rolled on top of mt19937_64 so the stream does not depend on the
// standard library's unspecified distribution algorithms.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull) {
        // splitmix-style warmup so nearby seeds decorrelate
        for (int i = 0; i < 4; ++i) next_u64();
    }

    uint64_t next_u64() {
        uint64_t x = state_;
        x ^= x >> 12;
        x ^= x << 25;
        x ^= x >> 27;
        state_ = x;
        return x * 0x2545F4914F6CDD1Dull;
    }

    // uniform in [0, 1)
    double uniform() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // uniform integer in [0, n)
    uint64_t below(uint64_t n) {
        // rejection to avoid modulo bias
        uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return x % n;
    }

    double normal() {
        // Box-Muller; caches are avoided to keep the stream position simple
        double u1 = uniform();
        double u2 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    // normal clipped to +-2 sigma by rejection
    double trunc_normal(double sigma) {
        double x = normal();
        while (std::fabs(x) > 2.0) x = normal();
        return x * sigma;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    uint64_t state_;
};

// Mix a base seed with a stream index (epoch number, sequence id, ...) so
// derived streams are independent and resumable.
inline uint64_t mix_seed(uint64_t seed, uint64_t stream) {
    uint64_t x = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
    x ^= x >> 30; x *= 0xBF58476D1CE4E5B9ull;
    x ^= x >> 27; x *= 0x94D049BB133111EBull;
    x ^= x >> 31;
    return x;
}

}  // namespace mopatch
