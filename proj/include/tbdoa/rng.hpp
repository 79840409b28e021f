// Counter-based random number generator: stateless hash of (seed, stream,
// counter) so draws are reproducible bit-for-bit across platforms and trials
// can be parallelized by giving each worker its own stream.
#pragma once

#include <complex>
#include <cstdint>

namespace tbdoa {

class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
        : key_(mix(seed ^ mix(stream + 0x9E3779B97F4A7C15ull))), ctr_(0) {}

    std::uint64_t next_u64() {
        std::uint64_t x = key_ + (++ctr_) * 0x9E3779B97F4A7C15ull;
        return mix(x);
    }

    // [0, 1)
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // standard normal via Box-Muller, second value cached
    double normal() {
        if (have_cached_) {
            have_cached_ = false;
            return cached_;
        }
        double u1 = uniform(), u2 = uniform();
        if (u1 < 0x1.0p-53) u1 = 0x1.0p-53;
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        cached_ = r * std::sin(a);
        have_cached_ = true;
        return r * std::cos(a);
    }

    // circular complex normal with unit variance (1/2 per component)
    std::complex<double> cnormal() {
        const double s = 0.70710678118654752440;
        double re = normal(), im = normal();
        return {s * re, s * im};
    }

    // integer in [0, n)
    std::uint64_t below(std::uint64_t n) { return next_u64() % n; }

private:
    static std::uint64_t mix(std::uint64_t x) {
        x ^= x >> 30;
        x *= 0xBF58476D1CE4E5B9ull;
        x ^= x >> 27;
        x *= 0x94D049BB133111EBull;
        x ^= x >> 31;
        return x;
    }

    std::uint64_t key_;
    std::uint64_t ctr_;
    double cached_ = 0.0;
    bool have_cached_ = false;
};

}  // namespace tbdoa
