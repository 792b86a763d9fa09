#pragma once

// Seeded randomness with named stream derivation.
//
// Every stochastic routine in the toolkit takes one base seed and derives
// independent streams via derive_seed(base, label, index).  Sampling is done
// with hand-rolled transforms on top of mt19937_64 raw output; the std::
// distribution objects are deliberately avoided because their draw sequences
// are not pinned by the standard, and we promise byte-identical results.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string_view>
#include <vector>

#include "netqual/errors.hpp"

namespace netqual {

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stable FNV-1a over the label, then splitmix-chained with base and index.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view label,
                                 std::uint64_t index = 0) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : label) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    std::uint64_t s = base;
    std::uint64_t out = splitmix64(s);
    s ^= h;
    out ^= splitmix64(s);
    s ^= index + 0x9e3779b97f4a7c15ULL;
    out ^= splitmix64(s);
    return out;
}

// Inverse standard normal CDF, Wichura's algorithm AS241 (PPND16).
// Accurate to ~1e-16 relative over (0,1); used for all normal draws so the
// stream is a pure function of the uniform bits.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0))
        throw DomainValueError("normal_quantile: p must lie strictly in (0,1)");
    const double q = p - 0.5;
    double r, num, den;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        num = (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                    6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                  1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                1.3314166789178437745e+2) * r + 3.3871328727963666080e0);
        den = (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                    3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                  5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                4.2313330701600911252e+1) * r + 1.0);
        return q * num / den;
    }
    r = q < 0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    if (r <= 5.0) {
        r -= 1.6;
        num = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e0) * r +
                  3.64784832476320460504e0) * r + 5.76949722146069140550e0) * r +
                4.63033784615654529590e0) * r + 1.42343711074968357734e0);
        den = (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e0) * r +
                2.05319162663775882187e0) * r + 1.0);
    } else {
        r -= 5.0;
        num = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e0) * r +
                5.46378491116411436990e0) * r + 6.65790464350110377720e0);
        den = (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    const double val = num / den;
    return q < 0 ? -val : val;
}

inline double normal_cdf(double z) {
    return 0.5 * std::erfc(-z / std::sqrt(2.0));
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0,1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Uniform on (0,1); safe to feed into inverse CDFs / logs.
    double uniform01_open() {
        return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
    }

    // Unbiased integer in [0, n) via rejection on the top of the range.
    std::uint64_t uniform_below(std::uint64_t n) {
        if (n == 0)
            throw DomainValueError("uniform_below: n must be positive");
        const std::uint64_t limit =
            std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = eng_();
        } while (x >= limit);
        return x % n;
    }

    double normal(double mean = 0.0, double sd = 1.0) {
        return mean + sd * normal_quantile(uniform01_open());
    }

    double exponential(double mean = 1.0) {
        return -mean * std::log(uniform01_open());
    }

    // Sample k distinct indices from [0, n), returned sorted.
    std::vector<std::uint32_t> sample_without_replacement(std::uint32_t n, std::uint32_t k) {
        if (k > n)
            throw DomainValueError("sample_without_replacement: k > n");
        // Floyd's algorithm; deterministic for a given stream position.
        std::vector<std::uint32_t> out;
        out.reserve(k);
        std::vector<bool> seen(n, false);
        for (std::uint32_t j = n - k; j < n; ++j) {
            auto t = static_cast<std::uint32_t>(uniform_below(j + 1));
            if (seen[t]) t = j;
            seen[t] = true;
            out.push_back(t);
        }
        std::sort(out.begin(), out.end());
        return out;
    }

private:
    std::mt19937_64 eng_;
};

} // namespace netqual
