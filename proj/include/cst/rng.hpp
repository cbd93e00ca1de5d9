#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "cst/error.hpp"

namespace cst {

// Seeded random source for the synthetic scenarios. The engine is
// std::mt19937_64 (algorithm pinned by the standard) and every variate
// transform is implemented here, so a given seed produces the same stream
// on any platform. Library distributions are not used on purpose: their
// algorithms are implementation-defined.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    // Uniform on (0, 1]: never returns 0, so logs are safe.
    double uniform01() {
        return static_cast<double>((eng_() >> 11) + 1) * 0x1.0p-53;
    }

    bool bernoulli(double p) { return uniform01() <= p; }

    // Box-Muller; the spare is cached so each call costs one or zero pairs.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = uniform01();
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * 3.141592653589793238462643383279502884 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Inversion by sequential search. Fine for the lambdas used here
    // (<= a few hundred); guards against running off the tail.
    long poisson(double lambda) {
        if (lambda < 0.0) throw Error("poisson: negative lambda");
        if (lambda == 0.0) return 0;
        const double u = uniform01();
        double p = std::exp(-lambda);
        double cdf = p;
        long k = 0;
        const long cap = static_cast<long>(lambda + 40.0 * std::sqrt(lambda) + 50.0);
        while (u > cdf && k < cap) {
            ++k;
            p *= lambda / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }

    // Chi-squared with 4 degrees of freedom as the sum of four squared
    // standard normals.
    double chisq4() {
        double s = 0.0;
        for (int i = 0; i < 4; ++i) {
            const double z = normal();
            s += z * z;
        }
        return s;
    }

  private:
    std::mt19937_64 eng_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cst
