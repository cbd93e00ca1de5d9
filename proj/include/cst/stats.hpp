#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "cst/error.hpp"

namespace cst {

// Inverse standard-normal CDF, Wichura's algorithm AS 241 (PPND16).
// Accurate to about 1e-15 over (0, 1); no dependence on a statistics
// library so that audit output is bit-stable.
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw Error("normal_quantile: p must be in (0,1)");
    const double q = p - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    double r = (q < 0.0) ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return (q < 0.0) ? -val : val;
}

// z_alpha = Phi^-1(1 - alpha), the upper-tail critical value.
inline double z_upper(double alpha) { return normal_quantile(1.0 - alpha); }

// Wald half-width for the difference of two proportions estimated from
// groups of common size m.
inline double wald_width(double p_c, double p_t, int m, double alpha) {
    if (m < 1) throw Error("wald_width: group size must be >= 1");
    const double var = p_c * (1.0 - p_c) + p_t * (1.0 - p_t);
    return z_upper(alpha) * std::sqrt(var / static_cast<double>(m));
}

// Fraction of negative decisions in a group, optionally counting the
// search center. With the center included the denominator grows by one.
inline double negative_rate(int negatives, int group_size, bool include_center,
                            int center_outcome) {
    const int num = negatives + ((include_center && center_outcome == 0) ? 1 : 0);
    const int den = group_size + (include_center ? 1 : 0);
    if (den < 1) throw Error("negative_rate: empty group and no center");
    return static_cast<double>(num) / static_cast<double>(den);
}

// Lower bound of the one-sided interval [delta_p - w_alpha, +inf).
inline double one_sided_lower(double p_c, double p_t, int m, double alpha) {
    return (p_c - p_t) - wald_width(p_c, p_t, m, alpha);
}

struct Interval {
    double lo;
    double hi;
};

// Two-sided interval delta_p +/- w_{alpha/2}, clipped to [-1, 1].
inline Interval two_sided_ci(double p_c, double p_t, int m, double alpha) {
    const double delta = p_c - p_t;
    const double w = wald_width(p_c, p_t, m, alpha / 2.0);
    return {std::max(delta - w, -1.0), std::min(delta + w, 1.0)};
}

struct Decision {
    bool detected = false;
    bool significant = false;
};

// Standard (negative) direction: discrimination when delta_p exceeds the
// accepted deviation; significant when the one-sided CI excludes tau.
inline Decision decide(double delta_p, double ci_lo, double tau) {
    Decision d;
    d.detected = delta_p > tau;
    d.significant = d.detected && ci_lo > tau;
    return d;
}

// Positive (favoring) direction: delta_p below tau, with the reflected
// one-sided interval (-inf, delta_p + w_alpha].
inline Decision decide_positive(double delta_p, double p_c, double p_t, int m,
                                double alpha, double tau) {
    Decision d;
    d.detected = delta_p < tau;
    d.significant = d.detected && (delta_p + wald_width(p_c, p_t, m, alpha)) < tau;
    return d;
}

}  // namespace cst
