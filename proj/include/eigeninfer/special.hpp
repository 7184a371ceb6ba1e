#ifndef EIGENINFER_SPECIAL_HPP
#define EIGENINFER_SPECIAL_HPP

#include <cmath>
#include <limits>
#include <stdexcept>

namespace eigeninfer {

/// Regularized lower incomplete gamma P(a, x), by series expansion for
/// x < a + 1 and by the Lentz continued fraction for the upper tail
/// otherwise.
inline double regularized_gamma_p(double a, double x) {
    if (!(a > 0.0) || x < 0.0)
        throw std::invalid_argument("regularized_gamma_p: invalid arguments");
    if (x == 0.0) return 0.0;
    const double lg = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int k = 0; k < 10000; ++k) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-16) break;
        }
        return sum * std::exp(-x + a * std::log(x) - lg);
    }
    // continued fraction for Q(a, x)
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 10000; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    const double q = std::exp(-x + a * std::log(x) - lg) * h;
    return 1.0 - q;
}

inline double chi_square_cdf(double x, int dof) {
    if (dof < 1)
        throw std::invalid_argument("chi_square_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(dof / 2.0, x / 2.0);
}

/// Inverse chi-square CDF by bracketing plus bisection refinement;
/// |CDF(result) - level| < 1e-10.
inline double chi_square_quantile(double level, int dof) {
    if (!(level > 0.0 && level < 1.0))
        throw std::invalid_argument("chi_square_quantile: level must be in (0,1)");
    if (dof < 1)
        throw std::invalid_argument("chi_square_quantile: dof must be >= 1");
    double lo = 0.0;
    double hi = dof + 10.0 * std::sqrt(2.0 * dof) + 10.0;
    while (chi_square_cdf(hi, dof) < level) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (chi_square_cdf(mid, dof) < level)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * (1.0 + hi)) break;
    }
    return 0.5 * (lo + hi);
}

inline double standard_normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

}  // namespace eigeninfer

#endif
