#ifndef EIGENINFER_SERIES_HPP
#define EIGENINFER_SERIES_HPP

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace eigeninfer {

/// Formal power series in one variable, truncated at a fixed degree cap.
/// Coefficient d multiplies x^d. All operations discard terms above the cap.
class TruncatedSeries {
public:
    explicit TruncatedSeries(std::size_t degree_cap)
        : coeffs_(degree_cap + 1, 0.0) {}

    explicit TruncatedSeries(std::vector<double> coeffs)
        : coeffs_(std::move(coeffs)) {
        if (coeffs_.empty())
            throw std::invalid_argument("TruncatedSeries: empty coefficient vector");
    }

    std::size_t degree_cap() const { return coeffs_.size() - 1; }

    double operator[](std::size_t d) const { return coeffs_[d]; }
    double& operator[](std::size_t d) { return coeffs_[d]; }

    const std::vector<double>& coeffs() const { return coeffs_; }

private:
    std::vector<double> coeffs_;
};

/// Formal power series in two variables on a square coefficient grid,
/// truncated at the same degree cap in each variable.
class BivariateSeries {
public:
    explicit BivariateSeries(std::size_t degree_cap)
        : cap_(degree_cap), grid_((degree_cap + 1) * (degree_cap + 1), 0.0) {}

    std::size_t degree_cap() const { return cap_; }

    double at(std::size_t i, std::size_t j) const {
        check_index(i, j);
        return grid_[i * (cap_ + 1) + j];
    }

    void set(std::size_t i, std::size_t j, double v) {
        check_index(i, j);
        grid_[i * (cap_ + 1) + j] = v;
    }

private:
    void check_index(std::size_t i, std::size_t j) const {
        if (i > cap_ || j > cap_)
            throw std::out_of_range("BivariateSeries: index exceeds degree cap");
    }

    std::size_t cap_;
    std::vector<double> grid_;
};

inline TruncatedSeries series_mul(const TruncatedSeries& a, const TruncatedSeries& b) {
    if (a.degree_cap() != b.degree_cap())
        throw std::invalid_argument("series_mul: mismatched degree caps");
    const std::size_t cap = a.degree_cap();
    TruncatedSeries out(cap);
    // symmetric pairing makes the convolution exactly commutative in
    // floating point (addition of two products is order-insensitive)
    for (std::size_t d = 0; d <= cap; ++d) {
        double acc = 0.0;
        for (std::size_t i = 0; i < d - i; ++i)
            acc += a[i] * b[d - i] + a[d - i] * b[i];
        if (d % 2 == 0) acc += a[d / 2] * b[d / 2];
        out[d] = acc;
    }
    return out;
}

/// Termwise derivative. The top coefficient of the result is set to zero
/// since its value was lost to truncation.
inline TruncatedSeries series_derivative(const TruncatedSeries& a) {
    const std::size_t cap = a.degree_cap();
    if (cap < 1)
        throw std::invalid_argument("series_derivative: degree cap must be >= 1");
    TruncatedSeries out(cap);
    for (std::size_t d = 0; d + 1 <= cap; ++d)
        out[d] = static_cast<double>(d + 1) * a[d + 1];
    out[cap] = 0.0;
    return out;
}

/// Multiplicative inverse to the degree cap. Requires a nonzero constant term.
inline TruncatedSeries series_reciprocal(const TruncatedSeries& a) {
    if (a[0] == 0.0)
        throw std::domain_error("series_reciprocal: zero constant term");
    const std::size_t cap = a.degree_cap();
    TruncatedSeries out(cap);
    const double inv0 = 1.0 / a[0];
    out[0] = inv0;
    for (std::size_t d = 1; d <= cap; ++d) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= d; ++k)
            acc += a[k] * out[d - k];
        out[d] = -inv0 * acc;
    }
    return out;
}

/// Divided difference D(x,y) = (H(x) - H(y)) / (x - y) of a series with
/// H(0) = 0, via the closed-form coefficient map coeff(i,j) = h_{i+j+1}.
/// The removable singularity on x = y is never touched.
inline BivariateSeries divided_difference(const TruncatedSeries& h) {
    if (h[0] != 0.0)
        throw std::domain_error("divided_difference: nonzero constant term");
    const std::size_t cap = h.degree_cap();
    BivariateSeries out(cap);
    for (std::size_t i = 0; i <= cap; ++i)
        for (std::size_t j = 0; j <= cap; ++j) {
            const std::size_t m = i + j + 1;
            out.set(i, j, m <= cap ? h[m] : 0.0);
        }
    return out;
}

inline double bivariate_coeff(const BivariateSeries& s, std::size_t i, std::size_t j) {
    return s.at(i, j);
}

inline BivariateSeries bivariate_mul(const BivariateSeries& a, const BivariateSeries& b) {
    if (a.degree_cap() != b.degree_cap())
        throw std::invalid_argument("bivariate_mul: mismatched degree caps");
    const std::size_t cap = a.degree_cap();
    BivariateSeries out(cap);
    for (std::size_t i1 = 0; i1 <= cap; ++i1)
        for (std::size_t j1 = 0; j1 <= cap; ++j1) {
            const double c1 = a.at(i1, j1);
            if (c1 == 0.0) continue;
            for (std::size_t i2 = 0; i1 + i2 <= cap; ++i2)
                for (std::size_t j2 = 0; j1 + j2 <= cap; ++j2)
                    out.set(i1 + i2, j1 + j2,
                            out.at(i1 + i2, j1 + j2) + c1 * b.at(i2, j2));
        }
    return out;
}

/// Outer product f(x) * g(y) of two univariate series.
inline BivariateSeries bivariate_outer(const TruncatedSeries& f, const TruncatedSeries& g) {
    if (f.degree_cap() != g.degree_cap())
        throw std::invalid_argument("bivariate_outer: mismatched degree caps");
    const std::size_t cap = f.degree_cap();
    BivariateSeries out(cap);
    for (std::size_t i = 0; i <= cap; ++i)
        for (std::size_t j = 0; j <= cap; ++j)
            out.set(i, j, f[i] * g[j]);
    return out;
}

/// Multiplicative inverse of a bivariate series by Newton iteration
/// r <- r (2 - a r), seeded at 1/a(0,0). Iteration count is fixed at
/// ceil(log2(cap+1)) + 1, doubling the count of correct degrees each step.
inline BivariateSeries bivariate_reciprocal(const BivariateSeries& a) {
    if (a.at(0, 0) == 0.0)
        throw std::domain_error("bivariate_reciprocal: zero constant term");
    const std::size_t cap = a.degree_cap();
    BivariateSeries r(cap);
    r.set(0, 0, 1.0 / a.at(0, 0));
    std::size_t iters = 1;
    while ((std::size_t{1} << (iters - 1)) < cap + 1) ++iters;
    for (std::size_t it = 0; it < iters; ++it) {
        BivariateSeries ar = bivariate_mul(a, r);
        BivariateSeries two_minus(cap);
        for (std::size_t i = 0; i <= cap; ++i)
            for (std::size_t j = 0; j <= cap; ++j)
                two_minus.set(i, j, (i == 0 && j == 0 ? 2.0 : 0.0) - ar.at(i, j));
        r = bivariate_mul(r, two_minus);
    }
    return r;
}

/// Exact division of a bivariate series by (x - y), assuming divisibility.
/// Coefficients with total degree >= cap are unreliable afterward (one
/// degree of headroom is consumed per division); callers must budget caps.
inline BivariateSeries divide_by_x_minus_y(const BivariateSeries& f) {
    const std::size_t cap = f.degree_cap();
    BivariateSeries g(cap);
    // f_{i,j} = g_{i-1,j} - g_{i,j-1}  =>  g_{i,j} = f_{i+1,j} + g_{i+1,j-1}
    for (std::size_t j = 0; j <= cap; ++j)
        for (std::size_t ii = cap + 1; ii-- > 0;) {
            const std::size_t i = ii;
            double v = (i + 1 <= cap) ? f.at(i + 1, j) : 0.0;
            if (j >= 1 && i + 1 <= cap) v += g.at(i + 1, j - 1);
            g.set(i, j, v);
        }
    return g;
}

}  // namespace eigeninfer

#endif
