#ifndef EIGENINFER_FLUCTUATION_HPP
#define EIGENINFER_FLUCTUATION_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <array>
#include <stdexcept>
#include <vector>

#include "eigeninfer/moments.hpp"
#include "eigeninfer/series.hpp"

namespace eigeninfer {

/// Raised when a covariance matrix that must be positive definite fails its
/// Cholesky factorization. Callers respond by shrinking the number of trace
/// powers, not by regularizing.
struct NotPositiveDefiniteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Second-order covariance matrix of trace-power fluctuations.
/// Entry (i, j), 1-based, is the limiting covariance of Tr S^i and Tr S^j.
struct FluctuationMatrix {
    Eigen::MatrixXd entries;
    int beta = 2;

    int side() const { return static_cast<int>(entries.rows()); }

    bool positive_definite() const {
        Eigen::LLT<Eigen::MatrixXd> llt(entries);
        return llt.info() == Eigen::Success;
    }
};

/// Builds the fluctuation covariances from the moment sequence of S~.
///
/// With H(x) = x (1 + sum_j alpha~_j x^j), the generating series of the
/// covariances is H'(x) H'(y) / (H(x) - H(y))^2 - 1/(x - y)^2. Writing
/// H(x) - H(y) = (x - y) D(x, y) with D the divided difference turns this
/// into [H'(x) H'(y) - D^2] / [(x - y)^2 D^2], where the numerator carries
/// a double zero on the diagonal; two exact divisions by (x - y) and one
/// series reciprocal of D^2 remove every singular factor. Entry (i, j) is
/// 2/beta times coefficient (i-1, j-1) of the result.
inline FluctuationMatrix second_order_covariances(const std::vector<double>& alpha_stilde,
                                                  int q, int beta) {
    if (beta != 1 && beta != 2)
        throw std::invalid_argument("second_order_covariances: beta must be 1 or 2");
    if (q < 1 || q > 15)
        throw std::invalid_argument("second_order_covariances: side must be in 1..15");
    if (static_cast<int>(alpha_stilde.size()) < 2 * q)
        throw std::invalid_argument("second_order_covariances: need moment orders 1..2q");

    const std::size_t cap = static_cast<std::size_t>(2 * q + 1);
    TruncatedSeries h(cap);
    h[1] = 1.0;
    for (int j = 1; j <= 2 * q; ++j)
        h[static_cast<std::size_t>(j) + 1] = alpha_stilde[j - 1];

    const TruncatedSeries hp = series_derivative(h);
    const BivariateSeries dd = divided_difference(h);
    const BivariateSeries dd2 = bivariate_mul(dd, dd);

    BivariateSeries num = bivariate_outer(hp, hp);
    for (std::size_t i = 0; i <= cap; ++i)
        for (std::size_t j = 0; j <= cap; ++j)
            num.set(i, j, num.at(i, j) - dd2.at(i, j));

    const BivariateSeries reduced =
        divide_by_x_minus_y(divide_by_x_minus_y(num));
    const BivariateSeries h2 = bivariate_mul(reduced, bivariate_reciprocal(dd2));

    FluctuationMatrix out;
    out.beta = beta;
    out.entries.resize(q, q);
    const double scale = 2.0 / beta;
    for (int i = 1; i <= q; ++i)
        for (int j = 1; j <= i; ++j) {
            const double v = scale * h2.at(static_cast<std::size_t>(i) - 1,
                                          static_cast<std::size_t>(j) - 1);
            out.entries(i - 1, j - 1) = v;
            out.entries(j - 1, i - 1) = v;
        }
    return out;
}

/// Hard-coded covariance polynomials in the first-order moments, an
/// implementation path independent of the series engine. Returns the
/// unscaled coefficient (before 2/beta). Supported for i, j <= 5.
inline double table3_oracle(const std::vector<double>& alpha, int i, int j) {
    if (i < 1 || j < 1 || i > 5 || j > 5)
        throw std::invalid_argument("table3_oracle: unsupported index pair");
    if (j > i) std::swap(i, j);
    if (static_cast<int>(alpha.size()) < i + j)
        throw std::invalid_argument("table3_oracle: need moment orders 1..i+j");
    std::array<double, 11> a{};
    for (int k = 1; k <= i + j; ++k) a[static_cast<std::size_t>(k)] = alpha[k - 1];
    auto P = [](double x, int e) {
        double r = 1.0;
        for (int m = 0; m < e; ++m) r *= x;
        return r;
    };
    switch (i * 10 + j) {
        case 11:
            return a[2] - P(a[1], 2);
        case 21:
            return 2 * P(a[1], 3) - 4 * a[1] * a[2] + 2 * a[3];
        case 22:
            return -6 * P(a[1], 4) + 16 * P(a[1], 2) * a[2] - 8 * a[1] * a[3] - 6 * P(a[2], 2) + 4 * a[4];
        case 31:
            return -3 * P(a[1], 4) + 9 * P(a[1], 2) * a[2] - 6 * a[1] * a[3] - 3 * P(a[2], 2) + 3 * a[4];
        case 32:
            return 12 * P(a[1], 5) - 42 * P(a[1], 3) * a[2] + 24 * P(a[1], 2) * a[3] + 30 * a[1] * P(a[2], 2) -
                   12 * a[1] * a[4] - 18 * a[2] * a[3] + 6 * a[5];
        case 33:
            return -30 * P(a[1], 6) + 126 * P(a[1], 4) * a[2] - 72 * P(a[1], 3) * a[3] -
                   135 * P(a[1], 2) * P(a[2], 2) + 36 * P(a[1], 2) * a[4] + 108 * a[1] * a[2] * a[3] -
                   18 * a[1] * a[5] + 21 * P(a[2], 3) - 27 * a[2] * a[4] - 18 * P(a[3], 2) + 9 * a[6];
        case 41:
            return 4 * P(a[1], 5) - 16 * P(a[1], 3) * a[2] + 12 * P(a[1], 2) * a[3] + 12 * a[1] * P(a[2], 2) -
                   8 * a[1] * a[4] - 8 * a[2] * a[3] + 4 * a[5];
        case 42:
            return -20 * P(a[1], 6) + 88 * P(a[1], 4) * a[2] - 56 * P(a[1], 3) * a[3] -
                   96 * P(a[1], 2) * P(a[2], 2) + 32 * P(a[1], 2) * a[4] + 80 * a[1] * a[2] * a[3] -
                   16 * a[1] * a[5] + 16 * P(a[2], 3) - 24 * a[2] * a[4] - 12 * P(a[3], 2) + 8 * a[6];
        case 43:
            return 60 * P(a[1], 7) - 300 * P(a[1], 5) * a[2] + 180 * P(a[1], 4) * a[3] +
                   432 * P(a[1], 3) * P(a[2], 2) - 96 * P(a[1], 3) * a[4] - 396 * P(a[1], 2) * a[2] * a[3] +
                   48 * P(a[1], 2) * a[5] - 156 * a[1] * P(a[2], 3) + 144 * a[1] * a[2] * a[4] +
                   84 * a[1] * P(a[3], 2) - 24 * a[1] * a[6] + 96 * P(a[2], 2) * a[3] - 36 * a[2] * a[5] -
                   48 * a[3] * a[4] + 12 * a[7];
        case 44:
            return -140 * P(a[1], 8) + 800 * P(a[1], 6) * a[2] - 480 * P(a[1], 5) * a[3] -
                   1440 * P(a[1], 4) * P(a[2], 2) + 256 * P(a[1], 4) * a[4] +
                   1408 * P(a[1], 3) * a[2] * a[3] - 128 * P(a[1], 3) * a[5] +
                   832 * P(a[1], 2) * P(a[2], 3) - 576 * P(a[1], 2) * a[2] * a[4] -
                   336 * P(a[1], 2) * P(a[3], 2) + 64 * P(a[1], 2) * a[6] -
                   768 * a[1] * P(a[2], 2) * a[3] + 192 * a[1] * a[2] * a[5] + 256 * a[1] * a[3] * a[4] -
                   32 * a[1] * a[7] - 76 * P(a[2], 4) + 144 * P(a[2], 2) * a[4] + 160 * a[2] * P(a[3], 2) -
                   48 * a[2] * a[6] - 64 * a[3] * a[5] - 40 * P(a[4], 2) + 16 * a[8];
        case 51:
            return -5 * P(a[1], 6) + 25 * P(a[1], 4) * a[2] - 20 * P(a[1], 3) * a[3] -
                   30 * P(a[1], 2) * P(a[2], 2) + 15 * P(a[1], 2) * a[4] + 30 * a[1] * a[2] * a[3] -
                   10 * a[1] * a[5] + 5 * P(a[2], 3) - 10 * a[2] * a[4] - 5 * P(a[3], 2) + 5 * a[6];
        case 52:
            return 30 * P(a[1], 7) - 160 * P(a[1], 5) * a[2] + 110 * P(a[1], 4) * a[3] +
                   240 * P(a[1], 3) * P(a[2], 2) - 70 * P(a[1], 3) * a[4] - 240 * P(a[1], 2) * a[2] * a[3] +
                   40 * P(a[1], 2) * a[5] - 90 * a[1] * P(a[2], 3) + 100 * a[1] * a[2] * a[4] +
                   50 * a[1] * P(a[3], 2) - 20 * a[1] * a[6] + 60 * P(a[2], 2) * a[3] - 30 * a[2] * a[5] -
                   30 * a[3] * a[4] + 10 * a[7];
        case 53:
            return -105 * P(a[1], 8) + 615 * P(a[1], 6) * a[2] - 390 * P(a[1], 5) * a[3] -
                   1125 * P(a[1], 4) * P(a[2], 2) + 225 * P(a[1], 4) * a[4] +
                   1140 * P(a[1], 3) * a[2] * a[3] - 120 * P(a[1], 3) * a[5] +
                   660 * P(a[1], 2) * P(a[2], 3) - 495 * P(a[1], 2) * a[2] * a[4] -
                   270 * P(a[1], 2) * P(a[3], 2) + 60 * P(a[1], 2) * a[6] -
                   630 * a[1] * P(a[2], 2) * a[3] + 180 * a[1] * a[2] * a[5] + 210 * a[1] * a[3] * a[4] -
                   30 * a[1] * a[7] - 60 * P(a[2], 4) + 120 * P(a[2], 2) * a[4] + 135 * a[2] * P(a[3], 2) -
                   45 * a[2] * a[6] - 60 * a[3] * a[5] - 30 * P(a[4], 2) + 15 * a[8];
        case 54:
            return 280 * P(a[1], 9) - 1820 * P(a[1], 7) * a[2] + 1120 * P(a[1], 6) * a[3] +
                   3960 * P(a[1], 5) * P(a[2], 2) - 620 * P(a[1], 5) * a[4] -
                   4100 * P(a[1], 4) * a[2] * a[3] + 320 * P(a[1], 4) * a[5] -
                   3200 * P(a[1], 3) * P(a[2], 3) + 1840 * P(a[1], 3) * a[2] * a[4] +
                   1040 * P(a[1], 3) * P(a[3], 2) - 160 * P(a[1], 3) * a[6] +
                   3600 * P(a[1], 2) * P(a[2], 2) * a[3] - 720 * P(a[1], 2) * a[2] * a[5] -
                   900 * P(a[1], 2) * a[3] * a[4] + 80 * P(a[1], 2) * a[7] + 700 * a[1] * P(a[2], 4) -
                   1020 * a[1] * P(a[2], 2) * a[4] - 1140 * a[1] * a[2] * P(a[3], 2) +
                   240 * a[1] * a[2] * a[6] + 320 * a[1] * a[3] * a[5] + 180 * a[1] * P(a[4], 2) -
                   40 * a[1] * a[8] - 440 * P(a[2], 3) * a[3] + 180 * P(a[2], 2) * a[5] +
                   440 * a[2] * a[3] * a[4] - 60 * a[2] * a[7] + 80 * P(a[3], 3) - 80 * a[3] * a[6] -
                   100 * a[4] * a[5] + 20 * a[9];
        case 55:
            return -630 * P(a[1], 10) + 4550 * P(a[1], 8) * a[2] - 2800 * P(a[1], 7) * a[3] -
                   11550 * P(a[1], 6) * P(a[2], 2) + 1550 * P(a[1], 6) * a[4] +
                   12300 * P(a[1], 5) * a[2] * a[3] - 800 * P(a[1], 5) * a[5] +
                   12000 * P(a[1], 4) * P(a[2], 3) - 5750 * P(a[1], 4) * a[2] * a[4] -
                   3250 * P(a[1], 4) * P(a[3], 2) + 400 * P(a[1], 4) * a[6] -
                   15000 * P(a[1], 3) * P(a[2], 2) * a[3] + 2400 * P(a[1], 3) * a[2] * a[5] +
                   3000 * P(a[1], 3) * a[3] * a[4] - 200 * P(a[1], 3) * a[7] -
                   4375 * P(a[1], 2) * P(a[2], 4) + 5100 * P(a[1], 2) * P(a[2], 2) * a[4] +
                   5700 * P(a[1], 2) * a[2] * P(a[3], 2) - 900 * P(a[1], 2) * a[2] * a[6] -
                   1200 * P(a[1], 2) * a[3] * a[5] - 675 * P(a[1], 2) * P(a[4], 2) +
                   100 * P(a[1], 2) * a[8] + 4400 * a[1] * P(a[2], 3) * a[3] -
                   1350 * a[1] * P(a[2], 2) * a[5] - 3300 * a[1] * a[2] * a[3] * a[4] +
                   300 * a[1] * a[2] * a[7] - 600 * a[1] * P(a[3], 3) + 400 * a[1] * a[3] * a[6] +
                   500 * a[1] * a[4] * a[5] - 50 * a[1] * a[9] + 25 * a[10] + 255 * P(a[2], 5) -
                   625 * P(a[2], 3) * a[4] - 1050 * P(a[2], 2) * P(a[3], 2) + 225 * P(a[2], 2) * a[6] +
                   600 * a[2] * a[3] * a[5] + 325 * a[2] * P(a[4], 2) - 75 * a[2] * a[8] +
                   350 * P(a[3], 2) * a[4] - 100 * a[3] * a[7] - 125 * a[4] * a[6] - 75 * P(a[5], 2);
        default:
            throw std::invalid_argument("table3_oracle: unsupported index pair");
    }
}

/// Additive correction to the expected trace powers. Nonzero only in the
/// real case at order 2; the real-case term for orders >= 3 is a
/// contour-integral quantity with no closed form and is left unmodeled.
struct MeanCorrection {
    std::array<double, 2> by_order{};  // orders 1, 2
    int beta = 2;
    bool unmodeled_from_order3 = false;

    double at(int order) const {
        return order >= 1 && order <= 2 ? by_order[static_cast<std::size_t>(order) - 1] : 0.0;
    }
};

inline MeanCorrection mean_correction(const std::vector<double>& alpha_sigma,
                                      double c, int beta, int q) {
    MeanCorrection mc;
    mc.beta = beta;
    if (beta == 1) {
        if (alpha_sigma.size() >= 2)
            mc.by_order[1] = alpha_sigma[1] * c;  // (2/beta - 1) alpha_2^Sigma c
        mc.unmodeled_from_order3 = q >= 3;
    }
    return mc;
}

/// Expected trace powers E[Tr S^j] = p alpha_j^S plus the real-case
/// order-2 correction.
inline std::vector<double> mean_vector(const PopulationModel& model,
                                       int p, int n, int q, int beta) {
    if (q < 1)
        throw std::invalid_argument("mean_vector: q must be >= 1");
    const double c = static_cast<double>(p) / n;
    const int J = std::max(q, 2);
    const std::vector<double> alpha_sigma = population_moments(model, J);
    const SampleMoments sm = sample_moments(alpha_sigma, c, J);
    const MeanCorrection mc = mean_correction(alpha_sigma, c, beta, q);
    std::vector<double> out(static_cast<std::size_t>(q));
    for (int j = 1; j <= q; ++j)
        out[j - 1] = p * sm.alpha_s[j - 1] + mc.at(j);
    return out;
}

/// Fluctuation covariance of (Tr S, ..., Tr S^q) for a population model at
/// finite (p, n): population moments -> sample moments at c = p/n -> series
/// engine. Positive definiteness is not enforced here; callers check.
inline FluctuationMatrix q_matrix(const PopulationModel& model,
                                  int p, int n, int q, int beta) {
    const double c = static_cast<double>(p) / n;
    const SampleMoments sm = sample_moments(model, c, 2 * q);
    return second_order_covariances(sm.alpha_stilde, q, beta);
}

}  // namespace eigeninfer

#endif
