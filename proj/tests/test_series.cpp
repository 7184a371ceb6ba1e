#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "eigeninfer/series.hpp"

using namespace eigeninfer;

namespace {
TruncatedSeries make(std::initializer_list<double> cs) {
    TruncatedSeries s(cs.size() - 1);
    std::size_t d = 0;
    for (double c : cs) s[d++] = c;
    return s;
}
}  // namespace

TEST_CASE("series_mul convolves and truncates") {
    // (1+x)(1-x) = 1 - x^2 at cap 2
    const TruncatedSeries a = make({1.0, 1.0, 0.0});
    const TruncatedSeries b = make({1.0, -1.0, 0.0});
    const TruncatedSeries ab = series_mul(a, b);
    CHECK(ab[0] == 1.0);
    CHECK(ab[1] == 0.0);
    CHECK(ab[2] == -1.0);

    // multiplicative identity
    const TruncatedSeries one = make({1.0, 0.0, 0.0});
    const TruncatedSeries a1 = series_mul(a, one);
    for (std::size_t d = 0; d <= 2; ++d) CHECK(a1[d] == a[d]);

    // (1+x+x^2)(1+x) = 1+2x+2x^2 at cap 2
    const TruncatedSeries c = make({1.0, 1.0, 1.0});
    const TruncatedSeries cb = series_mul(c, make({1.0, 1.0, 0.0}));
    CHECK(cb[0] == 1.0);
    CHECK(cb[1] == 2.0);
    CHECK(cb[2] == 2.0);
}

TEST_CASE("series_mul rejects mismatched caps") {
    CHECK_THROWS_AS(series_mul(TruncatedSeries(2), TruncatedSeries(3)),
                    std::invalid_argument);
}

TEST_CASE("series ring laws on random inputs") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        TruncatedSeries a(6), b(6), c(6);
        for (std::size_t d = 0; d <= 6; ++d) {
            a[d] = uni(rng);
            b[d] = uni(rng);
            c[d] = uni(rng);
        }
        const TruncatedSeries ab = series_mul(a, b);
        const TruncatedSeries ba = series_mul(b, a);
        const TruncatedSeries abc1 = series_mul(ab, c);
        const TruncatedSeries abc2 = series_mul(a, series_mul(b, c));
        for (std::size_t d = 0; d <= 6; ++d) {
            CHECK(ab[d] == ba[d]);  // commutativity: exact
            CHECK(abc1[d] == Catch::Approx(abc2[d]).margin(1e-12));
        }
    }
}

TEST_CASE("series_derivative applies the power rule") {
    // x + x^2 -> 1 + 2x
    const TruncatedSeries d1 = series_derivative(make({0.0, 1.0, 1.0}));
    CHECK(d1[0] == 1.0);
    CHECK(d1[1] == 2.0);
    CHECK(d1[2] == 0.0);  // top coefficient lost to truncation

    // constant -> 0
    const TruncatedSeries d2 = series_derivative(make({1.0, 0.0}));
    CHECK(d2[0] == 0.0);
    CHECK(d2[1] == 0.0);

    // x + 2x^2 + 3x^3 -> 1 + 4x + 9x^2
    const TruncatedSeries d3 = series_derivative(make({0.0, 1.0, 2.0, 3.0}));
    CHECK(d3[0] == 1.0);
    CHECK(d3[1] == 4.0);
    CHECK(d3[2] == 9.0);
}

TEST_CASE("series_reciprocal inverts units") {
    // 1/(1+x) = 1 - x + x^2 - x^3
    const TruncatedSeries r1 = series_reciprocal(make({1.0, 1.0, 0.0, 0.0}));
    CHECK(r1[0] == 1.0);
    CHECK(r1[1] == -1.0);
    CHECK(r1[2] == 1.0);
    CHECK(r1[3] == -1.0);

    // 1/1 = 1
    const TruncatedSeries r2 = series_reciprocal(make({1.0, 0.0}));
    CHECK(r2[0] == 1.0);
    CHECK(r2[1] == 0.0);

    // 1/(1+2x+x^2) = 1 - 2x + 3x^2 - 4x^3
    const TruncatedSeries r3 = series_reciprocal(make({1.0, 2.0, 1.0, 0.0}));
    CHECK(r3[0] == 1.0);
    CHECK(r3[1] == -2.0);
    CHECK(r3[2] == 3.0);
    CHECK(r3[3] == -4.0);

    CHECK_THROWS_AS(series_reciprocal(make({0.0, 1.0})), std::domain_error);
}

TEST_CASE("series_reciprocal round trip on random units") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        TruncatedSeries a(8);
        a[0] = 1.0;
        for (std::size_t d = 1; d <= 8; ++d) a[d] = uni(rng);
        const TruncatedSeries prod = series_mul(a, series_reciprocal(a));
        CHECK(prod[0] == Catch::Approx(1.0).margin(1e-12));
        for (std::size_t d = 1; d <= 8; ++d)
            CHECK(prod[d] == Catch::Approx(0.0).margin(1e-12));
    }
}

TEST_CASE("divided_difference closed form") {
    // H = x -> D = 1
    const BivariateSeries d1 = divided_difference(make({0.0, 1.0, 0.0}));
    CHECK(d1.at(0, 0) == 1.0);
    CHECK(d1.at(1, 0) == 0.0);
    CHECK(d1.at(0, 1) == 0.0);

    // H = x + x^2 -> D = 1 + x + y
    const BivariateSeries d2 = divided_difference(make({0.0, 1.0, 1.0}));
    CHECK(d2.at(0, 0) == 1.0);
    CHECK(d2.at(1, 0) == 1.0);
    CHECK(d2.at(0, 1) == 1.0);
    CHECK(d2.at(1, 1) == 0.0);

    // H = x + x^3 -> D = 1 + x^2 + xy + y^2
    const BivariateSeries d3 = divided_difference(make({0.0, 1.0, 0.0, 1.0}));
    CHECK(d3.at(0, 0) == 1.0);
    CHECK(d3.at(2, 0) == 1.0);
    CHECK(d3.at(1, 1) == 1.0);
    CHECK(d3.at(0, 2) == 1.0);
    CHECK(d3.at(1, 0) == 0.0);

    CHECK_THROWS_AS(divided_difference(make({1.0, 1.0})), std::domain_error);
}

TEST_CASE("divided_difference diagonal equals the derivative") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 100; ++trial) {
        TruncatedSeries h(9);
        h[0] = 0.0;
        for (std::size_t d = 1; d <= 9; ++d) h[d] = uni(rng);
        const BivariateSeries dd = divided_difference(h);
        // sum of coefficients on anti-diagonal d equals (d+1) h_{d+1}
        for (std::size_t d = 0; d <= 8; ++d) {
            double acc = 0.0;
            for (std::size_t i = 0; i <= d; ++i) acc += dd.at(i, d - i);
            CHECK(acc == Catch::Approx(static_cast<double>(d + 1) * h[d + 1])
                             .epsilon(1e-13).margin(1e-14));
        }
    }
}

TEST_CASE("bivariate coefficient access and symmetry") {
    const BivariateSeries dd = divided_difference(make({0.0, 1.0, 2.0, 3.0}));
    CHECK(bivariate_coeff(dd, 0, 0) == 1.0);
    CHECK(bivariate_coeff(dd, 1, 1) == 3.0);  // h_{i+j+1} rule
    for (std::size_t i = 0; i <= 3; ++i)
        for (std::size_t j = 0; j <= 3; ++j)
            CHECK(dd.at(i, j) == dd.at(j, i));
    CHECK_THROWS_AS(bivariate_coeff(dd, 4, 0), std::out_of_range);
}

TEST_CASE("bivariate products agree with univariate on the diagonal slices") {
    // A bivariate product of outer products restricted to y-degree 0 equals
    // the univariate product of the x-restrictions.
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 50; ++trial) {
        TruncatedSeries a(5), b(5);
        for (std::size_t d = 0; d <= 5; ++d) {
            a[d] = uni(rng);
            b[d] = uni(rng);
        }
        TruncatedSeries one(5);
        one[0] = 1.0;
        const BivariateSeries bi =
            bivariate_mul(bivariate_outer(a, one), bivariate_outer(b, one));
        const TruncatedSeries uni_prod = series_mul(a, b);
        for (std::size_t d = 0; d <= 5; ++d)
            CHECK(bi.at(d, 0) == Catch::Approx(uni_prod[d]).margin(1e-12));
    }
}

TEST_CASE("bivariate_reciprocal inverts units") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> uni(-0.5, 0.5);
    for (int trial = 0; trial < 25; ++trial) {
        TruncatedSeries h(6);
        h[0] = 0.0;
        h[1] = 1.0;
        for (std::size_t d = 2; d <= 6; ++d) h[d] = uni(rng);
        const BivariateSeries dd = divided_difference(h);
        const BivariateSeries prod = bivariate_mul(dd, bivariate_reciprocal(dd));
        for (std::size_t i = 0; i <= 6; ++i)
            for (std::size_t j = 0; j <= 6; ++j)
                CHECK(prod.at(i, j) ==
                      Catch::Approx(i == 0 && j == 0 ? 1.0 : 0.0).margin(1e-10));
    }
}

TEST_CASE("divide_by_x_minus_y undoes multiplication by (x - y)") {
    std::mt19937_64 rng(6);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    for (int trial = 0; trial < 25; ++trial) {
        BivariateSeries g(7);
        for (std::size_t i = 0; i <= 6; ++i)
            for (std::size_t j = 0; j <= 6; ++j) g.set(i, j, uni(rng));
        // f = (x - y) g
        BivariateSeries f(7);
        for (std::size_t i = 0; i <= 7; ++i)
            for (std::size_t j = 0; j <= 7; ++j) {
                double v = 0.0;
                if (i >= 1 && i - 1 <= 6 && j <= 6) v += g.at(i - 1, j);
                if (j >= 1 && j - 1 <= 6 && i <= 6) v -= g.at(i, j - 1);
                f.set(i, j, v);
            }
        const BivariateSeries back = divide_by_x_minus_y(f);
        // valid region: total degree below the cap that the division loses
        for (std::size_t i = 0; i <= 6; ++i)
            for (std::size_t j = 0; j + i <= 6; ++j)
                CHECK(back.at(i, j) == Catch::Approx(g.at(i, j)).margin(1e-12));
    }
}
