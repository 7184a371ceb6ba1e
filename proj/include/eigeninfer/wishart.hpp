#ifndef EIGENINFER_WISHART_HPP
#define EIGENINFER_WISHART_HPP

#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigeninfer/moments.hpp"

namespace eigeninfer {

enum class Rotation { identity, haar };

/// Configuration of one Monte Carlo draw. The pair (seed, trial index)
/// determines the substream, so parallel runs reproduce exactly.
struct SampleSpec {
    int p = 1;
    int n = 1;
    int beta = 2;  // 1 real, 2 complex
    std::uint64_t seed = 0;
    Rotation rotation = Rotation::identity;

    void validate() const {
        if (p < 1 || n < 1)
            throw std::invalid_argument("SampleSpec: p and n must be >= 1");
        if (beta != 1 && beta != 2)
            throw std::invalid_argument("SampleSpec: beta must be 1 or 2");
    }
};

/// Observed trace powers (and, when available, sample eigenvalues) of one
/// sample covariance matrix.
struct TraceStats {
    int p = 0;
    int n = 0;
    int beta = 2;
    std::vector<double> trace_powers;  // Tr S^j, j = 1..q_max
    std::vector<double> eigenvalues;   // descending; optional

    double trace_power(int j) const {
        if (j < 1 || j > static_cast<int>(trace_powers.size()))
            throw std::out_of_range("TraceStats: order not computed");
        return trace_powers[static_cast<std::size_t>(j) - 1];
    }
};

namespace detail {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

}  // namespace detail

/// Generator for one (seed, stream) substream. Substreams are decorrelated
/// by hashing the pair before seeding.
inline std::mt19937_64 substream_rng(std::uint64_t seed, std::uint64_t stream) {
    return std::mt19937_64(detail::splitmix64(detail::splitmix64(seed) ^ stream));
}

/// Haar-distributed orthogonal (beta = 1) or unitary (beta = 2) matrix via
/// QR of a Gaussian matrix with the R diagonal normalized to positive
/// (resp. unit-modulus) entries.
inline Eigen::MatrixXcd haar_rotation(int p, int beta, std::uint64_t seed) {
    if (p < 1)
        throw std::invalid_argument("haar_rotation: p must be >= 1");
    std::mt19937_64 rng = substream_rng(seed, 0x48616172ULL);  // "Haar"
    std::normal_distribution<double> gauss(0.0, 1.0);
    Eigen::MatrixXcd g(p, p);
    for (int i = 0; i < p; ++i)
        for (int j = 0; j < p; ++j) {
            const double re = gauss(rng);
            g(i, j) = beta == 2 ? std::complex<double>(re, gauss(rng))
                                : std::complex<double>(re, 0.0);
        }
    Eigen::HouseholderQR<Eigen::MatrixXcd> qr(g);
    Eigen::MatrixXcd Q = qr.householderQ();
    const Eigen::MatrixXcd R = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < p; ++j) {
        const std::complex<double> d = R(j, j);
        const double m = std::abs(d);
        Q.col(j) *= (m > 0.0) ? d / m : std::complex<double>(1.0, 0.0);
    }
    return Q;
}

/// Draws the p x n data matrix X with N_p(0, Sigma_theta) columns; the
/// complex case takes independent real and imaginary parts each with
/// covariance Sigma/2. Sigma^{1/2} = U Lambda^{1/2} U' from the block
/// structure, with U chosen by the rotation policy.
inline Eigen::MatrixXcd sample_data(const PopulationModel& model, const SampleSpec& spec) {
    spec.validate();
    const int p = spec.p, n = spec.n;

    std::vector<double> sqrt_eigs(static_cast<std::size_t>(p));
    {
        int idx = 0;
        double acc = 0.0;
        for (const auto& b : model.blocks()) {
            acc += b.mass;
            const int upto = std::min(p, static_cast<int>(std::lround(acc * p)));
            for (; idx < upto; ++idx) sqrt_eigs[idx] = std::sqrt(b.eigenvalue);
        }
        for (; idx < p; ++idx) sqrt_eigs[idx] = std::sqrt(model.blocks().back().eigenvalue);
    }

    std::mt19937_64 rng = substream_rng(spec.seed, 0x64617461ULL);  // "data"
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double scale = spec.beta == 2 ? std::sqrt(0.5) : 1.0;
    Eigen::MatrixXcd X(p, n);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < p; ++i) {
            const double re = gauss(rng);
            const double im = spec.beta == 2 ? gauss(rng) : 0.0;
            X(i, j) = std::complex<double>(re * scale, im * scale) * sqrt_eigs[i];
        }
    if (spec.rotation == Rotation::haar) {
        const Eigen::MatrixXcd U = haar_rotation(p, spec.beta, spec.seed ^ 0x5a5a5a5aULL);
        X = U * X;
    }
    return X;
}

/// S = (1/n) X X', Hermitian by construction.
inline Eigen::MatrixXcd scm_from_data(const Eigen::MatrixXcd& X) {
    const int n = static_cast<int>(X.cols());
    Eigen::MatrixXcd S = (X * X.adjoint()) / static_cast<double>(n);
    return (S + S.adjoint()) / 2.0;
}

inline Eigen::MatrixXcd sample_scm(const PopulationModel& model, const SampleSpec& spec) {
    return scm_from_data(sample_data(model, spec));
}

/// Test sample covariance matrix from the first ceil(n/2) columns.
/// Downstream moment computations must use the aspect ratio p / ceil(n/2).
inline Eigen::MatrixXcd split_scm(const Eigen::MatrixXcd& X, int n) {
    if (n < 1)
        throw std::invalid_argument("split_scm: no samples");
    if (n > static_cast<int>(X.cols()))
        throw std::invalid_argument("split_scm: n exceeds column count");
    const int half = (n + 1) / 2;
    return scm_from_data(X.leftCols(half));
}

inline int split_sample_count(int n) { return (n + 1) / 2; }

/// Trace powers through the eigenvalues of a Hermitian matrix; the
/// eigenvalues are kept (descending) for eigenvalue-based baselines.
inline TraceStats trace_powers(const Eigen::MatrixXcd& S, int q_max, int n_samples, int beta) {
    const int p = static_cast<int>(S.rows());
    if (S.cols() != p)
        throw std::invalid_argument("trace_powers: matrix not square");
    const double scale = std::max(1.0, S.cwiseAbs().maxCoeff());
    if ((S - S.adjoint()).cwiseAbs().maxCoeff() > 1e-8 * scale)
        throw std::invalid_argument("trace_powers: matrix not Hermitian");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(S, Eigen::EigenvaluesOnly);
    TraceStats st;
    st.p = p;
    st.n = n_samples;
    st.beta = beta;
    st.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + p);
    std::sort(st.eigenvalues.begin(), st.eigenvalues.end(), std::greater<double>());
    st.trace_powers.assign(static_cast<std::size_t>(q_max), 0.0);
    for (double lam : st.eigenvalues) {
        double pw = 1.0;
        for (int j = 1; j <= q_max; ++j) {
            pw *= lam;
            st.trace_powers[static_cast<std::size_t>(j) - 1] += pw;
        }
    }
    return st;
}

/// One Monte Carlo draw of TraceStats. When n < p the eigenvalues come from
/// the n x n Gram matrix X'X/n, whose nonzero spectrum matches S, padded
/// with the p - n structural zeros.
inline TraceStats sample_trace_stats(const PopulationModel& model,
                                     const SampleSpec& spec, int q_max) {
    const Eigen::MatrixXcd X = sample_data(model, spec);
    if (spec.n < spec.p) {
        Eigen::MatrixXcd G = (X.adjoint() * X) / static_cast<double>(spec.n);
        G = (G + G.adjoint()) / 2.0;
        TraceStats st = trace_powers(G, q_max, spec.n, spec.beta);
        st.p = spec.p;
        st.eigenvalues.resize(static_cast<std::size_t>(spec.p), 0.0);
        return st;
    }
    return trace_powers(scm_from_data(X), q_max, spec.n, spec.beta);
}

/// CSV row: trial, p, n, beta, seed, Tr S^1..Tr S^q with 17 significant digits.
inline std::string trace_stats_csv_row(int trial, std::uint64_t seed, const TraceStats& st) {
    std::string row = std::to_string(trial) + "," + std::to_string(st.p) + "," +
                      std::to_string(st.n) + "," + std::to_string(st.beta) + "," +
                      std::to_string(seed);
    char buf[64];
    for (double t : st.trace_powers) {
        std::snprintf(buf, sizeof(buf), ",%.17g", t);
        row += buf;
    }
    return row;
}

}  // namespace eigeninfer

#endif
