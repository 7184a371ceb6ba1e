#ifndef EIGENINFER_MOMENTS_HPP
#define EIGENINFER_MOMENTS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace eigeninfer {

/// One block of a staircase population spectrum: an eigenvalue magnitude
/// together with the fraction of the dimension it occupies.
struct SpectrumBlock {
    double eigenvalue;
    double mass;
};

/// Block-structured population spectrum with eigenvalues a_1 > ... > a_k > 0
/// and masses summing to one.
class PopulationModel {
public:
    explicit PopulationModel(std::vector<SpectrumBlock> blocks)
        : blocks_(std::move(blocks)) {
        if (blocks_.empty())
            throw std::invalid_argument("PopulationModel: no blocks");
        double mass = 0.0;
        for (std::size_t i = 0; i < blocks_.size(); ++i) {
            const auto& b = blocks_[i];
            if (!(b.eigenvalue > 0.0))
                throw std::invalid_argument("PopulationModel: eigenvalues must be positive");
            if (!(b.mass > 0.0 && b.mass <= 1.0))
                throw std::invalid_argument("PopulationModel: masses must lie in (0, 1]");
            if (i > 0 && !(blocks_[i - 1].eigenvalue > b.eigenvalue))
                throw std::invalid_argument("PopulationModel: eigenvalues must be strictly decreasing");
            mass += b.mass;
        }
        if (std::abs(mass - 1.0) > 1e-12)
            throw std::invalid_argument("PopulationModel: masses must sum to 1");
    }

    const std::vector<SpectrumBlock>& blocks() const { return blocks_; }
    std::size_t block_count() const { return blocks_.size(); }

    static PopulationModel identity() { return PopulationModel({{1.0, 1.0}}); }

private:
    std::vector<SpectrumBlock> blocks_;
};

/// Nonnegative integer sequence (i_1, ..., i_j) with sum_k k*i_k = j.
/// Each sequence indexes the noncrossing partitions of j with i_k blocks
/// of size k.
using PartitionSequence = std::vector<int>;

namespace detail {
inline void enumerate_rec(int remaining, int k, int j,
                          PartitionSequence& cur,
                          std::vector<PartitionSequence>& out) {
    if (k > j) {
        if (remaining == 0) out.push_back(cur);
        return;
    }
    for (int m = 0; m * k <= remaining; ++m) {
        cur[k - 1] = m;
        enumerate_rec(remaining - m * k, k + 1, j, cur, out);
    }
    cur[k - 1] = 0;
}
}  // namespace detail

/// All length-j nonnegative sequences with sum_k k*i_k = j, each once.
/// Their count is the number of integer partitions of j.
inline std::vector<PartitionSequence> enumerate_sequences(int j) {
    if (j < 1)
        throw std::invalid_argument("enumerate_sequences: j must be >= 1");
    std::vector<PartitionSequence> out;
    PartitionSequence cur(static_cast<std::size_t>(j), 0);
    detail::enumerate_rec(j, 1, j, cur, out);
    return out;
}

/// Multinomial weight j! / (i_1! ... i_j! (j+1 - sum i_k)!), the number of
/// noncrossing partitions of j with the given block-size profile.
/// Supported for j <= 30; 128-bit intermediates keep the arithmetic exact.
inline std::uint64_t multinomial_gamma(const PartitionSequence& s) {
    const int j = static_cast<int>(s.size());
    if (j < 1 || j > 30)
        throw std::overflow_error("multinomial_gamma: order outside supported range 1..30");
    int total_blocks = 0;
    int weighted = 0;
    for (int k = 1; k <= j; ++k) {
        if (s[k - 1] < 0)
            throw std::invalid_argument("multinomial_gamma: negative entry");
        total_blocks += s[k - 1];
        weighted += k * s[k - 1];
    }
    if (weighted != j)
        throw std::invalid_argument("multinomial_gamma: sequence does not sum to its order");
    auto fact = [](int m) {
        unsigned __int128 f = 1;
        for (int i = 2; i <= m; ++i) f *= static_cast<unsigned>(i);
        return f;
    };
    unsigned __int128 num = fact(j);
    unsigned __int128 den = fact(j + 1 - total_blocks);
    for (int k = 1; k <= j; ++k) den *= fact(s[k - 1]);
    const unsigned __int128 q = num / den;
    if (q > static_cast<unsigned __int128>(UINT64_MAX))
        throw std::overflow_error("multinomial_gamma: result exceeds 64 bits");
    return static_cast<std::uint64_t>(q);
}

/// Mass-weighted power sums alpha_j = sum_i t_i a_i^j for j = 1..J.
inline std::vector<double> population_moments(const PopulationModel& model, int J) {
    std::vector<double> out(static_cast<std::size_t>(J));
    for (int j = 1; j <= J; ++j) {
        double acc = 0.0;
        for (const auto& b : model.blocks())
            acc += b.mass * std::pow(b.eigenvalue, j);
        out[j - 1] = acc;
    }
    return out;
}

/// Limiting moments of the sample covariance matrix and of its companion
/// S~ = X'X/n, computed from the population moments and the aspect ratio.
struct SampleMoments {
    double c;
    std::vector<double> alpha_stilde;  // alpha_j of S~, j = 1..J
    std::vector<double> alpha_s;       // alpha_j of S,  j = 1..J
};

/// Noncrossing-partition moment map: each order-j moment of S~ is a sum over
/// the partition sequences of j, weighted by the multinomial count, with one
/// factor of c per block and one population moment per block size.
inline SampleMoments sample_moments(const std::vector<double>& alpha_sigma, double c, int J) {
    if (static_cast<int>(alpha_sigma.size()) < J)
        throw std::invalid_argument("sample_moments: alpha_sigma too short");
    if (!(c > 0.0))
        throw std::invalid_argument("sample_moments: aspect ratio must be positive");
    SampleMoments out;
    out.c = c;
    out.alpha_stilde.resize(static_cast<std::size_t>(J));
    out.alpha_s.resize(static_cast<std::size_t>(J));
    for (int j = 1; j <= J; ++j) {
        double acc = 0.0;
        for (const auto& seq : enumerate_sequences(j)) {
            int blocks = 0;
            double term = static_cast<double>(multinomial_gamma(seq));
            for (int k = 1; k <= j; ++k) {
                const int ik = seq[k - 1];
                if (ik == 0) continue;
                blocks += ik;
                term *= std::pow(alpha_sigma[k - 1], ik);
            }
            acc += term * std::pow(c, blocks);
        }
        out.alpha_stilde[j - 1] = acc;
        out.alpha_s[j - 1] = acc / c;
    }
    return out;
}

inline SampleMoments sample_moments(const PopulationModel& model, double c, int J) {
    return sample_moments(population_moments(model, J), c, J);
}

/// Moments of the null Wishart distribution with noise level lambda:
/// alpha_k = lambda^k sum_j c^j N(k, j) with Narayana weights
/// N(k, j) = C(k, j) C(k-1, j) / (j + 1).
inline std::vector<double> null_wishart_moments(double lambda, double c, int K) {
    if (!(lambda > 0.0) || !(c > 0.0))
        throw std::invalid_argument("null_wishart_moments: lambda and c must be positive");
    std::vector<double> out(static_cast<std::size_t>(K));
    for (int k = 1; k <= K; ++k) {
        double acc = 0.0;
        for (int j = 0; j <= k - 1; ++j) {
            double binom1 = 1.0, binom2 = 1.0;
            for (int r = 1; r <= j; ++r) {
                binom1 *= static_cast<double>(k - r + 1) / r;
                binom2 *= static_cast<double>(k - r) / r;
            }
            acc += std::pow(c, j) * binom1 * binom2 / (j + 1);
        }
        out[k - 1] = std::pow(lambda, k) * acc;
    }
    return out;
}

/// Sample moments of a single spike of magnitude a in a unit bulk, with the
/// finite-p plug-in t = count/p. With a = 1 this degenerates to the null
/// Wishart moments at lambda = 1.
inline std::vector<double> spike_moments(double a, int p, double c, int J, int count = 1) {
    if (p < 2)
        throw std::invalid_argument("spike_moments: p must be >= 2");
    if (!(a > 0.0))
        throw std::invalid_argument("spike_moments: spike must be positive");
    if (count < 1 || count >= p)
        throw std::invalid_argument("spike_moments: invalid spike count");
    if (a == 1.0)
        return null_wishart_moments(1.0, c, J);
    const double t = static_cast<double>(count) / p;
    std::vector<SpectrumBlock> blocks;
    if (a > 1.0)
        blocks = {{a, t}, {1.0, 1.0 - t}};
    else
        blocks = {{1.0, 1.0 - t}, {a, t}};
    return sample_moments(PopulationModel(std::move(blocks)), c, J).alpha_s;
}

}  // namespace eigeninfer

#endif
