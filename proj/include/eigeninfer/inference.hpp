#ifndef EIGENINFER_INFERENCE_HPP
#define EIGENINFER_INFERENCE_HPP

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "eigeninfer/fluctuation.hpp"
#include "eigeninfer/moments.hpp"
#include "eigeninfer/nelder_mead.hpp"
#include "eigeninfer/special.hpp"
#include "eigeninfer/wishart.hpp"

namespace eigeninfer {

/// Parameter vector (t_1..t_k, a_1..a_k) with per-entry free/fixed flags.
/// t_k is derived (masses sum to one) and never free.
struct ThetaVector {
    std::vector<double> masses;       // t_1..t_k
    std::vector<double> eigenvalues;  // a_1..a_k, descending
    std::vector<bool> mass_free;      // size k; last entry must be false
    std::vector<bool> eig_free;       // size k

    int k() const { return static_cast<int>(eigenvalues.size()); }

    int free_dim() const {
        const auto cnt = [](const std::vector<bool>& v) {
            return static_cast<int>(std::count(v.begin(), v.end(), true));
        };
        return cnt(mass_free) + cnt(eig_free);
    }

    bool smallest_eigenvalue_free() const { return eig_free.back(); }

    PopulationModel to_model() const {
        std::vector<SpectrumBlock> blocks;
        blocks.reserve(masses.size());
        for (std::size_t i = 0; i < masses.size(); ++i)
            blocks.push_back({eigenvalues[i], masses[i]});
        return PopulationModel(std::move(blocks));
    }

    void validate() const {
        if (masses.size() != eigenvalues.size() || mass_free.size() != masses.size() ||
            eig_free.size() != masses.size())
            throw std::invalid_argument("ThetaVector: inconsistent field sizes");
        if (mass_free.back())
            throw std::invalid_argument("ThetaVector: derived mass t_k cannot be free");
        to_model();  // reuse the model invariants
    }

    /// All parameters free, masses and eigenvalues supplied as starting values.
    static ThetaVector canonical(std::vector<double> eigs, std::vector<double> ts) {
        ThetaVector th;
        th.eigenvalues = std::move(eigs);
        th.masses = std::move(ts);
        th.eig_free.assign(th.eigenvalues.size(), true);
        th.mass_free.assign(th.masses.size(), true);
        th.mass_free.back() = false;
        th.validate();
        return th;
    }
};

/// Free parameters to an unconstrained vector: log for eigenvalues,
/// additive log-ratio against the derived mass t_k for the simplex part.
inline Eigen::VectorXd encode_theta(const ThetaVector& th) {
    std::vector<double> z;
    const double tk = th.masses.back();
    for (std::size_t i = 0; i + 1 < th.masses.size(); ++i)
        if (th.mass_free[i]) z.push_back(std::log(th.masses[i] / tk));
    for (std::size_t i = 0; i < th.eigenvalues.size(); ++i)
        if (th.eig_free[i]) z.push_back(std::log(th.eigenvalues[i]));
    return Eigen::Map<Eigen::VectorXd>(z.data(), static_cast<Eigen::Index>(z.size()));
}

/// Inverse of encode_theta over the template's free slots. Blocks are
/// re-sorted by eigenvalue so the a_1 > ... > a_k ordering always holds.
inline ThetaVector decode_theta(const ThetaVector& tpl, const Eigen::VectorXd& z) {
    if (z.size() != tpl.free_dim())
        throw std::invalid_argument("decode_theta: wrong parameter count");
    ThetaVector th = tpl;
    Eigen::Index pos = 0;

    double fixed_mass = 0.0, ratio_sum = 1.0;
    std::vector<double> ratios(th.masses.size() - 1, -1.0);
    for (std::size_t i = 0; i + 1 < th.masses.size(); ++i) {
        if (th.mass_free[i]) {
            ratios[i] = std::exp(z(pos++));
            ratio_sum += ratios[i];
        } else {
            fixed_mass += th.masses[i];
        }
    }
    const double tk = (1.0 - fixed_mass) / ratio_sum;
    for (std::size_t i = 0; i + 1 < th.masses.size(); ++i)
        if (th.mass_free[i]) th.masses[i] = ratios[i] * tk;
    th.masses.back() = tk;

    for (std::size_t i = 0; i < th.eigenvalues.size(); ++i)
        if (th.eig_free[i]) th.eigenvalues[i] = std::exp(z(pos++));

    std::vector<std::size_t> order(th.eigenvalues.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return th.eigenvalues[a] > th.eigenvalues[b];
    });
    ThetaVector sorted = th;
    for (std::size_t i = 0; i < order.size(); ++i) {
        sorted.eigenvalues[i] = th.eigenvalues[order[i]];
        sorted.masses[i] = th.masses[order[i]];
        sorted.eig_free[i] = th.eig_free[order[i]];
    }
    sorted.to_model();  // enforce invariants
    return sorted;
}

struct TestReport {
    std::string kind;
    double statistic = 0.0;
    int dof = 0;
    double p_value = 1.0;
    double threshold = 0.0;
    bool reject = false;
    std::vector<std::string> notes;
};

struct EstimateReport {
    ThetaVector theta_hat;
    double objective = 0.0;
    int restarts = 0;
    int iterations = 0;
    bool converged = false;
    int q = 0;
    std::vector<std::string> notes;
};

/// Fluctuation vector v_j = Tr S^j - E[Tr S^j] for j = 1..q, with the
/// real-case order-2 mean correction folded into the expectation.
inline Eigen::VectorXd build_v(const ThetaVector& theta, const TraceStats& stats, int q) {
    if (static_cast<int>(stats.trace_powers.size()) < q)
        throw std::invalid_argument("build_v: stats do not provide orders 1..q");
    const std::vector<double> mean =
        mean_vector(theta.to_model(), stats.p, stats.n, q, stats.beta);
    Eigen::VectorXd v(q);
    for (int j = 1; j <= q; ++j) v(j - 1) = stats.trace_power(j) - mean[j - 1];
    return v;
}

namespace detail {

struct CholeskyForm {
    double quad;    // v' Q^{-1} v
    double logdet;  // log det Q
};

inline CholeskyForm solve_quadratic_form(const Eigen::MatrixXd& Q, const Eigen::VectorXd& v) {
    Eigen::LLT<Eigen::MatrixXd> llt(Q);
    if (llt.info() != Eigen::Success)
        throw NotPositiveDefiniteError(
            "covariance matrix is not positive definite; try a smaller q");
    CholeskyForm out;
    out.quad = v.dot(llt.solve(v));
    out.logdet = 0.0;
    for (Eigen::Index i = 0; i < Q.rows(); ++i)
        out.logdet += 2.0 * std::log(llt.matrixL()(i, i));
    return out;
}

inline TestReport make_chi2_report(std::string kind, double h, int dof, double level) {
    TestReport rep;
    rep.kind = std::move(kind);
    rep.statistic = h;
    rep.dof = dof;
    rep.threshold = chi_square_quantile(level, dof);
    rep.p_value = 1.0 - chi_square_cdf(h, dof);
    rep.reject = h > rep.threshold;
    return rep;
}

}  // namespace detail

/// Chi-square test of theta = theta0 from trace powers; the quadratic form
/// goes through a Cholesky solve, never an explicit inverse.
inline TestReport test_statistic(const ThetaVector& theta0, const TraceStats& stats,
                                 int q, double level = 0.95) {
    const Eigen::VectorXd v = build_v(theta0, stats, q);
    const FluctuationMatrix Q =
        q_matrix(theta0.to_model(), stats.p, stats.n, q, stats.beta);
    const double h = detail::solve_quadratic_form(Q.entries, v).quad;
    TestReport rep = detail::make_chi2_report("block-hypothesis", h, q, level);
    if (stats.beta == 1 && q >= 3)
        rep.notes.push_back("real-case mean correction unmodeled for orders >= 3");
    return rep;
}

struct EstimateOptions {
    int restarts = 8;
    std::uint64_t seed = 0;
    double perturb_scale = 0.35;
    NelderMeadOptions nm{};
};

namespace detail {

constexpr double kInfeasible = std::numeric_limits<double>::infinity();

/// k-means on sample eigenvalues; returns (centroids desc, fractions).
inline bool kmeans_eigs(const std::vector<double>& eigs, int k,
                        std::vector<double>& centers, std::vector<double>& fractions) {
    const int m = static_cast<int>(eigs.size());
    if (m < k || k < 1) return false;
    centers.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        // quantile-spread initialization on the sorted (descending) input
        const int idx = static_cast<int>((j + 0.5) * m / k);
        centers[static_cast<std::size_t>(j)] = eigs[static_cast<std::size_t>(std::min(idx, m - 1))];
    }
    std::vector<int> assign(static_cast<std::size_t>(m), 0);
    for (int it = 0; it < 100; ++it) {
        bool changed = false;
        for (int i = 0; i < m; ++i) {
            int best = 0;
            double bd = std::abs(eigs[static_cast<std::size_t>(i)] - centers[0]);
            for (int j = 1; j < k; ++j) {
                const double d = std::abs(eigs[static_cast<std::size_t>(i)] -
                                          centers[static_cast<std::size_t>(j)]);
                if (d < bd) { bd = d; best = j; }
            }
            if (assign[static_cast<std::size_t>(i)] != best) {
                assign[static_cast<std::size_t>(i)] = best;
                changed = true;
            }
        }
        std::vector<double> sum(static_cast<std::size_t>(k), 0.0);
        std::vector<int> cnt(static_cast<std::size_t>(k), 0);
        for (int i = 0; i < m; ++i) {
            sum[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] +=
                eigs[static_cast<std::size_t>(i)];
            cnt[static_cast<std::size_t>(assign[static_cast<std::size_t>(i)])] += 1;
        }
        for (int j = 0; j < k; ++j)
            if (cnt[static_cast<std::size_t>(j)] > 0)
                centers[static_cast<std::size_t>(j)] =
                    sum[static_cast<std::size_t>(j)] / cnt[static_cast<std::size_t>(j)];
        if (!changed) break;
    }
    std::vector<int> cnt(static_cast<std::size_t>(k), 0);
    for (int a : assign) cnt[static_cast<std::size_t>(a)] += 1;
    fractions.resize(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) {
        if (cnt[static_cast<std::size_t>(j)] == 0) return false;
        fractions[static_cast<std::size_t>(j)] =
            static_cast<double>(cnt[static_cast<std::size_t>(j)]) / m;
    }
    std::vector<std::size_t> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return centers[a] > centers[b];
    });
    std::vector<double> c2(centers.size()), f2(fractions.size());
    for (std::size_t j = 0; j < order.size(); ++j) {
        c2[j] = std::max(centers[order[j]], 1e-3);
        f2[j] = fractions[order[j]];
    }
    centers = c2;
    fractions = f2;
    return true;
}

}  // namespace detail

/// Maximum-likelihood parameter estimation: minimizes
/// v' Q^{-1} v + log det Q over the free parameters, via multi-start
/// Nelder-Mead in the unconstrained reparameterization. Deterministic
/// given the options seed.
inline EstimateReport estimate(const TraceStats& stats, const ThetaVector& tpl, int q,
                               const EstimateOptions& opt = {}) {
    tpl.validate();
    const int d = tpl.free_dim();
    const int q_min = d + (tpl.smallest_eigenvalue_free() ? 1 : 0);
    if (q < q_min)
        throw std::invalid_argument("estimate: q too small for the free parameter count");
    if (static_cast<int>(stats.trace_powers.size()) < q)
        throw std::invalid_argument("estimate: stats do not provide orders 1..q");
    const double c = static_cast<double>(stats.p) / stats.n;

    auto objective = [&](const Eigen::VectorXd& z) -> double {
        try {
            const ThetaVector th = decode_theta(tpl, z);
            const PopulationModel model = th.to_model();
            const std::vector<double> as = population_moments(model, 2 * q);
            const SampleMoments sm = sample_moments(as, c, 2 * q);
            const MeanCorrection mc = mean_correction(as, c, stats.beta, q);
            Eigen::VectorXd v(q);
            for (int j = 1; j <= q; ++j)
                v(j - 1) = stats.trace_power(j) - (stats.p * sm.alpha_s[j - 1] + mc.at(j));
            const FluctuationMatrix Q =
                second_order_covariances(sm.alpha_stilde, q, stats.beta);
            const auto form = detail::solve_quadratic_form(Q.entries, v);
            const double obj = form.quad + form.logdet;
            return std::isfinite(obj) ? obj : detail::kInfeasible;
        } catch (const std::exception&) {
            return detail::kInfeasible;
        }
    };

    std::vector<Eigen::VectorXd> starts;
    starts.push_back(encode_theta(tpl));
    if (static_cast<int>(stats.eigenvalues.size()) >= tpl.k()) {
        std::vector<double> centers, fractions;
        if (detail::kmeans_eigs(stats.eigenvalues, tpl.k(), centers, fractions)) {
            ThetaVector km = tpl;
            for (std::size_t i = 0; i < km.eigenvalues.size(); ++i)
                if (km.eig_free[i]) km.eigenvalues[i] = centers[i];
            double fixed = 0.0, freed = 0.0;
            for (std::size_t i = 0; i + 1 < km.masses.size(); ++i)
                (km.mass_free[i] ? freed : fixed) += fractions[i];
            const double budget = 1.0 - fixed;
            double tail = fractions.back();
            for (std::size_t i = 0; i + 1 < km.masses.size(); ++i)
                if (km.mass_free[i])
                    km.masses[i] = std::max(1e-6, fractions[i] * budget / (freed + tail));
            double acc = 0.0;
            for (std::size_t i = 0; i + 1 < km.masses.size(); ++i) acc += km.masses[i];
            km.masses.back() = 1.0 - acc;
            if (km.masses.back() > 0.0) {
                try {
                    km.validate();
                    starts.push_back(encode_theta(km));
                } catch (const std::exception&) {
                }
            }
        }
    }
    std::mt19937_64 rng = substream_rng(opt.seed, 0x6573743030ULL);
    std::normal_distribution<double> gauss(0.0, opt.perturb_scale);
    while (static_cast<int>(starts.size()) < std::max(1, opt.restarts)) {
        Eigen::VectorXd z = starts.front();
        for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += gauss(rng);
        starts.push_back(z);
    }

    EstimateReport rep;
    rep.q = q;
    rep.restarts = static_cast<int>(starts.size());
    double best = detail::kInfeasible;
    Eigen::VectorXd best_z;
    for (const auto& z0 : starts) {
        const NelderMeadResult r = nelder_mead(objective, z0, opt.nm);
        rep.iterations += r.iterations;
        if (r.fx < best) {
            best = r.fx;
            best_z = r.x;
            rep.converged = r.converged;
        }
    }
    if (!std::isfinite(best))
        throw NotPositiveDefiniteError("estimate: no feasible point found in any start");
    rep.theta_hat = decode_theta(tpl, best_z);
    rep.objective = best;
    if (stats.beta == 1 && q >= 3)
        rep.notes.push_back("real-case mean correction unmodeled for orders >= 3");
    return rep;
}

/// Estimates on the full sample covariance matrix, then tests the estimate
/// on the held-out split SCM with the aspect ratio recomputed at
/// c = p / ceil(n/2).
inline std::pair<EstimateReport, TestReport> estimate_then_test(
    const Eigen::MatrixXcd& X, int n, int beta, const ThetaVector& tpl,
    int q_est, int q_test, const EstimateOptions& opt = {}) {
    if (n < 2)
        throw std::invalid_argument("estimate_then_test: need n >= 2");
    const TraceStats full =
        trace_powers(scm_from_data(X.leftCols(n)), std::max(q_est, q_test), n, beta);
    EstimateReport est = estimate(full, tpl, q_est, opt);
    const TraceStats half =
        trace_powers(split_scm(X, n), q_test, split_sample_count(n), beta);
    TestReport test = test_statistic(est.theta_hat, half, q_test);
    return {std::move(est), std::move(test)};
}

struct OrderSelection {
    int k_hat = 0;
    EstimateReport estimate;
    std::vector<double> criteria;  // AIC value per k = 1..k_max (inf if failed)
};

/// Model-order selection by minimum AIC: for each k the parameters are
/// estimated from the full SCM with q = 2k, and the criterion
/// u' W^{-1} u + log det W + 2 dim(theta) is evaluated on the split SCM.
/// Ties break toward smaller k.
inline OrderSelection select_order(const Eigen::MatrixXcd& X, int n, int beta, int k_max,
                                   const EstimateOptions& opt = {}) {
    if (k_max < 1)
        throw std::invalid_argument("select_order: k_max must be >= 1");
    const int q_top = 2 * k_max;
    const TraceStats full = trace_powers(scm_from_data(X.leftCols(n)), q_top, n, beta);
    const TraceStats half =
        trace_powers(split_scm(X, n), q_top, split_sample_count(n), beta);

    OrderSelection sel;
    sel.criteria.assign(static_cast<std::size_t>(k_max), detail::kInfeasible);
    double best = detail::kInfeasible;
    std::vector<EstimateReport> reports(static_cast<std::size_t>(k_max));
    for (int k = 1; k <= k_max; ++k) {
        try {
            std::vector<double> centers, fractions;
            if (!detail::kmeans_eigs(full.eigenvalues, k, centers, fractions)) continue;
            const ThetaVector tpl = ThetaVector::canonical(centers, fractions);
            EstimateReport est = estimate(full, tpl, 2 * k, opt);
            const Eigen::VectorXd u = build_v(est.theta_hat, half, 2 * k);
            const FluctuationMatrix W =
                q_matrix(est.theta_hat.to_model(), half.p, half.n, 2 * k, beta);
            const auto form = detail::solve_quadratic_form(W.entries, u);
            const double crit = form.quad + form.logdet + 2.0 * (2 * k - 1);
            sel.criteria[static_cast<std::size_t>(k) - 1] = crit;
            reports[static_cast<std::size_t>(k) - 1] = std::move(est);
            if (crit < best) {
                best = crit;
                sel.k_hat = k;
            }
        } catch (const std::exception&) {
        }
    }
    if (sel.k_hat == 0)
        throw NotPositiveDefiniteError("select_order: no model order produced a usable fit");
    sel.estimate = std::move(reports[static_cast<std::size_t>(sel.k_hat) - 1]);
    return sel;
}

/// Spiked-model estimation: the weighting matrix is built from the null
/// Wishart moments at the bulk level only, and the fluctuation vector from
/// the finite-p spike moments with t = count/p. Minimizes v' Q^{-1} v
/// (no log-det term; Q is treated as spike-independent).
inline EstimateReport spiked_estimate(const TraceStats& stats,
                                      std::optional<double> lambda_known,
                                      int spike_count = 1,
                                      const EstimateOptions& opt = {}) {
    const int p = stats.p;
    if (spike_count < 1 || spike_count >= p)
        throw std::invalid_argument("spiked_estimate: invalid spike count");
    const double c = static_cast<double>(p) / stats.n;
    const int dim = lambda_known ? 1 : 2;
    const int q = dim + 1;
    if (static_cast<int>(stats.trace_powers.size()) < q)
        throw std::invalid_argument("spiked_estimate: stats do not provide orders 1..q");

    auto objective = [&](const Eigen::VectorXd& z) -> double {
        try {
            const double a = std::exp(z(0));
            const double lam = lambda_known ? *lambda_known : std::exp(z(1));
            const std::vector<double> null_m = null_wishart_moments(lam, c, 2 * q);
            std::vector<double> null_stilde(null_m.size());
            for (std::size_t j = 0; j < null_m.size(); ++j) null_stilde[j] = c * null_m[j];
            const FluctuationMatrix Q =
                second_order_covariances(null_stilde, q, stats.beta);
            // spike moments at bulk level lam: rescale the unit-bulk model
            const std::vector<double> unit = spike_moments(a / lam, p, c, q, spike_count);
            const double t = static_cast<double>(spike_count) / p;
            const double as2 =
                t * (a / lam) * (a / lam) + (1.0 - t);  // alpha_2^Sigma of unit-bulk model
            Eigen::VectorXd v(q);
            double lampow = 1.0;
            for (int j = 1; j <= q; ++j) {
                lampow *= lam;
                double mean = p * lampow * unit[static_cast<std::size_t>(j) - 1];
                if (stats.beta == 1 && j == 2) mean += lam * lam * as2 * c;
                v(j - 1) = stats.trace_power(j) - mean;
            }
            const double h = detail::solve_quadratic_form(Q.entries, v).quad;
            return std::isfinite(h) ? h : detail::kInfeasible;
        } catch (const std::exception&) {
            return detail::kInfeasible;
        }
    };

    const double lam0 = lambda_known ? *lambda_known : 1.0;
    // moment-matched start: Tr S ~ (p - count) lambda + count a
    const double a0 = std::max(
        (stats.trace_power(1) - (p - spike_count) * lam0) / spike_count, lam0 * 1.05);
    Eigen::VectorXd z0(dim);
    z0(0) = std::log(a0);
    if (!lambda_known) z0(1) = std::log(lam0);

    std::mt19937_64 rng = substream_rng(opt.seed, 0x73706b65ULL);
    std::normal_distribution<double> gauss(0.0, opt.perturb_scale);
    EstimateReport rep;
    rep.q = q;
    double best = detail::kInfeasible;
    Eigen::VectorXd best_z = z0;
    for (int s = 0; s < std::max(1, opt.restarts); ++s) {
        Eigen::VectorXd z = z0;
        if (s > 0)
            for (Eigen::Index i = 0; i < z.size(); ++i) z(i) += gauss(rng);
        const NelderMeadResult r = nelder_mead(objective, z, opt.nm);
        rep.iterations += r.iterations;
        ++rep.restarts;
        if (r.fx < best) {
            best = r.fx;
            best_z = r.x;
            rep.converged = r.converged;
        }
    }
    if (!std::isfinite(best))
        throw NotPositiveDefiniteError("spiked_estimate: no feasible point found");
    const double a_hat = std::exp(best_z(0));
    const double lam_hat = lambda_known ? *lambda_known : std::exp(best_z(1));
    const double t = static_cast<double>(spike_count) / p;
    ThetaVector th;
    th.eigenvalues = {a_hat, lam_hat};
    th.masses = {t, 1.0 - t};
    th.eig_free = {true, !lambda_known.has_value()};
    th.mass_free = {false, false};
    if (a_hat < lam_hat) {
        std::swap(th.eigenvalues[0], th.eigenvalues[1]);
        std::swap(th.masses[0], th.masses[1]);
        std::swap(th.eig_free[0], th.eig_free[1]);
    }
    rep.theta_hat = th;
    rep.objective = best;
    return rep;
}

/// Spike magnitude from a spiked_estimate report: the eigenvalue of the
/// low-mass block.
inline double spike_value(const EstimateReport& rep) {
    const auto& th = rep.theta_hat;
    std::size_t idx = 0;
    for (std::size_t i = 1; i < th.masses.size(); ++i)
        if (th.masses[i] < th.masses[idx]) idx = i;
    return th.eigenvalues[idx];
}

/// Test of Sigma = I from the first two trace powers; the weighting matrix
/// is the q = 2 null Wishart fluctuation covariance.
inline TestReport sphericity_test(const TraceStats& stats, double level = 0.95) {
    const double c = static_cast<double>(stats.p) / stats.n;
    const double beta_corr = (2.0 / stats.beta - 1.0) * c;
    Eigen::VectorXd v(2);
    v(0) = stats.trace_power(1) - stats.p;
    v(1) = stats.trace_power(2) - stats.p * (1.0 + c) - beta_corr;
    Eigen::MatrixXd Q(2, 2);
    Q(0, 0) = c;
    Q(0, 1) = Q(1, 0) = 2.0 * (c + 1.0) * c;
    Q(1, 1) = 2.0 * (2.0 * c * c + 5.0 * c + 2.0) * c;
    Q *= 2.0 / stats.beta;
    const double h = detail::solve_quadratic_form(Q, v).quad;
    TestReport rep = detail::make_chi2_report("sphericity", h, 2, level);
    return rep;
}

/// Ledoit-Wolf sphericity statistic with its chi-square p(p+1)/2 reference
/// distribution.
inline TestReport ledoit_wolf(const Eigen::MatrixXcd& S, int p, int n, double level = 0.95) {
    if (S.rows() != p || S.cols() != p)
        throw std::invalid_argument("ledoit_wolf: size mismatch");
    const Eigen::MatrixXcd D = S - Eigen::MatrixXcd::Identity(p, p);
    const double tr_d2 = (D * D).trace().real() / p;
    const double tr_s = S.trace().real() / p;
    const double cpn = static_cast<double>(p) / n;
    const double lw = (static_cast<double>(n) * p / 2.0) * (tr_d2 - cpn * tr_s * tr_s + cpn);
    const int dof = p * (p + 1) / 2;
    TestReport rep = detail::make_chi2_report("ledoit-wolf", lw, dof, level);
    return rep;
}

/// Classical large-n eigenvalue MLE: block averages of the descending
/// sample eigenvalues. Degenerates when p > n (trailing zeros).
inline std::vector<double> anderson_mle(const std::vector<double>& sample_eigs,
                                        const std::vector<int>& multiplicities) {
    const int p = std::accumulate(multiplicities.begin(), multiplicities.end(), 0);
    if (p != static_cast<int>(sample_eigs.size()))
        throw std::invalid_argument("anderson_mle: multiplicities do not sum to p");
    std::vector<double> out;
    out.reserve(multiplicities.size());
    std::size_t idx = 0;
    for (int m : multiplicities) {
        if (m < 1)
            throw std::invalid_argument("anderson_mle: multiplicities must be positive");
        double acc = 0.0;
        for (int r = 0; r < m; ++r) acc += sample_eigs[idx++];
        out.push_back(acc / m);
    }
    return out;
}

struct BlockCriterion {
    double log_v = 0.0;  // log of the likelihood criterion
    double v = 1.0;      // exp(log_v); may underflow to 0 for large n
    bool degenerate = false;
};

/// Per-block equality-of-eigenvalues likelihood criterion
/// V_l = [prod lambda_j / mean^{p_l}]^{n/2}, evaluated in the log domain.
inline std::vector<BlockCriterion> anderson_test(const std::vector<double>& sample_eigs,
                                                 const std::vector<int>& multiplicities,
                                                 int n) {
    const int p = std::accumulate(multiplicities.begin(), multiplicities.end(), 0);
    if (p != static_cast<int>(sample_eigs.size()))
        throw std::invalid_argument("anderson_test: multiplicities do not sum to p");
    std::vector<BlockCriterion> out;
    std::size_t idx = 0;
    for (int m : multiplicities) {
        BlockCriterion bc;
        double logsum = 0.0, mean = 0.0;
        for (int r = 0; r < m; ++r) {
            const double lam = sample_eigs[idx + static_cast<std::size_t>(r)];
            if (lam <= 0.0) bc.degenerate = true;
            else logsum += std::log(lam);
            mean += lam;
        }
        idx += static_cast<std::size_t>(m);
        mean /= m;
        if (!bc.degenerate && mean > 0.0) {
            bc.log_v = (n / 2.0) * (logsum - m * std::log(mean));
            bc.v = std::exp(bc.log_v);
        } else {
            bc.degenerate = true;
            bc.v = 0.0;
            bc.log_v = -std::numeric_limits<double>::infinity();
        }
        out.push_back(bc);
    }
    return out;
}

/// Eigenvalue estimates when the population eigenvectors are supplied:
/// block averages of the diagonal of U' S U.
inline std::vector<double> known_u_estimate(const Eigen::MatrixXcd& S,
                                            const Eigen::MatrixXcd& U,
                                            const std::vector<int>& multiplicities) {
    const int p = static_cast<int>(S.rows());
    if (U.rows() != p || U.cols() != p)
        throw std::invalid_argument("known_u_estimate: size mismatch");
    if ((U.adjoint() * U - Eigen::MatrixXcd::Identity(p, p)).cwiseAbs().maxCoeff() > 1e-8)
        throw std::invalid_argument("known_u_estimate: U is not unitary");
    if (std::accumulate(multiplicities.begin(), multiplicities.end(), 0) != p)
        throw std::invalid_argument("known_u_estimate: multiplicities do not sum to p");
    const Eigen::VectorXd diag = (U.adjoint() * S * U).diagonal().real();
    std::vector<double> out;
    int idx = 0;
    for (int m : multiplicities) {
        double acc = 0.0;
        for (int r = 0; r < m; ++r) acc += diag(idx++);
        out.push_back(acc / m);
    }
    return out;
}

struct DetectabilityEntry {
    double population_eigenvalue = 0.0;
    bool detectable = false;
    double limiting_sample_eigenvalue = 0.0;
    double critical_aspect_ratio = 0.0;  // c_t; detectable iff c < c_t (inf for bulk)
};

/// Phase-transition diagnostic: a spike above lambda (1 + sqrt(c)) separates
/// from the bulk and its top sample eigenvalue converges to
/// lambda_j (1 + lambda c / (lambda_j - lambda)); otherwise it is absorbed
/// at the bulk edge lambda (1 + sqrt(c))^2.
inline std::vector<DetectabilityEntry> detectability(const PopulationModel& model,
                                                     double lambda, double c) {
    std::vector<DetectabilityEntry> out;
    for (const auto& b : model.blocks()) {
        DetectabilityEntry e;
        e.population_eigenvalue = b.eigenvalue;
        e.detectable = b.eigenvalue > lambda * (1.0 + std::sqrt(c));
        if (b.eigenvalue > lambda) {
            const double r = (b.eigenvalue - lambda) / lambda;
            e.critical_aspect_ratio = r * r;
        } else {
            e.critical_aspect_ratio = 0.0;
        }
        e.limiting_sample_eigenvalue =
            e.detectable
                ? b.eigenvalue * (1.0 + lambda * c / (b.eigenvalue - lambda))
                : lambda * (1.0 + std::sqrt(c)) * (1.0 + std::sqrt(c));
        out.push_back(e);
    }
    return out;
}

}  // namespace eigeninfer

#endif
