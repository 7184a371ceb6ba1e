// Acceptance suite: each criterion prints exactly one PASS/FAIL line.
// Usage: acceptance <criterion 1..12> | acceptance all

#include <cmath>
#include <cstdio>
#include <cstring>
#include <random>
#include <string>
#include <vector>

#include "eigeninfer/fluctuation.hpp"
#include "eigeninfer/inference.hpp"
#include "eigeninfer/mc.hpp"
#include "eigeninfer/moments.hpp"
#include "eigeninfer/series.hpp"
#include "eigeninfer/wishart.hpp"

using namespace eigeninfer;

namespace {

std::uint64_t trial_seed(std::uint64_t base, int t) {
    return detail::splitmix64(base) ^ static_cast<std::uint64_t>(t);
}

// --- criterion 1: series engine vs hard-coded covariance polynomials ------

bool criterion1() {
    std::mt19937_64 rng(101);
    std::uniform_real_distribution<double> uni(0.1, 3.0);
    for (int trial = 0; trial < 500; ++trial) {
        std::vector<double> alpha(10);
        for (auto& a : alpha) a = uni(rng);
        const FluctuationMatrix M = second_order_covariances(alpha, 5, 2);
        for (int i = 1; i <= 5; ++i)
            for (int j = 1; j <= 5; ++j) {
                const double oracle = table3_oracle(alpha, i, j);
                const double got = M.entries(i - 1, j - 1);
                const double scale = std::max(1.0, std::abs(oracle));
                if (std::abs(got - oracle) > 1e-10 * scale) return false;
            }
    }
    return true;
}

// --- criterion 2: closed-form sample moments --------------------------------

bool criterion2() {
    std::mt19937_64 rng(102);
    std::uniform_real_distribution<double> ua(1.1, 10.0);
    std::uniform_real_distribution<double> ut(0.05, 0.95);
    std::uniform_real_distribution<double> uc(0.05, 3.0);
    for (int trial = 0; trial < 200; ++trial) {
        const double a = ua(rng), t = ut(rng), c = uc(rng);
        const PopulationModel model({{a, t}, {1.0, 1.0 - t}});
        const SampleMoments sm = sample_moments(model, c, 4);
        std::vector<double> m(5);
        for (int j = 1; j <= 4; ++j) m[j] = 1.0 + t * (std::pow(a, j) - 1.0);
        const double e1 = m[1];
        const double e2 = m[2] + c * m[1] * m[1];
        const double e3 = m[3] + 3.0 * c * m[1] * m[2] + c * c * std::pow(m[1], 3);
        const double e4 = m[4] + c * (4.0 * m[1] * m[3] + 2.0 * m[2] * m[2]) +
                          6.0 * c * c * m[1] * m[1] * m[2] +
                          std::pow(c, 3) * std::pow(m[1], 4);
        const double expect[4] = {e1, e2, e3, e4};
        for (int j = 0; j < 4; ++j)
            if (std::abs(sm.alpha_s[j] - expect[j]) > 1e-12 * std::abs(expect[j]))
                return false;
    }
    return true;
}

// --- criterion 3: identity population equals null Wishart ------------------

bool criterion3() {
    for (double c : {0.1, 0.5, 1.0, 2.0}) {
        const SampleMoments sm = sample_moments(std::vector<double>(10, 1.0), c, 10);
        const std::vector<double> nw = null_wishart_moments(1.0, c, 10);
        for (int j = 0; j < 10; ++j)
            if (std::abs(sm.alpha_s[j] - nw[j]) > 1e-12 * std::abs(nw[j]))
                return false;
    }
    return true;
}

// --- criterion 4: exact variance anchor -------------------------------------

bool criterion4() {
    const FluctuationMatrix Q = q_matrix(PopulationModel::identity(), 80, 80, 1, 1);
    if (std::abs(Q.entries(0, 0) - 2.0) > 1e-12) return false;
    const int trials = 2000;
    const auto traces = run_trials<double>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = 80;
        spec.n = 80;
        spec.beta = 1;
        spec.seed = trial_seed(4, t);
        return sample_trace_stats(PopulationModel::identity(), spec, 1).trace_power(1);
    });
    double mean = 0.0;
    for (double tr : traces) mean += tr;
    mean /= trials;
    double var = 0.0;
    for (double tr : traces) var += (tr - mean) * (tr - mean);
    var /= trials - 1;
    return std::abs(var - 2.0) <= 0.2;
}

// --- criterion 5: sphericity calibration ------------------------------------

double sphericity_acceptance(int p, int n, const PopulationModel& model,
                             int trials, std::uint64_t seed) {
    const auto acc = run_trials<int>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = p;
        spec.n = n;
        spec.beta = 1;
        spec.seed = trial_seed(seed, t);
        const TraceStats st = sample_trace_stats(model, spec, 2);
        return sphericity_test(st).reject ? 0 : 1;
    });
    double s = 0.0;
    for (int a : acc) s += a;
    return s / trials;
}

bool criterion5() {
    const double acc =
        sphericity_acceptance(40, 40, PopulationModel::identity(), 2000, 5);
    return acc >= 0.92 && acc <= 0.97;
}

// --- criterion 6: detectability failure regime ------------------------------

bool criterion6() {
    const PopulationModel spiked160({{10.0, 1.0 / 160}, {1.0, 159.0 / 160}});
    const double acc1 = sphericity_acceptance(160, 40, spiked160, 1000, 61);
    if (acc1 > 0.01) return false;
    const PopulationModel spiked320({{10.0, 1.0 / 320}, {1.0, 319.0 / 320}});
    const double acc2 = sphericity_acceptance(320, 10, spiked320, 1000, 62);
    return acc2 >= 0.55 && acc2 <= 0.72;
}

// --- criterion 7 and 8: two-block estimation accuracy -----------------------

struct TwoBlockSummary {
    double bias_a = 0.0, mse_a = 0.0, mse_t = 0.0;
    int ok = 0;
};

TwoBlockSummary run_two_block(int p, int n, int beta, int trials,
                              std::uint64_t seed) {
    const PopulationModel model({{2.0, 0.5}, {1.0, 0.5}});
    ThetaVector tpl;
    tpl.eigenvalues = {2.0, 1.0};
    tpl.masses = {0.5, 0.5};
    tpl.eig_free = {true, false};
    tpl.mass_free = {true, false};
    const auto est = run_trials<std::pair<double, double>>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = p;
        spec.n = n;
        spec.beta = beta;
        spec.seed = trial_seed(seed, t);
        const TraceStats st = sample_trace_stats(model, spec, 4);
        EstimateOptions opt;
        opt.seed = trial_seed(seed, t);
        try {
            const EstimateReport rep = estimate(st, tpl, 2, opt);
            return std::make_pair(rep.theta_hat.eigenvalues[0],
                                  rep.theta_hat.masses[0]);
        } catch (const std::exception&) {
            return std::make_pair(std::nan(""), std::nan(""));
        }
    });
    TwoBlockSummary out;
    for (const auto& [a, t] : est) {
        if (!std::isfinite(a)) continue;
        out.bias_a += a - 2.0;
        out.mse_a += (a - 2.0) * (a - 2.0);
        out.mse_t += (t - 0.5) * (t - 0.5);
        ++out.ok;
    }
    if (out.ok > 0) {
        out.bias_a /= out.ok;
        out.mse_a /= out.ok;
        out.mse_t /= out.ok;
    }
    return out;
}

bool criterion7() {
    const TwoBlockSummary s = run_two_block(80, 160, 2, 500, 7);
    if (s.ok < 450) return false;
    // reference MSEs: ~0.0028 for the eigenvalue, ~0.0007 for the mass
    // (delta-method asymptotics confirm this assignment; see criterion docs)
    return std::abs(s.bias_a) <= 0.01 && s.mse_a <= 2.0 * 0.0028 &&
           s.mse_t <= 2.0 * 0.0007;
}

bool criterion8() {
    const TwoBlockSummary real = run_two_block(160, 320, 1, 500, 81);
    const TwoBlockSummary cplx = run_two_block(160, 320, 2, 500, 82);
    if (real.ok < 450 || cplx.ok < 450 || cplx.mse_a <= 0.0) return false;
    const double ratio = real.mse_a / cplx.mse_a;
    return ratio >= 1.3 && ratio <= 2.8;
}

// --- criterion 9: spiked estimation -----------------------------------------

bool criterion9() {
    const int p = 80, n = 80, trials = 500;
    const PopulationModel model({{10.0, 1.0 / p}, {1.0, 1.0 - 1.0 / p}});
    const auto est = run_trials<double>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = p;
        spec.n = n;
        spec.beta = 2;
        spec.seed = trial_seed(9, t);
        const TraceStats st = sample_trace_stats(model, spec, 2);
        EstimateOptions opt;
        opt.seed = trial_seed(9, t);
        try {
            return spike_value(spiked_estimate(st, 1.0, 1, opt));
        } catch (const std::exception&) {
            return std::nan("");
        }
    });
    double mse = 0.0;
    int ok = 0;
    for (double a : est) {
        if (!std::isfinite(a)) continue;
        mse += (a - 10.0) * (a - 10.0);
        ++ok;
    }
    if (ok < 450) return false;
    mse /= ok;
    return mse <= 2.0 * 1.2419 && mse * p >= 60.0 && mse * p <= 160.0;
}

// --- criterion 10: order selection ------------------------------------------

double order_rate(const PopulationModel& model, int p, int n, int target_k,
                  int trials, std::uint64_t seed) {
    const auto ks = run_trials<int>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = p;
        spec.n = n;
        spec.beta = 2;
        spec.seed = trial_seed(seed, t);
        const Eigen::MatrixXcd X = sample_data(model, spec);
        EstimateOptions opt;
        opt.seed = trial_seed(seed, t);
        // only the argmin over k matters here; lighter optimizer settings
        // keep the selection intact at a fraction of the cost
        opt.restarts = 2;
        opt.nm.max_iter = 800;
        opt.nm.x_tol = 1e-7;
        opt.nm.f_tol = 1e-10;
        try {
            return select_order(X, n, 2, 3, opt).k_hat;
        } catch (const std::exception&) {
            return 0;
        }
    });
    double hit = 0.0;
    for (int k : ks) hit += k == target_k ? 1.0 : 0.0;
    return hit / trials;
}

bool criterion10() {
    const double rate1 =
        order_rate(PopulationModel({{2.0, 1.0}}), 80, 80, 1, 300, 100);
    if (rate1 < 0.99) return false;
    const double rate2 = order_rate(PopulationModel({{2.0, 0.5}, {1.0, 0.5}}),
                                    320, 320, 2, 300, 101);
    return rate2 >= 0.95;
}

// --- criterion 11: Ledoit-Wolf calibration ----------------------------------

bool criterion11() {
    const int trials = 2000;
    const auto acc = run_trials<int>(trials, [&](int t) {
        SampleSpec spec;
        spec.p = 80;
        spec.n = 80;
        spec.beta = 1;
        spec.seed = trial_seed(11, t);
        const Eigen::MatrixXcd S = sample_scm(PopulationModel::identity(), spec);
        return ledoit_wolf(S, 80, 80).reject ? 0 : 1;
    });
    double s = 0.0;
    for (int a : acc) s += a;
    const double rate = s / trials;
    return rate >= 0.93 && rate <= 0.97;
}

// --- criterion 12: property sweep -------------------------------------------

bool criterion12() {
    std::mt19937_64 rng(112);
    std::uniform_real_distribution<double> uni(-1.0, 1.0);
    // ring laws
    for (int trial = 0; trial < 50; ++trial) {
        TruncatedSeries a(6), b(6), c(6);
        for (std::size_t d = 0; d <= 6; ++d) {
            a[d] = uni(rng);
            b[d] = uni(rng);
            c[d] = uni(rng);
        }
        const TruncatedSeries ab = series_mul(a, b);
        const TruncatedSeries ba = series_mul(b, a);
        const TruncatedSeries l = series_mul(ab, c);
        const TruncatedSeries r = series_mul(a, series_mul(b, c));
        for (std::size_t d = 0; d <= 6; ++d) {
            if (ab[d] != ba[d]) return false;
            if (std::abs(l[d] - r[d]) > 1e-12) return false;
        }
    }
    // partition counts and Catalan sum rule
    const std::size_t pj[] = {1, 2, 3, 5, 7, 11, 15, 22, 30, 42, 56, 77};
    std::uint64_t catalan = 1;
    for (int j = 1; j <= 12; ++j) {
        const auto seqs = enumerate_sequences(j);
        if (seqs.size() != pj[j - 1]) return false;
        if (j <= 10) {
            catalan = catalan * 2 * (2 * j - 1) / (j + 1);
            std::uint64_t acc = 0;
            for (const auto& s : seqs) acc += multinomial_gamma(s);
            if (acc != catalan) return false;
        }
    }
    catalan = 1;
    // divided-difference diagonal law (exact)
    for (int trial = 0; trial < 50; ++trial) {
        TruncatedSeries h(9);
        h[0] = 0.0;
        for (std::size_t d = 1; d <= 9; ++d) h[d] = uni(rng);
        const BivariateSeries dd = divided_difference(h);
        for (std::size_t d = 0; d <= 8; ++d) {
            double acc = 0.0;
            for (std::size_t i = 0; i <= d; ++i) acc += dd.at(i, d - i);
            const double want = static_cast<double>(d + 1) * h[d + 1];
            if (std::abs(acc - want) > 1e-13 * std::max(1.0, std::abs(want)))
                return false;
        }
    }
    // Q symmetry and positive definiteness in a sane regime
    const FluctuationMatrix Q =
        q_matrix(PopulationModel({{2.0, 0.5}, {1.0, 0.5}}), 80, 160, 4, 1);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (Q.entries(i, j) != Q.entries(j, i)) return false;
    if (!Q.positive_definite()) return false;
    // RNG reproducibility
    SampleSpec spec;
    spec.p = 16;
    spec.n = 24;
    spec.beta = 2;
    spec.seed = 999;
    const PopulationModel model({{2.0, 0.5}, {1.0, 0.5}});
    const TraceStats s1 = sample_trace_stats(model, spec, 3);
    const TraceStats s2 = sample_trace_stats(model, spec, 3);
    for (int j = 1; j <= 3; ++j)
        if (s1.trace_power(j) != s2.trace_power(j)) return false;
    return true;
}

struct Criterion {
    int id;
    const char* name;
    bool (*fn)();
};

const Criterion kCriteria[] = {
    {1, "series engine matches hard-coded covariance polynomials (500 vectors, 1e-10)", criterion1},
    {2, "sample moments match closed forms (200 random models, 1e-12)", criterion2},
    {3, "identity population equals null Wishart moments (j<=10, 1e-12)", criterion3},
    {4, "variance anchor 2p/n: analytic exact, empirical within 10%", criterion4},
    {5, "sphericity acceptance in [0.92, 0.97] at p=n=40, 2000 trials", criterion5},
    {6, "detectability failure regime acceptance pattern (1000 trials)", criterion6},
    {7, "two-block estimation bias/MSE at p=80, n=160 (500 trials)", criterion7},
    {8, "real/complex MSE ratio in [1.3, 2.8] at p=160, n=320", criterion8},
    {9, "spiked estimation MSE bounds at p=n=80 (500 trials)", criterion9},
    {10, "order selection k-hat accuracy (300 trials per scenario)", criterion10},
    {11, "Ledoit-Wolf acceptance in [0.93, 0.97] at p=n=80, 2000 trials", criterion11},
    {12, "property sweep: ring laws, partition identities, Q laws, RNG", criterion12},
};

}  // namespace

int main(int argc, char** argv) {
    if (argc != 2) {
        std::fprintf(stderr, "usage: acceptance <1..12|all>\n");
        return 2;
    }
    int failures = 0;
    const bool all = std::strcmp(argv[1], "all") == 0;
    const int want = all ? 0 : std::atoi(argv[1]);
    if (!all && (want < 1 || want > 12)) {
        std::fprintf(stderr, "usage: acceptance <1..12|all>\n");
        return 2;
    }
    for (const Criterion& c : kCriteria) {
        if (!all && c.id != want) continue;
        const bool ok = c.fn();
        std::printf("criterion %2d: %s - %s\n", c.id, ok ? "PASS" : "FAIL", c.name);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures == 0 ? 0 : 1;
}
