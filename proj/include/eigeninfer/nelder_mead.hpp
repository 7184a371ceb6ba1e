#ifndef EIGENINFER_NELDER_MEAD_HPP
#define EIGENINFER_NELDER_MEAD_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <vector>

namespace eigeninfer {

struct NelderMeadOptions {
    int max_iter = 4000;
    double f_tol = 1e-12;     // spread of simplex values
    double x_tol = 1e-10;     // simplex diameter
    double init_step = 0.25;  // initial simplex edge length
};

struct NelderMeadResult {
    Eigen::VectorXd x;
    double fx = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free downhill simplex minimization with the standard
/// reflection / expansion / contraction / shrink coefficients. The
/// objective may return +inf to mark infeasible points.
inline NelderMeadResult nelder_mead(const std::function<double(const Eigen::VectorXd&)>& f,
                                    const Eigen::VectorXd& x0,
                                    const NelderMeadOptions& opt = {}) {
    const int d = static_cast<int>(x0.size());
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    std::vector<Eigen::VectorXd> xs(static_cast<std::size_t>(d) + 1, x0);
    std::vector<double> fs(static_cast<std::size_t>(d) + 1);
    for (int i = 0; i < d; ++i) xs[static_cast<std::size_t>(i) + 1](i) += opt.init_step;
    for (std::size_t i = 0; i < xs.size(); ++i) fs[i] = f(xs[i]);

    std::vector<std::size_t> order(xs.size());
    NelderMeadResult res;
    int it = 0;
    for (; it < opt.max_iter; ++it) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fs[a] < fs[b]; });
        const std::size_t best = order.front(), worst = order.back();
        const std::size_t second_worst = order[order.size() - 2];

        double diam = 0.0;
        for (std::size_t i = 0; i < xs.size(); ++i)
            diam = std::max(diam, (xs[i] - xs[best]).lpNorm<Eigen::Infinity>());
        const double fspread = std::isfinite(fs[worst]) ? fs[worst] - fs[best]
                                                        : std::numeric_limits<double>::infinity();
        if (diam < opt.x_tol && fspread < opt.f_tol) {
            res.converged = true;
            break;
        }

        Eigen::VectorXd centroid = Eigen::VectorXd::Zero(d);
        for (std::size_t i = 0; i < xs.size(); ++i)
            if (i != worst) centroid += xs[i];
        centroid /= d;

        const Eigen::VectorXd xr = centroid + alpha * (centroid - xs[worst]);
        const double fr = f(xr);
        if (fr < fs[best]) {
            const Eigen::VectorXd xe = centroid + gamma * (xr - centroid);
            const double fe = f(xe);
            if (fe < fr) {
                xs[worst] = xe;
                fs[worst] = fe;
            } else {
                xs[worst] = xr;
                fs[worst] = fr;
            }
        } else if (fr < fs[second_worst]) {
            xs[worst] = xr;
            fs[worst] = fr;
        } else {
            const bool outside = fr < fs[worst];
            const Eigen::VectorXd base = outside ? xr : xs[worst];
            const Eigen::VectorXd xc = centroid + rho * (base - centroid);
            const double fc = f(xc);
            if (fc < std::min(fr, fs[worst])) {
                xs[worst] = xc;
                fs[worst] = fc;
            } else {
                for (std::size_t i = 0; i < xs.size(); ++i) {
                    if (i == best) continue;
                    xs[i] = xs[best] + sigma * (xs[i] - xs[best]);
                    fs[i] = f(xs[i]);
                }
            }
        }
    }
    const std::size_t bi = static_cast<std::size_t>(
        std::min_element(fs.begin(), fs.end()) - fs.begin());
    res.x = xs[bi];
    res.fx = fs[bi];
    res.iterations = it;
    return res;
}

}  // namespace eigeninfer

#endif
