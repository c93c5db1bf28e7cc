#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace tailrisk {

struct SimplexOptions {
    int max_iter = 500;
    double x_tol = 1e-8;
    double f_tol = 1e-10;
};

struct SimplexResult {
    std::vector<double> x;
    double f = std::numeric_limits<double>::infinity();
    int iterations = 0;
    bool converged = false;
};

/// Derivative-free Nelder-Mead simplex minimizer. An optional `project`
/// callback clamps trial points into a feasible box before evaluation;
/// the objective may return +inf to reject a point outright.
inline SimplexResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                                 std::vector<double> x0, const SimplexOptions& opt = {},
                                 const std::function<void(std::vector<double>&)>& project = {}) {
    const std::size_t n = x0.size();
    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;

    auto eval = [&](std::vector<double>& x) {
        if (project) project(x);
        const double v = f(x);
        return std::isnan(v) ? std::numeric_limits<double>::infinity() : v;
    };

    // initial simplex: perturb each coordinate (fminsearch convention)
    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> fv(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        double& c = pts[i + 1][i];
        c = (c != 0.0) ? c * 1.05 : 0.00025;
    }
    for (std::size_t i = 0; i <= n; ++i) fv[i] = eval(pts[i]);

    SimplexResult res;
    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), xr(n), xe(n), xc(n);

    for (res.iterations = 0; res.iterations < opt.max_iter; ++res.iterations) {
        for (std::size_t i = 0; i <= n; ++i) order[i] = i;
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return fv[a] < fv[b]; });
        const std::size_t best = order[0], worst = order[n], second = order[n - 1];

        // convergence: simplex collapsed in x and f
        double xspread = 0, fspread = std::abs(fv[worst] - fv[best]);
        for (std::size_t i = 0; i < n; ++i)
            xspread = std::max(xspread, std::abs(pts[worst][i] - pts[best][i]));
        if (xspread < opt.x_tol && (fspread < opt.f_tol || !std::isfinite(fspread))) {
            res.converged = std::isfinite(fv[best]);
            break;
        }

        for (std::size_t i = 0; i < n; ++i) {
            double s = 0;
            for (std::size_t j = 0; j <= n; ++j)
                if (j != worst) s += pts[j][i];
            centroid[i] = s / static_cast<double>(n);
        }

        for (std::size_t i = 0; i < n; ++i) xr[i] = centroid[i] + alpha * (centroid[i] - pts[worst][i]);
        double fr = eval(xr);
        if (fr < fv[best]) {
            for (std::size_t i = 0; i < n; ++i) xe[i] = centroid[i] + gamma * (centroid[i] - pts[worst][i]);
            double fe = eval(xe);
            if (fe < fr) {
                pts[worst] = xe;
                fv[worst] = fe;
            } else {
                pts[worst] = xr;
                fv[worst] = fr;
            }
        } else if (fr < fv[second]) {
            pts[worst] = xr;
            fv[worst] = fr;
        } else {
            const bool outside = fr < fv[worst];
            const std::vector<double>& ref = outside ? xr : pts[worst];
            for (std::size_t i = 0; i < n; ++i) xc[i] = centroid[i] + rho * (ref[i] - centroid[i]);
            double fc = eval(xc);
            if (fc < (outside ? fr : fv[worst])) {
                pts[worst] = xc;
                fv[worst] = fc;
            } else {
                for (std::size_t j = 0; j <= n; ++j) {
                    if (j == best) continue;
                    for (std::size_t i = 0; i < n; ++i)
                        pts[j][i] = pts[best][i] + sigma * (pts[j][i] - pts[best][i]);
                    fv[j] = eval(pts[j]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i <= n; ++i)
        if (fv[i] < fv[best]) best = i;
    res.x = pts[best];
    res.f = fv[best];
    return res;
}

} // namespace tailrisk
