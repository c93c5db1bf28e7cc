#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tailrisk/dates.hpp"
#include "tailrisk/errors.hpp"
#include "tailrisk/model.hpp"
#include "tailrisk/neldermead.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

struct ForecastRecord {
    Date date;
    double var_forecast = 0;
    double es_forecast = 0;
    double realized_return = 0;
};

struct TestOutcome {
    double statistic = 0;
    double p_value = 1;
    bool rejected_5pct = false;
    bool skipped = false;
    std::string note;
};

namespace detail {
inline double xlogy(double x, double y) { return x > 0 ? x * std::log(y) : 0.0; }

inline TestOutcome finish(double stat, int df) {
    TestOutcome t;
    t.statistic = stat;
    t.p_value = chi_squared_pvalue(stat, df);
    t.rejected_5pct = t.p_value < 0.05;
    return t;
}
} // namespace detail

/// Proportion of returns strictly below the VaR forecast.
inline double vrate(std::span<const ForecastRecord> records) {
    if (records.empty()) throw validation_error("vrate: empty record set");
    std::size_t v = 0;
    for (const auto& r : records)
        if (r.realized_return < r.var_forecast) ++v;
    return static_cast<double>(v) / static_cast<double>(records.size());
}

/// Proportion of returns strictly below the ES forecast.
inline double esrate(std::span<const ForecastRecord> records) {
    if (records.empty()) throw validation_error("esrate: empty record set");
    std::size_t v = 0;
    for (const auto& r : records)
        if (r.realized_return < r.es_forecast) ++v;
    return static_cast<double>(v) / static_cast<double>(records.size());
}

/// Kupiec unconditional coverage likelihood ratio vs chi2(1).
inline TestOutcome kupiec_uc(std::size_t violations, std::size_t n, double alpha) {
    if (violations > n) throw validation_error("kupiec_uc: violations > n");
    const double x = static_cast<double>(violations);
    const double m = static_cast<double>(n);
    const double phat = x / m;
    const double lr = -2.0 * (detail::xlogy(x, alpha) + detail::xlogy(m - x, 1.0 - alpha) -
                              detail::xlogy(x, phat) - detail::xlogy(m - x, 1.0 - phat));
    return detail::finish(std::max(0.0, lr), 1);
}

/// Christoffersen conditional coverage: UC plus first-order Markov
/// independence, vs chi2(2). A hit sequence with no violations degenerates to
/// the UC component alone.
inline TestOutcome christoffersen_cc(std::span<const int> hits, double alpha) {
    if (hits.size() < 2) throw validation_error("christoffersen_cc: need >= 2 observations");
    std::size_t x = 0;
    for (int h : hits) x += h ? 1 : 0;
    const TestOutcome uc = kupiec_uc(x, hits.size(), alpha);

    double n00 = 0, n01 = 0, n10 = 0, n11 = 0;
    for (std::size_t t = 1; t < hits.size(); ++t) {
        const bool a = hits[t - 1] != 0, b = hits[t] != 0;
        if (!a && !b) ++n00;
        else if (!a && b) ++n01;
        else if (a && !b) ++n10;
        else ++n11;
    }
    double lr_ind = 0;
    std::string note;
    if (n01 + n11 == 0) {
        note = "no violations: independence component degenerate";
    } else {
        const double p2 = (n01 + n11) / (n00 + n01 + n10 + n11);
        const double p01 = n00 + n01 > 0 ? n01 / (n00 + n01) : 0.0;
        const double p11 = n10 + n11 > 0 ? n11 / (n10 + n11) : 0.0;
        const double l0 = detail::xlogy(n01 + n11, p2) + detail::xlogy(n00 + n10, 1.0 - p2);
        const double l1 = detail::xlogy(n01, p01) + detail::xlogy(n00, 1.0 - p01) +
                          detail::xlogy(n11, p11) + detail::xlogy(n10, 1.0 - p11);
        lr_ind = std::max(0.0, -2.0 * (l0 - l1));
    }
    TestOutcome t = detail::finish(uc.statistic + lr_ind, 2);
    t.note = note;
    return t;
}

/// Dynamic quantile test: the demeaned hit is regressed on an intercept,
/// `lags` lagged hits and the contemporaneous VaR forecast; the Wald statistic
/// is referred to chi2(lags + 2). A rank-deficient design yields a skipped
/// (non-rejecting) outcome.
inline TestOutcome dq_test(std::span<const ForecastRecord> records, int lags, double alpha) {
    const auto n = static_cast<long>(records.size());
    if (n <= lags + 10) throw validation_error("dq_test: sample too short for lags");
    std::vector<double> hit(static_cast<std::size_t>(n));
    for (long t = 0; t < n; ++t)
        hit[static_cast<std::size_t>(t)] =
            (records[static_cast<std::size_t>(t)].realized_return <
                     records[static_cast<std::size_t>(t)].var_forecast
                 ? 1.0
                 : 0.0) -
            alpha;

    const long m = n - lags;
    const int k = lags + 2;
    Eigen::MatrixXd design(m, k);
    Eigen::VectorXd y(m);
    for (long t = lags; t < n; ++t) {
        const long row = t - lags;
        design(row, 0) = 1.0;
        for (int l = 1; l <= lags; ++l)
            design(row, l) = hit[static_cast<std::size_t>(t - l)];
        design(row, k - 1) = records[static_cast<std::size_t>(t)].var_forecast;
        y(row) = hit[static_cast<std::size_t>(t)];
    }

    const Eigen::MatrixXd xtx = design.transpose() * design;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(xtx);
    if (lu.rank() < k) {
        TestOutcome t;
        t.skipped = true;
        t.note = "singular design";
        return t;
    }
    // n R^2 form: explained sum of squares over the sample hit variance
    const Eigen::VectorXd xty = design.transpose() * y;
    const double ess = xty.dot(lu.solve(xty));
    const double tss = y.squaredNorm();
    if (!(tss > 0)) {
        TestOutcome t;
        t.skipped = true;
        t.note = "degenerate hit sequence";
        return t;
    }
    const double stat = ess / (tss / static_cast<double>(m));
    return detail::finish(stat, k);
}

namespace detail {
/// Two-parameter quantile regression of r on (1, v). The intercept is profiled
/// out exactly (it is the alpha-quantile of r - b v), leaving a convex
/// piecewise-linear objective in the slope that a ternary search pins down; a
/// simplex polish finishes the pair off.
inline std::array<double, 2> quantile_line_fit(std::span<const double> r,
                                               std::span<const double> v, double alpha) {
    const std::size_t n = r.size();
    std::vector<double> u(n);
    auto profile = [&](double b) {
        for (std::size_t t = 0; t < n; ++t) u[t] = r[t] - b * v[t];
        return empirical_quantile(u, alpha);
    };
    auto loss_at = [&](double a, double b) {
        double s = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double e = r[t] - a - b * v[t];
            s += e * (alpha - (e < 0 ? 1.0 : 0.0));
        }
        return s;
    };
    auto profiled_loss = [&](double b) { return loss_at(profile(b), b); };

    double lo = -1.0, hi = 3.0; // generous bracket around the null slope of 1
    for (int it = 0; it < 200; ++it) {
        const double m1 = lo + (hi - lo) / 3.0;
        const double m2 = hi - (hi - lo) / 3.0;
        if (profiled_loss(m1) <= profiled_loss(m2))
            hi = m2;
        else
            lo = m1;
    }
    const double b0 = 0.5 * (lo + hi);
    const double a0 = profile(b0);

    auto loss_vec = [&](const std::vector<double>& th) { return loss_at(th[0], th[1]); };
    SimplexOptions opt;
    opt.max_iter = 300;
    opt.x_tol = 1e-12;
    const SimplexResult polish = nelder_mead(loss_vec, {a0, b0}, opt);
    if (polish.f < loss_at(a0, b0)) return {polish.x[0], polish.x[1]};
    return {a0, b0};
}

/// Hall-Sheather bandwidth at quantile level alpha (5% test size).
inline double hall_sheather_bandwidth(std::size_t n, double alpha) {
    const double z = normal_quantile(alpha);
    const double za = normal_quantile(1.0 - 0.05 / 2.0);
    const double num = 1.5 * normal_pdf(z) * normal_pdf(z);
    const double den = 2.0 * z * z + 1.0;
    return std::pow(static_cast<double>(n), -1.0 / 3.0) * std::pow(za, 2.0 / 3.0) *
           std::pow(num / den, 1.0 / 3.0);
}
} // namespace detail

/// VaR quantile-regression backtest: regress the return on (1, VaR forecast)
/// at level alpha and Wald-test (intercept, slope) = (0, 1). The covariance is
/// the heteroskedasticity-robust quantile-regression sandwich, with the local
/// density taken from the difference quotient of fitted quantile lines at
/// alpha +- the Hall-Sheather bandwidth.
inline TestOutcome vqr_test(std::span<const ForecastRecord> records, double alpha) {
    const std::size_t n = records.size();
    if (n < 100) throw validation_error("vqr_test: need >= 100 observations");
    std::vector<double> r(n), v(n);
    for (std::size_t t = 0; t < n; ++t) {
        r[t] = records[t].realized_return;
        v[t] = records[t].var_forecast;
    }
    if (stdev(v) < 1e-12) throw estimation_error("vqr_test: degenerate VaR forecasts");

    const auto theta = detail::quantile_line_fit(r, v, alpha);
    const double h = detail::hall_sheather_bandwidth(n, alpha);
    const double lo_a = std::max(alpha - h, 1.0 / (static_cast<double>(n) + 1.0));
    const double hi_a = std::min(alpha + h, 1.0 - 1.0 / (static_cast<double>(n) + 1.0));
    const auto th_lo = detail::quantile_line_fit(r, v, lo_a);
    const auto th_hi = detail::quantile_line_fit(r, v, hi_a);

    Eigen::Matrix2d density_xx = Eigen::Matrix2d::Zero();
    Eigen::Matrix2d xx = Eigen::Matrix2d::Zero();
    const double span_a = hi_a - lo_a;
    for (std::size_t t = 0; t < n; ++t) {
        const Eigen::Vector2d x(1.0, v[t]);
        const double dq = (th_hi[0] - th_lo[0]) + (th_hi[1] - th_lo[1]) * v[t];
        const double dens = dq > 1e-12 ? span_a / dq : 0.0; // clamp crossing fits
        density_xx += dens * x * x.transpose();
        xx += x * x.transpose();
    }
    Eigen::FullPivLU<Eigen::Matrix2d> lu(density_xx);
    if (lu.rank() < 2) throw estimation_error("vqr_test: singular design");
    const Eigen::Matrix2d dinv = lu.inverse();
    const Eigen::Matrix2d cov = alpha * (1.0 - alpha) * dinv * xx * dinv;

    Eigen::Vector2d d(theta[0] - 0.0, theta[1] - 1.0);
    Eigen::FullPivLU<Eigen::Matrix2d> lc(cov);
    if (lc.rank() < 2) throw estimation_error("vqr_test: singular covariance");
    const double stat = d.dot(lc.solve(d));
    return detail::finish(stat, 2);
}

/// Reference rate for judging the ES violation rate: the quantile level the
/// 1% ES is estimated to fall at under heavy-tailed (Student-t) return
/// benchmarks. Reported alongside esrate, never computed from data.
inline constexpr double es_rate_reference_1pct = 0.0036;

struct BacktestReport {
    double vrate = 0;
    double esrate = 0;
    TestOutcome uc, cc, dq1, dq4, vqr;
    double quantile_loss = 0;
    double joint_loss = 0;
    std::size_t n = 0;
};

inline double quantile_loss_total(std::span<const ForecastRecord> records, double alpha) {
    double s = 0;
    for (const auto& rec : records) {
        const double indicator = rec.realized_return < rec.var_forecast ? 1.0 : 0.0;
        s += (alpha - indicator) * (rec.realized_return - rec.var_forecast);
    }
    return s;
}

inline double joint_loss_total(std::span<const ForecastRecord> records, double alpha) {
    double s = 0;
    for (const auto& rec : records)
        s += joint_score(rec.realized_return, rec.var_forecast, rec.es_forecast, alpha);
    return s;
}

/// Full backtest battery. Tests whose preconditions the record set cannot
/// meet (short horizons, degenerate forecasts) come back as skipped
/// non-rejections instead of aborting the report.
inline BacktestReport backtest(std::span<const ForecastRecord> records, double alpha) {
    BacktestReport rep;
    rep.n = records.size();
    rep.vrate = vrate(records);
    rep.esrate = esrate(records);
    std::vector<int> hits(records.size());
    std::size_t v = 0;
    for (std::size_t t = 0; t < records.size(); ++t) {
        hits[t] = records[t].realized_return < records[t].var_forecast ? 1 : 0;
        v += static_cast<std::size_t>(hits[t]);
    }
    auto guarded = [&](auto&& fn) {
        try {
            return fn();
        } catch (const std::exception& e) {
            TestOutcome t;
            t.skipped = true;
            t.note = e.what();
            return t;
        }
    };
    rep.uc = kupiec_uc(v, records.size(), alpha);
    rep.cc = guarded([&] { return christoffersen_cc(hits, alpha); });
    rep.dq1 = guarded([&] { return dq_test(records, 1, alpha); });
    rep.dq4 = guarded([&] { return dq_test(records, 4, alpha); });
    rep.vqr = guarded([&] { return vqr_test(records, alpha); });
    rep.quantile_loss = quantile_loss_total(records, alpha);
    rep.joint_loss = joint_loss_total(records, alpha);
    return rep;
}

/// Mean rank per model across series; losses[m][s] is model m's total loss on
/// series s. Rank 1 is the lowest loss; ties share the average rank.
inline std::vector<double> mean_ranks(const std::vector<std::vector<double>>& losses) {
    if (losses.empty()) return {};
    const std::size_t n_models = losses.size();
    const std::size_t n_series = losses.front().size();
    for (const auto& row : losses)
        if (row.size() != n_series) throw validation_error("mean_ranks: ragged loss table");
    std::vector<double> acc(n_models, 0.0);
    for (std::size_t s = 0; s < n_series; ++s) {
        std::vector<std::size_t> order(n_models);
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return losses[a][s] < losses[b][s];
        });
        std::size_t i = 0;
        while (i < n_models) {
            std::size_t j = i;
            while (j + 1 < n_models && losses[order[j + 1]][s] == losses[order[i]][s]) ++j;
            const double shared = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
            for (std::size_t k = i; k <= j; ++k) acc[order[k]] += shared;
            i = j + 1;
        }
    }
    for (auto& a : acc) a /= static_cast<double>(n_series);
    return acc;
}

} // namespace tailrisk
