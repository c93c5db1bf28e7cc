#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/errors.hpp"
#include "tailrisk/realized.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double pos_inf = std::numeric_limits<double>::infinity();

/// How the shortfall couples to the quantile: an autoregressive additive gap
/// ("ar") or a constant multiplicative factor 1 + exp(gamma0) ("exponential").
enum class EsForm { ar, exponential };

enum class DriverKind { abs_return, realized };

inline std::string to_string(EsForm f) { return f == EsForm::ar ? "ar" : "exp"; }

struct ModelSpec {
    EsForm form = EsForm::ar;
    DriverKind driver = DriverKind::abs_return;
    MeasureKind measure = MeasureKind::rv; // meaningful when driver == realized
    double alpha = 0.01;

    /// Lower-tail convention: quantile levels above the median are not.
    void validate() const {
        if (!(alpha > 0.0 && alpha <= 0.5))
            throw validation_error("model alpha must lie in (0, 0.5]");
    }

    std::size_t n_params() const { return form == EsForm::ar ? 6 : 4; }

    std::string id() const {
        std::string s = to_string(form);
        s += driver == DriverKind::abs_return ? "-absret" : "-" + tailrisk::to_string(measure);
        return s;
    }
};

/// Quantile-recursion betas plus shortfall gammas (3 for ar, 1 for exp).
struct ParamVector {
    std::array<double, 3> beta{0, 0, 0};
    std::vector<double> gamma;

    std::size_t size() const { return 3 + gamma.size(); }

    std::vector<double> flat() const {
        std::vector<double> v(beta.begin(), beta.end());
        v.insert(v.end(), gamma.begin(), gamma.end());
        return v;
    }

    static ParamVector from_flat(EsForm form, std::span<const double> v) {
        ParamVector p;
        p.beta = {v[0], v[1], v[2]};
        p.gamma.assign(v.begin() + 3, v.begin() + (form == EsForm::ar ? 6 : 4));
        return p;
    }
};

/// Constraint region A: the flat-prior support and MLE feasible set.
/// |beta2| < 1, beta1 <= 0 (drivers are non-negative, so volatility pushes the
/// quantile down), ar gammas >= 0 (keeps ES below VaR), exp gamma0 bounded to
/// avoid overflow.
inline bool in_region_a(const ModelSpec& spec, const ParamVector& p) {
    if (!(std::abs(p.beta[2]) < 1.0)) return false;
    if (!(p.beta[1] <= 0.0)) return false;
    if (spec.form == EsForm::ar) {
        if (p.gamma.size() != 3) return false;
        for (double g : p.gamma)
            if (!(g >= 0.0)) return false;
    } else {
        if (p.gamma.size() != 1) return false;
        if (!(p.gamma[0] >= -20.0 && p.gamma[0] <= 20.0)) return false;
    }
    for (double v : p.flat())
        if (!std::isfinite(v)) return false;
    return true;
}

/// Recursion start-up. The empirical policy sets Q_1 to the alpha-quantile of
/// the first 10% of the sample (at least 50 observations) and, for the ar
/// form, x_1 to the gap between Q_1 and the mean return below it.
struct InitPolicy {
    enum class Kind { empirical, fixed };
    Kind kind = Kind::empirical;
    double prefix_fraction = 0.10;
    std::size_t min_obs = 50;
    double q1 = 0;
    double x1 = 0;

    static InitPolicy fixed(double q1, double x1 = 0) {
        InitPolicy p;
        p.kind = Kind::fixed;
        p.q1 = q1;
        p.x1 = x1;
        return p;
    }
};

struct RiskPath {
    std::vector<double> q;
    std::vector<double> es;
    double q_next = 0;
    double es_next = 0;
    bool finite = true;
};

struct LossReport {
    double quantile_loss = 0;
    double joint_loss = 0;
    std::size_t n_obs = 0;
};

namespace detail {
inline std::pair<double, double> empirical_init(std::span<const double> returns, double alpha) {
    std::size_t m = static_cast<std::size_t>(
        std::ceil(static_cast<double>(returns.size()) * 0.10));
    m = std::max<std::size_t>(m, 50);
    m = std::min(m, returns.size());
    const auto prefix = returns.subspan(0, m);
    const double q1 = empirical_quantile(prefix, alpha);
    double below = 0;
    std::size_t k = 0;
    for (double r : prefix)
        if (r <= q1) {
            below += r;
            ++k;
        }
    const double x1 = k ? std::abs(below / static_cast<double>(k) - q1) : 0.0;
    return {q1, x1};
}
} // namespace detail

/// Driver values for the plain (non-realized) models: lagged absolute return.
inline std::vector<double> abs_driver(std::span<const double> returns) {
    std::vector<double> d(returns.size());
    for (std::size_t i = 0; i < returns.size(); ++i) d[i] = std::abs(returns[i]);
    return d;
}

/// Runs the joint (Q_t, ES_t) recursion over the sample and one step beyond.
/// Q_t = b0 + b1 * driver_{t-1} + b2 * Q_{t-1}; the shortfall follows the
/// form-specific dynamic. Non-finite values mark the path infeasible rather
/// than throwing, so estimators can score the point as -inf.
inline RiskPath risk_path(const ModelSpec& spec, const ParamVector& params,
                          std::span<const double> returns, std::span<const double> driver,
                          const InitPolicy& init = {}) {
    const std::size_t n = returns.size();
    if (n == 0) throw validation_error("risk_path: empty sample");
    if (driver.size() != n) throw validation_error("risk_path: driver length mismatch");
    if (spec.form == EsForm::ar && params.gamma.size() != 3)
        throw validation_error("risk_path: ar form needs 3 gammas");
    if (spec.form == EsForm::exponential && params.gamma.size() != 1)
        throw validation_error("risk_path: exp form needs 1 gamma");

    spec.validate();

    RiskPath path;
    path.q.resize(n);
    path.es.resize(n);

    double q1, x1;
    if (init.kind == InitPolicy::Kind::fixed) {
        q1 = init.q1;
        x1 = init.x1;
    } else {
        auto [eq, ex] = detail::empirical_init(returns, spec.alpha);
        q1 = eq;
        x1 = ex;
    }

    const double b0 = params.beta[0], b1 = params.beta[1], b2 = params.beta[2];
    if (spec.form == EsForm::exponential) {
        const double factor = 1.0 + std::exp(params.gamma[0]);
        double q = q1;
        path.q[0] = q;
        path.es[0] = factor * q;
        for (std::size_t t = 1; t < n; ++t) {
            q = b0 + b1 * driver[t - 1] + b2 * q;
            path.q[t] = q;
            path.es[t] = factor * q;
        }
        path.q_next = b0 + b1 * driver[n - 1] + b2 * q;
        path.es_next = factor * path.q_next;
    } else {
        const double g0 = params.gamma[0], g1 = params.gamma[1], g2 = params.gamma[2];
        double q = q1, x = x1;
        path.q[0] = q;
        path.es[0] = q - x;
        for (std::size_t t = 1; t < n; ++t) {
            const double q_prev = q, x_prev = x;
            q = b0 + b1 * driver[t - 1] + b2 * q_prev;
            if (returns[t - 1] <= q_prev)
                x = g0 + g1 * (q_prev - returns[t - 1]) + g2 * x_prev;
            path.q[t] = q;
            path.es[t] = q - x;
        }
        path.q_next = b0 + b1 * driver[n - 1] + b2 * q;
        double x_next = x;
        if (returns[n - 1] <= q) x_next = g0 + g1 * (q - returns[n - 1]) + g2 * x;
        path.es_next = path.q_next - x_next;
    }

    for (std::size_t t = 0; t < n; ++t)
        if (!std::isfinite(path.q[t]) || !std::isfinite(path.es[t])) {
            path.finite = false;
            break;
        }
    if (!std::isfinite(path.q_next) || !std::isfinite(path.es_next)) path.finite = false;
    return path;
}

/// Per-observation strictly consistent joint (VaR, ES) score; +inf when the
/// shortfall is not negative. The violation indicator is weak (r <= q).
inline double joint_score(double r, double q, double es, double alpha) {
    if (!(es < 0)) return pos_inf;
    const double indicator = r <= q ? 1.0 : 0.0;
    return -std::log((alpha - 1.0) / es) - (r - q) * (alpha - indicator) / (alpha * es);
}

/// AL log-likelihood of the sample: exactly the negative of the summed joint
/// score. Returns -inf (a rejected point, not an error) when the path is
/// infeasible or any ES_t >= 0.
inline double al_log_likelihood(const RiskPath& path, std::span<const double> returns,
                                double alpha) {
    if (!path.finite || path.q.size() != returns.size()) return neg_inf;
    double ll = 0;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double es = path.es[t];
        if (!(es < 0)) return neg_inf;
        const double indicator = returns[t] <= path.q[t] ? 1.0 : 0.0;
        ll += std::log((alpha - 1.0) / es) +
              (returns[t] - path.q[t]) * (alpha - indicator) / (alpha * es);
    }
    return std::isfinite(ll) ? ll : neg_inf;
}

inline double joint_loss(const RiskPath& path, std::span<const double> returns, double alpha) {
    double s = 0;
    for (std::size_t t = 0; t < returns.size(); ++t)
        s += joint_score(returns[t], path.q[t], path.es[t], alpha);
    return s;
}

/// Standard quantile (tick) loss, strict violation indicator r < q.
/// Every term is non-negative.
inline double quantile_loss(const RiskPath& path, std::span<const double> returns, double alpha) {
    double s = 0;
    for (std::size_t t = 0; t < returns.size(); ++t) {
        const double indicator = returns[t] < path.q[t] ? 1.0 : 0.0;
        s += (alpha - indicator) * (returns[t] - path.q[t]);
    }
    return s;
}

inline LossReport loss_report(const RiskPath& path, std::span<const double> returns,
                              double alpha) {
    return {quantile_loss(path, returns, alpha), joint_loss(path, returns, alpha),
            returns.size()};
}

} // namespace tailrisk
