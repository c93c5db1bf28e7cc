#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

#include "tailrisk/errors.hpp"

namespace tailrisk {

inline double normal_pdf(double x) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::pdf(n01, x);
}

inline double normal_cdf(double x) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::cdf(n01, x);
}

inline double normal_quantile(double p) {
    static const boost::math::normal_distribution<double> n01;
    return boost::math::quantile(n01, p);
}

/// Upper-tail p-value of a chi-squared statistic.
inline double chi_squared_pvalue(double stat, int df) {
    if (!(stat >= 0)) return 1.0;       // NaN or negative: no evidence
    if (!std::isfinite(stat)) return 0.0;
    boost::math::chi_squared_distribution<double> dist(df);
    return boost::math::cdf(boost::math::complement(dist, stat));
}

inline double mean(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

/// Sample variance (n-1 denominator).
inline double variance(std::span<const double> v) {
    if (v.size() < 2) return 0.0;
    const double m = mean(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

inline double stdev(std::span<const double> v) { return std::sqrt(variance(v)); }

/// Lower empirical quantile: the ceil(p*n)-th order statistic.
inline double empirical_quantile(std::span<const double> v, double p) {
    if (v.empty()) throw validation_error("empirical_quantile: empty sample");
    std::vector<double> s(v.begin(), v.end());
    std::sort(s.begin(), s.end());
    const auto n = static_cast<double>(s.size());
    auto k = static_cast<std::size_t>(std::ceil(p * n));
    if (k < 1) k = 1;
    if (k > s.size()) k = s.size();
    return s[k - 1];
}

inline double rmse(std::span<const double> estimates, std::span<const double> truths) {
    double s = 0;
    for (std::size_t i = 0; i < estimates.size(); ++i) {
        const double e = estimates[i] - truths[i];
        s += e * e;
    }
    return estimates.empty() ? 0.0 : std::sqrt(s / static_cast<double>(estimates.size()));
}

} // namespace tailrisk
