#pragma once

#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/errors.hpp"
#include "tailrisk/market_data.hpp"

namespace tailrisk {

enum class MeasureKind { rv, rr, scrv, scrr, ssrv, ssrr };

inline std::string to_string(MeasureKind k) {
    switch (k) {
        case MeasureKind::rv: return "rv";
        case MeasureKind::rr: return "rr";
        case MeasureKind::scrv: return "scrv";
        case MeasureKind::scrr: return "scrr";
        case MeasureKind::ssrv: return "ssrv";
        case MeasureKind::ssrr: return "ssrr";
    }
    return "?";
}

inline MeasureKind measure_kind_from_string(const std::string& s) {
    if (s == "rv") return MeasureKind::rv;
    if (s == "rr") return MeasureKind::rr;
    if (s == "scrv") return MeasureKind::scrv;
    if (s == "scrr") return MeasureKind::scrr;
    if (s == "ssrv") return MeasureKind::ssrv;
    if (s == "ssrr") return MeasureKind::ssrr;
    throw parse_error("unknown measure kind '" + s + "'");
}

/// Daily variance-scale measure series. `unit` names the return dimension the
/// values square (percent means values are in percent^2).
struct RealizedSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    MeasureKind kind = MeasureKind::rv;
    int interval_minutes = 0;
    std::optional<int> subsample_minutes;
    ReturnScale unit = ReturnScale::raw;

    std::size_t size() const { return values.size(); }
};

/// Daily volatility-scale driver X_t feeding the quantile recursion.
struct DriverSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    ReturnScale unit = ReturnScale::raw;

    std::size_t size() const { return values.size(); }
};

struct ScalingWindow {
    int q = 66;
};

namespace detail {
inline void check_grid_prices(const IntradayGrid& g) {
    if (g.bars.empty()) throw validation_error("empty grid on " + g.date.to_string());
    if (!(g.day_open > 0))
        throw validation_error("non-positive day open on " + g.date.to_string());
    for (const auto& b : g.bars)
        if (!(b.low > 0) || !(b.close > 0) || b.high < b.low)
            throw validation_error("bad bar prices on " + g.date.to_string());
}

// within-day log closes, index 0 = day-open reference price
inline std::vector<double> log_close_path(const IntradayGrid& g) {
    std::vector<double> c(g.n() + 1);
    c[0] = std::log(g.day_open);
    for (std::size_t i = 0; i < g.n(); ++i) c[i + 1] = std::log(g.bars[i].close);
    return c;
}
} // namespace detail

/// RV: sum of squared intraday log close-to-close returns; the first return
/// is taken against the day's opening price (overnight move excluded).
inline double realized_variance(const IntradayGrid& grid) {
    detail::check_grid_prices(grid);
    const auto c = detail::log_close_path(grid);
    double s = 0;
    for (std::size_t i = 1; i < c.size(); ++i) {
        const double d = c[i] - c[i - 1];
        s += d * d;
    }
    return s;
}

/// RR: sum of squared per-bar log ranges over 4 log 2.
inline double realized_range(const IntradayGrid& grid) {
    detail::check_grid_prices(grid);
    double s = 0;
    for (const auto& b : grid.bars) {
        const double d = std::log(b.high) - std::log(b.low);
        s += d * d;
    }
    return s / four_log_two;
}

/// Sub-sampled RV: the coarse-grid RV averaged over all fine-grid offsets.
/// Offset i uses closes i, i+n_k, i+2*n_k, ... on the fine path; a final step
/// that would run past the last bar is dropped.
inline double subsampled_rv(const IntradayGrid& grid, int coarse_minutes, int fine_minutes) {
    if (fine_minutes != grid.interval_minutes)
        throw validation_error("subsampled_rv: grid interval is " +
                               std::to_string(grid.interval_minutes) + " min, not " +
                               std::to_string(fine_minutes));
    if (coarse_minutes < fine_minutes || coarse_minutes % fine_minutes != 0)
        throw validation_error("subsampled_rv: coarse interval must be a multiple of fine");
    detail::check_grid_prices(grid);
    const int nk = coarse_minutes / fine_minutes;
    const auto c = detail::log_close_path(grid);
    const auto last = static_cast<int>(grid.n());

    double total = 0;
    bool any = false;
    for (int i = 0; i < nk; ++i) {
        double rv_i = 0;
        bool nonempty = false;
        for (int end = i + nk; end <= last; end += nk) {
            const double d = c[static_cast<std::size_t>(end)] -
                             c[static_cast<std::size_t>(end - nk)];
            rv_i += d * d;
            nonempty = true;
        }
        if (nonempty) any = true;
        total += rv_i;
    }
    if (!any)
        throw validation_error("subsampled_rv: no full coarse step on " + grid.date.to_string());
    return total / nk;
}

/// Sub-sampled RR: per offset, sum of squared log ranges of coarse blocks
/// whose extrema run over the fine bars inside the block; a final block that
/// would run past the last bar is truncated to the available bars.
inline double subsampled_rr(const IntradayGrid& grid, int coarse_minutes, int fine_minutes) {
    if (fine_minutes != grid.interval_minutes)
        throw validation_error("subsampled_rr: grid interval is " +
                               std::to_string(grid.interval_minutes) + " min, not " +
                               std::to_string(fine_minutes));
    if (coarse_minutes < fine_minutes || coarse_minutes % fine_minutes != 0)
        throw validation_error("subsampled_rr: coarse interval must be a multiple of fine");
    detail::check_grid_prices(grid);
    const int nk = coarse_minutes / fine_minutes;
    const auto last = static_cast<int>(grid.n());

    double total = 0;
    bool any = false;
    for (int i = 0; i < nk; ++i) {
        double rr_i = 0;
        for (int start = i; start < last; start += nk) {
            const int end = std::min(start + nk, last); // truncated final block
            double hi = grid.bars[static_cast<std::size_t>(start)].high;
            double lo = grid.bars[static_cast<std::size_t>(start)].low;
            for (int j = start + 1; j < end; ++j) {
                hi = std::max(hi, grid.bars[static_cast<std::size_t>(j)].high);
                lo = std::min(lo, grid.bars[static_cast<std::size_t>(j)].low);
            }
            const double d = std::log(hi) - std::log(lo);
            rr_i += d * d;
            any = true;
        }
        total += rr_i;
    }
    if (!any)
        throw validation_error("subsampled_rr: no coarse block on " + grid.date.to_string());
    return total / (four_log_two * nk);
}

/// Rescales a high-frequency measure by the trailing-q ratio of a daily proxy
/// to the measure. The first q days have no defined value and are dropped.
inline RealizedSeries scaled_measure(const RealizedSeries& high_freq,
                                     const RealizedSeries& daily_proxy,
                                     const ScalingWindow& window = {}) {
    if (window.q < 1) throw validation_error("scaled_measure: q must be >= 1");
    if (high_freq.size() != daily_proxy.size())
        throw validation_error("scaled_measure: series lengths differ");
    for (std::size_t i = 0; i < high_freq.size(); ++i)
        if (high_freq.dates[i] != daily_proxy.dates[i])
            throw validation_error("scaled_measure: date mismatch at " +
                                   high_freq.dates[i].to_string());
    const auto q = static_cast<std::size_t>(window.q);
    if (high_freq.size() <= q)
        throw validation_error("scaled_measure: need more than q days");

    RealizedSeries out;
    out.kind = high_freq.kind == MeasureKind::rv ? MeasureKind::scrv : MeasureKind::scrr;
    out.interval_minutes = high_freq.interval_minutes;
    out.unit = high_freq.unit;
    for (std::size_t t = q; t < high_freq.size(); ++t) {
        double num = 0, den = 0;
        for (std::size_t l = 1; l <= q; ++l) {
            num += daily_proxy.values[t - l];
            den += high_freq.values[t - l];
        }
        if (!(den > 0))
            throw validation_error("scaled_measure: zero trailing sum at " +
                                   high_freq.dates[t].to_string());
        out.dates.push_back(high_freq.dates[t]);
        out.values.push_back(num / den * high_freq.values[t]);
    }
    return out;
}

/// Volatility-scale driver: element-wise square root of a variance series.
inline DriverSeries driver_from_measure(const RealizedSeries& series) {
    DriverSeries d;
    d.dates = series.dates;
    d.unit = series.unit;
    d.values.reserve(series.size());
    for (double v : series.values) {
        if (v < 0) throw validation_error("driver_from_measure: negative measure value");
        d.values.push_back(std::sqrt(v));
    }
    return d;
}

/// Per-day series builders over a list of grids.

inline RealizedSeries rv_series(std::span<const IntradayGrid> grids, ReturnScale unit) {
    RealizedSeries s;
    s.kind = MeasureKind::rv;
    s.unit = unit;
    const double k = unit == ReturnScale::percent ? 1e4 : 1.0;
    for (const auto& g : grids) {
        if (s.interval_minutes == 0) s.interval_minutes = g.interval_minutes;
        s.dates.push_back(g.date);
        s.values.push_back(k * realized_variance(g));
    }
    return s;
}

inline RealizedSeries rr_series(std::span<const IntradayGrid> grids, ReturnScale unit) {
    RealizedSeries s;
    s.kind = MeasureKind::rr;
    s.unit = unit;
    const double k = unit == ReturnScale::percent ? 1e4 : 1.0;
    for (const auto& g : grids) {
        if (s.interval_minutes == 0) s.interval_minutes = g.interval_minutes;
        s.dates.push_back(g.date);
        s.values.push_back(k * realized_range(g));
    }
    return s;
}

inline RealizedSeries subsampled_series(std::span<const IntradayGrid> grids, MeasureKind kind,
                                        int coarse_minutes, ReturnScale unit) {
    RealizedSeries s;
    s.kind = kind;
    s.unit = unit;
    const double k = unit == ReturnScale::percent ? 1e4 : 1.0;
    for (const auto& g : grids) {
        if (s.interval_minutes == 0) s.interval_minutes = g.interval_minutes;
        s.subsample_minutes = coarse_minutes;
        s.dates.push_back(g.date);
        s.values.push_back(k * (kind == MeasureKind::ssrv
                                    ? subsampled_rv(g, coarse_minutes, g.interval_minutes)
                                    : subsampled_rr(g, coarse_minutes, g.interval_minutes)));
    }
    return s;
}

/// Daily squared close-to-close return per grid day (needs prev_close);
/// days without a prior close are skipped. Proxy for scaling RV.
inline RealizedSeries daily_squared_return_series(std::span<const IntradayGrid> grids,
                                                  ReturnScale unit) {
    RealizedSeries s;
    s.kind = MeasureKind::rv;
    s.unit = unit;
    s.interval_minutes = 0;
    const double k = unit == ReturnScale::percent ? 1e4 : 1.0;
    for (const auto& g : grids) {
        if (!g.prev_close) continue;
        const double r = std::log(g.bars.back().close) - std::log(*g.prev_close);
        s.dates.push_back(g.date);
        s.values.push_back(k * r * r);
    }
    return s;
}

/// Daily Parkinson squared range from the session extrema of each grid.
/// Proxy for scaling RR.
inline RealizedSeries daily_squared_range_series(std::span<const IntradayGrid> grids,
                                                 ReturnScale unit) {
    RealizedSeries s;
    s.kind = MeasureKind::rr;
    s.unit = unit;
    s.interval_minutes = 0;
    const double k = unit == ReturnScale::percent ? 1e4 : 1.0;
    for (const auto& g : grids) {
        detail::check_grid_prices(g);
        double hi = g.bars.front().high, lo = g.bars.front().low;
        for (const auto& b : g.bars) {
            hi = std::max(hi, b.high);
            lo = std::min(lo, b.low);
        }
        const double d = std::log(hi) - std::log(lo);
        s.dates.push_back(g.date);
        s.values.push_back(k * d * d / four_log_two);
    }
    return s;
}

/// Restricts a series to the dates present in `dates`, in that order.
inline RealizedSeries align_to_dates(const RealizedSeries& s, std::span<const Date> dates) {
    RealizedSeries out;
    out.kind = s.kind;
    out.interval_minutes = s.interval_minutes;
    out.subsample_minutes = s.subsample_minutes;
    out.unit = s.unit;
    std::size_t j = 0;
    for (const Date& d : dates) {
        while (j < s.size() && s.dates[j] < d) ++j;
        if (j == s.size() || s.dates[j] != d)
            throw validation_error("missing measure value for " + d.to_string());
        out.dates.push_back(d);
        out.values.push_back(s.values[j]);
    }
    return out;
}

} // namespace tailrisk
