#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/csv.hpp"
#include "tailrisk/dates.hpp"
#include "tailrisk/errors.hpp"

namespace tailrisk {

inline constexpr double four_log_two = 4.0 * 0.69314718055994530942;

enum class ReturnScale { raw, percent };

struct DailyBar {
    Date date;
    double open = 0, high = 0, low = 0, close = 0;

    void validate() const {
        if (!(open > 0 && high > 0 && low > 0 && close > 0))
            throw validation_error("non-positive price on " + date.to_string());
        if (high < low || low > std::min(open, close) || high < std::max(open, close))
            throw validation_error("OHLC invariant violated on " + date.to_string());
    }
};

/// One trading day of regular intraday bars. `day_open` is the opening price
/// of the first interval (the day's reference price for the first intraday
/// return); `prev_close` is the prior day's last close when known.
struct IntradayGrid {
    struct Bar {
        double close = 0, high = 0, low = 0;
    };

    Date date;
    int interval_minutes = 0;
    double day_open = 0;
    std::vector<Bar> bars;
    std::optional<double> prev_close;

    std::size_t n() const { return bars.size(); }
};

struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;
    ReturnScale scale = ReturnScale::percent;

    std::size_t size() const { return values.size(); }
};

/// Logical-to-actual column names for daily CSV files.
struct DailySchema {
    std::string date = "date";
    std::string open = "open";
    std::string high = "high";
    std::string low = "low";
    std::string close = "close";
};

inline std::vector<DailyBar> load_daily_csv(const std::string& path,
                                            const DailySchema& schema = {}) {
    const CsvTable t = read_csv(path);
    const int cd = t.column(schema.date);
    const int co = t.column(schema.open);
    const int ch = t.column(schema.high);
    const int cl = t.column(schema.low);
    const int cc = t.column(schema.close);

    std::vector<DailyBar> bars;
    bars.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        DailyBar b;
        try {
            b.date = parse_date(t.rows[r][static_cast<std::size_t>(cd)]);
        } catch (const parse_error& e) {
            throw parse_error(path + ":" + std::to_string(t.line_of(r)) + ": " + e.what());
        }
        b.open = csv_double(t, r, co, path);
        b.high = csv_double(t, r, ch, path);
        b.low = csv_double(t, r, cl, path);
        b.close = csv_double(t, r, cc, path);
        b.validate();
        bars.push_back(b);
    }
    std::stable_sort(bars.begin(), bars.end(),
                     [](const DailyBar& a, const DailyBar& b) { return a.date < b.date; });
    for (std::size_t i = 1; i < bars.size(); ++i)
        if (bars[i].date == bars[i - 1].date)
            throw validation_error("duplicate date " + bars[i].date.to_string() + " in " + path);
    return bars;
}

struct IntradayOptions {
    /// Days whose bar count deviates from the file's modal count by more than
    /// this fraction are dropped (sub-sampling needs a regular partition).
    double max_bar_count_deviation = 0.10;
    std::vector<std::string>* warnings = nullptr;
};

/// Loads regular intraday bars, one grid per trading day. Timestamps within a
/// day must be spaced exactly `interval_minutes` apart; gap days are fine.
/// prev_close chains from the prior loaded day (first day: unset).
inline std::vector<IntradayGrid> load_intraday_csv(const std::string& path, int interval_minutes,
                                                   const IntradayOptions& opt = {}) {
    if (interval_minutes < 1) throw validation_error("interval_minutes must be >= 1");
    const CsvTable t = read_csv(path);
    const int cts = t.column("timestamp");
    const int co = t.column("open");
    const int ch = t.column("high");
    const int cl = t.column("low");
    const int cc = t.column("close");

    std::vector<IntradayGrid> grids;
    Timestamp prev_ts{};
    bool have_prev = false;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        Timestamp ts;
        try {
            ts = parse_timestamp(t.rows[r][static_cast<std::size_t>(cts)]);
        } catch (const parse_error& e) {
            throw parse_error(path + ":" + std::to_string(t.line_of(r)) + ": " + e.what());
        }
        if (have_prev && ts <= prev_ts)
            throw validation_error("timestamps not increasing at " + ts.to_string());
        const double open = csv_double(t, r, co, path);
        const double high = csv_double(t, r, ch, path);
        const double low = csv_double(t, r, cl, path);
        const double close = csv_double(t, r, cc, path);
        if (!(low > 0) || high < low || !(close > 0) || !(open > 0))
            throw validation_error("bad bar (high < low or non-positive price) at " +
                                   ts.to_string());

        if (grids.empty() || grids.back().date != ts.date) {
            IntradayGrid g;
            g.date = ts.date;
            g.interval_minutes = interval_minutes;
            g.day_open = open;
            if (!grids.empty()) g.prev_close = grids.back().bars.back().close;
            grids.push_back(std::move(g));
        } else {
            const int gap = ts.minute_of_day - prev_ts.minute_of_day;
            if (gap != interval_minutes)
                throw validation_error("irregular spacing (" + std::to_string(gap) +
                                       " min) at " + ts.to_string());
        }
        grids.back().bars.push_back({close, high, low});
        prev_ts = ts;
        have_prev = true;
    }

    if (grids.size() > 2 && opt.max_bar_count_deviation > 0) {
        std::map<std::size_t, int> counts;
        for (const auto& g : grids) ++counts[g.n()];
        std::size_t modal = 0;
        int best = -1;
        for (auto [n, c] : counts)
            if (c > best) {
                best = c;
                modal = n;
            }
        std::vector<IntradayGrid> kept;
        kept.reserve(grids.size());
        for (auto& g : grids) {
            const double dev =
                std::abs(static_cast<double>(g.n()) - static_cast<double>(modal)) /
                static_cast<double>(modal);
            if (dev > opt.max_bar_count_deviation) {
                if (opt.warnings)
                    opt.warnings->push_back("dropped " + g.date.to_string() + ": " +
                                            std::to_string(g.n()) + " bars vs modal " +
                                            std::to_string(modal));
                continue;
            }
            kept.push_back(std::move(g));
        }
        // re-chain prev_close after drops
        for (std::size_t i = 0; i < kept.size(); ++i)
            kept[i].prev_close = i ? std::optional<double>(kept[i - 1].bars.back().close)
                                   : std::nullopt;
        return kept;
    }
    return grids;
}

/// r_t = log(C_t) - log(C_{t-1}), times 100 under percent scale.
inline ReturnSeries log_returns(std::span<const DailyBar> bars,
                                ReturnScale scale = ReturnScale::percent) {
    if (bars.size() < 2) throw validation_error("log_returns needs at least 2 bars");
    ReturnSeries out;
    out.scale = scale;
    out.dates.reserve(bars.size() - 1);
    out.values.reserve(bars.size() - 1);
    const double k = scale == ReturnScale::percent ? 100.0 : 1.0;
    for (std::size_t i = 1; i < bars.size(); ++i) {
        if (!(bars[i].close > 0) || !(bars[i - 1].close > 0))
            throw validation_error("non-positive close on " + bars[i].date.to_string());
        out.dates.push_back(bars[i].date);
        out.values.push_back(k * (std::log(bars[i].close) - std::log(bars[i - 1].close)));
    }
    return out;
}

/// Parkinson squared-range variance proxy: (log H - log L)^2 / (4 log 2).
inline double parkinson_range(const DailyBar& bar) {
    if (!(bar.low > 0) || bar.high < bar.low)
        throw validation_error("parkinson_range: bad high/low on " + bar.date.to_string());
    const double d = std::log(bar.high) - std::log(bar.low);
    return d * d / four_log_two;
}

inline void write_daily_csv(const std::string& path, std::span<const DailyBar> bars) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(bars.size());
    for (const auto& b : bars)
        rows.push_back({b.date.to_string(), format_double(b.open, 12), format_double(b.high, 12),
                        format_double(b.low, 12), format_double(b.close, 12)});
    write_csv(path, {"date", "open", "high", "low", "close"}, rows);
}

} // namespace tailrisk
