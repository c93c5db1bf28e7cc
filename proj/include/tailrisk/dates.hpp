#pragma once

#include <compare>
#include <cstdint>
#include <cstdio>
#include <string>

#include "tailrisk/errors.hpp"

namespace tailrisk {

/// Naive calendar date stored as days since 1970-01-01. No timezone logic.
struct Date {
    std::int32_t serial = 0;

    auto operator<=>(const Date&) const = default;

    static Date from_ymd(int y, int m, int d) {
        // days-from-civil (Howard Hinnant's algorithm)
        y -= m <= 2;
        const int era = (y >= 0 ? y : y - 399) / 400;
        const unsigned yoe = static_cast<unsigned>(y - era * 400);
        const unsigned doy = (153u * static_cast<unsigned>(m + (m > 2 ? -3 : 9)) + 2u) / 5u +
                             static_cast<unsigned>(d) - 1u;
        const unsigned doe = yoe * 365u + yoe / 4u - yoe / 100u + doy;
        return Date{static_cast<std::int32_t>(era * 146097 + static_cast<int>(doe) - 719468)};
    }

    void to_ymd(int& y, unsigned& m, unsigned& d) const {
        std::int64_t z = serial + 719468;
        const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
        const unsigned doe = static_cast<unsigned>(z - era * 146097);
        const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
        const std::int64_t yy = static_cast<std::int64_t>(yoe) + era * 400;
        const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
        const unsigned mp = (5 * doy + 2) / 153;
        d = doy - (153 * mp + 2) / 5 + 1;
        m = mp + (mp < 10 ? 3 : -9);
        y = static_cast<int>(yy + (m <= 2));
    }

    std::string to_string() const {
        int y;
        unsigned m, d;
        to_ymd(y, m, d);
        char buf[16];
        std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", y, m, d);
        return buf;
    }
};

namespace detail {
inline bool all_digits(const std::string& s, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i)
        if (s[i] < '0' || s[i] > '9') return false;
    return true;
}
inline int to_int(const std::string& s, std::size_t lo, std::size_t hi) {
    int v = 0;
    for (std::size_t i = lo; i < hi; ++i) v = v * 10 + (s[i] - '0');
    return v;
}
} // namespace detail

/// Parses "YYYY-MM-DD".
inline Date parse_date(const std::string& s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-' ||
        !detail::all_digits(s, 0, 4) || !detail::all_digits(s, 5, 7) ||
        !detail::all_digits(s, 8, 10))
        throw parse_error("bad date '" + s + "', expected YYYY-MM-DD");
    const int y = detail::to_int(s, 0, 4);
    const int m = detail::to_int(s, 5, 7);
    const int d = detail::to_int(s, 8, 10);
    if (m < 1 || m > 12 || d < 1 || d > 31)
        throw parse_error("bad date '" + s + "'");
    return Date::from_ymd(y, m, d);
}

/// Naive intraday timestamp: date plus minute of day.
struct Timestamp {
    Date date;
    int minute_of_day = 0;

    auto operator<=>(const Timestamp&) const = default;

    std::string to_string() const {
        char buf[16];
        std::snprintf(buf, sizeof(buf), " %02d:%02d", minute_of_day / 60, minute_of_day % 60);
        return date.to_string() + buf;
    }
};

/// Parses ISO-8601 "YYYY-MM-DD HH:MM[:SS]" or "YYYY-MM-DDTHH:MM[:SS]".
/// Seconds, when present, must be zero (regular minute grids only).
inline Timestamp parse_timestamp(const std::string& s) {
    if (s.size() < 16 || (s[10] != ' ' && s[10] != 'T'))
        throw parse_error("bad timestamp '" + s + "'");
    Timestamp ts;
    ts.date = parse_date(s.substr(0, 10));
    if (s[13] != ':' || !detail::all_digits(s, 11, 13) || !detail::all_digits(s, 14, 16))
        throw parse_error("bad timestamp '" + s + "'");
    const int hh = detail::to_int(s, 11, 13);
    const int mm = detail::to_int(s, 14, 16);
    if (hh > 23 || mm > 59) throw parse_error("bad timestamp '" + s + "'");
    if (s.size() > 16) {
        if (s.size() != 19 || s[16] != ':' || !detail::all_digits(s, 17, 19))
            throw parse_error("bad timestamp '" + s + "'");
        if (detail::to_int(s, 17, 19) != 0)
            throw parse_error("timestamp '" + s + "' is not on a whole minute");
    }
    ts.minute_of_day = hh * 60 + mm;
    return ts;
}

} // namespace tailrisk
