#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "tailrisk/market_data.hpp"
#include "tailrisk/rng.hpp"

using namespace tailrisk;

namespace {
std::string write_temp(const std::string& name, const std::string& text) {
    const auto path = std::filesystem::temp_directory_path() / name;
    std::ofstream f(path);
    f << text;
    return path.string();
}
} // namespace

TEST_CASE("load_daily_csv parses and sorts") {
    const auto path = write_temp("daily_ok.csv",
                                 "date,open,high,low,close\n"
                                 "2020-01-03,100.5,102,100,101\n"
                                 "2020-01-02,100,101,99,100.5\n");
    const auto bars = load_daily_csv(path);
    REQUIRE(bars.size() == 2);
    CHECK(bars[0].date.to_string() == "2020-01-02");
    CHECK(bars[1].close == 101.0);
    std::filesystem::remove(path);
}

TEST_CASE("load_daily_csv degenerate and error cases") {
    const auto empty = write_temp("daily_empty.csv", "date,open,high,low,close\n");
    CHECK(load_daily_csv(empty).empty());
    std::filesystem::remove(empty);

    const auto bad = write_temp("daily_bad.csv",
                                "date,open,high,low,close\n"
                                "2020-01-02,100,99,100,100\n"); // high < low
    try {
        load_daily_csv(bad);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("2020-01-02") != std::string::npos);
    }
    std::filesystem::remove(bad);

    const auto dup = write_temp("daily_dup.csv",
                                "date,open,high,low,close\n"
                                "2020-01-02,100,101,99,100\n"
                                "2020-01-02,100,101,99,100\n");
    CHECK_THROWS_AS(load_daily_csv(dup), validation_error);
    std::filesystem::remove(dup);

    const auto mal = write_temp("daily_mal.csv",
                                "date,open,high,low,close\n"
                                "2020-01-02,100,101,xx,100\n");
    CHECK_THROWS_AS(load_daily_csv(mal), parse_error);
    std::filesystem::remove(mal);
}

TEST_CASE("load_intraday_csv groups days and chains prev_close") {
    std::string text = "timestamp,open,high,low,close\n";
    for (int i = 0; i < 78; ++i) {
        const int minute = 9 * 60 + 35 + 5 * i;
        char buf[64];
        std::snprintf(buf, sizeof(buf), "2020-01-02 %02d:%02d,100,101,99,100.5\n", minute / 60,
                      minute % 60);
        text += buf;
    }
    text += "2020-01-06 09:35,100.5,101,100,100.8\n";
    text += "2020-01-06 09:40,100.8,101,100,100.9\n";
    const auto path = write_temp("intraday_ok.csv", text);
    IntradayOptions opt;
    opt.max_bar_count_deviation = 0; // keep the short second day
    const auto grids = load_intraday_csv(path, 5, opt);
    REQUIRE(grids.size() == 2);
    CHECK(grids[0].n() == 78);
    CHECK_FALSE(grids[0].prev_close.has_value());
    REQUIRE(grids[1].prev_close.has_value());
    CHECK(*grids[1].prev_close == 100.5);
    CHECK(grids[1].day_open == 100.5);
    std::filesystem::remove(path);
}

TEST_CASE("load_intraday_csv rejects irregular spacing and bad bars") {
    const auto irregular = write_temp("intraday_irr.csv",
                                      "timestamp,open,high,low,close\n"
                                      "2020-01-02 09:35,100,101,99,100\n"
                                      "2020-01-02 09:41,100,101,99,100\n");
    CHECK_THROWS_AS(load_intraday_csv(irregular, 5), validation_error);
    std::filesystem::remove(irregular);

    const auto bad = write_temp("intraday_bad.csv",
                                "timestamp,open,high,low,close\n"
                                "2020-01-02 09:35,100,99,100,100\n");
    try {
        load_intraday_csv(bad, 5);
        FAIL("expected validation_error");
    } catch (const validation_error& e) {
        CHECK(std::string(e.what()).find("09:35") != std::string::npos);
    }
    std::filesystem::remove(bad);
}

TEST_CASE("modal bar-count filter drops deficient days") {
    std::string text = "timestamp,open,high,low,close\n";
    auto add_day = [&](const std::string& date, int bars) {
        for (int i = 0; i < bars; ++i) {
            const int minute = 10 * 60 + 5 * i;
            char buf[80];
            std::snprintf(buf, sizeof(buf), "%s %02d:%02d,100,101,99,100\n", date.c_str(),
                          minute / 60, minute % 60);
            text += buf;
        }
    };
    add_day("2020-01-02", 50);
    add_day("2020-01-03", 50);
    add_day("2020-01-06", 50);
    add_day("2020-01-07", 10); // 80% short
    const auto path = write_temp("intraday_modal.csv", text);
    std::vector<std::string> warnings;
    IntradayOptions opt;
    opt.warnings = &warnings;
    const auto grids = load_intraday_csv(path, 5, opt);
    CHECK(grids.size() == 3);
    REQUIRE(warnings.size() == 1);
    CHECK(warnings[0].find("2020-01-07") != std::string::npos);
    std::filesystem::remove(path);
}

TEST_CASE("log_returns matches hand-computed values") {
    std::vector<DailyBar> bars;
    for (double c : {100.0, 105.0, 103.95})
        bars.push_back({Date::from_ymd(2020, 1, 2 + static_cast<int>(bars.size())), c, c, c, c});
    const ReturnSeries pct = log_returns(bars, ReturnScale::percent);
    REQUIRE(pct.size() == 2);
    CHECK_THAT(pct.values[0], Catch::Matchers::WithinAbs(4.879, 5e-4));
    CHECK_THAT(pct.values[1], Catch::Matchers::WithinAbs(-1.005, 5e-4));

    std::vector<DailyBar> flat = {{Date::from_ymd(2020, 1, 2), 100, 100, 100, 100},
                                  {Date::from_ymd(2020, 1, 3), 100, 100, 100, 100}};
    CHECK(log_returns(flat, ReturnScale::raw).values[0] == 0.0);

    std::vector<DailyBar> exp_move = {{Date::from_ymd(2020, 1, 2), 100, 100, 100, 100},
                                      {Date::from_ymd(2020, 1, 3), 100, 101.2, 100,
                                       100 * std::exp(0.01)}};
    CHECK_THAT(log_returns(exp_move, ReturnScale::raw).values[0],
               Catch::Matchers::WithinAbs(0.01, 1e-12));

    CHECK_THROWS_AS(log_returns(std::vector<DailyBar>{flat[0]}, ReturnScale::raw),
                    validation_error);
}

TEST_CASE("log_returns is invariant to a common price factor") {
    Rng rng = seeded_rng(11, 0);
    std::uniform_real_distribution<double> u(-0.03, 0.03);
    std::vector<DailyBar> bars, scaled;
    double c = 100;
    for (int i = 0; i < 40; ++i) {
        c *= std::exp(u(rng));
        bars.push_back({Date{i}, c, c * 1.01, c * 0.99, c});
        scaled.push_back({Date{i}, 7 * c, 7 * c * 1.01, 7 * c * 0.99, 7 * c});
    }
    const auto a = log_returns(bars, ReturnScale::percent);
    const auto b = log_returns(scaled, ReturnScale::percent);
    for (std::size_t i = 0; i < a.size(); ++i)
        CHECK_THAT(a.values[i], Catch::Matchers::WithinAbs(b.values[i], 1e-12));
}

TEST_CASE("parkinson_range hand values and sign") {
    DailyBar flat{Date{0}, 100, 100, 100, 100};
    CHECK(parkinson_range(flat) == 0.0);

    DailyBar wide{Date{0}, 150, 100 * std::exp(2.0), 100, 120};
    CHECK_THAT(parkinson_range(wide), Catch::Matchers::WithinAbs(1.4427, 5e-5));

    DailyBar twice{Date{0}, 150, 200, 100, 150};
    CHECK_THAT(parkinson_range(twice), Catch::Matchers::WithinAbs(0.17329, 5e-6));

    Rng rng = seeded_rng(3, 0);
    std::uniform_real_distribution<double> u(0.0, 0.1);
    for (int i = 0; i < 200; ++i) {
        const double lo = 90 + 20 * u(rng) * 10;
        const double hi = lo * std::exp(u(rng));
        DailyBar b{Date{i}, lo, hi, lo, hi};
        CHECK(parkinson_range(b) >= 0.0);
    }
}

TEST_CASE("daily csv round trip preserves values") {
    Rng rng = seeded_rng(5, 0);
    std::uniform_real_distribution<double> u(-0.02, 0.02);
    std::vector<DailyBar> bars;
    double c = 250;
    for (int i = 0; i < 30; ++i) {
        const double o = c;
        c *= std::exp(u(rng));
        const double hi = std::max(o, c) * 1.004;
        const double lo = std::min(o, c) * 0.996;
        bars.push_back({Date::from_ymd(2021, 3, 1 + i % 28), o, hi, lo, c});
        bars.back().date = Date{bars.back().date.serial + (i / 28) * 40};
    }
    const auto path =
        (std::filesystem::temp_directory_path() / "tailrisk_roundtrip.csv").string();
    write_daily_csv(path, bars);
    const auto loaded = load_daily_csv(path);
    REQUIRE(loaded.size() == bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
        CHECK(loaded[i].date == bars[i].date);
        CHECK_THAT(loaded[i].close, Catch::Matchers::WithinRel(bars[i].close, 1e-11));
        CHECK_THAT(loaded[i].high, Catch::Matchers::WithinRel(bars[i].high, 1e-11));
    }
    std::filesystem::remove(path);
}
