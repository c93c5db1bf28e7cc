// Regenerates the packaged sample datasets under data/ (seeded, so the files
// are stable): a synthetic daily RV series, a simulated daily OHLC history
// and a few weeks of 1-minute bars.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <vector>

#include "tailrisk/csv.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/sim.hpp"

using namespace tailrisk;

namespace {

Date next_weekday(Date d) {
    d.serial += 1;
    while ((d.serial + 4) % 7 == 0 || (d.serial + 4) % 7 == 1) d.serial += 1; // skip Sat/Sun
    return d;
}

void write_rv(const std::string& dir) {
    const auto rv = synthetic_rv_series(1905);
    Date d = Date::from_ymd(2008, 1, 2);
    std::vector<std::vector<std::string>> rows;
    for (double v : rv) {
        rows.push_back({d.to_string(), "rv", format_double(v, 10)});
        d = next_weekday(d);
    }
    write_csv(dir + "/sample_rv_1905.csv", {"date", "kind", "value"}, rows);
}

// Daily prices whose returns are genuinely driven by the packaged RV series,
// on the same calendar, so the fit/forecast walkthroughs are coherent.
void write_daily(const std::string& dir) {
    DgpSpec dgp;
    dgp.n = 1300;
    dgp.driver = DgpSpec::Driver::external_rv;
    dgp.rv = synthetic_rv_series(1905);
    dgp.rv.resize(dgp.n);
    Rng rng = seeded_rng(20210907, 0);
    const SimPath path = simulate_abs_garch(dgp, rng);
    std::uniform_real_distribution<double> pad(0.0, 0.004);
    std::vector<DailyBar> bars;
    Date d = Date::from_ymd(2008, 1, 2);
    double close = 1000.0;
    for (std::size_t i = 0; i <= dgp.n; ++i) {
        const double open = close;
        if (i > 0) close = open * std::exp(path.returns[i - 1] / 100.0);
        DailyBar b;
        b.date = d;
        b.open = open;
        b.close = close;
        b.high = std::max(open, close) * (1.0 + pad(rng));
        b.low = std::min(open, close) * (1.0 - pad(rng));
        bars.push_back(b);
        d = next_weekday(d);
    }
    write_daily_csv(dir + "/sample_daily.csv", bars);
}

void write_intraday(const std::string& dir) {
    Rng rng = seeded_rng(20210908, 0);
    std::normal_distribution<double> step(0.0, 4e-4);
    std::uniform_real_distribution<double> pad(0.0, 2e-4);
    std::ofstream f(dir + "/sample_intraday_1min.csv");
    f << "timestamp,open,high,low,close\n";
    Date d = Date::from_ymd(2021, 6, 1);
    double price = 500.0;
    for (int day = 0; day < 15; ++day) {
        for (int i = 0; i < 390; ++i) {
            const int minute = 9 * 60 + 30 + i;
            const double open = price;
            price = open * std::exp(step(rng));
            const double hi = std::max(open, price) * (1.0 + pad(rng));
            const double lo = std::min(open, price) * (1.0 - pad(rng));
            char buf[16];
            std::snprintf(buf, sizeof(buf), " %02d:%02d", minute / 60, minute % 60);
            f << d.to_string() << buf << ',' << format_double(open, 10) << ','
              << format_double(hi, 10) << ',' << format_double(lo, 10) << ','
              << format_double(price, 10) << '\n';
        }
        d = next_weekday(d);
        price *= std::exp(step(rng) * 3.0); // overnight move
    }
}

} // namespace

int main(int argc, char** argv) {
    const std::string dir = argc > 1 ? argv[1] : "data";
    std::filesystem::create_directories(dir);
    write_rv(dir);
    write_daily(dir);
    write_intraday(dir);
    std::cout << "wrote sample data under " << dir << '\n';
    return 0;
}
