#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "tailrisk/csv.hpp"
#include "tailrisk/dates.hpp"
#include "tailrisk/neldermead.hpp"
#include "tailrisk/parallel.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/stats.hpp"
#include "tailrisk/toml.hpp"

using namespace tailrisk;

TEST_CASE("date round trip and ordering") {
    const Date d = parse_date("2020-01-02");
    CHECK(d.to_string() == "2020-01-02");
    CHECK(parse_date("2020-01-03") > d);
    CHECK(parse_date("2020-02-29").to_string() == "2020-02-29"); // leap year
    CHECK(parse_date("2020-03-01").serial - parse_date("2020-02-28").serial == 2);
    CHECK_THROWS_AS(parse_date("2020-13-01"), parse_error);
    CHECK_THROWS_AS(parse_date("2020/01/01"), parse_error);
}

TEST_CASE("timestamp parsing") {
    const Timestamp t = parse_timestamp("2020-01-02 09:35");
    CHECK(t.minute_of_day == 9 * 60 + 35);
    CHECK(parse_timestamp("2020-01-02T09:35:00") == t);
    CHECK_THROWS_AS(parse_timestamp("2020-01-02 09:35:30"), parse_error);
    CHECK_THROWS_AS(parse_timestamp("2020-01-02 24:00"), parse_error);
}

TEST_CASE("csv reader reports line numbers") {
    const auto path = std::filesystem::temp_directory_path() / "tailrisk_csv_test.csv";
    {
        std::ofstream f(path);
        f << "a,b\n1,2\n3\n";
    }
    try {
        read_csv(path.string());
        FAIL("expected parse_error");
    } catch (const parse_error& e) {
        CHECK(std::string(e.what()).find(":3") != std::string::npos);
    }
    std::filesystem::remove(path);
}

TEST_CASE("normal distribution helpers") {
    CHECK_THAT(normal_quantile(0.01), Catch::Matchers::WithinAbs(-2.3263478740, 1e-9));
    CHECK_THAT(normal_pdf(0.0), Catch::Matchers::WithinAbs(0.3989422804, 1e-9));
    CHECK_THAT(normal_cdf(normal_quantile(0.025)), Catch::Matchers::WithinAbs(0.025, 1e-12));
    CHECK_THAT(chi_squared_pvalue(3.841458821, 1), Catch::Matchers::WithinAbs(0.05, 1e-6));
}

TEST_CASE("empirical quantile is the lower order statistic") {
    const std::vector<double> v{5, 1, 4, 2, 3};
    CHECK(empirical_quantile(v, 0.2) == 1.0);
    CHECK(empirical_quantile(v, 0.21) == 2.0);
    CHECK(empirical_quantile(v, 1.0) == 5.0);
    CHECK(empirical_quantile(v, 0.0001) == 1.0);
}

TEST_CASE("seeded rng streams are reproducible and distinct") {
    Rng a = seeded_rng(7, 0), b = seeded_rng(7, 0), c = seeded_rng(7, 1);
    CHECK(a() == b());
    Rng a2 = seeded_rng(7, 0);
    bool any_diff = false;
    for (int i = 0; i < 8; ++i) any_diff |= (a2() != c());
    CHECK(any_diff);
}

TEST_CASE("nelder mead minimizes a shifted quadratic under a box") {
    auto f = [](const std::vector<double>& x) {
        const double a = x[0] - 1.5, b = x[1] + 2.0;
        return a * a + 4 * b * b;
    };
    SimplexOptions opt;
    opt.max_iter = 800;
    const auto res = nelder_mead(f, {0.0, 0.0}, opt);
    CHECK_THAT(res.x[0], Catch::Matchers::WithinAbs(1.5, 1e-5));
    CHECK_THAT(res.x[1], Catch::Matchers::WithinAbs(-2.0, 1e-5));

    // box projection keeps the optimum on the boundary
    auto project = [](std::vector<double>& x) {
        x[0] = std::clamp(x[0], -1.0, 1.0);
        x[1] = std::clamp(x[1], -1.0, 1.0);
    };
    const auto boxed = nelder_mead(f, {0.0, 0.0}, opt, project);
    CHECK_THAT(boxed.x[0], Catch::Matchers::WithinAbs(1.0, 1e-5));
    CHECK_THAT(boxed.x[1], Catch::Matchers::WithinAbs(-1.0, 1e-5));
}

TEST_CASE("parallel_for covers every index once and propagates errors") {
    std::vector<int> hit(257, 0);
    parallel_for(hit.size(), [&](std::size_t i) { hit[i] += 1; }, 4);
    for (int h : hit) CHECK(h == 1);
    CHECK_THROWS_AS(parallel_for(8, [](std::size_t i) {
                        if (i == 5) throw estimation_error("boom");
                    }),
                    estimation_error);
}

TEST_CASE("toml subset parses sections, scalars and arrays") {
    std::istringstream in(
        "top = 1\n"
        "[data]\n"
        "daily = \"prices.csv\" # comment\n"
        "q = 66\n"
        "alpha = 0.01\n"
        "flag = true\n"
        "models = [\"ar-rv\", \"exp-absret\"]\n");
    const TomlDoc doc = parse_toml(in, "test");
    CHECK(doc.get("", "top").as_int() == 1);
    CHECK(doc.get("data", "daily").as_string() == "prices.csv");
    CHECK(doc.get("data", "alpha").as_double() == 0.01);
    CHECK(doc.get("data", "q").as_double() == 66.0); // int promotes
    CHECK(doc.get("data", "flag").as_bool());
    const auto& arr = doc.get("data", "models").as_array();
    REQUIRE(arr.size() == 2);
    CHECK(arr[1].as_string() == "exp-absret");
}

TEST_CASE("toml rejects malformed input") {
    std::istringstream bad1("key value\n");
    CHECK_THROWS_AS(parse_toml(bad1, "t"), parse_error);
    std::istringstream bad2("[sec\nk = 1\n");
    CHECK_THROWS_AS(parse_toml(bad2, "t"), parse_error);
    std::istringstream bad3("k = @nope\n");
    CHECK_THROWS_AS(parse_toml(bad3, "t"), parse_error);
    std::istringstream bad4("k = 1\nk = 2\n");
    CHECK_THROWS_AS(parse_toml(bad4, "t"), parse_error);
}
