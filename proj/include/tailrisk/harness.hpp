#pragma once

#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "tailrisk/errors.hpp"
#include "tailrisk/estimate.hpp"
#include "tailrisk/eval.hpp"
#include "tailrisk/market_data.hpp"
#include "tailrisk/mcs.hpp"
#include "tailrisk/model.hpp"
#include "tailrisk/parallel.hpp"
#include "tailrisk/realized.hpp"
#include "tailrisk/report_io.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/toml.hpp"

namespace tailrisk {

/// "ar-absret", "exp-ssrr", ... : form and quantile driver.
inline ModelSpec parse_model_id(const std::string& id, double alpha) {
    const std::size_t dash = id.find('-');
    if (dash == std::string::npos) throw parse_error("bad model id '" + id + "'");
    const std::string form = id.substr(0, dash);
    const std::string drv = id.substr(dash + 1);
    ModelSpec spec;
    spec.alpha = alpha;
    if (form == "ar")
        spec.form = EsForm::ar;
    else if (form == "exp")
        spec.form = EsForm::exponential;
    else
        throw parse_error("bad model form '" + form + "' in '" + id + "'");
    if (drv == "absret") {
        spec.driver = DriverKind::abs_return;
    } else {
        spec.driver = DriverKind::realized;
        spec.measure = measure_kind_from_string(drv);
    }
    return spec;
}

struct RollingConfig {
    std::size_t in_sample_n = 1000;
    int refit_every = 1;
    double alpha = 0.01;
    FitMethod method = FitMethod::mcmc;
    MleConfig mle;
    McmcConfig mcmc = McmcConfig::desk();
    std::uint64_t seed = 1;
    std::vector<ModelSpec> models;
    unsigned threads = 0;
    int max_consecutive_failures = 10;
};

struct ModelForecastLog {
    std::string model_id;
    std::vector<ForecastRecord> records;
    int refits = 0;
    int fit_failures = 0;
    std::vector<std::string> warnings;
};

struct ForecastLog {
    std::vector<ModelForecastLog> models;
};

namespace detail {
/// Driver values aligned one-to-one with the return dates.
inline std::vector<double> align_driver(const ReturnSeries& returns, const DriverSeries& driver) {
    if (driver.unit != returns.scale)
        throw validation_error("driver/return unit mismatch (raw vs percent)");
    std::vector<double> out;
    out.reserve(returns.size());
    std::size_t j = 0;
    for (std::size_t i = 0; i < returns.size(); ++i) {
        const Date d = returns.dates[i];
        while (j < driver.size() && driver.dates[j] < d) ++j;
        if (j == driver.size() || driver.dates[j] != d)
            throw validation_error("driver has no value for " + d.to_string());
        out.push_back(driver.values[j]);
    }
    return out;
}
} // namespace detail

/// Rolling fixed-window one-step-ahead forecasting. The forecast for day t is
/// computed from the previous in_sample_n observations only; the realized
/// return is attached afterwards. Models are refit every `refit_every` days
/// and the recursion rolls forward at the held parameters in between. A failed
/// refit falls back to the last successful parameters with a warning.
inline ForecastLog rolling_forecast(const RollingConfig& config, const ReturnSeries& returns,
                                    const std::map<MeasureKind, DriverSeries>& drivers) {
    const std::size_t n = config.in_sample_n;
    if (n < 250) throw validation_error("rolling_forecast: in_sample_n must be >= 250");
    if (config.refit_every < 1) throw validation_error("rolling_forecast: refit_every >= 1");
    if (returns.size() < n + 1)
        throw validation_error("rolling_forecast: need at least in_sample_n + 1 observations");
    if (config.models.empty()) throw validation_error("rolling_forecast: no models");

    const std::size_t horizon = returns.size() - n;
    ForecastLog log;
    log.models.resize(config.models.size());

    parallel_for(
        config.models.size(),
        [&](std::size_t mi) {
            const ModelSpec spec = config.models[mi];
            auto& out = log.models[mi];
            out.model_id = spec.id();
            out.records.reserve(horizon);

            std::vector<double> driver_full;
            if (spec.driver == DriverKind::abs_return) {
                driver_full = abs_driver(returns.values);
            } else {
                auto it = drivers.find(spec.measure);
                if (it == drivers.end())
                    throw validation_error("no driver series for model " + spec.id());
                driver_full = detail::align_driver(returns, it->second);
            }

            std::optional<ParamVector> params;
            int consecutive_failures = 0;
            for (std::size_t k = 0; k < horizon; ++k) {
                const std::size_t t = n + k; // forecast target index
                const std::span<const double> rw(returns.values.data() + (t - n), n);
                const std::span<const double> dw(driver_full.data() + (t - n), n);

                double q_next = 0, es_next = 0;
                const bool refit_day = k % static_cast<std::size_t>(config.refit_every) == 0;
                if (refit_day || !params) {
                    const std::uint64_t fit_seed =
                        config.seed * 0x100000001b3ULL + 131 * mi + 1000003ULL * k;
                    try {
                        FitResult fit;
                        if (config.method == FitMethod::mcmc) {
                            McmcConfig mc = config.mcmc;
                            mc.seed = fit_seed;
                            fit = mcmc_fit(spec, rw, dw, mc);
                        } else {
                            MleConfig ml = config.mle;
                            ml.seed = fit_seed;
                            fit = mle_fit(spec, rw, dw, ml);
                        }
                        params = fit.point;
                        q_next = fit.path.q_next;
                        es_next = fit.path.es_next;
                        ++out.refits;
                        consecutive_failures = 0;
                    } catch (const estimation_error& e) {
                        ++out.fit_failures;
                        ++consecutive_failures;
                        out.warnings.push_back("refit failed at step " + std::to_string(k) +
                                               ": " + e.what());
                        if (consecutive_failures > config.max_consecutive_failures)
                            throw estimation_error(spec.id() + ": " +
                                                   std::to_string(consecutive_failures) +
                                                   " consecutive fit failures");
                        if (!params)
                            throw estimation_error(spec.id() +
                                                   ": first window never fit successfully");
                        const RiskPath path = risk_path(spec, *params, rw, dw);
                        q_next = path.q_next;
                        es_next = path.es_next;
                    }
                } else {
                    const RiskPath path = risk_path(spec, *params, rw, dw);
                    q_next = path.q_next;
                    es_next = path.es_next;
                }

                ForecastRecord rec;
                rec.date = returns.dates[t];
                rec.var_forecast = q_next;
                rec.es_forecast = es_next;
                rec.realized_return = returns.values[t];
                out.records.push_back(rec);
            }
        },
        config.threads);
    return log;
}

struct RunSummary {
    std::vector<std::string> model_ids;
    std::size_t forecasts_per_model = 0;
    std::vector<std::string> files_written;
    std::vector<std::string> warnings;
};

namespace detail {
inline void check_known_keys(const TomlDoc& doc,
                             const std::map<std::string, std::set<std::string>>& known) {
    std::vector<std::string> unknown;
    for (const auto& [section, table] : doc.sections) {
        auto it = known.find(section);
        if (it == known.end()) {
            unknown.push_back("[" + section + "]");
            continue;
        }
        for (const auto& [key, value] : table)
            if (!it->second.count(key)) unknown.push_back("[" + section + "] " + key);
    }
    if (!unknown.empty()) {
        std::string msg = "unknown config keys:";
        for (const auto& u : unknown) msg += " " + u;
        throw validation_error(msg);
    }
}

inline void require_file(const std::string& path) {
    if (!std::filesystem::exists(path))
        throw validation_error("data file not found: " + path);
}
} // namespace detail

/// Runs the full config-driven pipeline: load data, roll forecasts for every
/// model, write forecast CSVs and backtest JSON reports, optionally compare
/// the models by MCS on the joint loss.
inline RunSummary run_config(const std::string& config_path) {
    const TomlDoc doc = parse_toml_file(config_path);
    detail::check_known_keys(
        doc, {{"", {}},
              {"data", {"daily", "measures", "return_scale"}},
              {"forecast",
               {"alpha", "in_sample", "refit_every", "method", "seed", "models", "out_dir",
                "threads", "mle_starts", "mcmc_schedule"}},
              {"mcs", {"stat", "reps", "block", "seed"}}});

    const std::string daily_path = doc.get("data", "daily").as_string();
    detail::require_file(daily_path);
    const std::string scale_name =
        doc.has("data", "return_scale") ? doc.get("data", "return_scale").as_string() : "percent";
    if (scale_name != "percent" && scale_name != "raw")
        throw validation_error("return_scale must be 'percent' or 'raw'");
    const ReturnScale scale = scale_name == "raw" ? ReturnScale::raw : ReturnScale::percent;

    const auto bars = load_daily_csv(daily_path);
    const ReturnSeries returns = log_returns(bars, scale);

    RollingConfig rolling;
    rolling.alpha = doc.has("forecast", "alpha") ? doc.get("forecast", "alpha").as_double() : 0.01;
    rolling.in_sample_n =
        static_cast<std::size_t>(doc.get("forecast", "in_sample").as_int());
    if (doc.has("forecast", "refit_every"))
        rolling.refit_every = static_cast<int>(doc.get("forecast", "refit_every").as_int());
    if (doc.has("forecast", "seed"))
        rolling.seed = static_cast<std::uint64_t>(doc.get("forecast", "seed").as_int());
    if (doc.has("forecast", "threads"))
        rolling.threads = static_cast<unsigned>(doc.get("forecast", "threads").as_int());
    const std::string method = doc.has("forecast", "method")
                                   ? doc.get("forecast", "method").as_string()
                                   : "mcmc";
    if (method == "mle")
        rolling.method = FitMethod::mle;
    else if (method == "mcmc")
        rolling.method = FitMethod::mcmc;
    else
        throw validation_error("method must be 'mle' or 'mcmc'");
    if (doc.has("forecast", "mle_starts"))
        rolling.mle.n_starts = static_cast<int>(doc.get("forecast", "mle_starts").as_int());
    if (doc.has("forecast", "mcmc_schedule")) {
        const std::string sched = doc.get("forecast", "mcmc_schedule").as_string();
        if (sched == "full")
            rolling.mcmc = McmcConfig{};
        else if (sched == "desk")
            rolling.mcmc = McmcConfig::desk();
        else
            throw validation_error("mcmc_schedule must be 'desk' or 'full'");
    }

    for (const auto& item : doc.get("forecast", "models").as_array())
        rolling.models.push_back(parse_model_id(item.as_string(), rolling.alpha));
    if (rolling.models.empty()) throw validation_error("forecast.models is empty");

    std::map<MeasureKind, DriverSeries> drivers;
    bool needs_measures = false;
    for (const auto& m : rolling.models)
        if (m.driver == DriverKind::realized) needs_measures = true;
    if (needs_measures) {
        if (!doc.has("data", "measures"))
            throw validation_error("models need realized measures but data.measures is not set");
        const std::string measures_path = doc.get("data", "measures").as_string();
        detail::require_file(measures_path);
        for (const auto& [kind, series] : read_measures_csv(measures_path, scale))
            drivers[kind] = driver_from_measure(series);
    }

    const std::string out_dir =
        doc.has("forecast", "out_dir") ? doc.get("forecast", "out_dir").as_string() : "out";
    std::filesystem::create_directories(out_dir);

    const ForecastLog log = rolling_forecast(rolling, returns, drivers);

    RunSummary summary;
    std::vector<std::string> ids;
    std::vector<std::vector<double>> joint_losses;
    for (const auto& m : log.models) {
        summary.model_ids.push_back(m.model_id);
        summary.forecasts_per_model = m.records.size();
        for (const auto& w : m.warnings) summary.warnings.push_back(m.model_id + ": " + w);

        const std::string fpath = out_dir + "/forecast_" + m.model_id + ".csv";
        write_forecast_csv(fpath, m.records);
        summary.files_written.push_back(fpath);

        const BacktestReport rep = backtest(m.records, rolling.alpha);
        const std::string bpath = out_dir + "/backtest_" + m.model_id + ".json";
        std::ofstream bout(bpath);
        bout << backtest_report_json(rep).dump(2) << '\n';
        summary.files_written.push_back(bpath);

        ids.push_back(m.model_id);
        std::vector<double> jl;
        jl.reserve(m.records.size());
        for (const auto& rec : m.records)
            jl.push_back(joint_score(rec.realized_return, rec.var_forecast, rec.es_forecast,
                                     rolling.alpha));
        joint_losses.push_back(std::move(jl));
    }

    if (doc.sections.count("mcs") && ids.size() >= 2) {
        McsConfig mc;
        if (doc.has("mcs", "stat")) {
            const std::string s = doc.get("mcs", "stat").as_string();
            if (s == "r")
                mc.stat = McsStat::r;
            else if (s == "sq")
                mc.stat = McsStat::sq;
            else
                throw validation_error("mcs.stat must be 'r' or 'sq'");
        }
        if (doc.has("mcs", "reps")) mc.reps = static_cast<int>(doc.get("mcs", "reps").as_int());
        if (doc.has("mcs", "block"))
            mc.block_len = static_cast<int>(doc.get("mcs", "block").as_int());
        mc.seed = doc.has("mcs", "seed")
                      ? static_cast<std::uint64_t>(doc.get("mcs", "seed").as_int())
                      : rolling.seed;
        const McsResult res = mcs(ids, joint_losses, mc);
        const std::string mpath = out_dir + "/mcs.json";
        std::ofstream mout(mpath);
        mout << mcs_result_json(res).dump(2) << '\n';
        summary.files_written.push_back(mpath);
    }
    return summary;
}

} // namespace tailrisk
