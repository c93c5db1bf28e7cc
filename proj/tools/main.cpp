// tailrisk: batch CLI for joint VaR/ES estimation, forecasting and backtesting.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tailrisk/tailrisk.hpp"

namespace {

using namespace tailrisk;

constexpr int exit_ok = 0;
constexpr int exit_validation = 2;
constexpr int exit_numerical = 3;

ReturnScale parse_scale(const std::string& s) {
    if (s == "percent") return ReturnScale::percent;
    if (s == "raw") return ReturnScale::raw;
    throw validation_error("unit must be 'percent' or 'raw'");
}

McmcConfig mcmc_schedule(const std::string& s) {
    if (s == "desk") return McmcConfig::desk();
    if (s == "full") return McmcConfig{};
    throw validation_error("mcmc schedule must be 'desk' or 'full'");
}

struct MeasuresArgs {
    std::string input, out;
    int interval = 5;
    int subsample = 0;
    int scale_q = 66;
    std::string unit = "percent";
    std::vector<std::string> kinds = {"rv", "rr", "scrv", "scrr"};
};

int cmd_measures(const MeasuresArgs& a) {
    std::vector<std::string> warnings;
    IntradayOptions opt;
    opt.warnings = &warnings;
    const auto grids = load_intraday_csv(a.input, a.interval, opt);
    for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
    if (grids.empty()) throw validation_error("no intraday days loaded from " + a.input);
    const ReturnScale unit = parse_scale(a.unit);

    std::map<MeasureKind, RealizedSeries> cache;
    auto base = [&](MeasureKind k) -> const RealizedSeries& {
        auto it = cache.find(k);
        if (it == cache.end())
            it = cache.emplace(k, k == MeasureKind::rv ? rv_series(grids, unit)
                                                       : rr_series(grids, unit)).first;
        return it->second;
    };

    std::vector<RealizedSeries> out;
    for (const auto& name : a.kinds) {
        const MeasureKind kind = measure_kind_from_string(name);
        switch (kind) {
            case MeasureKind::rv:
            case MeasureKind::rr:
                out.push_back(base(kind));
                break;
            case MeasureKind::scrv: {
                const auto proxy = daily_squared_return_series(grids, unit);
                const auto hf = align_to_dates(base(MeasureKind::rv), proxy.dates);
                out.push_back(scaled_measure(hf, proxy, ScalingWindow{a.scale_q}));
                break;
            }
            case MeasureKind::scrr: {
                const auto proxy = daily_squared_range_series(grids, unit);
                const auto hf = align_to_dates(base(MeasureKind::rr), proxy.dates);
                out.push_back(scaled_measure(hf, proxy, ScalingWindow{a.scale_q}));
                break;
            }
            case MeasureKind::ssrv:
            case MeasureKind::ssrr:
                if (a.subsample <= 0)
                    throw validation_error("--subsample is required for " + name);
                out.push_back(subsampled_series(grids, kind, a.subsample, unit));
                break;
        }
    }
    write_measures_csv(a.out, out);
    std::cout << "wrote " << a.out << " (" << out.size() << " measure series, "
              << grids.size() << " days)\n";
    return exit_ok;
}

struct SimulateArgs {
    std::string study = "expx";
    int reps = 20;
    std::uint64_t seed = 1;
    int trials = 5000;
    std::size_t n = 0;
    std::string out = "table.csv";
    std::string estimators = "both";
    std::string schedule = "desk";
    int mle_starts = 200;
    unsigned threads = 0;
};

int cmd_simulate(const SimulateArgs& a) {
    StudyKind kind;
    if (a.study == "arx") kind = StudyKind::arx;
    else if (a.study == "expx") kind = StudyKind::expx;
    else if (a.study == "ar") kind = StudyKind::ar;
    else if (a.study == "exp") kind = StudyKind::expo;
    else throw validation_error("study must be one of arx, expx, ar, exp");

    StudyConfig cfg;
    cfg.n_reps = a.reps;
    cfg.seed = a.seed;
    cfg.gamma_trials = a.trials;
    cfg.n = a.n;
    cfg.mcmc = mcmc_schedule(a.schedule);
    cfg.mle.n_starts = a.mle_starts;
    cfg.threads = a.threads;
    cfg.run_mcmc = a.estimators == "both" || a.estimators == "mcmc";
    cfg.run_mle = a.estimators == "both" || a.estimators == "mle";
    if (!cfg.run_mcmc && !cfg.run_mle)
        throw validation_error("estimators must be one of both, mcmc, mle");

    const ReplicationTable table = run_replication_study(kind, cfg);
    write_replication_table_csv(a.out, table);
    std::cout << "study " << a.study << ": " << table.replications << " replications, "
              << table.failures << " failures -> " << a.out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        std::cout << "  " << table.rows[i] << ": true=" << table.true_mean[i];
        if (table.has_mcmc)
            std::cout << "  mcmc=" << table.mcmc_mean[i] << " (rmse " << table.mcmc_rmse[i]
                      << ")";
        if (table.has_ml)
            std::cout << "  ml=" << table.ml_mean[i] << " (rmse " << table.ml_rmse[i] << ")";
        std::cout << '\n';
    }
    return exit_ok;
}

struct FitArgs {
    std::string daily, measures, chain_out, out;
    std::string model = "ar";
    std::string driver = "absret";
    std::string method = "mcmc";
    std::string unit = "percent";
    std::string schedule = "desk";
    double alpha = 0.01;
    std::uint64_t seed = 1;
    int mle_starts = 2000;
};

void print_fit(const FitArgs& a, const ModelSpec& spec, const ReturnSeries& returns,
               const std::vector<double>& driver_values) {
    FitResult fit;
    if (a.method == "mcmc") {
        McmcConfig cfg = mcmc_schedule(a.schedule);
        cfg.seed = a.seed;
        fit = mcmc_fit(spec, returns.values, driver_values, cfg);
    } else if (a.method == "mle") {
        MleConfig cfg;
        cfg.seed = a.seed;
        cfg.n_starts = a.mle_starts;
        fit = mle_fit(spec, returns.values, driver_values, cfg);
    } else {
        throw validation_error("method must be 'mle' or 'mcmc'");
    }

    nlohmann::json j;
    j["model"] = spec.id();
    j["alpha"] = spec.alpha;
    j["method"] = a.method;
    j["n_obs"] = returns.size();
    const auto names = param_names(spec);
    const auto flat = fit.point.flat();
    nlohmann::json params = nlohmann::json::object();
    for (std::size_t i = 0; i < names.size(); ++i) params[names[i]] = flat[i];
    j["params"] = params;
    j["log_likelihood"] = fit.log_lik;
    j["var_forecast"] = fit.path.q_next;
    j["es_forecast"] = fit.path.es_next;
    if (fit.method == FitMethod::mcmc) {
        j["epochs"] = fit.epochs.size();
        j["epoch_converged"] = fit.epoch_converged;
        nlohmann::json acc = nlohmann::json::array();
        for (double r : fit.epochs.back().accept_rate) acc.push_back(r);
        j["final_accept_rate"] = acc;
    }
    if (!a.chain_out.empty()) {
        if (fit.method != FitMethod::mcmc)
            throw validation_error("--chain-out needs --method mcmc");
        write_chain_csv(a.chain_out, spec, fit);
        j["chain_out"] = a.chain_out;
    }
    const std::string text = j.dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream f(a.out);
        f << text << '\n';
        std::cout << "wrote " << a.out << '\n';
    }
}

int cmd_fit(const FitArgs& a) {
    const ReturnScale scale = parse_scale(a.unit);
    const auto bars = load_daily_csv(a.daily);
    const ReturnSeries returns = log_returns(bars, scale);
    const ModelSpec spec = parse_model_id(a.model + "-" + a.driver, a.alpha);

    std::vector<double> driver_values;
    if (spec.driver == DriverKind::abs_return) {
        driver_values = abs_driver(returns.values);
    } else {
        if (a.measures.empty())
            throw validation_error("--measures is required for driver " + a.driver);
        const auto table = read_measures_csv(a.measures, scale);
        auto it = table.find(spec.measure);
        if (it == table.end())
            throw validation_error("measures file has no '" + a.driver + "' series");
        DriverSeries drv = driver_from_measure(it->second);
        // restrict returns to dates covered by the driver
        ReturnSeries rr;
        rr.scale = returns.scale;
        std::size_t j = 0;
        for (std::size_t i = 0; i < returns.size(); ++i) {
            while (j < drv.size() && drv.dates[j] < returns.dates[i]) ++j;
            if (j < drv.size() && drv.dates[j] == returns.dates[i]) {
                rr.dates.push_back(returns.dates[i]);
                rr.values.push_back(returns.values[i]);
                driver_values.push_back(drv.values[j]);
            }
        }
        if (rr.size() < 250)
            throw validation_error("fewer than 250 days where returns and driver overlap");
        print_fit(a, spec, rr, driver_values);
        return exit_ok;
    }
    print_fit(a, spec, returns, driver_values);
    return exit_ok;
}

struct ForecastArgs {
    std::string daily, measures, out_dir = "out";
    std::vector<std::string> models;
    std::string method = "mcmc";
    std::string unit = "percent";
    std::string schedule = "desk";
    double alpha = 0.01;
    std::size_t in_sample = 1000;
    int refit_every = 1;
    std::uint64_t seed = 1;
    int mle_starts = 200;
    unsigned threads = 0;
};

int cmd_forecast(const ForecastArgs& a) {
    const ReturnScale scale = parse_scale(a.unit);
    const auto bars = load_daily_csv(a.daily);
    const ReturnSeries returns = log_returns(bars, scale);

    RollingConfig cfg;
    cfg.alpha = a.alpha;
    cfg.in_sample_n = a.in_sample;
    cfg.refit_every = a.refit_every;
    cfg.seed = a.seed;
    cfg.method = a.method == "mle" ? FitMethod::mle : FitMethod::mcmc;
    if (a.method != "mle" && a.method != "mcmc")
        throw validation_error("method must be 'mle' or 'mcmc'");
    cfg.mcmc = mcmc_schedule(a.schedule);
    cfg.mle.n_starts = a.mle_starts;
    cfg.threads = a.threads;
    for (const auto& id : a.models) cfg.models.push_back(parse_model_id(id, a.alpha));
    if (cfg.models.empty()) throw validation_error("at least one --model is required");

    std::map<MeasureKind, DriverSeries> drivers;
    bool needs = false;
    for (const auto& m : cfg.models)
        if (m.driver == DriverKind::realized) needs = true;
    if (needs) {
        if (a.measures.empty()) throw validation_error("--measures is required for X models");
        for (const auto& [kind, series] : read_measures_csv(a.measures, scale))
            drivers[kind] = driver_from_measure(series);
    }

    std::filesystem::create_directories(a.out_dir);
    const ForecastLog log = rolling_forecast(cfg, returns, drivers);
    for (const auto& m : log.models) {
        const std::string path = a.out_dir + "/forecast_" + m.model_id + ".csv";
        write_forecast_csv(path, m.records);
        std::cout << m.model_id << ": " << m.records.size() << " forecasts, " << m.refits
                  << " refits, " << m.fit_failures << " failures -> " << path << '\n';
        for (const auto& w : m.warnings) std::cerr << "warning: " << m.model_id << ": " << w << '\n';
    }
    return exit_ok;
}

struct BacktestArgs {
    std::string input, out, loss_out;
    double alpha = 0.01;
    std::string format = "json";
};

int cmd_backtest(const BacktestArgs& a) {
    const auto records = read_forecast_csv(a.input);
    const BacktestReport rep = backtest(records, a.alpha);
    if (!a.loss_out.empty()) {
        std::vector<std::vector<std::string>> rows;
        rows.reserve(records.size());
        for (const auto& rec : records)
            rows.push_back({rec.date.to_string(),
                            format_double(joint_score(rec.realized_return, rec.var_forecast,
                                                      rec.es_forecast, a.alpha),
                                          12)});
        write_csv(a.loss_out, {"date", "loss"}, rows);
        std::cout << "wrote " << a.loss_out << '\n';
    }
    std::string text;
    if (a.format == "json") {
        text = backtest_report_json(rep).dump(2);
    } else if (a.format == "csv") {
        std::string s = "metric,value\n";
        for (const auto& row : backtest_report_rows(rep)) s += row[0] + "," + row[1] + "\n";
        text = s;
    } else {
        throw validation_error("format must be 'json' or 'csv'");
    }
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream f(a.out);
        f << text << '\n';
        std::cout << "wrote " << a.out << '\n';
    }
    return exit_ok;
}

struct McsArgs {
    std::string dir, out;
    std::string stat = "r";
    int reps = 5000;
    int block = 10;
    std::uint64_t seed = 1;
};

int cmd_mcs(const McsArgs& a) {
    std::vector<std::string> ids;
    std::vector<std::vector<double>> losses;
    std::vector<std::vector<Date>> date_sets;
    std::vector<std::filesystem::path> files;
    for (const auto& entry : std::filesystem::directory_iterator(a.dir))
        if (entry.path().extension() == ".csv") files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& path : files) {
        const CsvTable t = read_csv(path.string());
        const int cd = t.column("date");
        const int cl = t.column("loss");
        std::vector<Date> dates;
        std::vector<double> ls;
        for (std::size_t r = 0; r < t.rows.size(); ++r) {
            dates.push_back(parse_date(t.rows[r][static_cast<std::size_t>(cd)]));
            ls.push_back(csv_double(t, r, cl, path.string()));
        }
        ids.push_back(path.stem().string());
        date_sets.push_back(std::move(dates));
        losses.push_back(std::move(ls));
    }
    if (ids.empty()) throw validation_error("no .csv loss files in " + a.dir);
    for (std::size_t m = 1; m < date_sets.size(); ++m)
        if (date_sets[m] != date_sets[0])
            throw validation_error("loss files do not share evaluation dates: " + ids[m]);

    McsConfig cfg;
    cfg.stat = a.stat == "sq" ? McsStat::sq : McsStat::r;
    if (a.stat != "r" && a.stat != "sq") throw validation_error("stat must be 'r' or 'sq'");
    cfg.reps = a.reps;
    cfg.block_len = a.block;
    cfg.seed = a.seed;
    const McsResult res = mcs(ids, losses, cfg);
    const std::string text = mcs_result_json(res).dump(2);
    if (a.out.empty()) {
        std::cout << text << '\n';
    } else {
        std::ofstream f(a.out);
        f << text << '\n';
        std::cout << "wrote " << a.out << '\n';
    }
    return exit_ok;
}

int cmd_run(const std::string& config) {
    const RunSummary summary = run_config(config);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
    std::cout << summary.model_ids.size() << " models, " << summary.forecasts_per_model
              << " forecasts each\n";
    for (const auto& f : summary.files_written) std::cout << "  " << f << '\n';
    return exit_ok;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Joint VaR/ES forecasting with realized measures"};
    app.require_subcommand(1);

    MeasuresArgs ma;
    auto* measures = app.add_subcommand("measures", "Compute realized measures from intraday bars");
    measures->add_option("--input", ma.input, "Intraday CSV (timestamp,open,high,low,close)")
        ->required();
    measures->add_option("--out", ma.out, "Output CSV (date,kind,value)")->required();
    measures->add_option("--interval", ma.interval, "Native bar interval in minutes");
    measures->add_option("--subsample", ma.subsample,
                         "Coarse interval in minutes for ssrv/ssrr");
    measures->add_option("--scale-q", ma.scale_q, "Trailing window for scrv/scrr");
    measures->add_option("--kinds", ma.kinds, "Measures to compute")->delimiter(',');
    measures->add_option("--unit", ma.unit, "percent or raw");

    SimulateArgs sa;
    auto* simulate = app.add_subcommand("simulate", "Replication study of the estimators");
    simulate->add_option("--study", sa.study, "arx, expx, ar or exp");
    simulate->add_option("--reps", sa.reps, "Number of replications");
    simulate->add_option("--seed", sa.seed, "Master seed");
    simulate->add_option("--trials", sa.trials, "Random trials for the ar true-gamma search");
    simulate->add_option("--n", sa.n, "Sample length (0 = study default)");
    simulate->add_option("--out", sa.out, "Output table CSV");
    simulate->add_option("--estimators", sa.estimators, "both, mcmc or mle");
    simulate->add_option("--mcmc-schedule", sa.schedule, "desk or full");
    simulate->add_option("--mle-starts", sa.mle_starts, "MLE gamma starts per fit");
    simulate->add_option("--threads", sa.threads, "Worker threads (0 = auto)");

    FitArgs fa;
    auto* fit = app.add_subcommand("fit", "Fit one model to a return series");
    fit->add_option("--daily", fa.daily, "Daily OHLC CSV")->required();
    fit->add_option("--measures", fa.measures, "Measures CSV for realized drivers");
    fit->add_option("--model", fa.model, "ar or exp");
    fit->add_option("--driver", fa.driver, "absret, rv, rr, scrv, scrr, ssrv or ssrr");
    fit->add_option("--alpha", fa.alpha, "Quantile level");
    fit->add_option("--method", fa.method, "mle or mcmc");
    fit->add_option("--seed", fa.seed, "Seed");
    fit->add_option("--chain-out", fa.chain_out, "CSV of retained posterior draws");
    fit->add_option("--out", fa.out, "Write the JSON fit report here");
    fit->add_option("--unit", fa.unit, "percent or raw");
    fit->add_option("--mcmc-schedule", fa.schedule, "desk or full");
    fit->add_option("--mle-starts", fa.mle_starts, "Gamma starts for MLE");

    ForecastArgs fca;
    auto* forecast = app.add_subcommand("forecast", "Rolling one-step-ahead forecasts");
    forecast->add_option("--daily", fca.daily, "Daily OHLC CSV")->required();
    forecast->add_option("--measures", fca.measures, "Measures CSV for realized drivers");
    forecast->add_option("--model", fca.models, "Model id like ar-absret or exp-ssrr")
        ->required();
    forecast->add_option("--alpha", fca.alpha, "Quantile level");
    forecast->add_option("--method", fca.method, "mle or mcmc");
    forecast->add_option("--in-sample", fca.in_sample, "Rolling window length");
    forecast->add_option("--refit-every", fca.refit_every, "Days between refits");
    forecast->add_option("--seed", fca.seed, "Seed");
    forecast->add_option("--out-dir", fca.out_dir, "Output directory");
    forecast->add_option("--unit", fca.unit, "percent or raw");
    forecast->add_option("--mcmc-schedule", fca.schedule, "desk or full");
    forecast->add_option("--mle-starts", fca.mle_starts, "Gamma starts for MLE");
    forecast->add_option("--threads", fca.threads, "Worker threads (0 = auto)");

    BacktestArgs ba;
    auto* backtest_cmd = app.add_subcommand("backtest", "Backtest a forecast CSV");
    backtest_cmd->add_option("--input", ba.input, "Forecast CSV (date,return,var,es)")
        ->required();
    backtest_cmd->add_option("--alpha", ba.alpha, "Quantile level");
    backtest_cmd->add_option("--format", ba.format, "json or csv");
    backtest_cmd->add_option("--out", ba.out, "Write report here instead of stdout");
    backtest_cmd->add_option("--loss-out", ba.loss_out,
                             "Also write per-period joint losses (date,loss) for mcs");

    McsArgs mca;
    auto* mcs_cmd = app.add_subcommand("mcs", "Model confidence set over per-model loss CSVs");
    mcs_cmd->add_option("--dir", mca.dir, "Directory of per-model date,loss CSVs")->required();
    mcs_cmd->add_option("--stat", mca.stat, "r or sq");
    mcs_cmd->add_option("--reps", mca.reps, "Bootstrap replicates");
    mcs_cmd->add_option("--block", mca.block, "Moving-block length");
    mcs_cmd->add_option("--seed", mca.seed, "Seed");
    mcs_cmd->add_option("--out", mca.out, "Write JSON result here instead of stdout");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Run a TOML-configured pipeline");
    run->add_option("config", config_path, "TOML config file")->required();

    try {
        app.parse(argc, argv);
        if (*measures) return cmd_measures(ma);
        if (*simulate) return cmd_simulate(sa);
        if (*fit) return cmd_fit(fa);
        if (*forecast) return cmd_forecast(fca);
        if (*backtest_cmd) return cmd_backtest(ba);
        if (*mcs_cmd) return cmd_mcs(mca);
        if (*run) return cmd_run(config_path);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? exit_ok : exit_validation;
    } catch (const parse_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const validation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_validation;
    } catch (const estimation_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_numerical;
    }
    return exit_ok;
}
