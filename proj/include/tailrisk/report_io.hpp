#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "tailrisk/csv.hpp"
#include "tailrisk/estimate.hpp"
#include "tailrisk/eval.hpp"
#include "tailrisk/mcs.hpp"
#include "tailrisk/realized.hpp"
#include "tailrisk/sim.hpp"

namespace tailrisk {

inline void write_forecast_csv(const std::string& path,
                               std::span<const ForecastRecord> records) {
    std::vector<std::vector<std::string>> rows;
    rows.reserve(records.size());
    for (const auto& r : records)
        rows.push_back({r.date.to_string(), format_double(r.realized_return, 12),
                        format_double(r.var_forecast, 12), format_double(r.es_forecast, 12)});
    write_csv(path, {"date", "return", "var", "es"}, rows);
}

inline std::vector<ForecastRecord> read_forecast_csv(const std::string& path) {
    const CsvTable t = read_csv(path);
    const int cd = t.column("date");
    const int cr = t.column("return");
    const int cv = t.column("var");
    const int ce = t.column("es");
    std::vector<ForecastRecord> out;
    out.reserve(t.rows.size());
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        ForecastRecord rec;
        rec.date = parse_date(t.rows[r][static_cast<std::size_t>(cd)]);
        rec.realized_return = csv_double(t, r, cr, path);
        rec.var_forecast = csv_double(t, r, cv, path);
        rec.es_forecast = csv_double(t, r, ce, path);
        out.push_back(rec);
    }
    if (out.empty()) throw validation_error(path + ": no forecast records");
    return out;
}

inline void write_measures_csv(const std::string& path,
                               std::span<const RealizedSeries> series) {
    std::vector<std::vector<std::string>> rows;
    for (const auto& s : series)
        for (std::size_t i = 0; i < s.size(); ++i)
            rows.push_back({s.dates[i].to_string(), to_string(s.kind),
                            format_double(s.values[i], 12)});
    write_csv(path, {"date", "kind", "value"}, rows);
}

/// Reads a date,kind,value file into one series per kind. The unit is the
/// writer's convention and must be declared by the caller.
inline std::map<MeasureKind, RealizedSeries> read_measures_csv(const std::string& path,
                                                               ReturnScale unit) {
    const CsvTable t = read_csv(path);
    const int cd = t.column("date");
    const int ck = t.column("kind");
    const int cv = t.column("value");
    std::map<MeasureKind, RealizedSeries> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const MeasureKind kind =
            measure_kind_from_string(t.rows[r][static_cast<std::size_t>(ck)]);
        auto& s = out[kind];
        s.kind = kind;
        s.unit = unit;
        s.dates.push_back(parse_date(t.rows[r][static_cast<std::size_t>(cd)]));
        const double v = csv_double(t, r, cv, path);
        if (v < 0)
            throw validation_error(path + ":" + std::to_string(t.line_of(r)) +
                                   ": negative measure value");
        s.values.push_back(v);
    }
    return out;
}

inline std::vector<std::string> param_names(const ModelSpec& spec) {
    std::vector<std::string> names = {"beta0", "beta1", "beta2", "gamma0"};
    if (spec.form == EsForm::ar) {
        names.push_back("gamma1");
        names.push_back("gamma2");
    }
    return names;
}

/// Retained posterior draws, one column per parameter plus the log posterior.
inline void write_chain_csv(const std::string& path, const ModelSpec& spec,
                            const FitResult& fit) {
    if (!fit.draws) throw validation_error("write_chain_csv: fit has no draws");
    const auto& draws = *fit.draws;
    std::vector<std::string> header = param_names(spec);
    header.push_back("log_posterior");
    std::vector<std::vector<std::string>> rows;
    rows.reserve(static_cast<std::size_t>(draws.rows()));
    for (Eigen::Index i = 0; i < draws.rows(); ++i) {
        std::vector<std::string> row;
        for (Eigen::Index j = 0; j < draws.cols(); ++j)
            row.push_back(format_double(draws(i, j), 12));
        row.push_back(format_double(fit.draw_log_post[static_cast<std::size_t>(i)], 12));
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

inline nlohmann::json test_outcome_json(const TestOutcome& t) {
    nlohmann::json j;
    j["statistic"] = t.statistic;
    j["p_value"] = t.p_value;
    j["rejected_5pct"] = t.rejected_5pct;
    if (t.skipped) j["skipped"] = true;
    if (!t.note.empty()) j["note"] = t.note;
    return j;
}

inline nlohmann::json backtest_report_json(const BacktestReport& rep) {
    nlohmann::json j;
    j["n"] = rep.n;
    j["vrate"] = rep.vrate;
    j["esrate"] = rep.esrate;
    j["esrate_reference_1pct"] = es_rate_reference_1pct;
    j["uc"] = test_outcome_json(rep.uc);
    j["cc"] = test_outcome_json(rep.cc);
    j["dq1"] = test_outcome_json(rep.dq1);
    j["dq4"] = test_outcome_json(rep.dq4);
    j["vqr"] = test_outcome_json(rep.vqr);
    j["quantile_loss"] = rep.quantile_loss;
    j["joint_loss"] = rep.joint_loss;
    return j;
}

inline std::vector<std::vector<std::string>> backtest_report_rows(const BacktestReport& rep) {
    auto fmt = [](const TestOutcome& t) {
        return t.skipped ? std::string("skipped") : format_double(t.p_value, 6);
    };
    return {{"n", std::to_string(rep.n)},
            {"vrate", format_double(rep.vrate, 6)},
            {"esrate", format_double(rep.esrate, 6)},
            {"uc_p", fmt(rep.uc)},
            {"cc_p", fmt(rep.cc)},
            {"dq1_p", fmt(rep.dq1)},
            {"dq4_p", fmt(rep.dq4)},
            {"vqr_p", fmt(rep.vqr)},
            {"quantile_loss", format_double(rep.quantile_loss, 10)},
            {"joint_loss", format_double(rep.joint_loss, 10)}};
}

inline nlohmann::json mcs_result_json(const McsResult& res) {
    nlohmann::json j;
    j["statistic"] = res.stat == McsStat::r ? "r" : "sq";
    j["survivors"] = res.survivors;
    nlohmann::json p = nlohmann::json::object();
    for (const auto& [id, pv] : res.p_values) p[id] = pv;
    j["p_values"] = p;
    return j;
}

inline void write_replication_table_csv(const std::string& path, const ReplicationTable& t) {
    std::vector<std::string> header = {"parameter", "true"};
    if (t.has_mcmc) {
        header.push_back("mcmc_mean");
        header.push_back("mcmc_rmse");
    }
    if (t.has_ml) {
        header.push_back("ml_mean");
        header.push_back("ml_rmse");
    }
    std::vector<std::vector<std::string>> rows;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        std::vector<std::string> row = {t.rows[i], format_double(t.true_mean[i], 8)};
        if (t.has_mcmc) {
            row.push_back(format_double(t.mcmc_mean[i], 8));
            row.push_back(format_double(t.mcmc_rmse[i], 8));
        }
        if (t.has_ml) {
            row.push_back(format_double(t.ml_mean[i], 8));
            row.push_back(format_double(t.ml_rmse[i], 8));
        }
        rows.push_back(std::move(row));
    }
    write_csv(path, header, rows);
}

} // namespace tailrisk
