#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <vector>

#include "tailrisk/errors.hpp"
#include "tailrisk/rng.hpp"

namespace tailrisk {

enum class McsStat { r, sq };

struct McsConfig {
    McsStat stat = McsStat::r;
    double confidence = 0.90;
    int reps = 5000;
    int block_len = 10;
    std::uint64_t seed = 1;
};

struct McsResult {
    std::vector<std::string> survivors;
    std::map<std::string, double> p_values; // sequential (monotonized) p-values
    McsStat stat = McsStat::r;
};

/// Model confidence set by iterated equivalence testing and elimination.
/// `losses[m]` holds model m's per-period losses on a common date grid. Pair
/// t-statistics are studentized by moving-block bootstrap variances; the
/// equivalence statistic is either the maximum absolute pair t ("r") or the
/// sum of squared pair t's ("sq"). While equivalence is rejected at
/// 1 - confidence, the model with the largest relative-performance t is
/// dropped; the same bootstrap resamples are reused across rounds.
inline McsResult mcs(const std::vector<std::string>& ids,
                     const std::vector<std::vector<double>>& losses, const McsConfig& cfg) {
    const std::size_t n_models = losses.size();
    if (ids.size() != n_models) throw validation_error("mcs: ids/losses size mismatch");
    McsResult result;
    result.stat = cfg.stat;
    if (n_models < 2) {
        result.survivors = ids;
        for (const auto& id : ids) result.p_values[id] = 1.0;
        return result;
    }
    const std::size_t horizon = losses.front().size();
    for (const auto& l : losses)
        if (l.size() != horizon) throw validation_error("mcs: unequal loss horizons");
    if (horizon < 2) throw validation_error("mcs: loss horizon too short");
    if (cfg.reps < 1000) throw validation_error("mcs: need >= 1000 bootstrap replicates");
    const int block = std::max(1, std::min<int>(cfg.block_len, static_cast<int>(horizon)));

    // sample means and bootstrap resample means per model (resamples shared by
    // every model and every elimination round)
    std::vector<double> lbar(n_models, 0.0);
    for (std::size_t m = 0; m < n_models; ++m) {
        double s = 0;
        for (double v : losses[m]) s += v;
        lbar[m] = s / static_cast<double>(horizon);
    }

    const auto reps = static_cast<std::size_t>(cfg.reps);
    std::vector<std::vector<double>> boot(reps, std::vector<double>(n_models, 0.0));
    Rng rng = seeded_rng(cfg.seed, 0xb0);
    std::uniform_int_distribution<std::size_t> start(0, horizon - static_cast<std::size_t>(block));
    std::vector<std::size_t> idx(horizon);
    for (std::size_t b = 0; b < reps; ++b) {
        std::size_t filled = 0;
        while (filled < horizon) {
            const std::size_t s0 = start(rng);
            for (int k = 0; k < block && filled < horizon; ++k) idx[filled++] = s0 + k;
        }
        auto& row = boot[b];
        for (std::size_t m = 0; m < n_models; ++m) {
            double s = 0;
            for (std::size_t t = 0; t < horizon; ++t) s += losses[m][idx[t]];
            row[m] = s / static_cast<double>(horizon);
        }
    }

    std::vector<std::size_t> active(n_models);
    for (std::size_t m = 0; m < n_models; ++m) active[m] = m;
    double p_monotone = 0.0;
    const double threshold = 1.0 - cfg.confidence;

    while (active.size() >= 2) {
        const std::size_t k = active.size();
        // pairwise bootstrap variances and t statistics
        std::vector<std::vector<double>> var(k, std::vector<double>(k, 0.0));
        std::vector<std::vector<double>> tstat(k, std::vector<double>(k, 0.0));
        for (std::size_t i = 0; i < k; ++i) {
            for (std::size_t j = i + 1; j < k; ++j) {
                const double d = lbar[active[i]] - lbar[active[j]];
                double s = 0;
                for (std::size_t b = 0; b < reps; ++b) {
                    const double e = (boot[b][active[i]] - boot[b][active[j]]) - d;
                    s += e * e;
                }
                const double v = s / static_cast<double>(reps);
                var[i][j] = var[j][i] = v;
                const double t = v > 1e-300 ? d / std::sqrt(v) : 0.0;
                tstat[i][j] = t;
                tstat[j][i] = -t;
            }
        }

        auto statistic = [&](const auto& tij) {
            double out = 0;
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = i + 1; j < k; ++j) {
                    const double t = tij[i][j];
                    if (cfg.stat == McsStat::r)
                        out = std::max(out, std::abs(t));
                    else
                        out += t * t;
                }
            return out;
        };
        const double observed = statistic(tstat);

        std::size_t exceed = 0;
        std::vector<std::vector<double>> tb(k, std::vector<double>(k, 0.0));
        for (std::size_t b = 0; b < reps; ++b) {
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = i + 1; j < k; ++j) {
                    const double d = lbar[active[i]] - lbar[active[j]];
                    const double e = (boot[b][active[i]] - boot[b][active[j]]) - d;
                    tb[i][j] = var[i][j] > 1e-300 ? e / std::sqrt(var[i][j]) : 0.0;
                }
            if (statistic(tb) >= observed) ++exceed;
        }
        const double p = static_cast<double>(exceed) / static_cast<double>(reps);
        p_monotone = std::max(p_monotone, p);

        if (p >= threshold) break;

        // drop the model with the worst relative performance t_i.
        std::size_t worst = 0;
        double worst_t = -std::numeric_limits<double>::infinity();
        for (std::size_t i = 0; i < k; ++i) {
            double di = 0;
            for (std::size_t j = 0; j < k; ++j)
                if (j != i) di += lbar[active[i]] - lbar[active[j]];
            di /= static_cast<double>(k - 1);
            double s = 0;
            for (std::size_t b = 0; b < reps; ++b) {
                double dib = 0;
                for (std::size_t j = 0; j < k; ++j)
                    if (j != i) dib += boot[b][active[i]] - boot[b][active[j]];
                dib /= static_cast<double>(k - 1);
                s += (dib - di) * (dib - di);
            }
            const double v = s / static_cast<double>(reps);
            const double t = v > 1e-300 ? di / std::sqrt(v) : 0.0;
            if (t > worst_t) {
                worst_t = t;
                worst = i;
            }
        }
        result.p_values[ids[active[worst]]] = p_monotone;
        active.erase(active.begin() + static_cast<std::ptrdiff_t>(worst));
    }

    for (std::size_t i : active) {
        result.survivors.push_back(ids[i]);
        result.p_values[ids[i]] = std::max(p_monotone, 1.0 - cfg.confidence);
    }
    return result;
}

} // namespace tailrisk
