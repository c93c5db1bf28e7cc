#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "tailrisk/errors.hpp"
#include "tailrisk/model.hpp"
#include "tailrisk/neldermead.hpp"
#include "tailrisk/rng.hpp"
#include "tailrisk/stats.hpp"

namespace tailrisk {

enum class FitMethod { mle, mcmc };

/// Indices of the two MCMC parameter blocks: quantile betas and ES gammas.
struct BlockPartition {
    std::vector<std::vector<int>> blocks;

    static BlockPartition for_model(const ModelSpec& spec) {
        BlockPartition p;
        p.blocks.push_back({0, 1, 2});
        if (spec.form == EsForm::ar)
            p.blocks.push_back({3, 4, 5});
        else
            p.blocks.push_back({3});
        return p;
    }
};

/// Robbins-Monro step on the log proposal scale, pulling the realized
/// acceptance rate toward the target. Monotone in (acc - target).
inline double tune_scale(double current_scale, double acceptance_rate, double target_rate,
                         long iteration) {
    const double step = std::min(0.05, 1.0 / std::sqrt(static_cast<double>(std::max(1L, iteration))));
    double ls = std::log(current_scale) + step * (acceptance_rate - target_rate);
    ls = std::clamp(ls, -18.0, 18.0);
    return std::exp(ls);
}

/// Optimal-scaling acceptance target by block dimension.
inline double acceptance_target(int dim) {
    if (dim == 1) return 0.44;
    if (dim <= 4) return 0.35;
    return 0.234;
}

struct McmcConfig {
    int epoch_iters = 20000;
    int epoch_discard = 2000;
    int max_epochs = 6;
    double mapc_threshold = 0.10;
    int final_iters = 10000;
    int final_discard = 2000;
    /// Simplex starts for the likelihood-mode polish that seeds the chain
    /// (0 starts the chain at the raw quantile-regression initializer).
    int start_polish_starts = 12;
    int start_polish_iters = 150;
    std::uint64_t seed = 1;

    /// Reduced schedule for test/CI scale: two 5k burn-in epochs + 5k final.
    static McmcConfig desk() {
        McmcConfig c;
        c.epoch_iters = 5000;
        c.epoch_discard = 1000;
        c.max_epochs = 2;
        c.final_iters = 5000;
        c.final_discard = 1000;
        return c;
    }
};

struct EpochReport {
    std::vector<double> sd;          // per-parameter sd of retained epoch draws
    double mapc = -1;                // vs previous epoch; -1 for the first
    int iterations = 0;
    int discarded = 0;
    std::vector<double> accept_rate; // per block
    bool final_epoch = false;
};

struct SamplerResult {
    Eigen::MatrixXd draws; // retained final-epoch draws, one row per iterate
    std::vector<double> log_post;
    std::vector<EpochReport> epochs;
    bool epoch_converged = true; // MAPC threshold reached within the cap
};

namespace detail {

inline const std::array<double, 3> mixture_factors = {1.0, 100.0, 0.01};

struct BlockState {
    std::vector<int> idx;
    Eigen::MatrixXd sigma;  // base proposal covariance
    Eigen::MatrixXd chol;   // lower factor of sigma
    double scale = 1.0;     // tuned multiplier (burn-in only)
    double target = 0.234;
    long tune_iter = 0;
    Eigen::VectorXd mean;   // independence-proposal mean (final epoch)
    double log_det = 0;

    int dim() const { return static_cast<int>(idx.size()); }

    void set_sigma(const Eigen::MatrixXd& s) {
        sigma = s;
        Eigen::LLT<Eigen::MatrixXd> llt(sigma);
        if (llt.info() != Eigen::Success) {
            // ridge until SPD; sample covariances can be rank-deficient
            double ridge = 1e-10;
            for (int k = 0; k < 20 && llt.info() != Eigen::Success; ++k, ridge *= 10) {
                sigma = s + ridge * Eigen::MatrixXd::Identity(dim(), dim());
                llt.compute(sigma);
            }
            if (llt.info() != Eigen::Success)
                throw estimation_error("proposal covariance not positive definite");
        }
        chol = llt.matrixL();
        log_det = 0;
        for (int i = 0; i < dim(); ++i) log_det += 2.0 * std::log(chol(i, i));
    }

    /// log density of the equal-weight 3-component Gaussian mixture centred
    /// at `mean` with covariances C_i * sigma.
    double mixture_log_density(const Eigen::VectorXd& x) const {
        const Eigen::VectorXd diff = x - mean;
        const Eigen::VectorXd w = chol.triangularView<Eigen::Lower>().solve(diff);
        const double quad = w.squaredNorm();
        const double d = dim();
        double best = neg_inf;
        std::array<double, 3> lp{};
        for (std::size_t i = 0; i < 3; ++i) {
            const double ci = mixture_factors[i];
            lp[i] = -0.5 * (d * std::log(2.0 * M_PI * ci) + log_det + quad / ci);
            best = std::max(best, lp[i]);
        }
        double s = 0;
        for (double v : lp) s += std::exp(v - best);
        return best + std::log(s / 3.0);
    }
};

} // namespace detail

/// Adaptive block Metropolis sampler with epoch-based burn-in followed by an
/// independence Metropolis-Hastings sampling epoch.
///
/// Burn-in epochs use random-walk proposals from an equal-weight mixture of
/// three Gaussians with covariances {1, 100, 0.01} * scale * Sigma_b per
/// block; Sigma_b starts at (2.38/sqrt(d)) I and is refreshed from the epoch's
/// retained draws, while the scale is tuned toward the dimension-dependent
/// acceptance target. Burn-in stops once the mean absolute percentage change
/// of the per-parameter sds between epochs drops below the threshold (or at
/// the epoch cap, flagged via `epoch_converged`). The final epoch proposes
/// independently around the last epoch's mean and covariance; its retained
/// draws form the returned sample.
inline SamplerResult adaptive_block_sampler(
    const std::function<double(std::span<const double>)>& log_target, std::vector<double> x0,
    const BlockPartition& partition, const McmcConfig& cfg, Rng& rng) {
    const int dim = static_cast<int>(x0.size());
    const int n_blocks = static_cast<int>(partition.blocks.size());

    std::vector<detail::BlockState> blocks(n_blocks);
    for (int b = 0; b < n_blocks; ++b) {
        blocks[b].idx = partition.blocks[b];
        const int d = blocks[b].dim();
        blocks[b].target = acceptance_target(d);
        blocks[b].set_sigma(2.38 / std::sqrt(static_cast<double>(d)) *
                            Eigen::MatrixXd::Identity(d, d));
    }

    std::vector<double> x = x0;
    double lp = log_target(x);
    if (!std::isfinite(lp))
        throw estimation_error("adaptive_block_sampler: infeasible initial state");

    std::normal_distribution<double> norm(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> pick(0, 2);

    SamplerResult out;
    Eigen::MatrixXd epoch_draws(cfg.epoch_iters, dim);
    std::vector<double> prop(dim);
    std::vector<double> prev_sd;

    auto rw_update = [&](detail::BlockState& bs, bool tune) {
        const int d = bs.dim();
        const double ci = detail::mixture_factors[static_cast<std::size_t>(pick(rng))];
        Eigen::VectorXd z(d);
        for (int i = 0; i < d; ++i) z(i) = norm(rng);
        const Eigen::VectorXd step = std::sqrt(bs.scale * ci) * (bs.chol * z);
        prop = x;
        for (int i = 0; i < d; ++i) prop[static_cast<std::size_t>(bs.idx[i])] += step(i);
        const double lp_new = log_target(prop);
        const double log_ratio = lp_new - lp;
        const double acc_prob =
            std::isfinite(lp_new) ? std::min(1.0, std::exp(std::min(0.0, log_ratio))) : 0.0;
        bool accepted = false;
        if (acc_prob > 0 && unif(rng) < acc_prob) {
            x = prop;
            lp = lp_new;
            accepted = true;
        } else {
            unif(rng); // keep the draw count fixed whether or not we accept
        }
        if (tune) {
            ++bs.tune_iter;
            bs.scale = tune_scale(bs.scale, acc_prob, bs.target, bs.tune_iter);
        }
        return accepted;
    };

    // burn-in epochs
    int epoch = 0;
    for (; epoch < cfg.max_epochs; ++epoch) {
        std::vector<long> accepts(n_blocks, 0);
        for (int it = 0; it < cfg.epoch_iters; ++it) {
            for (int b = 0; b < n_blocks; ++b)
                if (rw_update(blocks[b], true)) ++accepts[b];
            for (int j = 0; j < dim; ++j) epoch_draws(it, j) = x[static_cast<std::size_t>(j)];
        }

        EpochReport rep;
        rep.iterations = cfg.epoch_iters;
        rep.discarded = cfg.epoch_discard;
        for (int b = 0; b < n_blocks; ++b) {
            rep.accept_rate.push_back(static_cast<double>(accepts[b]) / cfg.epoch_iters);
            if (accepts[b] == 0)
                throw estimation_error("MCMC block " + std::to_string(b) +
                                       " accepted nothing in burn-in epoch " +
                                       std::to_string(epoch + 1));
        }

        const auto kept = epoch_draws.bottomRows(cfg.epoch_iters - cfg.epoch_discard);
        const Eigen::RowVectorXd mu = kept.colwise().mean();
        rep.sd.resize(static_cast<std::size_t>(dim));
        for (int j = 0; j < dim; ++j)
            rep.sd[static_cast<std::size_t>(j)] =
                std::sqrt((kept.col(j).array() - mu(j)).square().sum() /
                          std::max<double>(1.0, kept.rows() - 1));

        if (!prev_sd.empty()) {
            double s = 0;
            for (int j = 0; j < dim; ++j) {
                const double p = prev_sd[static_cast<std::size_t>(j)];
                const double c = rep.sd[static_cast<std::size_t>(j)];
                s += p > 0 ? std::abs(c - p) / p : (c > 0 ? 1.0 : 0.0);
            }
            rep.mapc = s / dim;
        }
        prev_sd = rep.sd;

        // refresh block covariances from the retained draws
        const Eigen::MatrixXd centered = kept.rowwise() - mu;
        const Eigen::MatrixXd cov =
            centered.transpose() * centered / std::max<double>(1.0, kept.rows() - 1);
        for (int b = 0; b < n_blocks; ++b) {
            const int d = blocks[b].dim();
            Eigen::MatrixXd sb(d, d);
            for (int i = 0; i < d; ++i)
                for (int j = 0; j < d; ++j) sb(i, j) = cov(blocks[b].idx[i], blocks[b].idx[j]);
            blocks[b].set_sigma(sb);
            blocks[b].mean = Eigen::VectorXd(d);
            for (int i = 0; i < d; ++i) blocks[b].mean(i) = mu(blocks[b].idx[i]);
            blocks[b].scale = 1.0;
        }

        out.epochs.push_back(std::move(rep));
        if (out.epochs.back().mapc >= 0 && out.epochs.back().mapc < cfg.mapc_threshold) {
            ++epoch;
            break;
        }
    }
    out.epoch_converged = !out.epochs.empty() && out.epochs.back().mapc >= 0 &&
                          out.epochs.back().mapc < cfg.mapc_threshold;

    // final sampling epoch: independence MH around the last epoch's moments
    Eigen::MatrixXd final_draws(cfg.final_iters, dim);
    std::vector<double> final_lp(static_cast<std::size_t>(cfg.final_iters));
    std::vector<long> accepts(n_blocks, 0);
    for (int it = 0; it < cfg.final_iters; ++it) {
        for (int b = 0; b < n_blocks; ++b) {
            auto& bs = blocks[b];
            const int d = bs.dim();
            const double ci = detail::mixture_factors[static_cast<std::size_t>(pick(rng))];
            Eigen::VectorXd z(d);
            for (int i = 0; i < d; ++i) z(i) = norm(rng);
            const Eigen::VectorXd cand = bs.mean + std::sqrt(ci) * (bs.chol * z);
            prop = x;
            for (int i = 0; i < d; ++i) prop[static_cast<std::size_t>(bs.idx[i])] = cand(i);
            const double lp_new = log_target(prop);
            bool accepted = false;
            if (std::isfinite(lp_new)) {
                Eigen::VectorXd cur(d);
                for (int i = 0; i < d; ++i) cur(i) = x[static_cast<std::size_t>(bs.idx[i])];
                const double log_ratio = lp_new - lp + bs.mixture_log_density(cur) -
                                         bs.mixture_log_density(cand);
                if (std::log(unif(rng)) < log_ratio) {
                    x = prop;
                    lp = lp_new;
                    accepted = true;
                }
            } else {
                unif(rng);
            }
            if (accepted) ++accepts[b];
        }
        for (int j = 0; j < dim; ++j) final_draws(it, j) = x[static_cast<std::size_t>(j)];
        final_lp[static_cast<std::size_t>(it)] = lp;
    }

    EpochReport rep;
    rep.iterations = cfg.final_iters;
    rep.discarded = cfg.final_discard;
    rep.final_epoch = true;
    for (int b = 0; b < n_blocks; ++b) {
        rep.accept_rate.push_back(static_cast<double>(accepts[b]) / cfg.final_iters);
        if (accepts[b] == 0)
            throw estimation_error("MCMC block " + std::to_string(b) +
                                   " accepted nothing in the sampling epoch");
    }
    const int retained = cfg.final_iters - cfg.final_discard;
    out.draws = final_draws.bottomRows(retained);
    out.log_post.assign(final_lp.begin() + cfg.final_discard, final_lp.end());
    const Eigen::RowVectorXd mu = out.draws.colwise().mean();
    rep.sd.resize(static_cast<std::size_t>(dim));
    for (int j = 0; j < dim; ++j)
        rep.sd[static_cast<std::size_t>(j)] = std::sqrt(
            (out.draws.col(j).array() - mu(j)).square().sum() / std::max<double>(1.0, retained - 1));
    out.epochs.push_back(std::move(rep));
    return out;
}

/// Fused AL likelihood evaluator: runs the recursion and accumulates the
/// log-likelihood without materializing the path. Matches
/// al_log_likelihood(risk_path(...)) exactly; the composed form stays as the
/// reference implementation.
struct AlPosterior {
    ModelSpec spec;
    std::span<const double> returns;
    std::span<const double> driver;
    double q1 = 0, x1 = 0;

    AlPosterior(const ModelSpec& s, std::span<const double> r, std::span<const double> d,
                const InitPolicy& init = {})
        : spec(s), returns(r), driver(d) {
        s.validate();
        if (init.kind == InitPolicy::Kind::fixed) {
            q1 = init.q1;
            x1 = init.x1;
        } else {
            auto [eq, ex] = detail::empirical_init(r, s.alpha);
            q1 = eq;
            x1 = ex;
        }
    }

    double log_likelihood(std::span<const double> flat) const {
        const double alpha = spec.alpha;
        const double b0 = flat[0], b1 = flat[1], b2 = flat[2];
        const std::size_t n = returns.size();
        double ll = 0;
        if (spec.form == EsForm::exponential) {
            const double factor = 1.0 + std::exp(flat[3]);
            const double log_factor_term = std::log((alpha - 1.0) / -factor);
            double q = q1;
            for (std::size_t t = 0;; ++t) {
                const double es = factor * q;
                if (!(es < 0) || !std::isfinite(q)) return neg_inf;
                const double indicator = returns[t] <= q ? 1.0 : 0.0;
                ll += log_factor_term - std::log(-q) +
                      (returns[t] - q) * (alpha - indicator) / (alpha * es);
                if (t + 1 == n) break;
                q = b0 + b1 * driver[t] + b2 * q;
            }
        } else {
            const double g0 = flat[3], g1 = flat[4], g2 = flat[5];
            const double log_one_minus_alpha = std::log(1.0 - alpha);
            double q = q1, gap = x1;
            for (std::size_t t = 0;; ++t) {
                const double es = q - gap;
                if (!(es < 0) || !std::isfinite(es)) return neg_inf;
                const double indicator = returns[t] <= q ? 1.0 : 0.0;
                ll += log_one_minus_alpha - std::log(-es) +
                      (returns[t] - q) * (alpha - indicator) / (alpha * es);
                if (t + 1 == n) break;
                const double q_prev = q, gap_prev = gap;
                q = b0 + b1 * driver[t] + b2 * q_prev;
                if (returns[t] <= q_prev) gap = g0 + g1 * (q_prev - returns[t]) + g2 * gap_prev;
            }
        }
        return std::isfinite(ll) ? ll : neg_inf;
    }

    /// Flat-prior log posterior over region A.
    double operator()(std::span<const double> flat) const {
        if (!in_region_a(spec, ParamVector::from_flat(spec.form, flat))) return neg_inf;
        return log_likelihood(flat);
    }

    std::pair<double, double> forecast(std::span<const double> flat) const {
        ParamVector p = ParamVector::from_flat(spec.form, flat);
        const RiskPath path = risk_path(spec, p, returns, driver, InitPolicy::fixed(q1, x1));
        return {path.q_next, path.es_next};
    }
};

struct QrInitConfig {
    int n_starts = 100;
    int max_iter = 300;
    std::uint64_t seed = 1;
};

namespace detail {
inline double quantile_only_loss(std::span<const double> beta, std::span<const double> returns,
                                 std::span<const double> driver, double q1, double alpha) {
    double q = q1, loss = 0;
    const std::size_t n = returns.size();
    for (std::size_t t = 0;; ++t) {
        if (!std::isfinite(q)) return pos_inf;
        const double indicator = returns[t] < q ? 1.0 : 0.0;
        loss += (alpha - indicator) * (returns[t] - q);
        if (t + 1 == n) break;
        q = beta[0] + beta[1] * driver[t] + beta[2] * q;
    }
    return std::isfinite(loss) ? loss : pos_inf;
}
} // namespace detail

/// Start values for the quantile betas: multi-start simplex minimization of
/// the quantile loss with the ES component left out. Falls back to a
/// documented default when the data are degenerate or every start fails.
inline std::array<double, 3> quantile_reg_init(std::span<const double> returns,
                                               std::span<const double> driver, double alpha,
                                               const QrInitConfig& cfg = {}) {
    if (returns.size() < 100) throw validation_error("quantile_reg_init: need >= 100 obs");
    const double q_emp = empirical_quantile(returns, alpha);
    const std::array<double, 3> fallback{q_emp * (1.0 - 0.9), -0.1, 0.9};
    if (stdev(returns) == 0.0) return fallback;

    auto [q1, x1_unused] = detail::empirical_init(returns, alpha);
    (void)x1_unused;
    const double b0_cap = std::max(1.0, 10.0 * std::abs(q_emp));

    auto project = [&](std::vector<double>& v) {
        v[0] = std::clamp(v[0], -b0_cap, b0_cap);
        v[1] = std::clamp(v[1], -10.0, 0.0);
        v[2] = std::clamp(v[2], -0.999, 0.999);
    };
    auto objective = [&](const std::vector<double>& v) {
        return detail::quantile_only_loss(v, returns, driver, q1, alpha);
    };

    Rng rng = seeded_rng(cfg.seed, 0x9c1);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SimplexOptions opt;
    opt.max_iter = cfg.max_iter;

    std::vector<double> best;
    double best_loss = pos_inf;
    for (int s = 0; s < std::max(1, cfg.n_starts); ++s) {
        std::vector<double> start;
        if (s == 0) {
            start = {fallback[0], fallback[1], fallback[2]};
        } else {
            const double b2 = 0.3 + 0.68 * u01(rng);
            const double b1 = -0.5 * u01(rng);
            const double b0 = q_emp * (1.0 - b2) * (0.25 + 1.75 * u01(rng));
            start = {b0, b1, b2};
        }
        const SimplexResult res = nelder_mead(objective, start, opt, project);
        if (std::isfinite(res.f) && res.f < best_loss) {
            best_loss = res.f;
            best = res.x;
        }
    }
    if (best.empty()) return fallback;
    return {best[0], best[1], best[2]};
}

struct MleConfig {
    int n_starts = 2000;
    int max_iter = 500;
    std::uint64_t seed = 1;
    QrInitConfig qr;
    std::optional<ParamVector> explicit_start;
};

struct FitResult {
    FitMethod method = FitMethod::mle;
    ParamVector point;
    RiskPath path;                // at the point estimate; for MCMC, q_next /
                                  // es_next are posterior forecast means
    double log_lik = neg_inf;     // AL log-likelihood at the point
    std::vector<double> start_trace; // MLE: optimized log-likelihood per start
    std::optional<Eigen::MatrixXd> draws;
    std::vector<double> draw_log_post;
    std::vector<EpochReport> epochs;
    bool epoch_converged = true;
};

namespace detail {
inline void gamma_box(const ModelSpec& spec, std::vector<double>& v) {
    if (spec.form == EsForm::ar) {
        for (std::size_t i = 3; i < 6; ++i) v[i] = std::clamp(v[i], 0.0, 10.0);
    } else {
        v[3] = std::clamp(v[3], -20.0, 20.0);
    }
}
} // namespace detail

/// Multi-start maximum likelihood. Betas start from quantile regression; the
/// gamma starts are sampled uniformly from [0,1]^3 (ar) or [-5,0] (exp) and
/// each candidate is polished by projected Nelder-Mead on the negative AL
/// log-likelihood. Returns the best feasible optimum.
inline FitResult mle_fit(const ModelSpec& spec, std::span<const double> returns,
                         std::span<const double> driver, const MleConfig& cfg = {},
                         const InitPolicy& init = {}) {
    if (returns.size() < 250) throw validation_error("mle_fit: need >= 250 observations");
    const AlPosterior posterior(spec, returns, driver, init);

    const double b0_cap = std::max(1.0, 10.0 * std::abs(empirical_quantile(returns, spec.alpha)));
    auto project = [&](std::vector<double>& v) {
        v[0] = std::clamp(v[0], -b0_cap, b0_cap);
        v[1] = std::clamp(v[1], -10.0, 0.0);
        v[2] = std::clamp(v[2], -0.999, 0.999);
        detail::gamma_box(spec, v);
    };
    auto objective = [&](const std::vector<double>& v) {
        const double ll = posterior.log_likelihood(v);
        return std::isfinite(ll) ? -ll : pos_inf;
    };

    QrInitConfig qr = cfg.qr;
    qr.seed = cfg.seed;
    const std::array<double, 3> betas = quantile_reg_init(returns, driver, spec.alpha, qr);

    Rng rng = seeded_rng(cfg.seed, 0x31e);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    SimplexOptions opt;
    opt.max_iter = cfg.max_iter;

    FitResult out;
    out.method = FitMethod::mle;
    double best = pos_inf;
    std::vector<double> best_x;

    const int total = std::max(1, cfg.n_starts);
    for (int s = 0; s < total; ++s) {
        std::vector<double> start;
        if (s == 0 && cfg.explicit_start) {
            if (!in_region_a(spec, *cfg.explicit_start)) {
                out.start_trace.push_back(neg_inf); // infeasible start skipped
                continue;
            }
            start = cfg.explicit_start->flat();
        } else {
            start = {betas[0], betas[1], betas[2]};
            if (spec.form == EsForm::ar) {
                start.push_back(u01(rng));
                start.push_back(u01(rng));
                start.push_back(u01(rng));
            } else {
                start.push_back(-5.0 * u01(rng));
            }
        }
        const SimplexResult res = nelder_mead(objective, start, opt, project);
        out.start_trace.push_back(std::isfinite(res.f) ? -res.f : neg_inf);
        if (res.f < best) {
            best = res.f;
            best_x = res.x;
        }
    }
    if (best_x.empty() || !std::isfinite(best))
        throw estimation_error("mle_fit: no feasible optimum across starts");

    out.point = ParamVector::from_flat(spec.form, best_x);
    out.log_lik = -best;
    out.path = risk_path(spec, out.point, returns, driver,
                         InitPolicy::fixed(posterior.q1, posterior.x1));
    return out;
}

/// Adaptive-MCMC posterior fit under the flat prior on region A. The point
/// estimate is the posterior mean; the one-step-ahead forecasts are posterior
/// means of the per-draw (Q, ES) forecasts rather than the forecast at the
/// posterior-mean parameters.
inline FitResult mcmc_fit(const ModelSpec& spec, std::span<const double> returns,
                          std::span<const double> driver, const McmcConfig& cfg = {},
                          const InitPolicy& init = {}) {
    if (returns.size() < 250) throw validation_error("mcmc_fit: need >= 250 observations");
    const AlPosterior posterior(spec, returns, driver, init);

    // chain start: a short multi-start mode search keeps the desk-length
    // burn-in from inheriting a bad quantile-regression optimum
    std::vector<double> x0;
    if (cfg.start_polish_starts > 0) {
        MleConfig polish;
        polish.n_starts = cfg.start_polish_starts;
        polish.max_iter = cfg.start_polish_iters;
        polish.seed = cfg.seed;
        try {
            x0 = mle_fit(spec, returns, driver, polish, init).point.flat();
        } catch (const estimation_error&) {
            x0.clear();
        }
    }
    if (x0.empty()) {
        QrInitConfig qr;
        qr.seed = cfg.seed;
        const std::array<double, 3> betas = quantile_reg_init(returns, driver, spec.alpha, qr);
        x0 = {betas[0], betas[1], betas[2]};
        if (spec.form == EsForm::ar) {
            x0.insert(x0.end(), {0.1, 0.2, 0.3});
        } else {
            x0.push_back(-1.9);
        }
        // repair an infeasible start by pushing the quantile level down
        if (!std::isfinite(posterior(x0))) {
            const double q_emp = empirical_quantile(returns, spec.alpha);
            std::vector<double> probe = x0;
            bool ok = false;
            for (int k = 0; k < 12 && !ok; ++k) {
                probe[0] -= 0.5 * std::max(0.1, std::abs(q_emp)) * (1.0 - probe[2]);
                ok = std::isfinite(posterior(probe));
            }
            if (!ok) throw estimation_error("mcmc_fit: no feasible starting point");
            x0 = probe;
        }
    }

    Rng rng = seeded_rng(cfg.seed, 0x3c);
    SamplerResult sample = adaptive_block_sampler(
        [&](std::span<const double> v) { return posterior(v); }, x0,
        BlockPartition::for_model(spec), cfg, rng);

    const Eigen::RowVectorXd post_mean = sample.draws.colwise().mean();
    std::vector<double> mean_flat(post_mean.data(), post_mean.data() + post_mean.size());

    FitResult out;
    out.method = FitMethod::mcmc;
    out.point = ParamVector::from_flat(spec.form, mean_flat);
    out.path = risk_path(spec, out.point, returns, driver,
                         InitPolicy::fixed(posterior.q1, posterior.x1));
    out.log_lik = posterior.log_likelihood(mean_flat);

    // posterior-mean one-step-ahead forecasts, caching repeated chain states
    double qf = 0, ef = 0;
    std::vector<double> row(static_cast<std::size_t>(sample.draws.cols()));
    std::vector<double> prev_row;
    std::pair<double, double> prev_fc{0, 0};
    for (Eigen::Index i = 0; i < sample.draws.rows(); ++i) {
        for (Eigen::Index j = 0; j < sample.draws.cols(); ++j)
            row[static_cast<std::size_t>(j)] = sample.draws(i, j);
        if (row != prev_row) {
            prev_fc = posterior.forecast(row);
            prev_row = row;
        }
        qf += prev_fc.first;
        ef += prev_fc.second;
    }
    const double nr = static_cast<double>(sample.draws.rows());
    out.path.q_next = qf / nr;
    out.path.es_next = ef / nr;

    out.draws = std::move(sample.draws);
    out.draw_log_post = std::move(sample.log_post);
    out.epochs = std::move(sample.epochs);
    out.epoch_converged = sample.epoch_converged;
    return out;
}

} // namespace tailrisk
