#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numeric>
#include <vector>

#include "tailrisk/estimate.hpp"
#include "tailrisk/sim.hpp"

using namespace tailrisk;

namespace {
SimPath sample_path(std::size_t n, std::uint64_t seed) {
    DgpSpec dgp;
    dgp.n = n;
    Rng rng = seeded_rng(seed, 0);
    return simulate_abs_garch(dgp, rng);
}
} // namespace

TEST_CASE("tune_scale fixed point and monotonicity") {
    CHECK_THAT(tune_scale(1.0, 0.234, 0.234, 10), Catch::Matchers::WithinAbs(1.0, 1e-15));
    CHECK(tune_scale(1.0, 1.0, 0.234, 10) > 1.0);
    CHECK(tune_scale(1.0, 0.0, 0.234, 10) < 1.0);
    // the step shrinks with the iteration count
    const double early = tune_scale(1.0, 1.0, 0.234, 10);
    const double late = tune_scale(1.0, 1.0, 0.234, 1000000);
    CHECK(late < early);
    CHECK(late > 1.0);
}

TEST_CASE("acceptance targets by block dimension") {
    CHECK(acceptance_target(1) == 0.44);
    CHECK(acceptance_target(3) == 0.35);
    CHECK(acceptance_target(6) == 0.234);
}

TEST_CASE("fused likelihood equals the composed reference") {
    const SimPath sim = sample_path(400, 7);
    const auto d = abs_driver(sim.returns);
    Rng rng = seeded_rng(8, 0);
    std::uniform_real_distribution<double> u(0.0, 1.0);

    for (int form = 0; form < 2; ++form) {
        ModelSpec spec;
        spec.form = form ? EsForm::ar : EsForm::exponential;
        spec.alpha = 0.01;
        const AlPosterior posterior(spec, sim.returns, d);
        for (int trial = 0; trial < 50; ++trial) {
            ParamVector p;
            p.beta = {-0.2 * u(rng), -0.4 * u(rng), 0.9 * u(rng)};
            if (spec.form == EsForm::ar)
                p.gamma = {0.2 * u(rng), 0.5 * u(rng), 0.8 * u(rng)};
            else
                p.gamma = {-4.0 * u(rng)};
            const double fused = posterior.log_likelihood(p.flat());
            const RiskPath path =
                risk_path(spec, p, sim.returns, d, InitPolicy::fixed(posterior.q1, posterior.x1));
            const double composed = al_log_likelihood(path, sim.returns, spec.alpha);
            if (std::isfinite(fused) || std::isfinite(composed))
                CHECK_THAT(fused, Catch::Matchers::WithinAbs(composed, 1e-8));
            else
                CHECK(fused == composed);
        }
    }
}

TEST_CASE("quantile_reg_init degenerate input returns the fallback start") {
    const std::vector<double> flat(300, 0.0);
    const auto d = abs_driver(flat);
    const auto betas = quantile_reg_init(flat, d, 0.05);
    CHECK(betas[1] == -0.1);
    CHECK(betas[2] == 0.9);
}

TEST_CASE("quantile_reg_init at the median of symmetric iid data sits near zero") {
    Rng rng = seeded_rng(9, 0);
    std::normal_distribution<double> norm(0.0, 1.0);
    std::vector<double> r(1500);
    for (auto& v : r) v = norm(rng);
    const auto d = abs_driver(r);
    QrInitConfig cfg;
    cfg.n_starts = 60;
    const auto betas = quantile_reg_init(r, d, 0.5, cfg);
    const double mean_abs = mean(d);
    const double long_run = (betas[0] + betas[1] * mean_abs) / (1.0 - betas[2]);
    CHECK(std::abs(long_run) < 0.15);
}

TEST_CASE("quantile_reg_init needs 100 observations") {
    const std::vector<double> r(50, 0.1);
    CHECK_THROWS_AS(quantile_reg_init(r, abs_driver(r), 0.05), validation_error);
}

TEST_CASE("mle idempotence at a known optimum and infeasible-start handling") {
    const SimPath sim = sample_path(500, 10);
    const auto d = abs_driver(sim.returns);
    ModelSpec spec;
    spec.form = EsForm::exponential;
    spec.alpha = 0.05;

    MleConfig cfg;
    cfg.n_starts = 25;
    cfg.max_iter = 300;
    cfg.qr.n_starts = 40;
    cfg.seed = 3;
    const FitResult first = mle_fit(spec, sim.returns, d, cfg);

    MleConfig again;
    again.n_starts = 1;
    again.max_iter = 300;
    again.seed = 4;
    again.explicit_start = first.point;
    const FitResult second = mle_fit(spec, sim.returns, d, again);
    CHECK(second.log_lik >= first.log_lik - 1e-6);
    for (std::size_t i = 0; i < 4; ++i)
        CHECK_THAT(second.point.flat()[i],
                   Catch::Matchers::WithinAbs(first.point.flat()[i], 2e-2));

    // an explosive start violates region A and is rejected, not crashed
    MleConfig boom;
    boom.n_starts = 1;
    ParamVector bad = first.point;
    bad.beta[2] = 1.5;
    boom.explicit_start = bad;
    CHECK_THROWS_AS(mle_fit(spec, sim.returns, d, boom), estimation_error);
}

TEST_CASE("mle log-likelihood dominates every evaluated start") {
    const SimPath sim = sample_path(400, 11);
    const auto d = abs_driver(sim.returns);
    ModelSpec spec;
    spec.form = EsForm::ar;
    spec.alpha = 0.025;
    MleConfig cfg;
    cfg.n_starts = 15;
    cfg.max_iter = 200;
    cfg.qr.n_starts = 30;
    const FitResult fit = mle_fit(spec, sim.returns, d, cfg);
    REQUIRE(fit.start_trace.size() == 15);
    for (double v : fit.start_trace) CHECK(fit.log_lik >= v - 1e-9);
    CHECK(in_region_a(spec, fit.point));
    // and it beats the true-parameter likelihood it was fit against
    const AlPosterior posterior(spec, sim.returns, d);
    ParamVector truth;
    truth.beta = {map_true_betas(DgpSpec{}, 0.025)[0], map_true_betas(DgpSpec{}, 0.025)[1],
                  map_true_betas(DgpSpec{}, 0.025)[2]};
    truth.gamma = {0.05, 0.2, 0.3};
    CHECK(fit.log_lik >= posterior.log_likelihood(truth.flat()) - 1e-9);
}

TEST_CASE("adaptive sampler recovers the moments of a boxed Gaussian") {
    // standard bivariate normal, correlation 0.5, restricted to [-4,4]^2
    const double rho = 0.5;
    const double det = 1.0 - rho * rho;
    auto log_target = [&](std::span<const double> x) {
        if (std::abs(x[0]) > 4.0 || std::abs(x[1]) > 4.0) return neg_inf;
        return -0.5 * (x[0] * x[0] - 2.0 * rho * x[0] * x[1] + x[1] * x[1]) / det;
    };
    BlockPartition blocks;
    blocks.blocks = {{0}, {1}};
    McmcConfig cfg;
    cfg.epoch_iters = 4000;
    cfg.epoch_discard = 800;
    cfg.max_epochs = 4;
    cfg.final_iters = 50000;
    cfg.final_discard = 2000;
    Rng rng = seeded_rng(12, 0);
    const SamplerResult out =
        adaptive_block_sampler(log_target, {0.5, -0.5}, blocks, cfg, rng);

    const auto n = static_cast<double>(out.draws.rows());
    const double m0 = out.draws.col(0).mean();
    const double m1 = out.draws.col(1).mean();
    const double v0 = (out.draws.col(0).array() - m0).square().sum() / (n - 1);
    const double v1 = (out.draws.col(1).array() - m1).square().sum() / (n - 1);
    const double cov =
        ((out.draws.col(0).array() - m0) * (out.draws.col(1).array() - m1)).sum() / (n - 1);
    CHECK_THAT(m0, Catch::Matchers::WithinAbs(0.0, 0.05));
    CHECK_THAT(m1, Catch::Matchers::WithinAbs(0.0, 0.05));
    CHECK_THAT(v0, Catch::Matchers::WithinAbs(1.0, 0.08));
    CHECK_THAT(v1, Catch::Matchers::WithinAbs(1.0, 0.08));
    CHECK_THAT(cov / std::sqrt(v0 * v1), Catch::Matchers::WithinAbs(rho, 0.05));
}

TEST_CASE("prior-only chain tracks the tuning targets") {
    // constant likelihood on a box: acceptance is driven by tuning alone
    auto log_target = [](std::span<const double> x) {
        for (double v : x)
            if (std::abs(v) > 1.0) return neg_inf;
        return 0.0;
    };
    BlockPartition blocks;
    blocks.blocks = {{0, 1, 2}, {3}};
    McmcConfig cfg;
    cfg.epoch_iters = 6000;
    cfg.epoch_discard = 1000;
    cfg.max_epochs = 3;
    cfg.final_iters = 2000;
    cfg.final_discard = 500;
    Rng rng = seeded_rng(13, 0);
    const SamplerResult out =
        adaptive_block_sampler(log_target, {0, 0, 0, 0}, blocks, cfg, rng);
    // look at the last burn-in epoch
    const EpochReport& last_burn = out.epochs[out.epochs.size() - 2];
    REQUIRE_FALSE(last_burn.final_epoch);
    CHECK_THAT(last_burn.accept_rate[0], Catch::Matchers::WithinAbs(0.35, 0.10));
    CHECK_THAT(last_burn.accept_rate[1], Catch::Matchers::WithinAbs(0.44, 0.10));
}

TEST_CASE("sampler reports zero acceptance as an estimation error") {
    bool first = true;
    auto log_target = [&](std::span<const double> x) {
        // only the exact starting point is feasible
        if (first) {
            first = false;
            return 0.0;
        }
        (void)x;
        return neg_inf;
    };
    BlockPartition blocks;
    blocks.blocks = {{0}};
    McmcConfig cfg;
    cfg.epoch_iters = 200;
    cfg.epoch_discard = 50;
    cfg.max_epochs = 1;
    cfg.final_iters = 100;
    cfg.final_discard = 10;
    Rng rng = seeded_rng(14, 0);
    CHECK_THROWS_AS(adaptive_block_sampler(log_target, {0.0}, blocks, cfg, rng),
                    estimation_error);
}

TEST_CASE("mcmc_fit: draws live in region A, forecasts are posterior means") {
    const SimPath sim = sample_path(400, 15);
    const auto d = abs_driver(sim.returns);
    ModelSpec spec;
    spec.form = EsForm::ar;
    spec.alpha = 0.05;
    McmcConfig cfg;
    cfg.epoch_iters = 1500;
    cfg.epoch_discard = 300;
    cfg.max_epochs = 2;
    cfg.final_iters = 1500;
    cfg.final_discard = 300;
    cfg.seed = 16;
    const FitResult fit = mcmc_fit(spec, sim.returns, d, cfg);

    REQUIRE(fit.draws.has_value());
    CHECK(fit.draws->rows() == 1200);
    CHECK(fit.draw_log_post.size() == 1200);
    for (Eigen::Index i = 0; i < fit.draws->rows(); ++i) {
        std::vector<double> flat(fit.draws->cols());
        for (Eigen::Index j = 0; j < fit.draws->cols(); ++j)
            flat[static_cast<std::size_t>(j)] = (*fit.draws)(i, j);
        CHECK(in_region_a(spec, ParamVector::from_flat(spec.form, flat)));
    }
    // non-crossing at the posterior mean
    for (std::size_t t = 0; t < fit.path.q.size(); ++t) CHECK(fit.path.es[t] <= fit.path.q[t]);
    CHECK(fit.path.es_next <= fit.path.q_next + 1e-12);
    CHECK(fit.epochs.size() >= 2);

    // deterministic replay
    const FitResult again = mcmc_fit(spec, sim.returns, d, cfg);
    CHECK(again.draws->isApprox(*fit.draws, 0.0));
    CHECK(again.path.q_next == fit.path.q_next);
    CHECK(again.path.es_next == fit.path.es_next);
}

TEST_CASE("mcmc_fit rejects samples that are too short") {
    const SimPath sim = sample_path(200, 17);
    const auto d = abs_driver(sim.returns);
    ModelSpec spec;
    spec.form = EsForm::exponential;
    CHECK_THROWS_AS(mcmc_fit(spec, sim.returns, d, McmcConfig::desk()), validation_error);
}
