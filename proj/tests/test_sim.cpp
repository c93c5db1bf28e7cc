#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "tailrisk/sim.hpp"

using namespace tailrisk;

TEST_CASE("map_true_betas reproduces the exact quantile coefficients") {
    DgpSpec dgp; // 0.02 / 0.10 / 0.85
    const auto betas = map_true_betas(dgp, 0.01);
    CHECK_THAT(betas[0], Catch::Matchers::WithinAbs(-0.0465, 5e-5));
    CHECK_THAT(betas[1], Catch::Matchers::WithinAbs(-0.2326, 5e-5));
    CHECK_THAT(betas[2], Catch::Matchers::WithinAbs(0.8500, 1e-12));

    const auto median = map_true_betas(dgp, 0.5);
    CHECK_THAT(median[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
    CHECK_THAT(median[1], Catch::Matchers::WithinAbs(0.0, 1e-12));

    DgpSpec no_const = dgp;
    no_const.omega = 1e-300; // omega must stay positive
    CHECK_THAT(map_true_betas(no_const, 0.01)[0], Catch::Matchers::WithinAbs(0.0, 1e-290));
}

TEST_CASE("true_var_es standard-normal constants") {
    const std::vector<double> unit_sd{1.0};
    const TrueRisk tr = true_var_es(unit_sd, 1.0, 0.01);
    CHECK_THAT(tr.var_series[0], Catch::Matchers::WithinAbs(-2.3263, 5e-5));
    CHECK_THAT(tr.es_series[0], Catch::Matchers::WithinAbs(-2.6652, 5e-5));
    CHECK_THAT(tr.es_series[0] / tr.var_series[0], Catch::Matchers::WithinAbs(1.14566, 5e-5));

    const TrueRisk median = true_var_es(unit_sd, 1.0, 0.5);
    CHECK_THAT(median.var_series[0], Catch::Matchers::WithinAbs(0.0, 1e-12));
}

TEST_CASE("solve_true_gamma_exp hits the implied value with zero spread") {
    Rng rng = seeded_rng(31, 0);
    DgpSpec dgp;
    dgp.n = 500;
    const SimPath path = simulate_abs_garch(dgp, rng);
    const TrueRisk risk = true_var_es(path.sd, path.sd_next, 0.01);
    const double g0 = solve_true_gamma_exp(risk);
    CHECK_THAT(g0, Catch::Matchers::WithinAbs(-1.92645, 1e-4));
    // per-t implied values are constant for the Gaussian DGP
    for (std::size_t t = 0; t < risk.var_series.size(); ++t) {
        const double per_t = std::log(risk.es_series[t] / risk.var_series[t] - 1.0);
        CHECK_THAT(per_t - g0, Catch::Matchers::WithinAbs(0.0, 1e-12));
    }

    TrueRisk doubled;
    doubled.var_series = {-1.0, -2.0};
    doubled.es_series = {-2.0, -4.0};
    CHECK_THAT(solve_true_gamma_exp(doubled), Catch::Matchers::WithinAbs(0.0, 1e-15));

    TrueRisk bad;
    bad.var_series = {-1.0};
    bad.es_series = {-0.5}; // ratio below 1
    CHECK_THROWS_AS(solve_true_gamma_exp(bad), validation_error);
}

TEST_CASE("mapped betas replay the true VaR series through the Q recursion") {
    DgpSpec dgp;
    dgp.n = 800;
    dgp.driver = DgpSpec::Driver::external_rv;
    dgp.rv = synthetic_rv_series(dgp.n);
    Rng rng = seeded_rng(32, 0);
    const SimPath path = simulate_abs_garch(dgp, rng);
    const TrueRisk risk = true_var_es(path.sd, path.sd_next, 0.01);

    std::vector<double> x(dgp.n);
    for (std::size_t i = 0; i < dgp.n; ++i) x[i] = std::sqrt(dgp.rv[i]);

    ModelSpec spec;
    spec.form = EsForm::exponential;
    spec.driver = DriverKind::realized;
    spec.alpha = 0.01;
    ParamVector p;
    const auto betas = map_true_betas(dgp, 0.01);
    p.beta = {betas[0], betas[1], betas[2]};
    p.gamma = {solve_true_gamma_exp(risk)};
    const RiskPath qpath =
        risk_path(spec, p, path.returns, x, InitPolicy::fixed(risk.var_series[0], 0.0));
    for (std::size_t t = 0; t < dgp.n; ++t)
        CHECK_THAT(qpath.q[t], Catch::Matchers::WithinRel(risk.var_series[t], 1e-10));
    CHECK_THAT(qpath.q_next, Catch::Matchers::WithinRel(risk.var_next, 1e-10));
    CHECK_THAT(qpath.es_next, Catch::Matchers::WithinRel(risk.es_next, 1e-8));
}

TEST_CASE("search_true_gamma_ar is seeded and bounded") {
    DgpSpec dgp;
    dgp.n = 300;
    Rng rng = seeded_rng(33, 0);
    const SimPath path = simulate_abs_garch(dgp, rng);
    const TrueRisk risk = true_var_es(path.sd, path.sd_next, 0.01);

    Rng s1 = seeded_rng(34, 0), s2 = seeded_rng(34, 0), s3 = seeded_rng(35, 0);
    const auto a = search_true_gamma_ar(risk, path.returns, 0.01, 300, s1);
    const auto b = search_true_gamma_ar(risk, path.returns, 0.01, 300, s2);
    CHECK(a == b);
    for (double g : a) {
        CHECK(g >= 0.0);
        CHECK(g <= 1.0);
    }
    const auto single = search_true_gamma_ar(risk, path.returns, 0.01, 1, s3);
    Rng s4 = seeded_rng(35, 0);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double g0 = u01(s4), g1 = u01(s4), g2 = u01(s4);
    CHECK(single == std::array<double, 3>{g0, g1, g2}); // degenerate search returns the trial
}

TEST_CASE("simulate_abs_garch constant-volatility and determinism") {
    DgpSpec flat;
    flat.a1 = 0.0;
    flat.b1 = 0.0;
    flat.omega = 0.5;
    flat.n = 4000;
    Rng rng = seeded_rng(36, 0);
    const SimPath path = simulate_abs_garch(flat, rng);
    for (double s : path.sd) CHECK(s == 0.5);
    CHECK_THAT(stdev(path.returns), Catch::Matchers::WithinAbs(0.5, 0.02));

    Rng r1 = seeded_rng(37, 0), r2 = seeded_rng(37, 0);
    DgpSpec dgp;
    dgp.n = 200;
    CHECK(simulate_abs_garch(dgp, r1).returns == simulate_abs_garch(dgp, r2).returns);
}

TEST_CASE("X-driven DGP is internally consistent at study scale") {
    DgpSpec dgp;
    dgp.n = 1905;
    dgp.driver = DgpSpec::Driver::external_rv;
    dgp.rv = synthetic_rv_series(dgp.n);
    Rng rng = seeded_rng(38, 0);
    const SimPath path = simulate_abs_garch(dgp, rng);
    // martingale-difference returns: E[r^2] = E[h]
    double mean_h = 0;
    for (double s : path.sd) mean_h += s * s;
    mean_h /= static_cast<double>(path.sd.size());
    CHECK_THAT(stdev(path.returns) / std::sqrt(mean_h), Catch::Matchers::WithinAbs(1.0, 0.10));
}

TEST_CASE("synthetic_rv_series is positive and reproducible") {
    const auto a = synthetic_rv_series(1905);
    const auto b = synthetic_rv_series(1905);
    CHECK(a == b);
    CHECK(a.size() == 1905);
    for (double v : a) CHECK(v > 0.0);
    CHECK(stdev(a) > 0.0);
}

TEST_CASE("single-replication table has RMSE equal to absolute bias") {
    StudyConfig cfg;
    cfg.n_reps = 1;
    cfg.n = 400;
    cfg.seed = 9;
    cfg.gamma_trials = 100;
    cfg.run_mcmc = false;
    cfg.mle.n_starts = 10;
    cfg.mle.max_iter = 150;
    cfg.mle.qr.n_starts = 20;
    const ReplicationTable t = run_replication_study(StudyKind::expo, cfg);
    REQUIRE(t.rows.size() == 6);
    CHECK(t.replications == 1);
    CHECK(t.failures == 0);
    for (std::size_t j = 0; j < t.rows.size(); ++j)
        CHECK_THAT(t.ml_rmse[j], Catch::Matchers::WithinAbs(std::abs(t.ml_mean[j] - t.true_mean[j]),
                                                            1e-12));
}

TEST_CASE("replication table invariants and shared datasets across estimators") {
    StudyConfig cfg;
    cfg.n_reps = 3;
    cfg.n = 400;
    cfg.seed = 11;
    cfg.gamma_trials = 150;
    cfg.run_mcmc = false;
    cfg.mle.n_starts = 8;
    cfg.mle.max_iter = 120;
    cfg.mle.qr.n_starts = 20;
    const ReplicationTable ml_only = run_replication_study(StudyKind::ar, cfg);
    for (std::size_t j = 0; j < ml_only.rows.size(); ++j)
        CHECK(ml_only.ml_rmse[j] >= std::abs(ml_only.ml_mean[j] - ml_only.true_mean[j]) - 1e-12);

    StudyConfig cfg2 = cfg;
    cfg2.run_mcmc = true;
    cfg2.run_mle = false;
    cfg2.mcmc.epoch_iters = 800;
    cfg2.mcmc.epoch_discard = 200;
    cfg2.mcmc.max_epochs = 2;
    cfg2.mcmc.final_iters = 800;
    cfg2.mcmc.final_discard = 200;
    const ReplicationTable mcmc_only = run_replication_study(StudyKind::ar, cfg2);
    // identical seeds -> identical simulated datasets -> identical truths
    for (std::size_t j = 0; j < ml_only.rows.size(); ++j)
        CHECK(ml_only.true_mean[j] == mcmc_only.true_mean[j]);
}
