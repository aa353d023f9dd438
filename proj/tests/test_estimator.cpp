#include <catch2/catch_amalgamated.hpp>
#include <random>

#include "apnf/estimator.hpp"

using namespace apnf;

TEST_CASE("f_tilde and lambda") {
    REQUIRE(lambda_param(0.0, 0.0, f_tilde(1.0, 1, 1.0)) == 0.0);
    REQUIRE(f_tilde(1.0, 1, 1.0) == Catch::Approx(4.0830).epsilon(1e-4));
    double ft = f_tilde(1.0, 1, 1.0);
    REQUIRE(lambda_param(0.001, 0.01, ft) == Catch::Approx(0.021099).epsilon(1e-4));
    REQUIRE_THROWS_AS(f_tilde(1.0, 1, 0.0), std::invalid_argument);
    // doubling n squares the angle factor
    double base = f_tilde(1.0, 1, 0.7);
    REQUIRE(f_tilde(1.0, 2, 0.7) == Catch::Approx(base * base).epsilon(1e-12));
}

TEST_CASE("delta threshold and kappa") {
    ThresholdCheck t = delta_threshold(2, 1.0, 0.5, 0.5, 1e-4, 13);
    REQUIRE(t.Delta == Catch::Approx(0.3599).epsilon(1e-3));
    REQUIRE(t.smallness_ok);
    REQUIRE(t.kappa_ok);  // e^{-3.25} ~ 0.03877 >= 0.03315
    ThresholdCheck t2 = delta_threshold(2, 1.0, 0.5, 0.5, 1e-4, 40);
    REQUIRE_FALSE(t2.kappa_ok);  // e^{-10} too small
    ThresholdCheck t0 = delta_threshold(2, 1.0, 0.5, 0.5, 0.0, 200);
    REQUIRE(t0.Delta < 1e-20);
    REQUIRE(t0.smallness_ok);
}

TEST_CASE("recurrences: hand-unrolled low orders") {
    const double h = 0.05, mu = 0.01, Gamma = 3.0, Cr = 0.02;
    SequenceTriple t = run_recurrences(3, h, mu, Gamma, Cr);
    REQUIRE(t.beta[0] == 1.0);
    REQUIRE(t.theta[0] == 1.0);
    REQUIRE(t.gamma[0] == Gamma);
    REQUIRE(t.theta[1] == Catch::Approx(Cr));
    REQUIRE(t.theta_bound[0] == Catch::Approx(Cr));  // bound saturated at s=1
    // beta_2 = h + mu Gamma + (1/2) theta_1 + (Cr/2) beta_1
    //        = h + mu Gamma + Cr/2 + Cr/2 = h + mu Gamma + Cr
    REQUIRE(t.beta[1] == Catch::Approx(h + mu * Gamma + Cr).epsilon(1e-14));
    REQUIRE(t.b == Catch::Approx(4.0 * (h + Cr + mu * Gamma)));
    REQUIRE(t.tau == Catch::Approx(t.b - 2.0 * Cr));
}

TEST_CASE("recurrence values bounded by closed forms when hypotheses hold") {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> uh(0.01, 0.12), umu(0.0, 1.0),
        ug(0.5, 20.0);
    int tested = 0;
    while (tested < 1000) {
        double h = uh(rng);
        double Gamma = ug(rng);
        double Cr = std::uniform_real_distribution<double>(0.0, 1.5 * h)(rng);
        double mu = umu(rng) * (0.25 - h - Cr) / Gamma * 0.9;
        if (mu < 0.0) continue;
        SequenceTriple t = run_recurrences(30, h, mu, Gamma, Cr);
        if (!(t.cr_ok && t.b_ok)) continue;
        ++tested;
        for (int s = 1; s <= 30; ++s) {
            INFO("s=" << s << " h=" << h << " Cr=" << Cr << " mu=" << mu);
            REQUIRE(t.beta[s - 1] <= t.beta_bound[s - 1] * (1.0 + 1e-12));
            REQUIRE(t.theta[s] <= t.theta_bound[s - 1] * (1.0 + 1e-12));
            REQUIRE(t.gamma[s - 1] <= t.gamma_bound[s - 1] * (1.0 + 1e-12));
        }
    }
}

TEST_CASE("minunmezzo examples") {
    REQUIRE(minunmezzo_check(0.0, 0.125, 1.0, 1.0, 1.0, 0.0));
    REQUIRE_FALSE(minunmezzo_check(1e-3, 0.125, 1.0, 1.0, 1.0, 0.3));
    REQUIRE(minunmezzo_check(1e-4, 0.125, 1.0, 1.0, 1.0, 0.3));
    REQUIRE_THROWS_AS(minunmezzo_check(0.0, 0.3, 1.0, 1.0, 1.0, 0.0),
                      std::invalid_argument);
}

TEST_CASE("remainder bound") {
    REQUIRE(remainder_bound(0.0, 4.0, 0.3, 2) == 0.0);
    REQUIRE(remainder_bound(1e-3, 4.083, 0.36, 2) == Catch::Approx(4.233e-3).epsilon(1e-3));
    REQUIRE(remainder_bound(1e-3, 4.083, 0.36, 3) < remainder_bound(1e-3, 4.083, 0.36, 2));
}

TEST_CASE("implication chain from the smallness conditions") {
    // smallness with d = 1/8 implies minunmezzo, hence b < 1;
    // smallness plus kappa implies 2 C_r <= 3 h_decay.
    std::mt19937 rng(8);
    std::uniform_real_distribution<double> us(0.3, 1.0), ua(0.05, 2.0),
        ul(0.0, 1.0);
    int tested = 0;
    while (tested < 500) {
        double sigma = us(rng), delta = us(rng), alpha = ua(rng);
        int r = std::uniform_int_distribution<int>(1, 8)(rng);
        int K = std::uniform_int_distribution<int>(1, (int)(6.8 / sigma))(rng);
        // draw lambda below the smallness margin, split into mu and eps parts
        double hd = std::exp(-K * sigma / 2.0);
        double margin = 0.5 - 4.0 * hd;
        if (margin <= 0.0) continue;
        double lambda = ul(rng) * margin * alpha * delta * sigma / 256.0 / r;
        double mu = ul(rng) * lambda;
        double F_tilde = 4.0;  // arbitrary; fixes eps via lambda
        double eps = (lambda - mu) / (kEuler * F_tilde);
        double C_f = F_tilde / f_tilde(1.0, 1, sigma);
        AnalyticConstants c =
            analytic_constants(1, r, K, C_f, sigma, delta, alpha, eps, mu);
        if (!c.smallness_ok) continue;
        ++tested;
        REQUIRE(c.minunmezzo_ok);
        REQUIRE(c.b_ok);
        if (c.kappa_ok) REQUIRE(c.cr_ok);
    }
}

TEST_CASE("parameter synthesis chain") {
    StabilityPlan p = nekhoroshev_plan(1.0, 1.0, 1.0, 1.0, 1.0, 1, 1e-9, 1e-10);
    REQUIRE(p.a == 2);
    REQUIRE(p.Sigma == Catch::Approx(6.1589).epsilon(1e-4));
    REQUIRE(p.K == 7);
    REQUIRE(p.delta_star == Catch::Approx(672.0));
    REQUIRE(p.Delta_star == Catch::Approx(5.344e5).epsilon(1e-3));
    REQUIRE(p.threshold == Catch::Approx(2.31e-8).epsilon(1e-2));
    StabilityPlan p2 = nekhoroshev_plan(1.0, 1.0, 1.0, 1.0, 1.0, 2, 1e-9, 1e-10);
    REQUIRE(p2.a == 6);
    // under the threshold the plan is applicable with r >= 1 and small delta
    StabilityPlan ok = nekhoroshev_plan(1.0, 1.0, 1.0, 1.0, 1.0, 1, 1e-10, 1e-10);
    if (ok.threshold_ok) {
        REQUIRE(ok.r >= 1);
        REQUIRE(ok.delta < 1.0 / 3.0);
        REQUIRE(ok.K <= 1 + (int)std::ceil(ok.Sigma));
    }
    // mu -> 0 reduction: lambda collapses to the eps-only formula
    StabilityPlan pm = nekhoroshev_plan(1.0, 1.0, 1.0, 1.0, 1.0, 1, 1e-9, 0.0);
    REQUIRE(pm.lambda == Catch::Approx(kEuler * pm.F_tilde * 1e-9).epsilon(1e-14));
}

TEST_CASE("t_star") {
    REQUIRE(t_star(0.1, 1e-3, 0.3, 3, 1.0) == Catch::Approx(2.737e4).epsilon(1e-3));
    REQUIRE(std::isinf(t_star(0.1, 0.0, 0.3, 3, 1.0)));
    REQUIRE(std::isinf(t_star(0.1, 1e-3, 0.0, 3, 1.0)));
    REQUIRE(t_star(0.2, 1e-3, 0.3, 3, 1.0) ==
            Catch::Approx(2.0 * t_star(0.1, 1e-3, 0.3, 3, 1.0)));
    REQUIRE_THROWS_AS(t_star(0.1, 1e-3, 0.3, 3, 0.0), std::invalid_argument);
}
