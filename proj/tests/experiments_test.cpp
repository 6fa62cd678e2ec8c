#include <doctest.h>

#include <cmath>

#include "mgauction/experiments.hpp"
#include "mgauction/io.hpp"

using namespace mgauction;
using doctest::Approx;

TEST_SUITE("experiments")
{
    TEST_CASE("spearman")
    {
        const std::vector<double> up{1, 2, 3, 4, 5}, down{9, 7, 5, 3, 1}, sq{1, 4, 9, 16, 25};
        CHECK(spearman(up, sq) == Approx(1.0).epsilon(1e-15));
        CHECK(spearman(up, down) == Approx(-1.0).epsilon(1e-15));
        const std::vector<double> a{1, 2, 3, 4}, ties{1, 1, 2, 2};
        CHECK(spearman(a, ties) == Approx(4.0 / std::sqrt(20.0)).epsilon(1e-15));
        const std::vector<double> flat{3, 3, 3, 3};
        CHECK(std::isnan(spearman(a, flat)));
        CHECK_THROWS_AS(spearman(a, up), std::invalid_argument);
    }

    TEST_CASE("invariant checks catch violations")
    {
        AuctionOutcome out;
        out.clearing.d = {1.0};
        out.clearing.s = {0.5};
        CHECK_THROWS_AS(check_outcome(out), InvariantViolation);

        out.clearing.s = {1.0};
        out.converged = true;
        out.payoffs.mc_revenue = -0.1;
        CHECK_THROWS_AS(check_outcome(out), InvariantViolation);

        out.payoffs.mc_revenue = 0.0;
        out.buyers = {BuyerState{1, 1, 0.5, 1.0}};
        out.payoffs.buyer_payoffs = {-0.01};
        CHECK_THROWS_AS(check_outcome(out), InvariantViolation);
        out.payoffs.buyer_payoffs = {0.01};
        CHECK_NOTHROW(check_outcome(out));
    }

    TEST_CASE("payoff sweep")
    {
        PayoffSweepConfig cfg;
        cfg.seller_counts = {3, 4};
        cfg.buyer_counts = {2, 4, 8};
        cfg.replications = 3;
        const auto rep = exp_payoff_sweep(cfg);
        CHECK(rep.experiment == "payoffs");
        const auto cells = rep.table("cell");
        REQUIRE(cells.size() == 6);
        REQUIRE(rep.table("run").size() == 18);
        for (const auto* c : cells) {
            CHECK(c->at("replications") == 3.0);
            CHECK(c->at("buyer_payoff") >= -1e-6);
        }
        CHECK(std::abs(rep.summary_at("spearman_buyer_ns3")) <= 1.0);
        CHECK(rep.summary_at("records") == 24.0);

        // same seed, byte-identical output
        const auto again = exp_payoff_sweep(cfg);
        CHECK(again == rep);
        CHECK(report_to_csv(again) == report_to_csv(rep));
        CHECK(report_to_json(again) == report_to_json(rep));

        cfg.base.seed = 2;
        CHECK_FALSE(exp_payoff_sweep(cfg) == rep);
    }

    TEST_CASE("case study")
    {
        const auto rep = exp_case_study({});
        CHECK(rep.experiment == "case");
        const auto sellers = rep.table("seller");
        REQUIRE(sellers.size() == 10);
        bool short_in_low = false;
        for (const auto* s : sellers) {
            const bool low = s->label.rfind("I ", 0) == 0;
            CHECK(s->at("s") <= s->at("a") + 1e-9);
            CHECK(s->at("c") <= 0.25 + 1e-9);
            if (low && s->at("s") < s->at("a") - 1e-6) short_in_low = true;
            if (!low) CHECK(s->at("s") >= s->at("a") - 1e-6 * std::max(1.0, s->at("a")));
        }
        CHECK(short_in_low);
        CHECK(rep.table("buyer").size() == 15);
        CHECK(rep.summary_at("I_mc_revenue") >= -1e-9);
        CHECK(rep.summary_at("II_mc_revenue") >= -1e-9);
        // a sold-out market leaves nothing to move
        CHECK(rep.summary_at("II_kappa_f") == Approx(0.0).epsilon(1e-12));
        CHECK(rep.summary_at("I_kappa_f") >= -1e-9);
        CHECK(exp_case_study({}) == rep);

        CaseStudyConfig bad;
        bad.buyers_high = 2;
        CHECK_THROWS_AS(exp_case_study(bad), std::invalid_argument);
    }

    TEST_CASE("welfare and fairness")
    {
        WelfareFairnessConfig cfg;
        cfg.sellers = 10;
        cfg.buyer_counts = {4, 20};
        const auto rep = exp_welfare_fairness(cfg);
        const auto cells = rep.table("cell");
        REQUIRE(cells.size() == 2);
        for (const auto* c : cells) {
            CHECK(c->at("theta_trade") >= c->at("theta_no_trade") - 1e-9);
            CHECK(c->at("theta_redistributed") <= c->at("theta_trade") + 1e-9);
            CHECK(c->at("kappa_f") >= -1e-9);
            if (c->at("all_dispatched") == 1.0) CHECK(c->at("max_moved") <= 1e-6);
        }
        CHECK(exp_welfare_fairness(cfg) == rep);
    }

    TEST_CASE("efficiency")
    {
        EfficiencyConfig cfg;
        cfg.sizes = {{5, 5}, {12, 6}};
        cfg.series_iters = 30;
        const auto rep = exp_efficiency(cfg);
        const auto series = rep.table("series");
        CHECK(series.size() <= 60);
        for (const auto* s : series) {
            CHECK(std::isfinite(s->at("gap")));
            CHECK(s->at("gap") >= -1e-9);
            CHECK(s->at("iter") <= 30.0);
        }
        const auto finals = rep.table("final");
        REQUIRE(finals.size() == 2);
        for (const auto* f : finals)
            if (f->at("converged") == 1.0) CHECK(f->at("final_gap") < 0.5);
        CHECK(rep.summary_at("worst_converged_gap") < 0.5);
        CHECK(report_to_csv(exp_efficiency(cfg)) == report_to_csv(rep));
    }
}
