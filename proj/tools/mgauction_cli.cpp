#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "mgauction/auction.hpp"
#include "mgauction/clearing.hpp"
#include "mgauction/experiments.hpp"
#include "mgauction/fairness.hpp"
#include "mgauction/io.hpp"
#include "mgauction/scenario.hpp"

using namespace mgauction;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitNotConverged = 2;
constexpr int kExitNoTrade = 3;
constexpr int kExitIo = 4;

struct MarketOpts {
    std::string scenario_path;
    std::uint64_t seed = 1;
    int buyers = 5;
    int sellers = 5;
    std::optional<double> price_floor;
    double half_width = 0.5;
};

struct EngineOpts {
    double damping = 0.5;
    double tol = 1e-6;
    int max_iters = 500;
    std::string tie_policy = "proportional";
    double prox = 0.05;
};

struct OutputOpts {
    std::string out;
    std::string format = "json";
};

void add_market(CLI::App* app, MarketOpts& m)
{
    app->add_option("--scenario", m.scenario_path, "scenario file (.json or .csv)");
    app->add_option("--seed", m.seed, "seed for a generated scenario");
    app->add_option("--buyers", m.buyers, "buyers in a generated scenario")->check(CLI::NonNegativeNumber);
    app->add_option("--sellers", m.sellers, "sellers in a generated scenario")->check(CLI::NonNegativeNumber);
    app->add_option("--price-floor", m.price_floor, "price floor p (default 0.25)")->check(CLI::PositiveNumber);
    app->add_option("--half-width", m.half_width, "half width of the x, y distributions")
        ->check(CLI::Range(0.0, 0.999999));
}

void add_engine(CLI::App* app, EngineOpts& e)
{
    app->add_option("--damping", e.damping, "weight of the new bid/ask target")->check(CLI::Range(1e-12, 1.0));
    app->add_option("--tol", e.tol, "relative convergence tolerance")->check(CLI::PositiveNumber);
    app->add_option("--max-iters", e.max_iters, "iteration cap")->check(CLI::PositiveNumber);
    app->add_option("--tie-policy", e.tie_policy, "seller tie rule for exact clearing")
        ->check(CLI::IsMember({"proportional", "proximal"}));
    app->add_option("--prox", e.prox, "proximal weight on seller allocations; 0 clears exactly")
        ->check(CLI::NonNegativeNumber);
}

void add_output(CLI::App* app, OutputOpts& o)
{
    app->add_option("--out", o.out, "output file (stdout if omitted)");
    app->add_option("--format", o.format, "output format")->check(CLI::IsMember({"json", "csv"}));
}

TiePolicy tie_policy(const std::string& name)
{
    if (name == "proximal") return ProximalTie{};
    return ProportionalTie{};
}

Scenario load_market(const MarketOpts& m)
{
    Scenario sc;
    if (!m.scenario_path.empty()) {
        const std::string text = read_text(m.scenario_path);
        sc = std::filesystem::path(m.scenario_path).extension() == ".csv" ? scenario_from_csv(text)
                                                                          : scenario_from_json(text);
    } else {
        AgentRanges ranges;
        ranges.half_width = m.half_width;
        sc = generate_scenario(m.seed, m.buyers, m.sellers, ranges);
        sc.label = fmt::format("seed={} nb={} ns={}", m.seed, m.buyers, m.sellers);
    }
    if (m.price_floor) sc.params.p = *m.price_floor;
    return sc;
}

AuctionConfig engine_config(const EngineOpts& e)
{
    AuctionConfig cfg;
    cfg.damping = e.damping;
    cfg.tol_rel = e.tol;
    cfg.max_iters = e.max_iters;
    cfg.tie_policy = tie_policy(e.tie_policy);
    cfg.proximal_weight = e.prox;
    return cfg;
}

void emit(const OutputOpts& o, const std::string& text)
{
    if (o.out.empty())
        std::fwrite(text.data(), 1, text.size(), stdout);
    else
        write_text(o.out, text);
}

std::string list_json(const std::vector<double>& v)
{
    std::string out = "[";
    for (std::size_t k = 0; k < v.size(); ++k) out += fmt::format("{}{:.17g}", k ? "," : "", v[k]);
    return out + "]";
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Double auction for energy trading in a microgrid"};
    app.require_subcommand(1);

    // clear
    auto* clear = app.add_subcommand("clear", "clear one round on explicit bids, asks and availabilities");
    std::vector<double> bids, asks, avails;
    double clear_p = 0.25;
    std::string clear_tie = "proportional";
    OutputOpts clear_out;
    clear->add_option("--bids", bids, "buyer bids")->delimiter(',')->required();
    clear->add_option("--asks", asks, "seller asks")->delimiter(',')->required();
    clear->add_option("--avails", avails, "seller availabilities")->delimiter(',')->required();
    clear->add_option("--price-floor", clear_p, "price floor p")->check(CLI::PositiveNumber);
    clear->add_option("--tie-policy", clear_tie)->check(CLI::IsMember({"proportional", "proximal"}));
    clear->add_option("--out", clear_out.out, "output file (stdout if omitted)");

    // auction
    auto* auction = app.add_subcommand("auction", "run the iterative auction");
    MarketOpts auction_market;
    EngineOpts auction_engine;
    OutputOpts auction_out;
    std::string trace_path;
    bool with_redistribution = false, no_trade_error = false;
    add_market(auction, auction_market);
    add_engine(auction, auction_engine);
    auction->add_option("--out", auction_out.out, "outcome JSON (stdout if omitted)");
    auction->add_option("--trace", trace_path, "write the iteration trace as CSV");
    auction->add_flag("--redistribute", with_redistribution, "append a fair redistribution block");
    auction->add_flag("--no-trade-error", no_trade_error, "exit with 3 if nothing is traded");

    // redistribute
    auto* redist = app.add_subcommand("redistribute", "redistribute a saved outcome");
    std::string outcome_path;
    OutputOpts redist_out;
    redist->add_option("outcome", outcome_path, "outcome JSON written by `auction`")->required();
    redist->add_option("--out", redist_out.out, "output file (stdout if omitted)");

    // experiment
    auto* experiment = app.add_subcommand("experiment", "run a seeded study");
    std::string which;
    std::uint64_t exp_seed = 1;
    std::optional<int> reps;
    EngineOpts exp_engine;
    exp_engine.max_iters = ExperimentConfig::default_experiment_auction().max_iters;
    std::optional<double> exp_p;
    OutputOpts exp_out;
    experiment->add_option("study", which, "payoffs | fairness | efficiency | case")
        ->required()
        ->check(CLI::IsMember({"payoffs", "fairness", "efficiency", "case"}));
    experiment->add_option("--seed", exp_seed, "base seed");
    experiment->add_option("--reps", reps, "replications per cell")->check(CLI::PositiveNumber);
    experiment->add_option("--price-floor", exp_p, "price floor p")->check(CLI::PositiveNumber);
    add_engine(experiment, exp_engine);
    add_output(experiment, exp_out);

    // scenario gen
    auto* scenario = app.add_subcommand("scenario", "scenario utilities");
    scenario->require_subcommand(1);
    auto* gen = scenario->add_subcommand("gen", "generate a seeded scenario");
    MarketOpts gen_market;
    OutputOpts gen_out;
    add_market(gen, gen_market);
    add_output(gen, gen_out);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitIo;
    }

    try {
        if (*clear) {
            if (asks.size() != avails.size()) throw CLI::ValidationError("--asks and --avails differ in length");
            MarketParams params;
            params.p = clear_p;
            const ClearingResult r = clear_market(bids, asks, avails, params, tie_policy(clear_tie));
            const std::string mu = r.traded ? fmt::format("{:.17g}", r.mu) : "null";
            emit(clear_out,
                 fmt::format("{{\"traded\":{},\"mu\":{},\"d\":{},\"s\":{},\"phi\":{:.17g},"
                             "\"kkt_residual\":{:.17g}}}\n",
                             r.traded, mu, list_json(r.d), list_json(r.s),
                             r.traded ? mcop_objective(bids, asks, r.d, r.s) : 0.0, r.kkt_residual));
            return kExitOk;
        }

        if (*auction) {
            const Scenario sc = load_market(auction_market);
            const AuctionOutcome out = run_auction(sc.buyers, sc.sellers, sc.params, engine_config(auction_engine));
            std::optional<RedistributionResult> red;
            if (with_redistribution) red = redistribute(out);
            emit(auction_out, outcome_to_json(sc, out, red ? &*red : nullptr));
            if (!trace_path.empty()) write_text(trace_path, trace_to_csv(out));
            if (!out.converged) {
                std::cerr << fmt::format("not converged after {} iterations (last change {:.3g})\n",
                                         out.iterations, out.last_change);
                return kExitNotConverged;
            }
            if (no_trade_error && !out.clearing.traded) {
                std::cerr << "no trade\n";
                return kExitNoTrade;
            }
            return kExitOk;
        }

        if (*redist) {
            SavedOutcome saved = outcome_from_json(read_text(outcome_path));
            const RedistributionResult red = redistribute(saved.outcome);
            emit(redist_out, outcome_to_json(saved.scenario, saved.outcome, &red));
            return kExitOk;
        }

        if (*experiment) {
            ExperimentConfig base;
            base.seed = exp_seed;
            if (exp_p) base.params.p = *exp_p;
            base.auction.damping = exp_engine.damping;
            base.auction.tol_rel = exp_engine.tol;
            base.auction.max_iters = exp_engine.max_iters;
            base.auction.tie_policy = tie_policy(exp_engine.tie_policy);
            base.auction.proximal_weight = exp_engine.prox;

            ExperimentReport rep;
            if (which == "payoffs") {
                PayoffSweepConfig c;
                c.base = base;
                if (reps) c.replications = *reps;
                rep = exp_payoff_sweep(c);
            } else if (which == "fairness") {
                WelfareFairnessConfig c;
                c.base = base;
                if (reps) c.replications = *reps;
                rep = exp_welfare_fairness(c);
            } else if (which == "efficiency") {
                EfficiencyConfig c;
                c.base = base;
                if (reps) c.replications = *reps;
                rep = exp_efficiency(c);
            } else {
                CaseStudyConfig c;
                c.base = base;
                rep = exp_case_study(c);
            }
            emit(exp_out, exp_out.format == "csv" ? report_to_csv(rep) : report_to_json(rep));
            return kExitOk;
        }

        if (*gen) {
            const Scenario sc = load_market(gen_market);
            emit(gen_out, gen_out.format == "csv" ? scenario_to_csv(sc) : scenario_to_json(sc));
            return kExitOk;
        }
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return kExitOk;
}
