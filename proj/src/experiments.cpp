#include "mgauction/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include <fmt/core.h>

#include "mgauction/fairness.hpp"
#include "mgauction/welfare.hpp"

namespace mgauction {

namespace {

double mean(std::span<const double> v)
{
    if (v.empty()) return 0.0;
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::vector<double> average_ranks(std::span<const double> v)
{
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> ranks(v.size());
    for (std::size_t k = 0; k < idx.size();) {
        std::size_t m = k;
        while (m + 1 < idx.size() && v[idx[m + 1]] == v[idx[k]]) ++m;
        const double r = 0.5 * static_cast<double>(k + m) + 1.0;
        for (std::size_t t = k; t <= m; ++t) ranks[idx[t]] = r;
        k = m + 1;
    }
    return ranks;
}

AuctionOutcome run_checked(const Scenario& sc, const ExperimentConfig& base)
{
    AuctionOutcome out = run_auction(sc.buyers, sc.sellers, sc.params, base.auction);
    check_outcome(out);
    return out;
}

bool all_dispatched(const AuctionOutcome& out)
{
    for (const auto& s : out.sellers)
        if (s.s < s.a - 1e-6 * std::max(1.0, s.a)) return false;
    return true;
}

} // namespace

double ReportRow::at(std::string_view key) const
{
    for (const auto& [k, v] : values)
        if (k == key) return v;
    throw std::out_of_range(fmt::format("row {} has no field {}", label, key));
}

bool ReportRow::has(std::string_view key) const
{
    return std::any_of(values.begin(), values.end(), [&](const auto& kv) { return kv.first == key; });
}

double ExperimentReport::summary_at(std::string_view key) const
{
    for (const auto& [k, v] : summary)
        if (k == key) return v;
    throw std::out_of_range(fmt::format("report {} has no summary field {}", experiment, key));
}

std::vector<const ReportRow*> ExperimentReport::table(std::string_view name) const
{
    std::vector<const ReportRow*> out;
    for (const auto& r : rows)
        if (r.table == name) out.push_back(&r);
    return out;
}

AuctionConfig ExperimentConfig::default_experiment_auction()
{
    AuctionConfig cfg;
    cfg.max_iters = 200000;
    cfg.keep_trace = false;
    return cfg;
}

void check_outcome(const AuctionOutcome& outcome)
{
    const double sd = outcome.clearing.total_demand();
    const double ss = outcome.clearing.total_supply();
    if (std::abs(sd - ss) > 1e-8 * std::max(1.0, sd))
        throw InvariantViolation(fmt::format("energy not conserved: demand {} supply {}", sd, ss));
    if (!outcome.converged) return;

    if (outcome.payoffs.mc_revenue < -1e-9)
        throw InvariantViolation(
            fmt::format("controller runs a deficit of {}", -outcome.payoffs.mc_revenue));
    for (std::size_t i = 0; i < outcome.buyers.size(); ++i) {
        if (outcome.payoffs.buyer_payoffs[i] < -1e-6)
            throw InvariantViolation(fmt::format("buyer {} worse off than autarky: {}", i,
                                                 outcome.payoffs.buyer_payoffs[i]));
    }
    for (std::size_t j = 0; j < outcome.sellers.size(); ++j) {
        const auto& s = outcome.sellers[j];
        const double autarky = seller_utility(s.x, s.y, s.g, 0.0);
        if (outcome.payoffs.seller_payoffs[j] < autarky - 1e-6)
            throw InvariantViolation(fmt::format("seller {} worse off than autarky: {} < {}", j,
                                                 outcome.payoffs.seller_payoffs[j], autarky));
    }
}

double spearman(std::span<const double> a, std::span<const double> b)
{
    if (a.size() != b.size()) throw std::invalid_argument("spearman needs equal-length inputs");
    if (a.size() < 2) return std::numeric_limits<double>::quiet_NaN();
    const auto ra = average_ranks(a);
    const auto rb = average_ranks(b);
    const double ma = mean(ra), mb = mean(rb);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t k = 0; k < ra.size(); ++k) {
        sab += (ra[k] - ma) * (rb[k] - mb);
        saa += (ra[k] - ma) * (ra[k] - ma);
        sbb += (rb[k] - mb) * (rb[k] - mb);
    }
    if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return sab / std::sqrt(saa * sbb);
}

ExperimentReport exp_payoff_sweep(const PayoffSweepConfig& config)
{
    if (config.replications < 1) throw std::invalid_argument("replications must be >= 1");
    const ExperimentConfig& base = config.base;
    ExperimentReport rep;
    rep.experiment = "payoffs";
    rep.seed = base.seed;

    // cell means indexed [seller count][buyer count]
    std::vector<std::vector<double>> buyer_means(config.seller_counts.size());
    std::vector<std::vector<double>> seller_means(config.seller_counts.size());

    for (std::size_t si = 0; si < config.seller_counts.size(); ++si) {
        const int ns = config.seller_counts[si];
        for (int nb : config.buyer_counts) {
            std::vector<double> bp, sp;
            double iters = 0.0;
            int converged = 0;
            for (int r = 0; r < config.replications; ++r) {
                const std::uint64_t seed = derive_seed(base.seed, static_cast<std::uint64_t>(r));
                const Scenario sc = generate_scenario(seed, nb, ns, base.ranges, base.params);
                const AuctionOutcome out = run_checked(sc, base);
                iters += out.iterations;
                const double b = mean(out.payoffs.buyer_payoffs);
                const double s = mean(out.payoffs.seller_payoffs);
                rep.rows.push_back({"run", fmt::format("ns={} nb={} rep={}", ns, nb, r), seed,
                                    {{"sellers", ns},
                                     {"buyers", nb},
                                     {"converged", out.converged ? 1.0 : 0.0},
                                     {"iterations", static_cast<double>(out.iterations)},
                                     {"buyer_payoff", b},
                                     {"seller_payoff", s},
                                     {"mc_revenue", out.payoffs.mc_revenue}}});
                if (out.converged) ++converged;
                bp.push_back(b);
                sp.push_back(s);
            }
            buyer_means[si].push_back(mean(bp));
            seller_means[si].push_back(mean(sp));
            rep.rows.push_back({"cell", fmt::format("ns={} nb={}", ns, nb), base.seed,
                                {{"sellers", ns},
                                 {"buyers", nb},
                                 {"replications", config.replications},
                                 {"converged", converged},
                                 {"mean_iterations", iters / config.replications},
                                 {"buyer_payoff", buyer_means[si].back()},
                                 {"seller_payoff", seller_means[si].back()}}});
        }
    }

    std::vector<double> nbs(config.buyer_counts.begin(), config.buyer_counts.end());
    for (std::size_t si = 0; si < config.seller_counts.size(); ++si) {
        const int ns = config.seller_counts[si];
        rep.summary.emplace_back(fmt::format("spearman_buyer_ns{}", ns),
                                 spearman(nbs, buyer_means[si]));
        rep.summary.emplace_back(fmt::format("spearman_seller_ns{}", ns),
                                 spearman(nbs, seller_means[si]));
    }
    if (config.seller_counts.size() >= 2 && !nbs.empty()) {
        int higher = 0;
        for (std::size_t k = 0; k < nbs.size(); ++k)
            if (seller_means[0][k] > seller_means[1][k]) ++higher;
        rep.summary.emplace_back("seller_first_gt_second_fraction",
                                 static_cast<double>(higher) / static_cast<double>(nbs.size()));
    }
    rep.summary.emplace_back("records", static_cast<double>(rep.rows.size()));
    return rep;
}

ExperimentReport exp_case_study(const CaseStudyConfig& config)
{
    const ExperimentConfig& base = config.base;
    if (config.buyers_high < config.buyers_low)
        throw std::invalid_argument("the high-demand case needs at least as many buyers");

    for (int k = 0; k < config.max_seed_tries; ++k) {
        const std::uint64_t seed = derive_seed(base.seed, static_cast<std::uint64_t>(k));
        Scenario low = generate_scenario(seed, config.buyers_low, config.sellers, base.ranges, base.params);
        AuctionOutcome out_low = run_checked(low, base);
        if (!out_low.converged || !out_low.clearing.traded || all_dispatched(out_low)) continue;
        Scenario high = generate_scenario(seed, config.buyers_high, config.sellers, base.ranges, base.params);
        AuctionOutcome out_high = run_checked(high, base);
        if (!out_high.converged || !all_dispatched(out_high)) continue;

        ExperimentReport rep;
        rep.experiment = "case";
        rep.seed = base.seed;
        const std::pair<const char*, const AuctionOutcome*> cases[] = {{"I", &out_low},
                                                                       {"II", &out_high}};
        for (const auto& [name, out] : cases) {
            const RedistributionResult red = redistribute(*out);
            for (std::size_t j = 0; j < out->sellers.size(); ++j) {
                const auto& s = out->sellers[j];
                rep.rows.push_back({"seller", fmt::format("{} seller {}", name, j + 1), seed,
                                    {{"g", s.g},
                                     {"a", s.a},
                                     {"s", s.s},
                                     {"c", s.c},
                                     {"s_r", red.s_r[j]},
                                     {"c_r", red.c_r},
                                     {"payoff", out->payoffs.seller_payoffs[j]}}});
            }
            for (std::size_t i = 0; i < out->buyers.size(); ++i) {
                const auto& b = out->buyers[i];
                ReportRow row{"buyer", fmt::format("{} buyer {}", name, i + 1), seed,
                              {{"b", b.b}, {"d", b.d}, {"payoff", out->payoffs.buyer_payoffs[i]}}};
                if (out->buyer_prices[i]) row.values.emplace_back("price", *out->buyer_prices[i]);
                rep.rows.push_back(std::move(row));
            }
            const std::string n(name);
            rep.summary.emplace_back(n + "_mu", out->clearing.mu);
            rep.summary.emplace_back(n + "_iterations", out->iterations);
            rep.summary.emplace_back(n + "_mc_revenue", out->payoffs.mc_revenue);
            rep.summary.emplace_back(n + "_kappa_f", red.kappa_f);
        }
        rep.summary.emplace_back("seed_tries", k + 1);
        rep.summary.emplace_back("records", static_cast<double>(rep.rows.size()));
        return rep;
    }
    throw std::runtime_error(
        fmt::format("no low/high demand seed pair in {} tries", config.max_seed_tries));
}

ExperimentReport exp_welfare_fairness(const WelfareFairnessConfig& config)
{
    const ExperimentConfig& base = config.base;
    ExperimentReport rep;
    rep.experiment = "fairness";
    rep.seed = base.seed;

    for (std::size_t c = 0; c < config.buyer_counts.size(); ++c) {
        const int nb = config.buyer_counts[c];
        for (int r = 0; r < config.replications; ++r) {
            const std::uint64_t seed = derive_seed(base.seed, c, static_cast<std::uint64_t>(r));
            const Scenario sc = generate_scenario(seed, nb, config.sellers, base.ranges, base.params);
            const AuctionOutcome out = run_checked(sc, base);
            const RedistributionResult red = redistribute(out);
            double moved = 0.0;
            for (std::size_t j = 0; j < red.s_r.size(); ++j)
                moved = std::max(moved, std::abs(red.s_r[j] - out.sellers[j].s));
            rep.rows.push_back({"cell", fmt::format("ns={} nb={} rep={}", config.sellers, nb, r), seed,
                                {{"sellers", config.sellers},
                                 {"buyers", nb},
                                 {"converged", out.converged ? 1.0 : 0.0},
                                 {"iterations", static_cast<double>(out.iterations)},
                                 {"theta_no_trade", autarky_welfare(out.buyers, out.sellers)},
                                 {"theta_trade", red.theta_auction},
                                 {"theta_redistributed", red.theta_redistributed},
                                 {"kappa_f", red.kappa_f},
                                 {"all_dispatched", all_dispatched(out) ? 1.0 : 0.0},
                                 {"max_moved", moved}}});
        }
    }
    rep.summary.emplace_back("records", static_cast<double>(rep.rows.size()));
    return rep;
}

ExperimentReport exp_efficiency(const EfficiencyConfig& config)
{
    ExperimentConfig base = config.base;
    base.auction.keep_trace = true;
    base.auction.trace_limit = static_cast<std::size_t>(std::max(config.series_iters, 0));

    ExperimentReport rep;
    rep.experiment = "efficiency";
    rep.seed = base.seed;
    double worst = 0.0;

    for (std::size_t c = 0; c < config.sizes.size(); ++c) {
        const auto [nb, ns] = config.sizes[c];
        for (int r = 0; r < config.replications; ++r) {
            const std::uint64_t seed = derive_seed(base.seed, c, static_cast<std::uint64_t>(r));
            const Scenario sc = generate_scenario(seed, nb, ns, base.ranges, base.params);
            const AuctionOutcome out = run_checked(sc, base);
            const auto avails = out.avails();
            const std::string label = fmt::format("nb={} ns={} rep={}", nb, ns, r);

            for (const TraceRecord& t : out.trace) {
                const WelfareSolution opt = solve_swop(sc.buyers, sc.sellers, t.bids, avails, sc.params);
                rep.rows.push_back({"series", label, seed,
                                    {{"iter", t.iteration},
                                     {"theta_mcop", t.theta},
                                     {"theta_swop", opt.theta},
                                     {"gap", efficiency_gap(t.theta, opt.theta)}}});
            }
            const WelfareSolution opt =
                solve_swop(out.buyers, out.sellers, out.bids(), avails, sc.params);
            const double theta = social_welfare(out.buyers, out.sellers, out.d(), out.s());
            const double gap = efficiency_gap(theta, opt.theta);
            if (out.converged) worst = std::max(worst, gap);
            rep.rows.push_back({"final", label, seed,
                                {{"buyers", nb},
                                 {"sellers", ns},
                                 {"converged", out.converged ? 1.0 : 0.0},
                                 {"iterations", static_cast<double>(out.iterations)},
                                 {"theta_mcop", theta},
                                 {"theta_swop", opt.theta},
                                 {"final_gap", gap}}});
        }
    }
    rep.summary.emplace_back("worst_converged_gap", worst);
    rep.summary.emplace_back("records", static_cast<double>(rep.rows.size()));
    return rep;
}

} // namespace mgauction
