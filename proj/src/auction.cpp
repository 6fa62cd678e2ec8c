#include "mgauction/auction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "mgauction/welfare.hpp"

namespace mgauction {

namespace {

double relative_change(double before, double after)
{
    return std::abs(after - before) / std::max(std::abs(before), 1e-12);
}

ClearingResult clear_round(const AuctionState& state, const MarketParams& params,
                           const AuctionConfig& config)
{
    if (config.proximal_weight > 0.0)
        return clear_market_proximal(state.bids, state.asks, state.avails, params,
                                     state.allocations, config.proximal_weight);
    if (std::holds_alternative<ProximalTie>(config.tie_policy))
        return clear_market(state.bids, state.asks, state.avails, params,
                            ProximalTie{state.allocations});
    return clear_market(state.bids, state.asks, state.avails, params, config.tie_policy);
}

} // namespace

void AuctionConfig::validate() const
{
    if (!(damping > 0.0 && damping <= 1.0)) throw std::domain_error("damping must be in (0, 1]");
    if (!(tol_rel > 0.0)) throw std::domain_error("tol_rel must be positive");
    if (max_iters < 1) throw std::domain_error("max_iters must be at least 1");
    if (!(proximal_weight >= 0.0)) throw std::domain_error("proximal_weight must be >= 0");
}

std::vector<double> AuctionOutcome::bids() const
{
    std::vector<double> out;
    for (const auto& b : buyers) out.push_back(b.b);
    return out;
}

std::vector<double> AuctionOutcome::asks() const
{
    std::vector<double> out;
    for (const auto& s : sellers) out.push_back(s.c);
    return out;
}

std::vector<double> AuctionOutcome::avails() const
{
    std::vector<double> out;
    for (const auto& s : sellers) out.push_back(s.a);
    return out;
}

std::vector<double> AuctionOutcome::d() const
{
    std::vector<double> out;
    for (const auto& b : buyers) out.push_back(b.d);
    return out;
}

std::vector<double> AuctionOutcome::s() const
{
    std::vector<double> out;
    for (const auto& s : sellers) out.push_back(s.s);
    return out;
}

AuctionState init_auction(std::span<const BuyerState> buyers,
                          std::span<const SellerState> sellers, const MarketParams& params)
{
    AuctionState st;
    st.bids.assign(buyers.size(), params.p);
    st.parked.assign(buyers.size(), false);
    for (const auto& s : sellers) {
        st.avails.push_back(declare_availability(s, params));
        st.asks.push_back(std::min(seller_marginal(s.x, s.y, s.g, 0.0), params.p));
    }
    st.allocations.assign(sellers.size(), 0.0);
    return st;
}

StepResult auction_step(const AuctionState& state, std::span<const BuyerState> buyers,
                        std::span<const SellerState> sellers, const MarketParams& params,
                        const AuctionConfig& config)
{
    if (state.bids.size() != buyers.size() || state.asks.size() != sellers.size())
        throw std::invalid_argument("auction state does not match the agent lists");

    StepResult out;
    out.clearing = clear_round(state, params, config);
    const ClearingResult& cl = out.clearing;
    const double alpha = config.damping;

    AuctionState& next = out.next;
    next = state;
    next.iteration = state.iteration + 1;
    next.allocations = cl.s;

    // Each agent's target depends only on its own allocation.
    for (std::size_t i = 0; i < buyers.size(); ++i) {
        if (state.parked[i]) continue;
        const double target = buyer_bid_update(buyers[i], cl.d[i]);
        double b = (1.0 - alpha) * state.bids[i] + alpha * target;
        if (b < kBidThreshold) {
            b = 0.0;
            next.parked[i] = true;
        }
        next.bids[i] = b;
        out.change = std::max(out.change, relative_change(state.bids[i], b));
    }
    for (std::size_t j = 0; j < sellers.size(); ++j) {
        if (state.avails[j] <= 0.0) continue;
        SellerState seller = sellers[j];
        seller.a = state.avails[j];
        const double target = seller_ask_update(seller, std::min(cl.s[j], seller.a));
        const double c = std::min((1.0 - alpha) * state.asks[j] + alpha * target, params.p);
        next.asks[j] = c;
        out.change = std::max(out.change, relative_change(state.asks[j], c));
    }
    return out;
}

AuctionOutcome run_auction(std::span<const BuyerState> buyers,
                           std::span<const SellerState> sellers, const MarketParams& params,
                           const AuctionConfig& config)
{
    config.validate();
    AuctionState state = init_auction(buyers, sellers, params);
    AuctionOutcome out;

    StepResult step;
    AuctionState used = state;
    for (int it = 0; it < config.max_iters; ++it) {
        step = auction_step(state, buyers, sellers, params, config);
        used = std::move(state);
        state = std::move(step.next);
        out.iterations = it + 1;
        out.last_change = step.change;

        if (config.keep_trace && out.trace.size() < config.trace_limit) {
            TraceRecord rec;
            rec.iteration = it;
            rec.bids = used.bids;
            rec.asks = used.asks;
            rec.d = step.clearing.d;
            rec.s = step.clearing.s;
            rec.mu = step.clearing.mu;
            rec.phi = step.clearing.traded
                          ? mcop_objective(used.bids, used.asks, step.clearing.d, step.clearing.s)
                          : 0.0;
            rec.theta = social_welfare(buyers, sellers, step.clearing.d, step.clearing.s);
            out.trace.push_back(std::move(rec));
        }
        if (step.change <= config.tol_rel) {
            out.converged = true;
            break;
        }
    }

    out.clearing = step.clearing;
    out.buyers.assign(buyers.begin(), buyers.end());
    out.sellers.assign(sellers.begin(), sellers.end());
    for (std::size_t i = 0; i < buyers.size(); ++i) {
        out.buyers[i].b = used.bids[i];
        out.buyers[i].d = out.clearing.d[i];
    }
    for (std::size_t j = 0; j < sellers.size(); ++j) {
        out.sellers[j].a = used.avails[j];
        out.sellers[j].c = used.asks[j];
        out.sellers[j].s = out.clearing.s[j];
    }
    out.payoffs = compute_payoffs(out.buyers, out.sellers, params);
    out.buyer_prices = buyer_prices(out);
    out.mcop_residual =
        kkt_residual(out.clearing, used.bids, used.asks, used.avails, params);
    return out;
}

std::vector<std::optional<double>> buyer_prices(const AuctionOutcome& outcome)
{
    std::vector<std::optional<double>> prices;
    prices.reserve(outcome.buyers.size());
    for (const auto& b : outcome.buyers) {
        if (b.d > kReportThreshold)
            prices.emplace_back(buyer_unit_price(b.b, b.d));
        else
            prices.emplace_back(std::nullopt);
    }
    return prices;
}

} // namespace mgauction
