#include "mgauction/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace mgauction {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void validate(std::span<const double> bids, std::span<const double> asks,
              std::span<const double> avails, const MarketParams& params)
{
    if (!(params.p > 0.0)) throw std::domain_error("price p must be positive");
    if (asks.size() != avails.size())
        throw std::invalid_argument("asks and availabilities differ in length");
    for (double b : bids)
        if (!(b >= 0.0) || !std::isfinite(b)) throw std::domain_error("bids must be finite and >= 0");
    for (double a : avails)
        if (!(a >= 0.0) || !std::isfinite(a))
            throw std::domain_error("availabilities must be finite and >= 0");
    for (double c : asks)
        if (!std::isfinite(c)) throw std::domain_error("asks must be finite");
}

double active_bid_total(std::span<const double> bids)
{
    double total = 0.0;
    for (double b : bids)
        if (b >= kBidThreshold) total += b;
    return total;
}

double offered_total(std::span<const double> avails)
{
    return std::accumulate(avails.begin(), avails.end(), 0.0);
}

ClearingResult no_trade(std::size_t n_buyers, std::size_t n_sellers)
{
    ClearingResult r;
    r.d.assign(n_buyers, 0.0);
    r.s.assign(n_sellers, 0.0);
    r.buyer_budget_active.assign(n_buyers, false);
    r.mu = kNaN;
    r.traded = false;
    return r;
}

void fill_buyers(ClearingResult& r, std::span<const double> bids, const MarketParams& params)
{
    const double unit = std::max(r.mu, params.p);
    r.d.assign(bids.size(), 0.0);
    r.buyer_budget_active.assign(bids.size(), false);
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (bids[i] < kBidThreshold) continue;
        r.d[i] = bids[i] / unit;
        r.buyer_budget_active[i] = r.mu <= params.p;
    }
}

// Minimize sum (s_j - prev_j)^2 over sum s_j = total, 0 <= s_j <= cap_j.
// Solution is s_j = clamp(prev_j + shift, 0, cap_j) for a scalar shift.
std::vector<double> proximal_split(std::span<const double> prev, std::span<const double> cap,
                                   double total)
{
    auto filled = [&](double shift) {
        double sum = 0.0;
        for (std::size_t k = 0; k < cap.size(); ++k)
            sum += std::clamp(prev[k] + shift, 0.0, cap[k]);
        return sum;
    };
    double lo = 0.0, hi = 0.0;
    for (std::size_t k = 0; k < cap.size(); ++k) {
        lo = std::min(lo, -prev[k]);
        hi = std::max(hi, cap[k] - prev[k]);
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (filled(mid) < total ? lo : hi) = mid;
    }
    const double shift = 0.5 * (lo + hi);
    std::vector<double> out(cap.size());
    for (std::size_t k = 0; k < cap.size(); ++k)
        out[k] = std::clamp(prev[k] + shift, 0.0, cap[k]);
    return out;
}

} // namespace

double ClearingResult::total_demand() const { return std::accumulate(d.begin(), d.end(), 0.0); }

double ClearingResult::total_supply() const { return std::accumulate(s.begin(), s.end(), 0.0); }

double aggregate_demand(std::span<const double> bids, const MarketParams& params, double mu)
{
    if (!(mu > 0.0)) throw std::domain_error("clearing price must be positive");
    const double unit = std::max(mu, params.p);
    double total = 0.0;
    for (double b : bids) total += b / unit;
    return total;
}

SupplyInterval aggregate_supply(std::span<const double> asks, std::span<const double> avails,
                                double mu)
{
    if (asks.size() != avails.size())
        throw std::invalid_argument("asks and availabilities differ in length");
    SupplyInterval out;
    for (std::size_t j = 0; j < asks.size(); ++j) {
        if (avails[j] < 0.0) throw std::domain_error("availabilities must be >= 0");
        if (asks[j] < mu)
            out.low += avails[j];
        else if (asks[j] == mu)
            out.high += avails[j];
    }
    out.high += out.low;
    return out;
}

ClearingResult clear_market(std::span<const double> bids, std::span<const double> asks,
                            std::span<const double> avails, const MarketParams& params,
                            const TiePolicy& tie_policy)
{
    validate(bids, asks, avails, params);
    if (const auto* prox = std::get_if<ProximalTie>(&tie_policy);
        prox && prox->previous.size() != asks.size())
        throw std::invalid_argument("proximal tie policy needs one previous allocation per seller");

    const double budget = active_bid_total(bids);
    if (budget <= 0.0 || offered_total(avails) <= 0.0) return no_trade(bids.size(), asks.size());

    std::vector<std::size_t> order;
    for (std::size_t j = 0; j < asks.size(); ++j)
        if (avails[j] > 0.0) order.push_back(j);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t l, std::size_t r) { return asks[l] < asks[r]; });

    auto demand_at = [&](double mu) { return budget / std::max(mu, params.p); };

    // Sweep ask levels in increasing order. At each level either the demand
    // curve crosses the vertical supply step (price = that ask, the tied
    // group is marginal) or it crosses the flat stretch above it.
    ClearingResult r;
    r.s.assign(asks.size(), 0.0);
    double below = 0.0; // availability strictly below the current level
    bool found = false;
    std::size_t first = 0;
    while (first < order.size() && !found) {
        const double level = asks[order[first]];
        std::size_t last = first;
        double group = 0.0;
        while (last < order.size() && asks[order[last]] == level) group += avails[order[last++]];
        const double next_level = last < order.size() ? asks[order[last]]
                                                      : std::numeric_limits<double>::infinity();

        const double demand = demand_at(level);
        if (demand <= below + group) {
            r.mu = level;
            const double residual = std::clamp(demand - below, 0.0, group);
            for (std::size_t k = 0; k < first; ++k) r.s[order[k]] = avails[order[k]];

            std::vector<double> cap, prev;
            for (std::size_t k = first; k < last; ++k) cap.push_back(avails[order[k]]);
            std::vector<double> share;
            if (const auto* prox = std::get_if<ProximalTie>(&tie_policy)) {
                for (std::size_t k = first; k < last; ++k) prev.push_back(prox->previous[order[k]]);
                share = proximal_split(prev, cap, residual);
            } else {
                for (double c : cap) share.push_back(residual * c / group);
            }
            for (std::size_t k = first; k < last; ++k) r.s[order[k]] = share[k - first];
            found = true;
            break;
        }

        below += group;
        const double flat_price = budget / below;
        if (flat_price > params.p && flat_price > level && flat_price < next_level) {
            r.mu = flat_price;
            for (std::size_t k = 0; k < last; ++k) r.s[order[k]] = avails[order[k]];
            found = true;
        }
        first = last;
    }
    if (!found) throw NumericalFailure("demand and supply curves do not cross");

    r.traded = true;
    fill_buyers(r, bids, params);
    r.kkt_residual = kkt_residual(r, bids, asks, avails, params);
    return r;
}

ClearingResult clear_market_proximal(std::span<const double> bids,
                                     std::span<const double> asks,
                                     std::span<const double> avails,
                                     const MarketParams& params,
                                     std::span<const double> previous, double weight)
{
    validate(bids, asks, avails, params);
    if (previous.size() != asks.size())
        throw std::invalid_argument("need one previous allocation per seller");
    if (!(weight > 0.0)) throw std::domain_error("proximal weight must be positive");

    const double budget = active_bid_total(bids);
    const double offered = offered_total(avails);
    if (budget <= 0.0 || offered <= 0.0) return no_trade(bids.size(), asks.size());

    auto supply_of = [&](std::size_t j, double mu) {
        return std::clamp(previous[j] + (mu - asks[j]) / weight, 0.0, avails[j]);
    };
    auto excess_demand = [&](double mu) {
        double supply = 0.0;
        for (std::size_t j = 0; j < asks.size(); ++j) supply += supply_of(j, mu);
        return budget / std::max(mu, params.p) - supply;
    };

    // At lo every seller is at zero, at hi every seller is at its cap and
    // demand has fallen to at most the total offered.
    double lo = std::numeric_limits<double>::infinity();
    double hi = std::max(params.p, budget / offered);
    for (std::size_t j = 0; j < asks.size(); ++j) {
        lo = std::min(lo, asks[j] - weight * previous[j]);
        hi = std::max(hi, asks[j] + weight * (avails[j] - previous[j]));
    }
    for (int widen = 0; widen < 64 && excess_demand(hi) > 0.0; ++widen) hi *= 2.0;
    if (!(excess_demand(lo) > 0.0) || excess_demand(hi) > 0.0)
        throw NumericalFailure("bisection bracket does not contain the clearing price");

    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (excess_demand(mid) > 0.0 ? lo : hi) = mid;
    }

    ClearingResult r;
    r.mu = 0.5 * (lo + hi);
    r.traded = true;
    r.s.resize(asks.size());
    for (std::size_t j = 0; j < asks.size(); ++j) r.s[j] = supply_of(j, r.mu);
    fill_buyers(r, bids, params);

    // Residual of the problem actually solved: the proximal term acts as an
    // ask shift of weight * (s_j - previous_j).
    std::vector<double> shifted(asks.begin(), asks.end());
    for (std::size_t j = 0; j < asks.size(); ++j) shifted[j] += weight * (r.s[j] - previous[j]);
    r.kkt_residual = kkt_residual(r, bids, shifted, avails, params);
    return r;
}

double kkt_residual(const ClearingResult& r, std::span<const double> bids,
                    std::span<const double> asks, std::span<const double> avails,
                    const MarketParams& params)
{
    if (r.d.size() != bids.size() || r.s.size() != asks.size() || asks.size() != avails.size())
        throw std::invalid_argument("result does not match the market dimensions");
    const double p = params.p;
    double worst = 0.0;
    auto note = [&](double v) { worst = std::max(worst, v); };

    const double demand = r.total_demand();
    note(std::abs(demand - r.total_supply()) / std::max(1.0, demand));
    for (std::size_t i = 0; i < bids.size(); ++i) {
        note(std::max(0.0, -r.d[i]));
        note(std::max(0.0, p * r.d[i] - bids[i]) / p);
    }
    for (std::size_t j = 0; j < asks.size(); ++j) {
        note(std::max(0.0, -r.s[j]));
        note(std::max(0.0, r.s[j] - avails[j]));
    }
    if (!r.traded) {
        for (double d : r.d) note(std::abs(d));
        for (double s : r.s) note(std::abs(s));
        return worst;
    }

    const double mu = r.mu;
    for (std::size_t i = 0; i < bids.size(); ++i) {
        if (bids[i] < kBidThreshold) {
            note(std::abs(r.d[i]));
            continue;
        }
        if (!(r.d[i] > 0.0)) {
            note(1.0); // log barrier: any positive bid must be served
            continue;
        }
        const bool capped = p * r.d[i] >= bids[i] * (1.0 - 1e-12);
        if (capped) {
            // b/d - mu - gamma p = 0 with gamma >= 0  =>  mu <= p
            const double gamma = std::max(0.0, (p - mu) / p);
            note(std::max(0.0, mu - p) / p);
            note(gamma * std::abs(p * r.d[i] - bids[i]) / p);
        } else {
            note(std::abs(bids[i] / r.d[i] - mu) / p);
        }
    }
    for (std::size_t j = 0; j < asks.size(); ++j) {
        if (avails[j] <= 0.0) {
            note(std::abs(r.s[j]));
            continue;
        }
        const double slack = kInvariantTol * std::max(1.0, avails[j]);
        const bool at_cap = r.s[j] >= avails[j] - slack;
        const bool at_zero = r.s[j] <= slack;
        if (at_cap)
            note(std::max(0.0, asks[j] - mu) / p);
        else if (at_zero)
            note(std::max(0.0, mu - asks[j]) / p);
        else
            note(std::abs(mu - asks[j]) / p); // interior: beta_j = 0 forces c_j = mu
    }
    return worst;
}

double mcop_objective(std::span<const double> bids, std::span<const double> asks,
                      std::span<const double> d, std::span<const double> s)
{
    double phi = 0.0;
    for (std::size_t i = 0; i < bids.size(); ++i)
        if (bids[i] >= kBidThreshold) phi += bids[i] * std::log(d[i]);
    for (std::size_t j = 0; j < asks.size(); ++j) phi -= asks[j] * s[j];
    return phi;
}

} // namespace mgauction
