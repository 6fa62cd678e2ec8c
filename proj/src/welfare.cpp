#include "mgauction/welfare.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mgauction {

double social_welfare(std::span<const BuyerState> buyers, std::span<const SellerState> sellers,
                      std::span<const double> d, std::span<const double> s)
{
    if (d.size() != buyers.size() || s.size() != sellers.size())
        throw std::invalid_argument("allocation vectors do not match the agent lists");
    double theta = 0.0;
    for (std::size_t i = 0; i < buyers.size(); ++i)
        theta += buyer_utility(buyers[i].x, buyers[i].y, d[i]);
    for (std::size_t j = 0; j < sellers.size(); ++j)
        theta += seller_utility(sellers[j].x, sellers[j].y, sellers[j].g, s[j]);
    return theta;
}

double autarky_welfare(std::span<const BuyerState> buyers, std::span<const SellerState> sellers)
{
    const std::vector<double> d(buyers.size(), 0.0), s(sellers.size(), 0.0);
    return social_welfare(buyers, sellers, d, s);
}

WelfareSolution solve_swop(std::span<const BuyerState> buyers,
                           std::span<const SellerState> sellers, std::span<const double> bids,
                           std::span<const double> avails, const MarketParams& params)
{
    if (bids.size() != buyers.size() || avails.size() != sellers.size())
        throw std::invalid_argument("bids/availabilities do not match the agent lists");
    if (!(params.p > 0.0)) throw std::domain_error("price p must be positive");

    auto buyer_at = [&](std::size_t i, double mu) {
        const double want = std::max(buyers[i].utility().inverse_marginal(mu), 0.0);
        return std::min(want, std::max(bids[i], 0.0) / params.p);
    };
    auto seller_at = [&](std::size_t j, double mu) {
        const double keep = sellers[j].utility().inverse_marginal(mu);
        return std::clamp(sellers[j].g - keep, 0.0, std::max(avails[j], 0.0));
    };
    auto excess = [&](double mu) {
        double e = 0.0;
        for (std::size_t i = 0; i < buyers.size(); ++i) e += buyer_at(i, mu);
        for (std::size_t j = 0; j < sellers.size(); ++j) e -= seller_at(j, mu);
        return e;
    };

    WelfareSolution sol;
    sol.d_star.assign(buyers.size(), 0.0);
    sol.s_star.assign(sellers.size(), 0.0);
    sol.mu_star = std::numeric_limits<double>::quiet_NaN();

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& s : sellers) lo = std::min(lo, s.utility().marginal(s.g));
    for (const auto& b : buyers) hi = std::max(hi, b.utility().marginal(0.0));

    // Crossing needs positive demand where supply starts and positive supply
    // where demand ends.
    if (buyers.empty() || sellers.empty() || !(lo < hi) || !(excess(lo) > 0.0) ||
        !(excess(hi) < 0.0)) {
        sol.theta = social_welfare(buyers, sellers, sol.d_star, sol.s_star);
        return sol;
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi) break;
        (excess(mid) > 0.0 ? lo : hi) = mid;
    }
    sol.mu_star = 0.5 * (lo + hi);
    for (std::size_t i = 0; i < buyers.size(); ++i) sol.d_star[i] = buyer_at(i, sol.mu_star);
    for (std::size_t j = 0; j < sellers.size(); ++j) sol.s_star[j] = seller_at(j, sol.mu_star);
    sol.traded = true;
    sol.theta = social_welfare(buyers, sellers, sol.d_star, sol.s_star);
    return sol;
}

double efficiency_gap(double theta_mcop, double theta_swop)
{
    if (!(theta_swop > 0.0)) throw std::domain_error("optimal welfare must be positive");
    return 100.0 * (theta_swop - theta_mcop) / theta_swop;
}

} // namespace mgauction
