#include "mgauction/fairness.hpp"

#include <algorithm>
#include <numeric>

#include "mgauction/welfare.hpp"

namespace mgauction {

WaterFill water_fill(std::span<const double> avails, double total)
{
    if (!(total >= 0.0)) throw std::domain_error("total energy must be >= 0");
    for (double a : avails)
        if (!(a >= 0.0)) throw std::domain_error("availabilities must be >= 0");
    const double capacity = std::accumulate(avails.begin(), avails.end(), 0.0);
    if (total > capacity * (1.0 + 1e-12) + 1e-15)
        throw InfeasibleTotal("total energy exceeds the sum of availabilities");

    std::vector<double> sorted(avails.begin(), avails.end());
    std::sort(sorted.begin(), sorted.end());

    WaterFill out;
    double remaining = std::min(total, capacity);
    out.level = sorted.empty() ? 0.0 : sorted.back();
    for (std::size_t k = 0; k < sorted.size(); ++k) {
        const double share = remaining / static_cast<double>(sorted.size() - k);
        if (sorted[k] >= share) {
            out.level = share;
            break;
        }
        remaining -= sorted[k];
    }
    out.s_r.reserve(avails.size());
    for (double a : avails) out.s_r.push_back(std::min(a, out.level));
    return out;
}

double uniform_reprice(std::span<const double> asks, std::span<const double> allocs)
{
    if (asks.size() != allocs.size()) throw std::invalid_argument("asks and allocations differ in length");
    double revenue = 0.0, energy = 0.0;
    for (std::size_t j = 0; j < asks.size(); ++j) {
        revenue += asks[j] * allocs[j];
        energy += allocs[j];
    }
    if (!(energy > 0.0)) throw std::domain_error("no energy to reprice");
    return revenue / energy;
}

double price_of_fairness(double theta_auction, double theta_redistributed)
{
    if (!(theta_auction > 0.0)) throw std::domain_error("auction welfare must be positive");
    return (theta_auction - theta_redistributed) / theta_auction;
}

RedistributionResult redistribute(const AuctionOutcome& outcome)
{
    const auto avails = outcome.avails();
    const auto asks = outcome.asks();
    const auto d = outcome.d();
    const auto s = outcome.s();

    RedistributionResult r;
    r.theta_auction = social_welfare(outcome.buyers, outcome.sellers, d, s);
    const double total = std::accumulate(s.begin(), s.end(), 0.0);
    if (!(total > 0.0)) {
        r.s_r = s;
        r.theta_redistributed = r.theta_auction;
        return r;
    }

    // Allocations may sit a rounding error above their caps.
    std::vector<double> caps(avails);
    for (std::size_t j = 0; j < caps.size(); ++j) caps[j] = std::max(caps[j], s[j]);
    const WaterFill wf = water_fill(caps, total);
    r.s_r = wf.s_r;
    r.level = wf.level;
    r.c_r = uniform_reprice(asks, s);
    r.theta_redistributed = social_welfare(outcome.buyers, outcome.sellers, d, r.s_r);
    r.kappa_f = price_of_fairness(r.theta_auction, r.theta_redistributed);
    return r;
}

} // namespace mgauction
