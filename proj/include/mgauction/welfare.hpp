#pragma once

// Full-information social welfare problem. Uses the agents' private
// utilities, so it is only ever used for measurement and testing; the
// auction itself never consults it.

#include <span>
#include <vector>

#include "mgauction/market.hpp"

namespace mgauction {

struct WelfareSolution {
    std::vector<double> d_star;
    std::vector<double> s_star;
    double mu_star = 0.0; ///< welfare-clearing price; NaN when !traded
    double theta = 0.0;
    bool traded = false;
};

/// Theta = sum_i u_i(d_i) + sum_j v_j(g_j - s_j).
double social_welfare(std::span<const BuyerState> buyers, std::span<const SellerState> sellers,
                      std::span<const double> d, std::span<const double> s);

/// Welfare with no trade at all: sum_i u_i(0) + sum_j v_j(g_j).
double autarky_welfare(std::span<const BuyerState> buyers, std::span<const SellerState> sellers);

/// Unique maximizer of Theta subject to p d_i <= b_i, 0 <= s_j <= a_j and
/// energy balance, for the given bids and availabilities.
///
/// Buyer response at price mu is min(max(u'^-1(mu), 0), b_i / p), seller
/// response is clamp(g_j - v'^-1(mu), 0, a_j). Both are monotone in mu and
/// the balancing price is found by bisection on
/// [min_j v_j'(g_j), max_i u_i'(0)]. If the curves do not cross with positive
/// volume the no-trade solution is returned with traded == false.
WelfareSolution solve_swop(std::span<const BuyerState> buyers,
                           std::span<const SellerState> sellers, std::span<const double> bids,
                           std::span<const double> avails, const MarketParams& params);

/// 100 * (theta_swop - theta_mcop) / theta_swop
double efficiency_gap(double theta_mcop, double theta_swop);

} // namespace mgauction
