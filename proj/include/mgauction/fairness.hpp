#pragma once

// Post-auction redistribution of seller allocations. Total energy S and total
// reimbursement R are held fixed; allocations are re-spread by maximum
// entropy (water filling) and repriced uniformly.

#include <span>
#include <stdexcept>
#include <vector>

#include "mgauction/auction.hpp"
#include "mgauction/market.hpp"

namespace mgauction {

class InfeasibleTotal : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

struct WaterFill {
    std::vector<double> s_r;
    double level = 0.0; ///< K: every seller gets min(a_j, K)
};

struct RedistributionResult {
    std::vector<double> s_r;
    double c_r = 0.0;     ///< uniform price per unit
    double level = 0.0;   ///< water level K
    double kappa_f = 0.0; ///< price of fairness
    double theta_auction = 0.0;
    double theta_redistributed = 0.0;
};

/// Maximum-entropy split of `total` under per-seller caps: sort the caps,
/// peel off every seller whose cap is under the running fair share, split the
/// rest evenly. O(n log n).
WaterFill water_fill(std::span<const double> avails, double total);

/// R / S with R = sum_j c_j s_j and S = sum_j s_j.
double uniform_reprice(std::span<const double> asks, std::span<const double> allocs);

/// (theta_auction - theta_redistributed) / theta_auction
double price_of_fairness(double theta_auction, double theta_redistributed);

/// Water-fills the outcome's seller allocations, reprices them uniformly and
/// measures the welfare cost. Needs the sellers' private utilities for the
/// welfare evaluation; buyer allocations are kept as they are.
RedistributionResult redistribute(const AuctionOutcome& outcome);

} // namespace mgauction
