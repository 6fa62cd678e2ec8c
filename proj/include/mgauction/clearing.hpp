#pragma once

// Market clearing for the controller's problem: maximize
//   sum_i b_i log d_i - sum_j c_j s_j
// subject to p d_i <= b_i, 0 <= s_j <= a_j and sum d = sum s, using public
// bids, asks and availabilities only.
//
// Sign convention: the energy-balance multiplier is exposed as a single
// clearing price mu >= 0. At an optimum a buyer receives b_i / max(mu, p),
// sellers asking below mu are fully dispatched, sellers asking above mu sell
// nothing and sellers asking exactly mu share the residual.

#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

#include "mgauction/market.hpp"

namespace mgauction {

/// Bids below this are treated as absent and receive no energy.
inline constexpr double kBidThreshold = 1e-9;
/// Allocations below this are reported as "not served".
inline constexpr double kReportThreshold = 1e-6;

class NumericalFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Split the residual among tied marginal sellers in proportion to their
/// availabilities.
struct ProportionalTie {};

/// Split the residual so that sum_j (s_j - previous_j)^2 is minimal among all
/// optimal splits.
struct ProximalTie {
    std::vector<double> previous;
};

using TiePolicy = std::variant<ProportionalTie, ProximalTie>;

struct ClearingResult {
    std::vector<double> d;
    std::vector<double> s;
    double mu = 0.0;                        ///< NaN when !traded
    bool traded = false;
    std::vector<bool> buyer_budget_active;  ///< p d_i == b_i
    double kkt_residual = 0.0;

    double total_demand() const;
    double total_supply() const;
};

struct SupplyInterval {
    double low = 0.0;
    double high = 0.0;
};

/// sum_i min(b_i / mu, b_i / p). Non-increasing in mu.
double aggregate_demand(std::span<const double> bids, const MarketParams& params, double mu);

/// Supply correspondence at price mu: sellers asking strictly below mu are in
/// `low`; sellers asking exactly mu may supply anything up to `high`.
SupplyInterval aggregate_supply(std::span<const double> asks, std::span<const double> avails,
                                double mu);

/// Exact solution of the controller's problem. Returns a no-trade result
/// (traded == false, zero allocations) when there is no positive bid or no
/// positive availability.
ClearingResult clear_market(std::span<const double> bids, std::span<const double> asks,
                            std::span<const double> avails, const MarketParams& params,
                            const TiePolicy& tie_policy = ProportionalTie{});

/// Controller's problem with an added proximal term
///   -(weight / 2) * sum_j (s_j - previous_j)^2
/// on seller allocations. The seller response is then continuous in mu and
/// the price is found by bisection. A point with s == previous is a fixed
/// point of this map exactly when it solves the unregularized problem.
ClearingResult clear_market_proximal(std::span<const double> bids,
                                     std::span<const double> asks,
                                     std::span<const double> avails,
                                     const MarketParams& params,
                                     std::span<const double> previous, double weight);

/// Maximum violation of the optimality conditions of the unregularized
/// problem: primal feasibility (budget, availability, balance), complementary
/// slackness and stationarity. Energy violations are in energy units and
/// price violations are relative to p.
double kkt_residual(const ClearingResult& result, std::span<const double> bids,
                    std::span<const double> asks, std::span<const double> avails,
                    const MarketParams& params);

/// The controller's objective sum_i b_i log d_i - sum_j c_j s_j. Buyers with a
/// bid below kBidThreshold contribute nothing.
double mcop_objective(std::span<const double> bids, std::span<const double> asks,
                      std::span<const double> d, std::span<const double> s);

} // namespace mgauction
