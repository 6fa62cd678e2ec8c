#pragma once

// Iterative auction run by the microgrid controller: clear on public
// information, tell every agent its allocation, collect new bids and asks,
// repeat until the messages stop changing.

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "mgauction/clearing.hpp"
#include "mgauction/market.hpp"

namespace mgauction {

struct AuctionConfig {
    double damping = 0.5;     ///< weight of the new target in b and c updates
    double tol_rel = 1e-6;    ///< stop when no bid or ask moves more than this, relatively
    int max_iters = 500;
    TiePolicy tie_policy = ProportionalTie{}; ///< used only with exact clearing
    double inner_kkt_tol = 1e-5;
    /// Weight of the proximal term on seller allocations in each clearing.
    /// Zero means every round solves the controller's problem exactly.
    double proximal_weight = 0.05;
    bool keep_trace = true;
    std::size_t trace_limit = 100000; ///< trace records kept, from the first iteration on

    void validate() const;
};

/// Messages held by the controller between rounds.
struct AuctionState {
    std::vector<double> bids;
    std::vector<double> asks;
    std::vector<double> avails;
    std::vector<double> allocations; ///< seller allocations of the previous round
    std::vector<bool> parked;        ///< buyers whose bid decayed below kBidThreshold
    int iteration = 0;
};

struct TraceRecord {
    int iteration = 0;
    std::vector<double> bids;
    std::vector<double> asks;
    std::vector<double> d;
    std::vector<double> s;
    double mu = 0.0;
    double phi = 0.0;   ///< controller objective
    double theta = 0.0; ///< social welfare (uses private utilities)
};

struct StepResult {
    AuctionState next;
    ClearingResult clearing;
    double change = 0.0; ///< max relative change of active bids and asks
};

struct AuctionOutcome {
    ClearingResult clearing;
    std::vector<BuyerState> buyers;   ///< b and d as cleared in the final round
    std::vector<SellerState> sellers; ///< a, c and s as cleared in the final round
    std::vector<std::optional<double>> buyer_prices;
    Payoffs payoffs;
    /// Optimality residual of the final allocation for the unregularized
    /// controller problem.
    double mcop_residual = 0.0;
    int iterations = 0;
    bool converged = false;
    double last_change = 0.0;
    std::vector<TraceRecord> trace;

    std::vector<double> bids() const;
    std::vector<double> asks() const;
    std::vector<double> avails() const;
    std::vector<double> d() const;
    std::vector<double> s() const;
};

/// Availabilities from every seller, opening asks v_j'(g_j) (capped at p),
/// opening bids p for every buyer.
AuctionState init_auction(std::span<const BuyerState> buyers,
                          std::span<const SellerState> sellers, const MarketParams& params);

/// One round: clear, compute each agent's target bid u'(d) d or ask
/// v'(g - s), move a `damping` fraction towards it.
StepResult auction_step(const AuctionState& state, std::span<const BuyerState> buyers,
                        std::span<const SellerState> sellers, const MarketParams& params,
                        const AuctionConfig& config);

AuctionOutcome run_auction(std::span<const BuyerState> buyers,
                           std::span<const SellerState> sellers, const MarketParams& params,
                           const AuctionConfig& config = {});

/// b_i / d_i for served buyers, nullopt when d_i is below kReportThreshold.
std::vector<std::optional<double>> buyer_prices(const AuctionOutcome& outcome);

} // namespace mgauction
