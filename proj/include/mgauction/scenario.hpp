#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mgauction/market.hpp"

namespace mgauction {

/// Parameter distributions: utility scales and curvatures are uniform on
/// [1 - half_width, 1 + half_width], generations uniform on [g_lo, g_hi].
struct AgentRanges {
    double half_width = 0.5;
    double g_lo = 2.0;
    double g_hi = 5.0;
};

struct Scenario {
    MarketParams params;
    std::vector<BuyerState> buyers;   ///< x, y only
    std::vector<SellerState> sellers; ///< x, y, g only
    std::uint64_t seed = 0;
    std::string label;

    bool operator==(const Scenario&) const;
};

/// Deterministic scenario from a seed.
///
/// Buyers and sellers come from two independent std::mt19937_64 streams,
/// seeded through std::seed_seq{seed_lo32, seed_hi32, stream} with stream 1
/// for buyers and 2 for sellers. Each draw is (engine() >> 11) * 2^-53, so the
/// values are identical on every conforming platform. Buyer i consumes x then
/// y, seller j consumes x, y, g. The first k buyers (sellers) of a scenario
/// do not depend on how many are requested in total.
Scenario generate_scenario(std::uint64_t seed, int n_buyers, int n_sellers,
                           const AgentRanges& ranges = {}, const MarketParams& params = {});

/// Mixes a base seed with up to two indices into a new seed.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0);

} // namespace mgauction
