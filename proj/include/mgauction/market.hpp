#pragma once

// Domain types, agent utilities, bid/ask rules and payoff accounting for the
// microgrid double auction.

#include <algorithm>
#include <concepts>
#include <span>
#include <vector>

namespace mgauction {

/// Tolerance used for type invariants (allocations vs. caps, budgets).
inline constexpr double kInvariantTol = 1e-9;

struct MarketParams {
    /// Price floor for buyers and ceiling for sellers, per energy unit.
    double p = 0.25;
};

/// Any strictly increasing, strictly concave utility of an energy quantity.
/// `inverse_marginal(m)` returns the quantity at which the marginal equals m
/// and may be negative when m exceeds the marginal at zero.
template <typename U>
concept ConcaveUtility = requires(const U& u, double q) {
    { u.value(q) } -> std::convertible_to<double>;
    { u.marginal(q) } -> std::convertible_to<double>;
    { u.inverse_marginal(q) } -> std::convertible_to<double>;
};

/// x * log(y * q + 1)
struct LogSaturation {
    double x = 1.0;
    double y = 1.0;

    double value(double q) const;
    double marginal(double q) const;
    double inverse_marginal(double m) const { return x / m - 1.0 / y; }
};

static_assert(ConcaveUtility<LogSaturation>);

/// Inverse marginal by bisection on [0, hi], for utilities without a closed
/// form. Returns 0 if the marginal at 0 is already below m and hi if the
/// marginal at hi is still above m.
template <ConcaveUtility U>
double bisect_inverse_marginal(const U& u, double m, double hi)
{
    if (u.marginal(0.0) <= m) return 0.0;
    if (u.marginal(hi) >= m) return hi;
    double lo = 0.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
        const double mid = 0.5 * (lo + hi);
        (u.marginal(mid) > m ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
}

struct BuyerState {
    double x = 1.0;
    double y = 1.0;
    double b = 0.0; ///< public bid (currency)
    double d = 0.0; ///< allocation (energy)

    LogSaturation utility() const { return {x, y}; }
};

struct SellerState {
    double x = 1.0;
    double y = 1.0;
    double g = 1.0; ///< generation (private)
    double a = 0.0; ///< declared availability (public)
    double c = 0.0; ///< ask per unit (public)
    double s = 0.0; ///< allocation (energy)

    LogSaturation utility() const { return {x, y}; }
};

struct Payoffs {
    std::vector<double> buyer_payoffs;
    std::vector<double> seller_payoffs;
    double mc_revenue = 0.0;
};

// u(d) = x log(y d + 1) and its derivative. Throw std::domain_error on d < 0.
double buyer_utility(double x, double y, double d);
double buyer_marginal(double x, double y, double d);

// v(g - s) and v'(g - s); the argument is the energy sold, s in [0, g].
double seller_utility(double x, double y, double g, double s);
double seller_marginal(double x, double y, double g, double s);

/// Largest amount a seller can offer while its marginal value of retained
/// energy stays at or below the price ceiling: clamp(g - r*, 0, g) with
/// v'(r*) = p.
double declare_availability(const SellerState& seller, const MarketParams& params);

template <ConcaveUtility U>
double declare_availability(const U& v, double g, const MarketParams& params)
{
    return std::clamp(g - v.inverse_marginal(params.p), 0.0, g);
}

/// b = u'(d) d
double buyer_bid_update(const BuyerState& buyer, double d);

/// c = v'(g - s); requires 0 <= s <= seller.a.
double seller_ask_update(const SellerState& seller, double s);

/// Buyer price per unit b / d; only meaningful for d above the reporting
/// threshold.
inline double buyer_unit_price(double b, double d) { return b / d; }

Payoffs compute_payoffs(std::span<const BuyerState> buyers,
                        std::span<const SellerState> sellers,
                        const MarketParams& params);

} // namespace mgauction
