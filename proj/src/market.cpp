#include "mgauction/market.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace mgauction {

namespace {

void require_positive(double v, const char* what)
{
    if (!(v > 0.0)) throw std::domain_error(std::string(what) + " must be positive");
}

void require_params(double x, double y)
{
    require_positive(x, "utility scale x");
    require_positive(y, "utility curvature y");
}

// s in [0, g] up to the invariant tolerance; returns the retained energy g - s.
double retained(double g, double s)
{
    require_positive(g, "generation g");
    if (!(s >= 0.0)) throw std::domain_error("seller allocation must be non-negative");
    if (s > g + kInvariantTol) throw std::domain_error("seller allocation exceeds generation");
    return std::max(g - s, 0.0);
}

} // namespace

double LogSaturation::value(double q) const { return x * std::log1p(y * q); }

double LogSaturation::marginal(double q) const { return x * y / (y * q + 1.0); }

double buyer_utility(double x, double y, double d)
{
    require_params(x, y);
    if (!(d >= 0.0)) throw std::domain_error("buyer allocation must be non-negative");
    return LogSaturation{x, y}.value(d);
}

double buyer_marginal(double x, double y, double d)
{
    require_params(x, y);
    if (!(d >= 0.0)) throw std::domain_error("buyer allocation must be non-negative");
    return LogSaturation{x, y}.marginal(d);
}

double seller_utility(double x, double y, double g, double s)
{
    require_params(x, y);
    return LogSaturation{x, y}.value(retained(g, s));
}

double seller_marginal(double x, double y, double g, double s)
{
    require_params(x, y);
    return LogSaturation{x, y}.marginal(retained(g, s));
}

double declare_availability(const SellerState& seller, const MarketParams& params)
{
    require_params(seller.x, seller.y);
    require_positive(seller.g, "generation g");
    require_positive(params.p, "price p");
    return declare_availability(seller.utility(), seller.g, params);
}

double buyer_bid_update(const BuyerState& buyer, double d)
{
    return buyer_marginal(buyer.x, buyer.y, d) * d;
}

double seller_ask_update(const SellerState& seller, double s)
{
    if (s > seller.a + kInvariantTol)
        throw std::domain_error("seller allocation exceeds declared availability");
    return seller_marginal(seller.x, seller.y, seller.g, s);
}

Payoffs compute_payoffs(std::span<const BuyerState> buyers,
                        std::span<const SellerState> sellers,
                        const MarketParams& params)
{
    require_positive(params.p, "price p");
    Payoffs out;
    out.buyer_payoffs.reserve(buyers.size());
    out.seller_payoffs.reserve(sellers.size());

    double collected = 0.0;
    for (const auto& b : buyers) {
        out.buyer_payoffs.push_back(buyer_utility(b.x, b.y, b.d) - b.b);
        collected += b.b;
    }
    double reimbursed = 0.0;
    for (const auto& s : sellers) {
        out.seller_payoffs.push_back(seller_utility(s.x, s.y, s.g, s.s) + s.c * s.s);
        reimbursed += s.c * s.s;
    }
    out.mc_revenue = collected - reimbursed;
    return out;
}

} // namespace mgauction
