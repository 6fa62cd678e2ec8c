#include "mgauction/scenario.hpp"

#include <array>
#include <random>
#include <stdexcept>

namespace mgauction {

namespace {

std::mt19937_64 stream_engine(std::uint64_t seed, std::uint32_t stream)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed & 0xffffffffu),
                      static_cast<std::uint32_t>(seed >> 32), stream};
    return std::mt19937_64(seq);
}

double unit_draw(std::mt19937_64& eng) { return static_cast<double>(eng() >> 11) * 0x1.0p-53; }

double draw(std::mt19937_64& eng, double lo, double hi) { return lo + (hi - lo) * unit_draw(eng); }

} // namespace

bool Scenario::operator==(const Scenario& o) const
{
    if (params.p != o.params.p || seed != o.seed || label != o.label) return false;
    if (buyers.size() != o.buyers.size() || sellers.size() != o.sellers.size()) return false;
    for (std::size_t i = 0; i < buyers.size(); ++i)
        if (buyers[i].x != o.buyers[i].x || buyers[i].y != o.buyers[i].y) return false;
    for (std::size_t j = 0; j < sellers.size(); ++j)
        if (sellers[j].x != o.sellers[j].x || sellers[j].y != o.sellers[j].y ||
            sellers[j].g != o.sellers[j].g)
            return false;
    return true;
}

Scenario generate_scenario(std::uint64_t seed, int n_buyers, int n_sellers,
                           const AgentRanges& ranges, const MarketParams& params)
{
    if (n_buyers < 0 || n_sellers < 0) throw std::invalid_argument("agent counts must be >= 0");
    if (!(ranges.half_width >= 0.0 && ranges.half_width < 1.0))
        throw std::domain_error("half width must be in [0, 1)");
    if (!(ranges.g_lo > 0.0 && ranges.g_lo <= ranges.g_hi))
        throw std::domain_error("generation range must be positive and ordered");

    Scenario sc;
    sc.params = params;
    sc.seed = seed;
    const double lo = 1.0 - ranges.half_width;
    const double hi = 1.0 + ranges.half_width;

    auto buyer_eng = stream_engine(seed, 1);
    for (int i = 0; i < n_buyers; ++i) {
        BuyerState b;
        b.x = draw(buyer_eng, lo, hi);
        b.y = draw(buyer_eng, lo, hi);
        sc.buyers.push_back(b);
    }
    auto seller_eng = stream_engine(seed, 2);
    for (int j = 0; j < n_sellers; ++j) {
        SellerState s;
        s.x = draw(seller_eng, lo, hi);
        s.y = draw(seller_eng, lo, hi);
        s.g = draw(seller_eng, ranges.g_lo, ranges.g_hi);
        sc.sellers.push_back(s);
    }
    return sc;
}

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b)
{
    std::seed_seq seq{static_cast<std::uint32_t>(base), static_cast<std::uint32_t>(base >> 32),
                      static_cast<std::uint32_t>(a),    static_cast<std::uint32_t>(a >> 32),
                      static_cast<std::uint32_t>(b),    static_cast<std::uint32_t>(b >> 32)};
    std::array<std::uint32_t, 2> out{};
    seq.generate(out.begin(), out.end());
    return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

} // namespace mgauction
