#include "mgauction/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <iterator>
#include <limits>

#include <fmt/core.h>
#include <json.hpp>

namespace mgauction {

namespace {

using json = nlohmann::ordered_json;

std::string num(double v)
{
    if (!std::isfinite(v)) return "null";
    return fmt::format("{:.17g}", v);
}

std::string csv_num(double v)
{
    if (std::isnan(v)) return "";
    return fmt::format("{:.17g}", v);
}

std::string json_string(std::string_view s) { return json(std::string(s)).dump(); }

template <class Range, class F>
std::string json_array(const Range& r, F&& emit)
{
    std::string out = "[";
    bool first = true;
    for (const auto& x : r) {
        if (!first) out += ",";
        first = false;
        out += emit(x);
    }
    return out + "]";
}

std::string fields_json(const Fields& f)
{
    std::string out = "{";
    for (std::size_t k = 0; k < f.size(); ++k) {
        if (k) out += ",";
        out += json_string(f[k].first) + ":" + num(f[k].second);
    }
    return out + "}";
}

json parse_json(std::string_view text)
{
    try {
        return json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        throw IoError(fmt::format("malformed JSON: {}", e.what()));
    }
}

double get_num(const json& j, const char* key)
{
    if (!j.contains(key)) throw IoError(fmt::format("missing field \"{}\"", key));
    const json& v = j.at(key);
    if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
    if (!v.is_number()) throw IoError(fmt::format("field \"{}\" is not a number", key));
    return v.get<double>();
}

double get_num_or(const json& j, const char* key, double fallback)
{
    return j.contains(key) ? get_num(j, key) : fallback;
}

std::vector<double> get_nums(const json& j, const char* key)
{
    if (!j.contains(key) || !j.at(key).is_array())
        throw IoError(fmt::format("field \"{}\" must be an array", key));
    std::vector<double> out;
    for (const auto& v : j.at(key)) {
        if (!v.is_number()) throw IoError(fmt::format("field \"{}\" holds a non-number", key));
        out.push_back(v.get<double>());
    }
    return out;
}

std::uint64_t get_seed(const json& j)
{
    if (!j.contains("seed")) return 0;
    const json& v = j.at("seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0))
        throw IoError("seed must be a non-negative integer");
    return v.get<std::uint64_t>();
}

void validate(const Scenario& sc)
{
    auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
    if (!positive(sc.params.p)) throw IoError("price floor p must be positive");
    for (const auto& b : sc.buyers)
        if (!positive(b.x) || !positive(b.y)) throw IoError("buyer parameters must be positive");
    for (const auto& s : sc.sellers)
        if (!positive(s.x) || !positive(s.y) || !positive(s.g))
            throw IoError("seller parameters must be positive");
}

Scenario scenario_from(const json& j)
{
    if (!j.is_object()) throw IoError("scenario must be a JSON object");
    Scenario sc;
    sc.params.p = get_num(j, "p");
    sc.seed = get_seed(j);
    if (j.contains("label")) {
        if (!j.at("label").is_string()) throw IoError("label must be a string");
        sc.label = j.at("label").get<std::string>();
    }
    if (!j.contains("buyers") || !j.at("buyers").is_array()) throw IoError("buyers must be an array");
    if (!j.contains("sellers") || !j.at("sellers").is_array())
        throw IoError("sellers must be an array");
    for (const auto& b : j.at("buyers")) {
        BuyerState bs;
        bs.x = get_num(b, "x");
        bs.y = get_num(b, "y");
        sc.buyers.push_back(bs);
    }
    for (const auto& s : j.at("sellers")) {
        SellerState ss;
        ss.x = get_num(s, "x");
        ss.y = get_num(s, "y");
        ss.g = get_num(s, "g");
        sc.sellers.push_back(ss);
    }
    validate(sc);
    return sc;
}

std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            return out;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
}

std::vector<std::string_view> lines(std::string_view text)
{
    std::vector<std::string_view> out;
    for (auto l : split(text, '\n')) {
        if (!l.empty() && l.back() == '\r') l.remove_suffix(1);
        if (!l.empty()) out.push_back(l);
    }
    return out;
}

double parse_double(std::string_view s)
{
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError(fmt::format("not a number: \"{}\"", s));
    return v;
}

std::uint64_t parse_u64(std::string_view s)
{
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || ec != std::errc{} || ptr != s.data() + s.size())
        throw IoError(fmt::format("not an unsigned integer: \"{}\"", s));
    return v;
}

void check_csv_text(std::string_view s)
{
    if (s.find_first_of(",\"\n\r") != std::string_view::npos)
        throw IoError(fmt::format("text \"{}\" cannot be written to CSV", s));
}

} // namespace

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError(fmt::format("cannot open {}", path.string()));
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const std::filesystem::path& path, std::string_view text)
{
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError(fmt::format("cannot write {}", path.string()));
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw IoError(fmt::format("write to {} failed", path.string()));
}

std::string scenario_to_json(const Scenario& sc)
{
    std::string out = fmt::format("{{\"p\":{},\"seed\":{},\"label\":{},\n\"buyers\":", num(sc.params.p),
                                  sc.seed, json_string(sc.label));
    out += json_array(sc.buyers, [](const BuyerState& b) {
        return fmt::format("\n {{\"x\":{},\"y\":{}}}", num(b.x), num(b.y));
    });
    out += ",\n\"sellers\":";
    out += json_array(sc.sellers, [](const SellerState& s) {
        return fmt::format("\n {{\"x\":{},\"y\":{},\"g\":{}}}", num(s.x), num(s.y), num(s.g));
    });
    return out + "}\n";
}

Scenario scenario_from_json(std::string_view text) { return scenario_from(parse_json(text)); }

std::string scenario_to_csv(const Scenario& sc)
{
    check_csv_text(sc.label);
    std::string out = "kind,p,x,y,g,seed,label\n";
    out += fmt::format("market,{},,,,{},{}\n", csv_num(sc.params.p), sc.seed, sc.label);
    for (const auto& b : sc.buyers) out += fmt::format("buyer,,{},{},,,\n", csv_num(b.x), csv_num(b.y));
    for (const auto& s : sc.sellers)
        out += fmt::format("seller,,{},{},{},,\n", csv_num(s.x), csv_num(s.y), csv_num(s.g));
    return out;
}

Scenario scenario_from_csv(std::string_view text)
{
    const auto ls = lines(text);
    if (ls.empty() || ls[0] != "kind,p,x,y,g,seed,label") throw IoError("unexpected scenario CSV header");
    Scenario sc;
    bool market = false;
    for (std::size_t k = 1; k < ls.size(); ++k) {
        const auto f = split(ls[k]);
        if (f.size() != 7) throw IoError(fmt::format("scenario CSV line {} has {} fields", k + 1, f.size()));
        if (f[0] == "market") {
            sc.params.p = parse_double(f[1]);
            sc.seed = parse_u64(f[5]);
            sc.label = std::string(f[6]);
            market = true;
        } else if (f[0] == "buyer") {
            BuyerState b;
            b.x = parse_double(f[2]);
            b.y = parse_double(f[3]);
            sc.buyers.push_back(b);
        } else if (f[0] == "seller") {
            SellerState s;
            s.x = parse_double(f[2]);
            s.y = parse_double(f[3]);
            s.g = parse_double(f[4]);
            sc.sellers.push_back(s);
        } else {
            throw IoError(fmt::format("unknown row kind \"{}\"", f[0]));
        }
    }
    if (!market) throw IoError("scenario CSV has no market row");
    validate(sc);
    return sc;
}

std::string outcome_to_json(const Scenario& sc, const AuctionOutcome& o,
                            const RedistributionResult* red)
{
    std::string out = "{";
    out += fmt::format("\"p\":{},\"seed\":{},\"label\":{},\n", num(sc.params.p), sc.seed, json_string(sc.label));
    out += fmt::format("\"converged\":{},\"iterations\":{},\"last_change\":{},\"mcop_residual\":{},\n",
                       o.converged, o.iterations, num(o.last_change), num(o.mcop_residual));
    out += fmt::format("\"traded\":{},\"mu\":{},\"mc_revenue\":{},\n", o.clearing.traded,
                       num(o.clearing.mu), num(o.payoffs.mc_revenue));
    out += "\"buyers\":[";
    for (std::size_t i = 0; i < o.buyers.size(); ++i) {
        const auto& b = o.buyers[i];
        const auto& price = o.buyer_prices[i];
        out += fmt::format("{}\n {{\"x\":{},\"y\":{},\"b\":{},\"d\":{},\"price\":{},\"payoff\":{}}}",
                           i ? "," : "", num(b.x), num(b.y), num(b.b), num(b.d),
                           price ? num(*price) : "null", num(o.payoffs.buyer_payoffs[i]));
    }
    out += "],\n\"sellers\":[";
    for (std::size_t j = 0; j < o.sellers.size(); ++j) {
        const auto& s = o.sellers[j];
        out += fmt::format(
            "{}\n {{\"x\":{},\"y\":{},\"g\":{},\"a\":{},\"c\":{},\"s\":{},\"payoff\":{}}}",
            j ? "," : "", num(s.x), num(s.y), num(s.g), num(s.a), num(s.c), num(s.s),
            num(o.payoffs.seller_payoffs[j]));
    }
    out += "]";
    if (red) {
        out += ",\n\"redistribution\":{\"s_r\":";
        out += json_array(red->s_r, [](double v) { return num(v); });
        out += fmt::format(",\"c_r\":{},\"level\":{},\"kappa_f\":{},\"theta_auction\":{},"
                           "\"theta_redistributed\":{}}}",
                           num(red->c_r), num(red->level), num(red->kappa_f),
                           num(red->theta_auction), num(red->theta_redistributed));
    }
    return out + "}\n";
}

SavedOutcome outcome_from_json(std::string_view text)
{
    const json j = parse_json(text);
    SavedOutcome saved;
    saved.scenario = scenario_from(j);
    AuctionOutcome& o = saved.outcome;
    try {
        o.converged = j.at("converged").get<bool>();
        o.iterations = j.at("iterations").get<int>();
        o.clearing.traded = j.at("traded").get<bool>();
    } catch (const json::exception& e) {
        throw IoError(fmt::format("bad outcome metadata: {}", e.what()));
    }
    o.last_change = get_num(j, "last_change");
    o.mcop_residual = get_num(j, "mcop_residual");
    o.clearing.mu = get_num(j, "mu");
    o.payoffs.mc_revenue = get_num(j, "mc_revenue");

    const auto& buyers = j.at("buyers");
    for (std::size_t i = 0; i < buyers.size(); ++i) {
        BuyerState b = saved.scenario.buyers[i];
        b.b = get_num(buyers[i], "b");
        b.d = get_num(buyers[i], "d");
        o.buyers.push_back(b);
        o.clearing.d.push_back(b.d);
        const double price = get_num_or(buyers[i], "price", std::nan(""));
        o.buyer_prices.push_back(std::isnan(price) ? std::nullopt : std::optional<double>(price));
        o.payoffs.buyer_payoffs.push_back(get_num(buyers[i], "payoff"));
    }
    const auto& sellers = j.at("sellers");
    for (std::size_t k = 0; k < sellers.size(); ++k) {
        SellerState s = saved.scenario.sellers[k];
        s.a = get_num(sellers[k], "a");
        s.c = get_num(sellers[k], "c");
        s.s = get_num(sellers[k], "s");
        if (s.a < 0.0 || s.s < 0.0 || s.s > s.g) throw IoError("seller allocation out of range");
        o.sellers.push_back(s);
        o.clearing.s.push_back(s.s);
        o.payoffs.seller_payoffs.push_back(get_num(sellers[k], "payoff"));
    }
    o.clearing.buyer_budget_active.assign(o.buyers.size(), false);

    if (j.contains("redistribution")) {
        const json& r = j.at("redistribution");
        RedistributionResult red;
        red.s_r = get_nums(r, "s_r");
        red.c_r = get_num(r, "c_r");
        red.level = get_num(r, "level");
        red.kappa_f = get_num(r, "kappa_f");
        red.theta_auction = get_num(r, "theta_auction");
        red.theta_redistributed = get_num(r, "theta_redistributed");
        saved.redistribution = std::move(red);
    }
    return saved;
}

std::string trace_to_csv(const AuctionOutcome& outcome)
{
    std::string out = "iter,agent_kind,agent_id,bid_or_ask,alloc,mu,phi,theta\n";
    for (const auto& t : outcome.trace) {
        const std::string tail =
            fmt::format("{},{},{}", csv_num(t.mu), csv_num(t.phi), csv_num(t.theta));
        for (std::size_t i = 0; i < t.bids.size(); ++i)
            out += fmt::format("{},buyer,{},{},{},{}\n", t.iteration, i, csv_num(t.bids[i]),
                               csv_num(t.d[i]), tail);
        for (std::size_t j = 0; j < t.asks.size(); ++j)
            out += fmt::format("{},seller,{},{},{},{}\n", t.iteration, j, csv_num(t.asks[j]),
                               csv_num(t.s[j]), tail);
    }
    return out;
}

std::string report_to_json(const ExperimentReport& report)
{
    std::string out = fmt::format("{{\"experiment\":{},\"seed\":{},\n\"summary\":{},\n\"rows\":[",
                                  json_string(report.experiment), report.seed, fields_json(report.summary));
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& r = report.rows[k];
        out += fmt::format("{}\n {{\"table\":{},\"label\":{},\"seed\":{},\"values\":{}}}", k ? "," : "",
                           json_string(r.table), json_string(r.label), r.seed, fields_json(r.values));
    }
    return out + "]}\n";
}

ExperimentReport report_from_json(std::string_view text)
{
    const json j = parse_json(text);
    auto fields = [](const json& obj) {
        if (!obj.is_object()) throw IoError("expected an object of numbers");
        Fields f;
        for (const auto& [k, v] : obj.items()) {
            if (v.is_null()) f.emplace_back(k, std::numeric_limits<double>::quiet_NaN());
            else if (v.is_number()) f.emplace_back(k, v.get<double>());
            else throw IoError(fmt::format("field \"{}\" is not a number", k));
        }
        return f;
    };
    ExperimentReport rep;
    try {
        rep.experiment = j.at("experiment").get<std::string>();
        rep.seed = get_seed(j);
        rep.summary = fields(j.at("summary"));
        for (const auto& r : j.at("rows")) {
            ReportRow row;
            row.table = r.at("table").get<std::string>();
            row.label = r.at("label").get<std::string>();
            row.seed = get_seed(r);
            row.values = fields(r.at("values"));
            rep.rows.push_back(std::move(row));
        }
    } catch (const json::exception& e) {
        throw IoError(fmt::format("bad report: {}", e.what()));
    }
    return rep;
}

std::string report_to_csv(const ExperimentReport& report)
{
    check_csv_text(report.experiment);
    std::string out = "experiment,row,table,label,seed,key,value\n";
    for (std::size_t k = 0; k < report.rows.size(); ++k) {
        const auto& r = report.rows[k];
        check_csv_text(r.table);
        check_csv_text(r.label);
        for (const auto& [key, v] : r.values) {
            check_csv_text(key);
            out += fmt::format("{},{},{},{},{},{},{}\n", report.experiment, k, r.table, r.label,
                               r.seed, key, csv_num(v));
        }
    }
    for (const auto& [key, v] : report.summary) {
        check_csv_text(key);
        out += fmt::format("{},,summary,,{},{},{}\n", report.experiment, report.seed, key, csv_num(v));
    }
    return out;
}

ExperimentReport report_from_csv(std::string_view text)
{
    const auto ls = lines(text);
    if (ls.empty() || ls[0] != "experiment,row,table,label,seed,key,value")
        throw IoError("unexpected report CSV header");
    ExperimentReport rep;
    for (std::size_t k = 1; k < ls.size(); ++k) {
        const auto f = split(ls[k]);
        if (f.size() != 7) throw IoError(fmt::format("report CSV line {} has {} fields", k + 1, f.size()));
        rep.experiment = std::string(f[0]);
        const std::string key(f[5]);
        const double value = parse_double(f[6]);
        if (f[1].empty()) {
            if (f[2] != "summary") throw IoError("rows without an index must be summary rows");
            rep.seed = parse_u64(f[4]);
            rep.summary.emplace_back(key, value);
            continue;
        }
        const std::uint64_t idx = parse_u64(f[1]);
        if (idx == rep.rows.size()) {
            rep.rows.push_back({std::string(f[2]), std::string(f[3]), parse_u64(f[4]), {}});
        } else if (idx + 1 != rep.rows.size()) {
            throw IoError(fmt::format("report CSV rows out of order at line {}", k + 1));
        }
        rep.rows.back().values.emplace_back(key, value);
    }
    return rep;
}

} // namespace mgauction
