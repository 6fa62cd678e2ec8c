#pragma once

// Flat-file formats. Numbers are written with 17 significant digits so that
// every double survives a write/read cycle bit for bit.

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

#include "mgauction/auction.hpp"
#include "mgauction/experiments.hpp"
#include "mgauction/fairness.hpp"
#include "mgauction/scenario.hpp"

namespace mgauction {

/// Unreadable or malformed input, or an unwritable output.
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);

// {"p": .., "buyers": [{"x":..,"y":..}], "sellers": [{"x":..,"y":..,"g":..}]}
// plus optional "seed" and "label".
std::string scenario_to_json(const Scenario& sc);
Scenario scenario_from_json(std::string_view text);

// kind,p,x,y,g,seed,label with one "market" row followed by buyer and
// seller rows.
std::string scenario_to_csv(const Scenario& sc);
Scenario scenario_from_csv(std::string_view text);

std::string outcome_to_json(const Scenario& sc, const AuctionOutcome& outcome,
                            const RedistributionResult* redistribution = nullptr);

/// Rebuilds the scenario and enough of the outcome to redistribute it again:
/// agents, messages, allocations, payoffs and convergence metadata. The
/// trace is not stored.
struct SavedOutcome {
    Scenario scenario;
    AuctionOutcome outcome;
    std::optional<RedistributionResult> redistribution;
};
SavedOutcome outcome_from_json(std::string_view text);

/// iter,agent_kind,agent_id,bid_or_ask,alloc,mu,phi,theta; one line per agent
/// per recorded round. mu is empty for rounds without trade.
std::string trace_to_csv(const AuctionOutcome& outcome);

std::string report_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(std::string_view text);

// experiment,row,table,label,seed,key,value; one line per field. Summary
// fields have table "summary" and an empty row index.
std::string report_to_csv(const ExperimentReport& report);
ExperimentReport report_from_csv(std::string_view text);

} // namespace mgauction
