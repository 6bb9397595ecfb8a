#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "knapsack/auction.hpp"
#include "knapsack/config.hpp"
#include "knapsack/learning.hpp"
#include "knapsack/metrics.hpp"
#include "knapsack/oracle.hpp"

namespace knapsack {

/// JSON forms: a rational with denominator 1 serializes as a plain integer,
/// anything else as {"num": n, "den": d}. Reading also accepts "n/d"
/// strings and finite doubles (converted exactly).
void to_json(nlohmann::json& j, const Rational& r);
void from_json(const nlohmann::json& j, Rational& r);

void to_json(nlohmann::json& j, const Bidder& b);
void from_json(const nlohmann::json& j, Bidder& b);
void to_json(nlohmann::json& j, const AuctionInstance& instance);
void from_json(const nlohmann::json& j, AuctionInstance& instance);
void to_json(nlohmann::json& j, const BidProfile& profile);
void from_json(const nlohmann::json& j, BidProfile& profile);
void to_json(nlohmann::json& j, const BidderOutcome& outcome);
void to_json(nlohmann::json& j, const AuctionOutcome& outcome);

void to_json(nlohmann::json& j, const ValueDistribution& d);
void from_json(const nlohmann::json& j, ValueDistribution& d);
void to_json(nlohmann::json& j, const SizeSampler& s);
void from_json(const nlohmann::json& j, SizeSampler& s);
void to_json(nlohmann::json& j, const BidGrid& g);
void from_json(const nlohmann::json& j, BidGrid& g);
void to_json(nlohmann::json& j, const ExplorationSchedule& e);
void from_json(const nlohmann::json& j, ExplorationSchedule& e);
void to_json(nlohmann::json& j, const AgentConfig& a);
void from_json(const nlohmann::json& j, AgentConfig& a);
void to_json(nlohmann::json& j, const SimConfig& c);
void from_json(const nlohmann::json& j, SimConfig& c);

void to_json(nlohmann::json& j, const QTable& table);
void from_json(const nlohmann::json& j, QTable& table);

void to_json(nlohmann::json& j, const DeviationReport& report);
void to_json(nlohmann::json& j, const InefficiencyWitness& witness);
void to_json(nlohmann::json& j, const SummaryStats& stats);
void to_json(nlohmann::json& j, const RoundMetrics& metrics);
void to_json(nlohmann::json& j, const AgentStep& step);
void to_json(nlohmann::json& j, const EpisodeRecord& record);

/// Resumable simulation snapshot: the config, how many episodes are done,
/// and every agent's table.
struct Checkpoint {
  SimConfig config;
  long long next_episode = 0;
  std::vector<QTable> tables;
};

void to_json(nlohmann::json& j, const Checkpoint& c);
void from_json(const nlohmann::json& j, Checkpoint& c);

/// Per-bidder CSV: one row per agent per episode. Column order is fixed;
/// rationals print as "n" or "n/d", booleans as 0/1.
std::string bids_csv_header();
std::string bids_csv_rows(const EpisodeRecord& record);

/// Per-episode aggregate CSV row.
std::string rounds_csv_header();
std::string rounds_csv_row(const EpisodeRecord& record);

/// Whole-file helpers that throw std::runtime_error naming the path.
void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace knapsack
