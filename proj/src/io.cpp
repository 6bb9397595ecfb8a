#include "knapsack/io.hpp"

#include <fstream>
#include <sstream>

namespace knapsack {

using nlohmann::json;

void to_json(json& j, const Rational& r) {
  if (r.is_integer())
    j = r.num();
  else
    j = json{{"num", r.num()}, {"den", r.den()}};
}

void from_json(const json& j, Rational& r) {
  if (j.is_number_integer() || j.is_number_unsigned()) {
    r = Rational(j.get<std::int64_t>());
    return;
  }
  if (j.is_number_float()) {
    r = Rational::from_double(j.get<double>());
    return;
  }
  if (j.is_string()) {
    auto parsed = Rational::parse(j.get<std::string>());
    if (!parsed) throw std::invalid_argument("unparsable rational: " + j.dump());
    r = *parsed;
    return;
  }
  r = Rational(j.at("num").get<std::int64_t>(), j.at("den").get<std::int64_t>());
}

void to_json(json& j, const Bidder& b) {
  j = json{{"id", b.id}, {"size", b.size}, {"value", b.value}};
}

void from_json(const json& j, Bidder& b) {
  j.at("id").get_to(b.id);
  j.at("size").get_to(b.size);
  j.at("value").get_to(b.value);
}

void to_json(json& j, const AuctionInstance& instance) {
  j = json{{"capacity", instance.capacity}, {"bidders", instance.bidders}};
  if (instance.relax_demand) j["relax_demand"] = true;
}

void from_json(const json& j, AuctionInstance& instance) {
  j.at("capacity").get_to(instance.capacity);
  j.at("bidders").get_to(instance.bidders);
  instance.relax_demand = j.value("relax_demand", false);
}

void to_json(json& j, const BidProfile& profile) {
  j = json{{"bids", profile.bids}};
}

void from_json(const json& j, BidProfile& profile) {
  j.at("bids").get_to(profile.bids);
}

void to_json(json& j, const BidderOutcome& outcome) {
  j = json{{"winner", outcome.winner},
           {"payment", outcome.payment},
           {"payoff", outcome.payoff}};
}

void to_json(json& j, const AuctionOutcome& outcome) {
  j = json{{"bidders", outcome.bidders}, {"revenue", outcome.revenue}};
  if (outcome.no_reject_price_zero) j["no_reject_price_zero"] = true;
}

void to_json(json& j, const ValueDistribution& d) {
  j = json{{"lo", d.lo}, {"hi", d.hi}};
}

void from_json(const json& j, ValueDistribution& d) {
  j.at("lo").get_to(d.lo);
  j.at("hi").get_to(d.hi);
}

namespace {

std::string size_mode_name(SizeMode mode) {
  return mode == SizeMode::kWithoutReplacement ? "without_replacement"
                                               : "with_replacement";
}

SizeMode size_mode_from(const std::string& name) {
  if (name == "without_replacement") return SizeMode::kWithoutReplacement;
  if (name == "with_replacement") return SizeMode::kWithReplacement;
  throw std::invalid_argument("unknown size mode: " + name);
}

}  // namespace

void to_json(json& j, const SizeSampler& s) {
  j = json{{"lo", s.lo}, {"hi", s.hi}, {"mode", size_mode_name(s.mode)}};
}

void from_json(const json& j, SizeSampler& s) {
  j.at("lo").get_to(s.lo);
  j.at("hi").get_to(s.hi);
  s.mode = size_mode_from(j.at("mode").get<std::string>());
}

void to_json(json& j, const BidGrid& g) {
  j = json{{"min", g.min}, {"max", g.max}, {"step", g.step}};
}

void from_json(const json& j, BidGrid& g) {
  j.at("min").get_to(g.min);
  j.at("max").get_to(g.max);
  j.at("step").get_to(g.step);
}

void to_json(json& j, const ExplorationSchedule& e) {
  j = json{{"pure_exploration_episodes", e.pure_exploration_episodes},
           {"initial", e.initial},
           {"final", e.final_eps},
           {"decay", e.decay == DecayShape::kLinear ? "linear" : "exponential"},
           {"exp_rate", e.exp_rate}};
}

void from_json(const json& j, ExplorationSchedule& e) {
  j.at("pure_exploration_episodes").get_to(e.pure_exploration_episodes);
  j.at("initial").get_to(e.initial);
  j.at("final").get_to(e.final_eps);
  const std::string decay = j.at("decay").get<std::string>();
  if (decay == "linear")
    e.decay = DecayShape::kLinear;
  else if (decay == "exponential")
    e.decay = DecayShape::kExponential;
  else
    throw std::invalid_argument("unknown decay shape: " + decay);
  e.exp_rate = j.value("exp_rate", e.exp_rate);
}

void to_json(json& j, const AgentConfig& a) {
  j = json{{"alpha", a.alpha},
           {"exploration", a.exploration},
           {"action_grid", a.action_grid},
           {"loser_reward", a.loser_reward},
           {"q_init", a.q_init == QInit::kZeros ? "zeros" : "optimistic"},
           {"q_init_value", a.q_init_value}};
}

void from_json(const json& j, AgentConfig& a) {
  j.at("alpha").get_to(a.alpha);
  j.at("exploration").get_to(a.exploration);
  j.at("action_grid").get_to(a.action_grid);
  j.at("loser_reward").get_to(a.loser_reward);
  const std::string init = j.at("q_init").get<std::string>();
  if (init == "zeros")
    a.q_init = QInit::kZeros;
  else if (init == "optimistic")
    a.q_init = QInit::kOptimistic;
  else
    throw std::invalid_argument("unknown q_init: " + init);
  a.q_init_value = j.value("q_init_value", 0.0);
}

void to_json(json& j, const SimConfig& c) {
  j = json{{"rule", std::string(to_string(c.rule))},
           {"n_agents", c.n_agents},
           {"capacity", c.capacity},
           {"values", c.values},
           {"sizes", c.sizes},
           {"episodes", c.episodes},
           {"tie_mode",
            c.tie_mode == TieMode::kDeterministic ? "deterministic" : "seeded_random"},
           {"agent", c.agent},
           {"master_seed", c.master_seed},
           {"resample_infeasible", c.resample_infeasible},
           {"checkpoint_every", c.checkpoint_every},
           {"agent_seed_override", c.agent_seed_override}};
}

void from_json(const json& j, SimConfig& c) {
  c.rule = payment_rule_from_string(j.at("rule").get<std::string>());
  j.at("n_agents").get_to(c.n_agents);
  j.at("capacity").get_to(c.capacity);
  j.at("values").get_to(c.values);
  j.at("sizes").get_to(c.sizes);
  j.at("episodes").get_to(c.episodes);
  const std::string tie = j.at("tie_mode").get<std::string>();
  if (tie == "deterministic")
    c.tie_mode = TieMode::kDeterministic;
  else if (tie == "seeded_random")
    c.tie_mode = TieMode::kSeededRandom;
  else
    throw std::invalid_argument("unknown tie mode: " + tie);
  j.at("agent").get_to(c.agent);
  j.at("master_seed").get_to(c.master_seed);
  c.resample_infeasible = j.value("resample_infeasible", true);
  c.checkpoint_every = j.value("checkpoint_every", 0LL);
  c.agent_seed_override =
      j.value("agent_seed_override", std::vector<std::uint64_t>{});
}

void to_json(json& j, const QTable& table) {
  j = json{{"value_lo", table.value_lo()}, {"value_hi", table.value_hi()},
           {"size_lo", table.size_lo()},   {"size_hi", table.size_hi()},
           {"n_actions", table.n_actions()}, {"q", table.raw()}};
}

void from_json(const json& j, QTable& table) {
  table = QTable(j.at("value_lo").get<int>(), j.at("value_hi").get<int>(),
                 j.at("size_lo").get<int>(), j.at("size_hi").get<int>(),
                 j.at("n_actions").get<std::size_t>(), 0.0);
  const auto q = j.at("q").get<std::vector<double>>();
  if (q.size() != table.raw().size())
    throw std::invalid_argument("Q-table payload does not match its shape");
  table.raw() = q;
}

void to_json(json& j, const DeviationReport& report) {
  j = json{{"instance", report.instance},
           {"profile", report.profile},
           {"bidder_id", report.bidder_id},
           {"rule", std::string(to_string(report.rule))},
           {"truthful_payoff", report.truthful_payoff},
           {"deviation_bid", report.deviation_bid},
           {"deviation_payoff", report.deviation_payoff}};
  if (report.up_replay_payoff) j["up_replay_payoff"] = *report.up_replay_payoff;
}

void to_json(json& j, const InefficiencyWitness& witness) {
  j = json{{"found", witness.found},
           {"searched", witness.searched},
           {"instance", witness.instance},
           {"truthful_value", witness.truthful_value},
           {"best_value", witness.best_value},
           {"gap", witness.gap},
           {"khat", witness.khat},
           {"last_winner", witness.last_winner},
           {"first_rejected", witness.first_rejected},
           {"condition_holds", witness.condition_holds}};
}

void to_json(json& j, const SummaryStats& stats) {
  j = json{{"median", stats.median},
           {"median_text", stats.median.str()},
           {"mean", stats.mean},
           {"sd", stats.stddev},
           {"count", stats.count}};
}

void to_json(json& j, const RoundMetrics& metrics) {
  j = json{{"learning_ratios", metrics.learning_ratios},
           {"revenue", metrics.revenue},
           {"S", metrics.full_info_surplus},
           {"C", metrics.achieved_surplus},
           {"E", metrics.efficiency_gap},
           {"efficiency_ratio", metrics.efficiency_ratio},
           {"gap_negative", metrics.gap_negative}};
}

void to_json(json& j, const AgentStep& step) {
  j = json{{"value", step.state.value},
           {"size", step.state.size},
           {"action", step.action},
           {"bid", step.bid},
           {"per_unit_bid", step.per_unit_bid},
           {"winner", step.winner},
           {"payment", step.payment},
           {"payoff", step.payoff},
           {"reward", step.reward},
           {"learning_ratio", step.learning_ratio}};
}

void to_json(json& j, const EpisodeRecord& record) {
  j = json{{"episode", record.episode},
           {"rule", std::string(to_string(record.rule))},
           {"epsilon", record.epsilon},
           {"agents", record.agents},
           {"metrics", record.metrics}};
}

void to_json(json& j, const Checkpoint& c) {
  j = json{{"config", c.config},
           {"next_episode", c.next_episode},
           {"tables", c.tables}};
}

void from_json(const json& j, Checkpoint& c) {
  j.at("config").get_to(c.config);
  j.at("next_episode").get_to(c.next_episode);
  j.at("tables").get_to(c.tables);
}

std::string bids_csv_header() {
  return "episode,rule,bidder_id,value,size,bid,per_unit_bid,winner,payment,"
         "payoff,learning_ratio,revenue,S,C,E,efficiency_ratio\n";
}

std::string bids_csv_rows(const EpisodeRecord& record) {
  std::ostringstream out;
  for (std::size_t i = 0; i < record.agents.size(); ++i) {
    const AgentStep& step = record.agents[i];
    out << record.episode << ',' << to_string(record.rule) << ',' << i << ','
        << step.state.value << ',' << step.state.size << ',' << step.bid.str()
        << ',' << step.per_unit_bid.str() << ',' << (step.winner ? 1 : 0) << ','
        << step.payment.str() << ',' << step.payoff.str() << ','
        << step.learning_ratio.str() << ',' << record.metrics.revenue.str() << ','
        << record.metrics.full_info_surplus.str() << ','
        << record.metrics.achieved_surplus.str() << ','
        << record.metrics.efficiency_gap.str() << ','
        << record.metrics.efficiency_ratio.str() << '\n';
  }
  return out.str();
}

std::string rounds_csv_header() {
  return "episode,rule,revenue,S,C,E,efficiency_ratio,mean_learning_ratio\n";
}

std::string rounds_csv_row(const EpisodeRecord& record) {
  Rational mean_ratio;
  for (const AgentStep& step : record.agents) mean_ratio += step.learning_ratio;
  if (!record.agents.empty())
    mean_ratio /= Rational(static_cast<std::int64_t>(record.agents.size()));
  std::ostringstream out;
  out << record.episode << ',' << to_string(record.rule) << ','
      << record.metrics.revenue.str() << ','
      << record.metrics.full_info_surplus.str() << ','
      << record.metrics.achieved_surplus.str() << ','
      << record.metrics.efficiency_gap.str() << ','
      << record.metrics.efficiency_ratio.str() << ',' << mean_ratio.str() << '\n';
  return out.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  if (in.bad()) throw std::runtime_error("read failed: " + path);
  return buf.str();
}

}  // namespace knapsack
