#include "knapsack/learning.hpp"

#include <stdexcept>
#include <string>

namespace knapsack {

QTable::QTable(int value_lo, int value_hi, int size_lo, int size_hi,
               std::size_t n_actions, double init)
    : value_lo_(value_lo),
      value_hi_(value_hi),
      size_lo_(size_lo),
      size_hi_(size_hi),
      n_actions_(n_actions) {
  if (value_hi < value_lo || size_hi < size_lo || n_actions == 0)
    throw std::invalid_argument("empty Q-table shape");
  q_.assign(n_states() * n_actions, init);
}

std::size_t QTable::n_states() const {
  return static_cast<std::size_t>(value_hi_ - value_lo_ + 1) *
         static_cast<std::size_t>(size_hi_ - size_lo_ + 1);
}

std::size_t QTable::index(const QState& state, std::size_t action) const {
  if (state.value < value_lo_ || state.value > value_hi_ ||
      state.size < size_lo_ || state.size > size_hi_)
    throw std::out_of_range("state outside the Q-table's ranges");
  if (action >= n_actions_) throw std::out_of_range("action index too large");
  const std::size_t sizes = static_cast<std::size_t>(size_hi_ - size_lo_ + 1);
  const std::size_t row =
      static_cast<std::size_t>(state.value - value_lo_) * sizes +
      static_cast<std::size_t>(state.size - size_lo_);
  return row * n_actions_ + action;
}

double QTable::at(const QState& state, std::size_t action) const {
  return q_[index(state, action)];
}

void QTable::set(const QState& state, std::size_t action, double q) {
  q_[index(state, action)] = q;
}

std::vector<std::size_t> QTable::argmax_actions(const QState& state) const {
  std::vector<std::size_t> best;
  double top = at(state, 0);
  for (std::size_t a = 0; a < n_actions_; ++a) {
    const double q = at(state, a);
    if (q > top) {
      top = q;
      best.clear();
    }
    if (q == top) best.push_back(a);
  }
  return best;
}

std::size_t select_action(const QTable& table, const QState& state,
                          double epsilon, std::mt19937_64& rng) {
  // One coin flip, then one action draw: fixed consumption order keeps
  // replays bit-identical.
  const double coin = std::uniform_real_distribution<double>(0.0, 1.0)(rng);
  if (coin < epsilon) {
    return std::uniform_int_distribution<std::size_t>(0, table.n_actions() - 1)(rng);
  }
  const std::vector<std::size_t> best = table.argmax_actions(state);
  if (best.size() == 1) return best.front();
  return best[std::uniform_int_distribution<std::size_t>(0, best.size() - 1)(rng)];
}

void q_update(QTable& table, const QState& state, std::size_t action,
              double reward, double alpha) {
  table.set(state, action, (1.0 - alpha) * table.at(state, action) + alpha * reward);
}

std::vector<Agent> make_agents(const SimConfig& config) {
  config.validate();
  const double init =
      config.agent.q_init == QInit::kOptimistic ? config.agent.q_init_value : 0.0;
  const RngStreams streams(config.master_seed);
  std::vector<Agent> agents;
  agents.reserve(static_cast<std::size_t>(config.n_agents));
  for (int i = 0; i < config.n_agents; ++i) {
    Agent agent;
    agent.table = QTable(config.values.lo, config.values.hi, config.sizes.lo,
                         config.sizes.hi, config.agent.action_grid.size(), init);
    const std::uint64_t seed =
        config.agent_seed_override.empty()
            ? streams.derive_seed("agent:" + std::to_string(i))
            : config.agent_seed_override[static_cast<std::size_t>(i)];
    agent.rng = std::mt19937_64(seed);
    agents.push_back(std::move(agent));
  }
  return agents;
}

EpisodeRecord run_episode(std::vector<Agent>& agents, const SimConfig& config,
                          long long episode, std::mt19937_64& env_rng,
                          std::uint64_t tie_seed, long long* resamples,
                          const EnvironmentDraw* forced_draw) {
  const EnvironmentDraw draw =
      forced_draw ? *forced_draw : sample_environment(config, env_rng, resamples);
  const AuctionInstance instance = instance_from_draw(config, draw);

  EpisodeRecord record;
  record.episode = episode;
  record.rule = config.rule;
  record.epsilon =
      epsilon_at(episode, config.agent.exploration, config.episodes);

  BidProfile profile;
  record.agents.resize(agents.size());
  for (std::size_t i = 0; i < agents.size(); ++i) {
    AgentStep& step = record.agents[i];
    step.state = QState{draw.values[i], draw.sizes[i]};
    step.action =
        select_action(agents[i].table, step.state, record.epsilon, agents[i].rng);
    step.bid = config.agent.action_grid.value_at(step.action);
    profile.bids.push_back(step.bid);
  }

  const AuctionOutcome outcome =
      resolve(instance, profile, config.rule, config.tie_mode, tie_seed);
  record.metrics = compute_round_metrics(instance, profile, outcome,
                                         config.tie_mode,
                                         FillMode::kStopAtFirstMisfit, tie_seed);

  for (std::size_t i = 0; i < agents.size(); ++i) {
    AgentStep& step = record.agents[i];
    const BidderOutcome& out = outcome.bidders[i];
    step.per_unit_bid = profile.per_unit(instance, static_cast<int>(i));
    step.winner = out.winner;
    step.payment = out.payment;
    step.payoff = out.payoff;
    step.reward =
        out.winner ? out.payoff.to_double() : config.agent.loser_reward;
    step.learning_ratio = record.metrics.learning_ratios[i];
    q_update(agents[i].table, step.state, step.action, step.reward,
             config.agent.alpha);
  }
  return record;
}

SimulationResult run_simulation(const SimConfig& config, const EpisodeSink& sink,
                                const CheckpointSink& checkpoint) {
  config.validate();
  std::vector<Agent> agents = make_agents(config);
  const RngStreams streams(config.master_seed);
  std::mt19937_64 env_rng = streams.stream("env");
  std::mt19937_64 tie_rng = streams.stream("tie");

  SimulationResult result;
  for (long long episode = 0; episode < config.episodes; ++episode) {
    const std::uint64_t tie_seed = tie_rng();
    const EpisodeRecord record = run_episode(agents, config, episode, env_rng,
                                             tie_seed, &result.resamples);
    ++result.episodes;
    try {
      if (sink) sink(record);
      if (checkpoint && config.checkpoint_every > 0 &&
          (episode + 1) % config.checkpoint_every == 0 &&
          episode + 1 < config.episodes)
        checkpoint(episode + 1, agents);
    } catch (const std::exception& e) {
      throw std::runtime_error("episode " + std::to_string(episode) + ": " +
                               e.what());
    }
  }
  try {
    if (checkpoint) checkpoint(config.episodes, agents);
  } catch (const std::exception& e) {
    throw std::runtime_error("episode " + std::to_string(config.episodes - 1) +
                             ": " + e.what());
  }

  result.tables.reserve(agents.size());
  for (Agent& agent : agents) result.tables.push_back(std::move(agent.table));
  return result;
}

}  // namespace knapsack
