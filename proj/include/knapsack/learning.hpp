#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "knapsack/auction.hpp"
#include "knapsack/config.hpp"
#include "knapsack/metrics.hpp"

namespace knapsack {

/// What an agent observes before bidding: its own draw.
struct QState {
  int value = 0;
  int size = 0;

  friend bool operator==(const QState&, const QState&) = default;
};

/// Dense action-value table over (value range x size range) states and one
/// column per bid on the action grid.
class QTable {
 public:
  QTable() = default;
  QTable(int value_lo, int value_hi, int size_lo, int size_hi,
         std::size_t n_actions, double init);

  double at(const QState& state, std::size_t action) const;
  void set(const QState& state, std::size_t action, double q);
  std::size_t n_actions() const { return n_actions_; }
  std::size_t n_states() const;
  int value_lo() const { return value_lo_; }
  int value_hi() const { return value_hi_; }
  int size_lo() const { return size_lo_; }
  int size_hi() const { return size_hi_; }

  /// All actions attaining the state's maximum value, ascending.
  std::vector<std::size_t> argmax_actions(const QState& state) const;

  /// Row-major dense export: states ordered by (value, size), then actions.
  const std::vector<double>& raw() const { return q_; }
  std::vector<double>& raw() { return q_; }

  friend bool operator==(const QTable&, const QTable&) = default;

 private:
  std::size_t index(const QState& state, std::size_t action) const;

  int value_lo_ = 0, value_hi_ = -1;
  int size_lo_ = 0, size_hi_ = -1;
  std::size_t n_actions_ = 0;
  std::vector<double> q_;
};

/// Epsilon-greedy over the table's actions: explore uniformly with
/// probability epsilon, otherwise pick uniformly among the argmax set.
std::size_t select_action(const QTable& table, const QState& state,
                          double epsilon, std::mt19937_64& rng);

/// Single-step terminal update, no discount: Q <- (1-alpha) Q + alpha r.
void q_update(QTable& table, const QState& state, std::size_t action,
              double reward, double alpha);

struct Agent {
  QTable table;
  std::mt19937_64 rng;  // private exploration stream
};

/// Agents sized to the config's value/size/action ranges, with exploration
/// streams derived from the master seed (or the per-agent override).
std::vector<Agent> make_agents(const SimConfig& config);

struct AgentStep {
  QState state;
  std::size_t action = 0;
  Rational bid;
  Rational per_unit_bid;
  bool winner = false;
  Rational payment;
  Rational payoff;      // auction payoff; zero for losers
  double reward = 0.0;  // learning signal: payoff, or loser_reward when losing
  Rational learning_ratio;
};

struct EpisodeRecord {
  long long episode = 0;
  PaymentRule rule = PaymentRule::kUP;
  double epsilon = 0.0;
  std::vector<AgentStep> agents;
  RoundMetrics metrics;
};

/// One auction: draw the environment (or use `forced_draw`), let every
/// agent pick a bid from its own table, resolve, reward, update.
EpisodeRecord run_episode(std::vector<Agent>& agents, const SimConfig& config,
                          long long episode, std::mt19937_64& env_rng,
                          std::uint64_t tie_seed, long long* resamples = nullptr,
                          const EnvironmentDraw* forced_draw = nullptr);

using EpisodeSink = std::function<void(const EpisodeRecord&)>;
using CheckpointSink =
    std::function<void(long long next_episode, const std::vector<Agent>&)>;

struct SimulationResult {
  std::vector<QTable> tables;
  long long episodes = 0;
  long long resamples = 0;
};

/// Sequential episode loop (learning is order-dependent). Sink failures are
/// rethrown annotated with the episode index so runs can resume.
SimulationResult run_simulation(const SimConfig& config,
                                const EpisodeSink& sink = nullptr,
                                const CheckpointSink& checkpoint = nullptr);

}  // namespace knapsack
