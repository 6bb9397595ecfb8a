#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "knapsack/auction.hpp"
#include "knapsack/rational.hpp"

namespace knapsack {

/// Uniform integer values on [lo, hi].
struct ValueDistribution {
  int lo = 1;
  int hi = 10;

  int sample(std::mt19937_64& rng) const {
    return std::uniform_int_distribution<int>(lo, hi)(rng);
  }
  int support_size() const { return hi - lo + 1; }
};

enum class SizeMode { kWithoutReplacement, kWithReplacement };

/// Integer object sizes on [lo, hi], drawn jointly for all bidders.
/// Without replacement requires hi-lo+1 >= n; when the cardinality equals
/// n the draw is a permutation of the whole range, the lab's convention.
struct SizeSampler {
  int lo = 4;
  int hi = 10;
  SizeMode mode = SizeMode::kWithoutReplacement;

  std::vector<int> sample(int n, std::mt19937_64& rng) const;
  int support_size() const { return hi - lo + 1; }
};

/// Enumerable candidate total bids: min, min+step, ..., up to max.
struct BidGrid {
  Rational min = 0;
  Rational max = 20;
  Rational step = 1;

  std::vector<Rational> values() const;
  std::size_t size() const;
  Rational value_at(std::size_t index) const { return min + step * Rational(static_cast<std::int64_t>(index)); }
  bool contains(const Rational& bid) const;
  void validate() const;  // throws std::invalid_argument on step <= 0 etc.
};

enum class DecayShape { kLinear, kExponential };

/// Epsilon schedule: exactly 1.0 for the pure-exploration prefix, then a
/// monotone decay from `initial` to `final_eps`, hitting `final_eps` at the
/// very last episode.
struct ExplorationSchedule {
  long long pure_exploration_episodes = 1000;
  double initial = 1.0;
  double final_eps = 0.0;
  DecayShape decay = DecayShape::kLinear;
  /// Per-episode multiplier for the exponential shape (ignored for linear).
  double exp_rate = 0.9995;
};

double epsilon_at(long long episode, const ExplorationSchedule& schedule,
                  long long total_episodes);

enum class QInit { kZeros, kOptimistic };

struct AgentConfig {
  double alpha = 0.1;
  ExplorationSchedule exploration;
  BidGrid action_grid;      // integer total bids 0..20 by default
  double loser_reward = -1.0;
  QInit q_init = QInit::kZeros;
  double q_init_value = 0.0;  // used when q_init == kOptimistic
};

struct SimConfig {
  PaymentRule rule = PaymentRule::kUP;
  int n_agents = 7;
  int capacity = 36;
  ValueDistribution values;
  SizeSampler sizes;
  long long episodes = 20;
  TieMode tie_mode = TieMode::kDeterministic;
  AgentConfig agent;
  std::uint64_t master_seed = 1;
  std::string out_dir;
  /// Infeasible draws (total size <= capacity) are resampled and counted
  /// when true, rejected with an error when false.
  bool resample_infeasible = true;
  long long checkpoint_every = 0;  // 0: only the final checkpoint
  /// Optional per-agent exploration seeds; empty derives them from
  /// master_seed. Lets tests permute agent identities exactly.
  std::vector<std::uint64_t> agent_seed_override;

  void validate() const;
};

struct EnvironmentDraw {
  std::vector<int> values;
  std::vector<int> sizes;
};

/// Draws one episode's values and sizes. Resamples (counting into
/// `resamples`) until total size exceeds capacity, or throws if the config
/// says to reject instead.
EnvironmentDraw sample_environment(const SimConfig& config,
                                   std::mt19937_64& rng,
                                   long long* resamples = nullptr);

AuctionInstance instance_from_draw(const SimConfig& config,
                                   const EnvironmentDraw& draw);

/// Cross product of rules x capacities x agent counts x seeds over a base
/// config; each cell is a complete SimConfig plus a stable label.
struct SweepSpec {
  SimConfig base;
  std::vector<PaymentRule> rules;
  std::vector<int> capacities;
  std::vector<int> agent_counts;
  std::vector<std::uint64_t> seeds;

  struct Cell {
    SimConfig config;
    std::string label;
  };
  std::vector<Cell> cells() const;
};

using Preset = std::variant<SimConfig, SweepSpec>;

/// Named parameterizations: "lab" (7 bidders, K=36, values U{1..10}, sizes
/// 4..10 without replacement, 20 rounds), "ai" (same environment, 100,000
/// episodes, 1,000 pure-exploration), "cs-7" and "cs-10" (comparative
/// statics sweeps over K in {30,36,40}). Throws on unknown names.
Preset preset(std::string_view name);

/// Named, independently seeded engines derived from one master seed.
/// Derivation: seed(label) = splitmix64(master ^ fnv1a64(label)).
class RngStreams {
 public:
  explicit RngStreams(std::uint64_t master) : master_(master) {}
  std::uint64_t derive_seed(std::string_view label) const;
  std::mt19937_64 stream(std::string_view label) const {
    return std::mt19937_64(derive_seed(label));
  }

 private:
  std::uint64_t master_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a64(std::string_view text);

}  // namespace knapsack
