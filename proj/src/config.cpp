#include "knapsack/config.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace knapsack {

std::vector<int> SizeSampler::sample(int n, std::mt19937_64& rng) const {
  if (lo > hi) throw std::invalid_argument("size range is empty");
  if (n <= 0) throw std::invalid_argument("need at least one bidder");
  std::vector<int> out;
  out.reserve(static_cast<std::size_t>(n));
  if (mode == SizeMode::kWithReplacement) {
    std::uniform_int_distribution<int> dist(lo, hi);
    for (int i = 0; i < n; ++i) out.push_back(dist(rng));
    return out;
  }
  if (support_size() < n) {
    throw std::invalid_argument(
        "without-replacement draw needs at least as many distinct sizes as bidders");
  }
  std::vector<int> pool(static_cast<std::size_t>(support_size()));
  std::iota(pool.begin(), pool.end(), lo);
  // Partial Fisher-Yates: the first n slots end up a uniform sample.
  for (int i = 0; i < n; ++i) {
    std::uniform_int_distribution<int> pick(i, static_cast<int>(pool.size()) - 1);
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(pick(rng))]);
    out.push_back(pool[static_cast<std::size_t>(i)]);
  }
  return out;
}

void BidGrid::validate() const {
  if (!(step > Rational(0))) throw std::invalid_argument("bid grid step must be positive");
  if (max < min) throw std::invalid_argument("bid grid max below min");
}

std::size_t BidGrid::size() const {
  validate();
  // Count of min + i*step <= max.
  std::size_t n = 0;
  for (Rational v = min; !(max < v); v = v + step) ++n;
  return n;
}

std::vector<Rational> BidGrid::values() const {
  validate();
  std::vector<Rational> out;
  for (Rational v = min; !(max < v); v = v + step) out.push_back(v);
  return out;
}

bool BidGrid::contains(const Rational& bid) const {
  if (bid < min || max < bid) return false;
  Rational offset = (bid - min) / step;
  return offset.is_integer();
}

double epsilon_at(long long episode, const ExplorationSchedule& schedule,
                  long long total_episodes) {
  if (episode < 0) throw std::invalid_argument("episode must be non-negative");
  if (episode < schedule.pure_exploration_episodes) return 1.0;
  long long last = total_episodes - 1;
  if (episode >= last) return schedule.final_eps;
  if (schedule.decay == DecayShape::kLinear) {
    long long span = last - schedule.pure_exploration_episodes;
    if (span <= 0) return schedule.final_eps;
    double frac = static_cast<double>(episode - schedule.pure_exploration_episodes) /
                  static_cast<double>(span);
    return schedule.initial + frac * (schedule.final_eps - schedule.initial);
  }
  double steps = static_cast<double>(episode - schedule.pure_exploration_episodes);
  double eps = schedule.initial * std::pow(schedule.exp_rate, steps);
  return std::max(eps, schedule.final_eps);
}

void SimConfig::validate() const {
  if (n_agents < 1) throw std::invalid_argument("need at least one agent");
  if (capacity < 1) throw std::invalid_argument("capacity must be positive");
  if (episodes < 1) throw std::invalid_argument("need at least one episode");
  if (values.lo > values.hi) throw std::invalid_argument("value range is empty");
  if (values.lo < 0) throw std::invalid_argument("values must be non-negative");
  if (sizes.lo < 1) throw std::invalid_argument("sizes must be positive");
  if (sizes.hi >= capacity) {
    throw std::invalid_argument("every size must be below capacity");
  }
  if (sizes.mode == SizeMode::kWithoutReplacement && sizes.support_size() < n_agents) {
    throw std::invalid_argument("size support too small for without-replacement draw");
  }
  if (!agent_seed_override.empty() &&
      agent_seed_override.size() != static_cast<std::size_t>(n_agents)) {
    throw std::invalid_argument("agent_seed_override must list one seed per agent");
  }
  if (agent.alpha < 0.0 || agent.alpha > 1.0) {
    throw std::invalid_argument("alpha must lie in [0,1]");
  }
  agent.action_grid.validate();
}

EnvironmentDraw sample_environment(const SimConfig& config, std::mt19937_64& rng,
                                   long long* resamples) {
  const int n = config.n_agents;
  for (;;) {
    EnvironmentDraw draw;
    draw.sizes = config.sizes.sample(n, rng);
    draw.values.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) draw.values.push_back(config.values.sample(rng));
    long long total = std::accumulate(draw.sizes.begin(), draw.sizes.end(), 0LL);
    if (total > config.capacity) return draw;
    if (!config.resample_infeasible) {
      throw std::runtime_error(
          "environment draw does not oversubscribe capacity and resampling is disabled");
    }
    if (resamples != nullptr) ++*resamples;
  }
}

AuctionInstance instance_from_draw(const SimConfig& config, const EnvironmentDraw& draw) {
  AuctionInstance instance;
  instance.capacity = config.capacity;
  instance.bidders.reserve(draw.values.size());
  for (std::size_t i = 0; i < draw.values.size(); ++i) {
    instance.bidders.push_back(Bidder{static_cast<int>(i), draw.sizes[i],
                                      Rational(draw.values[i])});
  }
  return instance;
}

std::vector<SweepSpec::Cell> SweepSpec::cells() const {
  std::vector<Cell> out;
  auto rules_ = rules.empty() ? std::vector<PaymentRule>{base.rule} : rules;
  auto caps_ = capacities.empty() ? std::vector<int>{base.capacity} : capacities;
  auto counts_ = agent_counts.empty() ? std::vector<int>{base.n_agents} : agent_counts;
  auto seeds_ = seeds.empty() ? std::vector<std::uint64_t>{base.master_seed} : seeds;
  for (PaymentRule rule : rules_) {
    for (int cap : caps_) {
      for (int n : counts_) {
        for (std::uint64_t seed : seeds_) {
          Cell cell;
          cell.config = base;
          cell.config.rule = rule;
          cell.config.capacity = cap;
          cell.config.n_agents = n;
          cell.config.master_seed = seed;
          cell.label = std::string(to_string(rule)) + "_K" + std::to_string(cap) +
                       "_n" + std::to_string(n) + "_s" + std::to_string(seed);
          out.push_back(std::move(cell));
        }
      }
    }
  }
  return out;
}

namespace {

SimConfig lab_config() {
  SimConfig c;
  c.rule = PaymentRule::kUP;
  c.n_agents = 7;
  c.capacity = 36;
  c.values = ValueDistribution{1, 10};
  c.sizes = SizeSampler{4, 10, SizeMode::kWithoutReplacement};
  c.episodes = 20;
  c.agent.exploration.pure_exploration_episodes = 0;
  return c;
}

SimConfig ai_config() {
  SimConfig c = lab_config();
  c.episodes = 100000;
  c.agent.exploration.pure_exploration_episodes = 1000;
  return c;
}

}  // namespace

Preset preset(std::string_view name) {
  if (name == "lab") return lab_config();
  if (name == "ai") return ai_config();
  if (name == "cs-7" || name == "cs-10") {
    SweepSpec sweep;
    sweep.base = ai_config();
    if (name == "cs-10") {
      sweep.base.n_agents = 10;
      // Ten bidders, ten distinct sizes: every draw is a permutation of 1..10.
      sweep.base.sizes = SizeSampler{1, 10, SizeMode::kWithoutReplacement};
    }
    sweep.rules = {PaymentRule::kUP, PaymentRule::kDP, PaymentRule::kGSP};
    sweep.capacities = {30, 36, 40};
    return sweep;
  }
  throw std::invalid_argument("unknown preset: " + std::string(name));
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t fnv1a64(std::string_view text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t RngStreams::derive_seed(std::string_view label) const {
  return splitmix64(master_ ^ fnv1a64(label));
}

}  // namespace knapsack
