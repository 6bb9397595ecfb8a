#include "knapsack/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace knapsack {

Rational replay_payoff(const AuctionInstance& instance, const BidProfile& profile,
                       int bidder_id, const Rational& bid, PaymentRule rule,
                       TieMode tie_mode) {
  BidProfile probe = profile;
  probe.bids.at(bidder_id) = bid;
  return resolve(instance, probe, rule, tie_mode).bidders.at(bidder_id).payoff;
}

BestResponse best_response(const AuctionInstance& instance,
                           const BidProfile& opponent_bids, int bidder_id,
                           const BidGrid& grid, PaymentRule rule,
                           TieMode tie_mode, std::uint64_t seed) {
  if (bidder_id < 0 || bidder_id >= instance.size())
    throw std::out_of_range("best_response: bidder_id out of range");
  BestResponse best;
  bool first = true;
  BidProfile probe = opponent_bids;
  for (const Rational& bid : grid.values()) {
    probe.bids.at(bidder_id) = bid;
    Rational payoff =
        resolve(instance, probe, rule, tie_mode, seed).bidders.at(bidder_id).payoff;
    if (first || best.payoff < payoff) {
      best.payoff = payoff;
      best.best_bids.clear();
    }
    if (payoff == best.payoff) best.best_bids.push_back(bid);
    first = false;
  }
  return best;
}

AuctionInstance InstanceSampler::sample(std::mt19937_64& rng) const {
  std::uniform_int_distribution<int> n_dist(2, max_n);
  const int n = n_dist(rng);
  // Cap the capacity so an oversubscribed draw is always possible.
  const int cap_hi_eff = std::min(cap_hi, n * size_hi - 1);
  const int cap_lo_eff = std::min(cap_lo, cap_hi_eff);
  std::uniform_int_distribution<int> cap_dist(cap_lo_eff, cap_hi_eff);
  const int cap = cap_dist(rng);
  std::uniform_int_distribution<int> size_dist(size_lo, std::min(size_hi, cap - 1));
  std::uniform_int_distribution<int> value_dist(value_lo, value_hi);
  AuctionInstance instance;
  instance.capacity = cap;
  for (;;) {
    instance.bidders.clear();
    long long total = 0;
    for (int i = 0; i < n; ++i) {
      int k = size_dist(rng);
      total += k;
      instance.bidders.push_back(Bidder{i, Rational(k), Rational(value_dist(rng))});
    }
    if (total > cap) break;
  }
  return instance;
}

PayoffFn rule_payoff_fn(PaymentRule rule, TieMode tie_mode) {
  return [rule, tie_mode](const AuctionInstance& instance, const BidProfile& profile,
                          int bidder_id, const Rational& bid) {
    return replay_payoff(instance, profile, bidder_id, bid, rule, tie_mode);
  };
}

DsicReport verify_dsic(const InstanceSampler& sampler, const BidGrid& grid,
                       long long trials, int profiles_per_instance,
                       const PayoffFn& payoff, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<Rational> bids = grid.values();
  std::uniform_int_distribution<std::size_t> pick(0, bids.size() - 1);
  DsicReport report;
  for (long long t = 0; t < trials; ++t) {
    AuctionInstance instance = sampler.sample(rng);
    ++report.instances;
    for (int p = 0; p < profiles_per_instance; ++p) {
      BidProfile profile;
      for (int i = 0; i < instance.size(); ++i) profile.bids.push_back(bids[pick(rng)]);
      ++report.profiles;
      for (int i = 0; i < instance.size(); ++i) {
        const Rational truthful =
            payoff(instance, profile, i, instance.bidders[i].value);
        for (const Rational& bid : bids) {
          if (bid == instance.bidders[i].value) continue;
          ++report.deviations_checked;
          const Rational deviating = payoff(instance, profile, i, bid);
          if (truthful < deviating) {
            ++report.violations;
            if (!report.first_violation) {
              DeviationReport v;
              v.instance = instance;
              v.profile = profile;
              v.bidder_id = i;
              v.truthful_payoff = truthful;
              v.deviation_bid = bid;
              v.deviation_payoff = deviating;
              report.first_violation = std::move(v);
            }
          }
        }
      }
    }
  }
  return report;
}

DsicReport verify_up_dsic(const InstanceSampler& sampler, const BidGrid& grid,
                          long long trials, int profiles_per_instance,
                          std::uint64_t seed) {
  return verify_dsic(sampler, grid, trials, profiles_per_instance,
                     rule_payoff_fn(PaymentRule::kUP), seed);
}

namespace {

AuctionInstance gsp_seed_instance() {
  AuctionInstance instance;
  instance.capacity = 10;
  instance.bidders = {Bidder{0, 4, 9}, Bidder{1, 5, 8}, Bidder{2, 6, 7}};
  return instance;
}

AuctionInstance vcg_seed_instance() {
  // Last winner small, highest loser large, per-unit values close: the
  // loser can leapfrog the small winner and be charged mostly at the
  // cheap tier below.
  AuctionInstance instance;
  instance.capacity = 10;
  instance.bidders = {Bidder{0, 3, 9}, Bidder{1, 2, 4}, Bidder{2, 6, 9},
                      Bidder{3, 6, 3}};
  return instance;
}

std::optional<DeviationReport> gsp_underbid_improvement(
    const AuctionInstance& instance) {
  const BidProfile truthful = truthful_bids(instance);
  const AuctionOutcome base = resolve(instance, truthful, PaymentRule::kGSP);
  for (int i = 0; i < instance.size(); ++i) {
    if (!base.bidders[i].winner) continue;  // underbidding cannot gain a loss
    const Rational& value = instance.bidders[i].value;
    for (Rational bid = 0; bid < value; bid += 1) {
      const Rational deviating =
          replay_payoff(instance, truthful, i, bid, PaymentRule::kGSP);
      if (base.bidders[i].payoff < deviating) {
        DeviationReport report;
        report.instance = instance;
        report.profile = truthful;
        report.bidder_id = i;
        report.rule = PaymentRule::kGSP;
        report.truthful_payoff = base.bidders[i].payoff;
        report.deviation_bid = bid;
        report.deviation_payoff = deviating;
        return report;
      }
    }
  }
  return std::nullopt;
}

std::optional<DeviationReport> vcg_overbid_improvement(
    const AuctionInstance& instance, const Rational& max_bid) {
  const BidProfile truthful = truthful_bids(instance);
  const AllocationResult alloc = greedy_allocate(instance, truthful);
  if (!alloc.first_rejected) return std::nullopt;
  const int loser = *alloc.first_rejected;
  const Rational& value = instance.bidders[loser].value;
  for (Rational bid = value + 1; bid <= max_bid; bid += 1) {
    const Rational vcg_payoff =
        replay_payoff(instance, truthful, loser, bid, PaymentRule::kVCG);
    if (!(Rational(0) < vcg_payoff)) continue;
    const Rational up_payoff =
        replay_payoff(instance, truthful, loser, bid, PaymentRule::kUP);
    if (!(up_payoff < Rational(0))) continue;
    DeviationReport report;
    report.instance = instance;
    report.profile = truthful;
    report.bidder_id = loser;
    report.rule = PaymentRule::kVCG;
    report.truthful_payoff = 0;  // the bidder loses when truthful
    report.deviation_bid = bid;
    report.deviation_payoff = vcg_payoff;
    report.up_replay_payoff = up_payoff;
    return report;
  }
  return std::nullopt;
}

}  // namespace

CounterexampleSearch find_gsp_counterexample(long long budget, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InstanceSampler sampler;
  sampler.value_lo = 1;
  CounterexampleSearch result;
  for (long long t = 0; t < budget; ++t) {
    ++result.searched;
    if (auto report = gsp_underbid_improvement(sampler.sample(rng))) {
      result.found = true;
      result.report = std::move(*report);
      return result;
    }
  }
  if (auto report = gsp_underbid_improvement(gsp_seed_instance())) {
    result.found = true;
    result.report = std::move(*report);
  }
  return result;
}

CounterexampleSearch find_vcg_counterexample(long long budget, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InstanceSampler sampler;
  sampler.value_lo = 1;
  CounterexampleSearch result;
  for (long long t = 0; t < budget; ++t) {
    ++result.searched;
    if (auto report = vcg_overbid_improvement(sampler.sample(rng), Rational(20))) {
      result.found = true;
      result.report = std::move(*report);
      return result;
    }
  }
  if (auto report = vcg_overbid_improvement(vcg_seed_instance(), Rational(20))) {
    result.found = true;
    result.report = std::move(*report);
  }
  return result;
}

Rational best_feasible_value(const AuctionInstance& instance) {
  const int n = instance.size();
  if (n > 20) throw std::invalid_argument("best_feasible_value: instance too large");
  Rational best = 0;
  for (unsigned mask = 1; mask < (1u << n); ++mask) {
    Rational total_size, total_value;
    for (int i = 0; i < n; ++i) {
      if (mask & (1u << i)) {
        total_size += instance.bidders[i].size;
        total_value += instance.bidders[i].value;
      }
    }
    if (total_size <= instance.capacity && best < total_value) best = total_value;
  }
  return best;
}

namespace {

InefficiencyWitness inspect_truthful_packing(const AuctionInstance& instance) {
  InefficiencyWitness w;
  w.instance = instance;
  const AllocationResult alloc = greedy_allocate(instance, truthful_bids(instance));
  for (int id : alloc.winners) w.truthful_value += instance.bidders[id].value;
  w.best_value = best_feasible_value(instance);
  w.gap = w.best_value - w.truthful_value;
  w.khat = alloc.remaining_capacity;
  if (!alloc.winners.empty() && alloc.first_rejected) {
    w.last_winner = alloc.winners.back();
    w.first_rejected = *alloc.first_rejected;
    const Bidder& last = instance.bidders[w.last_winner];
    const Bidder& rejected = instance.bidders[w.first_rejected];
    w.condition_holds =
        w.khat + last.size >= rejected.size && last.value < rejected.value;
  }
  return w;
}

AuctionInstance inefficiency_seed_instance() {
  // A tiny cheap object wins the ranking and blocks a nearly
  // knapsack-sized object worth nine times as much.
  AuctionInstance instance;
  instance.capacity = 10;
  instance.bidders = {Bidder{0, 1, 1}, Bidder{1, Rational(99, 10), 9}};
  return instance;
}

}  // namespace

InefficiencyWitness find_up_inefficiency_witness(long long budget,
                                                 std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  InstanceSampler sampler;
  sampler.value_lo = 1;
  long long searched = 0;
  for (long long t = 0; t < budget; ++t) {
    ++searched;
    InefficiencyWitness w = inspect_truthful_packing(sampler.sample(rng));
    if (w.condition_holds && Rational(0) < w.gap) {
      w.found = true;
      w.searched = searched;
      return w;
    }
  }
  InefficiencyWitness w = inspect_truthful_packing(inefficiency_seed_instance());
  w.found = w.condition_holds && Rational(0) < w.gap;
  w.searched = searched;
  return w;
}

AllocationResult reference_allocate(const AuctionInstance& instance,
                                    const BidProfile& profile, TieMode tie_mode,
                                    std::uint64_t seed) {
  instance.validate();
  profile.validate(instance);
  const int n = instance.size();
  std::vector<std::uint64_t> tie_key(n, 0);
  if (tie_mode == TieMode::kSeededRandom) {
    std::mt19937_64 gen(seed);
    for (int i = 0; i < n; ++i) tie_key[i] = gen();
  }
  // Selection sort by repeated scans; deliberately naive.
  auto precedes = [&](int a, int b) {
    const Rational pa = profile.per_unit(instance, a);
    const Rational pb = profile.per_unit(instance, b);
    if (pa != pb) return pb < pa;
    if (tie_mode == TieMode::kSeededRandom && tie_key[a] != tie_key[b])
      return tie_key[a] < tie_key[b];
    if (instance.bidders[a].size != instance.bidders[b].size)
      return instance.bidders[a].size < instance.bidders[b].size;
    return a < b;
  };
  std::vector<int> pending(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pending[static_cast<std::size_t>(i)] = i;
  AllocationResult result;
  while (!pending.empty()) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < pending.size(); ++j)
      if (precedes(pending[j], pending[best])) best = j;
    result.ranked.push_back(pending[best]);
    pending.erase(pending.begin() + static_cast<std::ptrdiff_t>(best));
  }
  Rational used;
  for (int id : result.ranked) {
    if (result.first_rejected) continue;  // keep ranking, stop packing
    if (used + instance.bidders[id].size <= instance.capacity) {
      used += instance.bidders[id].size;
      result.winners.push_back(id);
    } else {
      result.first_rejected = id;
    }
  }
  result.used_capacity = used;
  result.remaining_capacity = instance.capacity - used;
  return result;
}

ComparisonReport verify_greedy_reference(const InstanceSampler& sampler,
                                         long long trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const BidGrid grid;
  const std::vector<Rational> bids = grid.values();
  std::uniform_int_distribution<std::size_t> pick(0, bids.size() - 1);
  ComparisonReport report;
  for (long long t = 0; t < trials; ++t) {
    AuctionInstance instance = sampler.sample(rng);
    BidProfile profile;
    for (int i = 0; i < instance.size(); ++i) profile.bids.push_back(bids[pick(rng)]);
    ++report.trials;
    AllocationResult lhs = greedy_allocate(instance, profile);
    AllocationResult rhs = reference_allocate(instance, profile);
    const bool equal = lhs.ranked == rhs.ranked && lhs.winners == rhs.winners &&
                       lhs.first_rejected == rhs.first_rejected &&
                       lhs.used_capacity == rhs.used_capacity;
    if (!equal) {
      ++report.mismatches;
      if (!report.first_mismatch) report.first_mismatch = instance;
    }
  }
  return report;
}

MonotonicityReport verify_monotonicity(const InstanceSampler& sampler,
                                       const BidGrid& grid, long long triples,
                                       std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const std::vector<Rational> bids = grid.values();
  std::uniform_int_distribution<std::size_t> pick(0, bids.size() - 1);
  MonotonicityReport report;
  for (long long t = 0; t < triples; ++t) {
    AuctionInstance instance = sampler.sample(rng);
    BidProfile profile;
    for (int i = 0; i < instance.size(); ++i) profile.bids.push_back(bids[pick(rng)]);
    std::uniform_int_distribution<int> bidder_dist(0, instance.size() - 1);
    const int bidder = bidder_dist(rng);
    ++report.triples;
    bool seen_win = false;
    for (const Rational& bid : bids) {
      BidProfile probe = profile;
      probe.bids[bidder] = bid;
      const bool wins = greedy_allocate(instance, probe).is_winner(bidder);
      if (seen_win && !wins) {
        ++report.violations;
        if (!report.first_violation) {
          DeviationReport v;
          v.instance = instance;
          v.profile = profile;
          v.bidder_id = bidder;
          v.deviation_bid = bid;  // the bid where winning flipped off
          report.first_violation = std::move(v);
        }
        break;
      }
      seen_win = seen_win || wins;
    }
  }
  return report;
}

CriticalPriceReport verify_critical_price(const InstanceSampler& sampler,
                                          long long trials, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const BidGrid grid;
  const std::vector<Rational> bids = grid.values();
  std::uniform_int_distribution<std::size_t> pick(0, bids.size() - 1);
  CriticalPriceReport report;
  for (long long t = 0; t < trials; ++t) {
    AuctionInstance instance = sampler.sample(rng);
    BidProfile profile;
    for (int i = 0; i < instance.size(); ++i) profile.bids.push_back(bids[pick(rng)]);
    AllocationResult alloc = greedy_allocate(instance, profile);
    for (int id : alloc.winners) {
      const Rational threshold = critical_price(instance, profile, id);
      const Rational at_threshold = instance.bidders[id].size * threshold;
      ++report.winners_checked;
      // Strictly below the critical per-unit price must lose.
      const Rational below = at_threshold - grid.step;
      if (Rational(0) <= below) {
        BidProfile probe = profile;
        probe.bids[id] = below;
        if (greedy_allocate(instance, probe).is_winner(id)) ++report.violations;
      }
      // Strictly above must win.
      BidProfile probe = profile;
      probe.bids[id] = at_threshold + grid.step;
      if (!greedy_allocate(instance, probe).is_winner(id)) ++report.violations;
    }
  }
  return report;
}

SymmetricStrategy truthful_strategy() {
  return [](int value, int) { return Rational(value); };
}

namespace {

struct OppDraw {
  std::vector<int> values;
  std::vector<int> sizes;
};

// Opponent sizes conditional on the probe's object: without replacement the
// probe's size is withdrawn from the pool first.
std::vector<int> opponent_size_pool(const BneEnvironment& env, int probe_size) {
  std::vector<int> pool;
  bool removed = false;
  for (int s = env.sizes.lo; s <= env.sizes.hi; ++s) {
    if (!removed && s == probe_size) {
      removed = true;
      continue;
    }
    pool.push_back(s);
  }
  return pool;
}

// One stratified deck per opponent slot: every support point appears
// floor(n/card) or ceil(n/card) times, then the deck is shuffled. Empirical
// weights match the uniform law as closely as n allows, so psi evaluated on
// shared draws is free of bin-count noise; with iid sampling that noise
// perturbs the finite differences enough to destabilize the BNE iteration.
std::vector<int> stratified_deck(int lo, int hi, long long n,
                                 std::mt19937_64& rng) {
  const int card = hi - lo + 1;
  std::vector<int> deck;
  deck.reserve(static_cast<std::size_t>(n));
  for (int x = lo; x <= hi; ++x)
    deck.insert(deck.end(), static_cast<std::size_t>(n / card), x);
  std::vector<int> extra;
  for (int x = lo; x <= hi; ++x) extra.push_back(x);
  std::shuffle(extra.begin(), extra.end(), rng);
  deck.insert(deck.end(), extra.begin(),
              extra.begin() + static_cast<std::ptrdiff_t>(n % card));
  std::shuffle(deck.begin(), deck.end(), rng);
  return deck;
}

std::vector<OppDraw> draw_opponents(const BneEnvironment& env, int probe_size,
                                    long long n_samples, std::uint64_t seed) {
  const int opponents = env.n_bidders - 1;
  std::mt19937_64 rng(seed);
  std::vector<OppDraw> draws(static_cast<std::size_t>(n_samples));
  std::vector<std::vector<int>> value_decks;
  value_decks.reserve(static_cast<std::size_t>(opponents));
  for (int j = 0; j < opponents; ++j)
    value_decks.push_back(
        stratified_deck(env.values.lo, env.values.hi, n_samples, rng));
  if (env.sizes.mode == SizeMode::kWithReplacement) {
    std::vector<std::vector<int>> size_decks;
    size_decks.reserve(static_cast<std::size_t>(opponents));
    for (int j = 0; j < opponents; ++j)
      size_decks.push_back(
          stratified_deck(env.sizes.lo, env.sizes.hi, n_samples, rng));
    for (std::size_t i = 0; i < draws.size(); ++i) {
      for (int j = 0; j < opponents; ++j) {
        draws[i].values.push_back(value_decks[static_cast<std::size_t>(j)][i]);
        draws[i].sizes.push_back(size_decks[static_cast<std::size_t>(j)][i]);
      }
    }
    return draws;
  }
  std::vector<int> pool = opponent_size_pool(env, probe_size);
  if (static_cast<int>(pool.size()) < opponents)
    throw std::invalid_argument("size pool too small for opponents");
  for (std::size_t i = 0; i < draws.size(); ++i) {
    OppDraw& d = draws[i];
    std::vector<int> scratch = pool;
    for (int j = 0; j < opponents; ++j) {
      std::uniform_int_distribution<int> pos(j, static_cast<int>(scratch.size()) - 1);
      std::swap(scratch[static_cast<std::size_t>(j)],
                scratch[static_cast<std::size_t>(pos(rng))]);
      d.values.push_back(value_decks[static_cast<std::size_t>(j)][i]);
      d.sizes.push_back(scratch[static_cast<std::size_t>(j)]);
    }
  }
  return draws;
}

void check_probe(const BneEnvironment& env, int probe_size) {
  if (!(Rational(probe_size) < env.capacity) || probe_size < 1)
    throw std::invalid_argument("probe size must be positive and below capacity");
  if (!(Rational(env.sizes.hi) < env.capacity))
    throw std::invalid_argument("environment sizes must stay below capacity");
  if (env.n_bidders < 1) throw std::invalid_argument("need at least one bidder");
}

// The probe takes id 0, so equal-per-unit, equal-size ties resolve toward
// it. Opponent bid distributions on a value grid are atomic, and a probe
// that lost ties would have no best response (only an unattained supremum
// just above an atom); resolving ties toward the measured bidder keeps the
// payoff correspondence closed, so psi and the best-response checks built
// on it are stable against vanishing bid perturbations.
bool probe_packed(const BneEnvironment& env, const OppDraw& draw,
                  const std::vector<Rational>& opponent_bids,
                  const Rational& probe_bid, int probe_size) {
  AuctionInstance instance;
  instance.capacity = env.capacity;
  instance.relax_demand = true;
  instance.bidders.push_back(Bidder{0, Rational(probe_size), 0});
  const int opponents = static_cast<int>(draw.sizes.size());
  for (int j = 0; j < opponents; ++j)
    instance.bidders.push_back(
        Bidder{j + 1, Rational(draw.sizes[j]), Rational(draw.values[j])});
  BidProfile profile;
  profile.bids.push_back(probe_bid);
  profile.bids.insert(profile.bids.end(), opponent_bids.begin(),
                      opponent_bids.end());
  return greedy_allocate(instance, profile, env.tie_mode).is_winner(0);
}

std::vector<Rational> strategy_bids(const OppDraw& draw,
                                    const SymmetricStrategy& strategy) {
  std::vector<Rational> bids;
  bids.reserve(draw.sizes.size());
  for (std::size_t j = 0; j < draw.sizes.size(); ++j)
    bids.push_back(strategy(draw.values[j], draw.sizes[j]));
  return bids;
}

}  // namespace

PsiEstimate estimate_psi(const Rational& bid, int size,
                         const SymmetricStrategy& strategy,
                         const BneEnvironment& env, long long n_samples,
                         std::uint64_t seed) {
  check_probe(env, size);
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  const std::vector<OppDraw> draws = draw_opponents(env, size, n_samples, seed);
  long long wins = 0;
  for (const OppDraw& d : draws)
    if (probe_packed(env, d, strategy_bids(d, strategy), bid, size)) ++wins;
  PsiEstimate est;
  est.bid = bid;
  est.size = size;
  est.count = n_samples;
  est.psi = static_cast<double>(wins) / static_cast<double>(n_samples);
  est.std_error =
      std::sqrt(est.psi * (1.0 - est.psi) / static_cast<double>(n_samples));
  return est;
}

double exact_psi(const Rational& bid, int size, const SymmetricStrategy& strategy,
                 const BneEnvironment& env) {
  check_probe(env, size);
  const int opponents = env.n_bidders - 1;
  if (opponents == 0)
    return probe_packed(env, OppDraw{}, {}, bid, size) ? 1.0 : 0.0;

  std::vector<int> size_pool;
  if (env.sizes.mode == SizeMode::kWithReplacement) {
    for (int s = env.sizes.lo; s <= env.sizes.hi; ++s) size_pool.push_back(s);
  } else {
    size_pool = opponent_size_pool(env, size);
    if (static_cast<int>(size_pool.size()) < opponents)
      throw std::invalid_argument("size pool too small for opponents");
  }
  const int v_card = env.values.support_size();
  double total_combos = 1.0;
  for (int j = 0; j < opponents; ++j) {
    total_combos *= v_card;
    total_combos *= env.sizes.mode == SizeMode::kWithReplacement
                        ? static_cast<double>(size_pool.size())
                        : static_cast<double>(size_pool.size() - j);
  }
  if (total_combos > 2e6)
    throw std::invalid_argument("exact_psi: environment too large to enumerate");

  // Ordered enumeration of size tuples (distinct when without replacement),
  // then a mixed-radix sweep over value tuples; every combination is
  // equally likely in both modes.
  long long wins = 0;
  long long count = 0;
  OppDraw draw;
  draw.values.assign(static_cast<std::size_t>(opponents), env.values.lo);
  draw.sizes.assign(static_cast<std::size_t>(opponents), 0);
  std::vector<bool> used(size_pool.size(), false);

  auto sweep_values = [&]() {
    std::fill(draw.values.begin(), draw.values.end(), env.values.lo);
    for (;;) {
      if (probe_packed(env, draw, strategy_bids(draw, strategy), bid, size)) ++wins;
      ++count;
      int pos = 0;
      while (pos < opponents) {
        if (draw.values[static_cast<std::size_t>(pos)] < env.values.hi) {
          ++draw.values[static_cast<std::size_t>(pos)];
          break;
        }
        draw.values[static_cast<std::size_t>(pos)] = env.values.lo;
        ++pos;
      }
      if (pos == opponents) return;
    }
  };

  auto assign_sizes = [&](auto&& self, int slot) -> void {
    if (slot == opponents) {
      sweep_values();
      return;
    }
    for (std::size_t p = 0; p < size_pool.size(); ++p) {
      if (env.sizes.mode == SizeMode::kWithoutReplacement && used[p]) continue;
      used[p] = true;
      draw.sizes[static_cast<std::size_t>(slot)] = size_pool[p];
      self(self, slot + 1);
      used[p] = false;
    }
  };
  assign_sizes(assign_sizes, 0);
  return static_cast<double>(wins) / static_cast<double>(count);
}

SymmetricStrategy BneSolution::as_strategy() const {
  const BneSolution copy = *this;
  return [copy](int value, int size) {
    return Rational::from_double(copy.bid_at(value, size));
  };
}

double BneSolution::bid_at(int value, int size) const {
  const auto vi = std::find(value_grid.begin(), value_grid.end(), value);
  const auto si = std::find(size_grid.begin(), size_grid.end(), size);
  if (vi == value_grid.end() || si == size_grid.end())
    throw std::out_of_range("bid_at: point not on the solution grid");
  return bids[static_cast<std::size_t>(si - size_grid.begin())]
             [static_cast<std::size_t>(vi - value_grid.begin())];
}

namespace {

// Pool-adjacent-violators pass: smallest non-decreasing-in-v adjustment.
void isotonic_project(std::vector<double>& row) {
  const std::size_t n = row.size();
  std::vector<double> sum(n);
  std::vector<std::size_t> len(n);
  std::size_t blocks = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sum[blocks] = row[i];
    len[blocks] = 1;
    ++blocks;
    while (blocks > 1 && sum[blocks - 2] * static_cast<double>(len[blocks - 1]) >
                             sum[blocks - 1] * static_cast<double>(len[blocks - 2])) {
      sum[blocks - 2] += sum[blocks - 1];
      len[blocks - 2] += len[blocks - 1];
      --blocks;
    }
  }
  std::size_t i = 0;
  for (std::size_t b = 0; b < blocks; ++b) {
    const double level = sum[b] / static_cast<double>(len[b]);
    for (std::size_t j = 0; j < len[b]; ++j) row[i++] = level;
  }
}

double psi_on_draws(const BneEnvironment& env, const std::vector<OppDraw>& draws,
                    const std::vector<std::vector<Rational>>& opponent_bids,
                    double bid, int size) {
  if (draws.empty()) {
    return probe_packed(env, OppDraw{}, {}, Rational::from_double(bid), size) ? 1.0
                                                                              : 0.0;
  }
  const Rational probe = Rational::from_double(bid);
  long long wins = 0;
  for (std::size_t d = 0; d < draws.size(); ++d)
    if (probe_packed(env, draws[d], opponent_bids[d], probe, size)) ++wins;
  return static_cast<double>(wins) / static_cast<double>(draws.size());
}

}  // namespace

BneSolution solve_dp_bne(const BneEnvironment& env, const BneSolverConfig& config) {
  if (config.tol <= 0) throw std::invalid_argument("tol must be positive");
  if (config.max_iter < 1) throw std::invalid_argument("max_iter must be positive");

  BneSolution sol;
  for (int v = env.values.lo; v <= env.values.hi; ++v) sol.value_grid.push_back(v);
  for (int s = env.sizes.lo; s <= env.sizes.hi; ++s) {
    if (Rational(s) < env.capacity) sol.size_grid.push_back(s);
  }
  if (sol.size_grid.empty())
    throw std::invalid_argument("no feasible probe size below capacity");
  const std::size_t nv = sol.value_grid.size();
  const std::size_t ns = sol.size_grid.size();

  // Half-value start; draws are frozen per size for the whole solve, so the
  // fixed point is defined on one common sample.
  sol.bids.assign(ns, std::vector<double>(nv));
  for (std::size_t si = 0; si < ns; ++si)
    for (std::size_t vi = 0; vi < nv; ++vi)
      sol.bids[si][vi] = static_cast<double>(sol.value_grid[vi]) / 2.0;

  std::vector<std::vector<OppDraw>> draws(ns);
  for (std::size_t si = 0; si < ns; ++si) {
    check_probe(env, sol.size_grid[si]);
    draws[si] = draw_opponents(env, sol.size_grid[si], config.psi_samples,
                               splitmix64(config.seed ^ (0x9eb1 + si)));
  }

  const double h = config.fd_step;
  for (sol.iterations = 0; sol.iterations < config.max_iter; ++sol.iterations) {
    // Opponents play the sweep-start strategy at their drawn (v, k).
    auto bid_of = [&](int value, int size) {
      const auto vi = std::find(sol.value_grid.begin(), sol.value_grid.end(), value);
      const auto si = std::find(sol.size_grid.begin(), sol.size_grid.end(), size);
      if (vi == sol.value_grid.end() || si == sol.size_grid.end())
        throw std::logic_error("opponent draw off the strategy grid");
      return sol.bids[static_cast<std::size_t>(si - sol.size_grid.begin())]
                     [static_cast<std::size_t>(vi - sol.value_grid.begin())];
    };
    std::vector<std::vector<std::vector<Rational>>> opponent_bids(ns);
    for (std::size_t si = 0; si < ns; ++si) {
      opponent_bids[si].reserve(draws[si].size());
      for (const OppDraw& d : draws[si]) {
        std::vector<Rational> bids;
        bids.reserve(d.sizes.size());
        for (std::size_t j = 0; j < d.sizes.size(); ++j)
          bids.push_back(Rational::from_double(bid_of(d.values[j], d.sizes[j])));
        opponent_bids[si].push_back(std::move(bids));
      }
    }

    std::vector<std::vector<double>> next = sol.bids;
    for (std::size_t si = 0; si < ns; ++si) {
      const int k = sol.size_grid[si];
      for (std::size_t vi = 0; vi < nv; ++vi) {
        const double v = static_cast<double>(sol.value_grid[vi]);
        const double b = sol.bids[si][vi];
        const double b_hi = b + h;
        const double b_lo = std::max(config.bid_min, b - h);
        const double psi_mid = psi_on_draws(env, draws[si], opponent_bids[si], b, k);
        const double psi_hi =
            psi_on_draws(env, draws[si], opponent_bids[si], b_hi, k);
        const double psi_lo =
            psi_on_draws(env, draws[si], opponent_bids[si], b_lo, k);
        const double dpsi = (psi_hi - psi_lo) / (b_hi - b_lo);
        double target;
        if (dpsi <= 0.0) {
          if (psi_mid <= 0.0) {
            ++sol.flat_skips;  // no gradient and no wins: leave for later sweeps
            continue;
          }
          target = b - h;  // flat winning region: shading down only helps
        } else {
          target = v - psi_mid / std::max(dpsi, config.derivative_floor);
        }
        target = std::clamp(target, config.bid_min, v);
        next[si][vi] = (1.0 - config.damping) * b + config.damping * target;
      }
      isotonic_project(next[si]);
    }

    double residual = 0.0;
    for (std::size_t si = 0; si < ns; ++si)
      for (std::size_t vi = 0; vi < nv; ++vi)
        residual = std::max(residual, std::abs(next[si][vi] - sol.bids[si][vi]));
    sol.bids = std::move(next);
    sol.residual = residual;
    if (residual < config.tol) {
      ++sol.iterations;
      sol.converged = true;
      break;
    }
  }
  return sol;
}

EpsilonReport bne_epsilon_best_response(const BneSolution& solution,
                                        const BneEnvironment& env,
                                        double check_step, long long n_samples,
                                        std::uint64_t seed) {
  if (check_step <= 0) throw std::invalid_argument("check_step must be positive");
  EpsilonReport report;
  const SymmetricStrategy strategy = solution.as_strategy();
  for (std::size_t si = 0; si < solution.size_grid.size(); ++si) {
    const int k = solution.size_grid[si];
    // Fresh draws, disjoint from the solver's by construction of the seed.
    const std::vector<OppDraw> draws =
        draw_opponents(env, k, n_samples, splitmix64(seed ^ (0xf8e50 + si)));
    std::vector<std::vector<Rational>> opponent_bids;
    opponent_bids.reserve(draws.size());
    for (const OppDraw& d : draws) opponent_bids.push_back(strategy_bids(d, strategy));

    for (std::size_t vi = 0; vi < solution.value_grid.size(); ++vi) {
      const int v = solution.value_grid[vi];
      auto payoff_samples = [&](double bid) {
        const Rational probe = Rational::from_double(bid);
        std::vector<double> samples;
        samples.reserve(draws.empty() ? 1 : draws.size());
        if (draws.empty()) {
          const bool packed = probe_packed(env, OppDraw{}, {}, probe, k);
          samples.push_back(packed ? (static_cast<double>(v) - bid) : 0.0);
          return samples;
        }
        for (std::size_t d = 0; d < draws.size(); ++d) {
          const bool packed = probe_packed(env, draws[d], opponent_bids[d], probe, k);
          samples.push_back(packed ? (static_cast<double>(v) - bid) : 0.0);
        }
        return samples;
      };

      const std::vector<double> own = payoff_samples(solution.bids[si][vi]);

      for (double alt = 0.0; alt <= static_cast<double>(v) + 1e-12;
           alt += check_step) {
        const std::vector<double> dev = payoff_samples(alt);
        double mean_diff = 0.0;
        for (std::size_t d = 0; d < dev.size(); ++d) mean_diff += dev[d] - own[d];
        mean_diff /= static_cast<double>(dev.size());
        if (mean_diff > report.epsilon) {
          double var = 0.0;
          for (std::size_t d = 0; d < dev.size(); ++d) {
            const double x = dev[d] - own[d] - mean_diff;
            var += x * x;
          }
          var /= static_cast<double>(dev.size());
          report.epsilon = mean_diff;
          report.worst_std_error =
              std::sqrt(var / static_cast<double>(dev.size()));
          report.worst_value = v;
          report.worst_size = k;
          report.worst_alternative_bid = alt;
        }
      }
    }
  }
  return report;
}

}  // namespace knapsack
