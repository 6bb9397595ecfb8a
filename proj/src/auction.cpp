#include "knapsack/auction.hpp"

#include <algorithm>
#include <random>

namespace knapsack {

Rational AuctionInstance::total_size() const {
  Rational sum;
  for (const Bidder& b : bidders) sum += b.size;
  return sum;
}

void AuctionInstance::validate() const {
  if (bidders.empty())
    throw std::invalid_argument("instance has no bidders");
  if (capacity < Rational(0))
    throw std::invalid_argument("negative capacity");
  for (int i = 0; i < size(); ++i) {
    const Bidder& b = bidders[i];
    if (b.id != i)
      throw std::invalid_argument("bidder ids must be dense 0..n-1");
    if (!(b.size > Rational(0)))
      throw std::invalid_argument("bidder size must be positive");
    if (!(b.size < capacity))
      throw std::invalid_argument("bidder size must be below capacity");
    if (b.value < Rational(0))
      throw std::invalid_argument("bidder value must be nonnegative");
  }
  if (!relax_demand && !(total_size() > capacity))
    throw std::invalid_argument(
        "total demand must exceed capacity (or set relax_demand)");
}

void BidProfile::validate(const AuctionInstance& instance) const {
  if (static_cast<int>(bids.size()) != instance.size())
    throw std::invalid_argument("profile must hold one bid per bidder");
  for (const Rational& b : bids)
    if (b < Rational(0)) throw std::invalid_argument("negative bid");
}

BidProfile truthful_bids(const AuctionInstance& instance) {
  BidProfile profile;
  profile.bids.reserve(instance.bidders.size());
  for (const Bidder& b : instance.bidders) profile.bids.push_back(b.value);
  return profile;
}

std::string_view to_string(PaymentRule rule) {
  switch (rule) {
    case PaymentRule::kUP:
      return "UP";
    case PaymentRule::kDP:
      return "DP";
    case PaymentRule::kGSP:
      return "GSP";
    case PaymentRule::kVCG:
      return "VCG";
  }
  throw std::logic_error("unreachable payment rule");
}

PaymentRule payment_rule_from_string(std::string_view token) {
  if (token == "UP") return PaymentRule::kUP;
  if (token == "DP") return PaymentRule::kDP;
  if (token == "GSP") return PaymentRule::kGSP;
  if (token == "VCG") return PaymentRule::kVCG;
  throw std::invalid_argument("unknown payment rule: " + std::string(token));
}

bool AllocationResult::is_winner(int id) const {
  return std::find(winners.begin(), winners.end(), id) != winners.end();
}

std::vector<int> rank_bids(const BidProfile& profile,
                           const AuctionInstance& instance, TieMode tie_mode,
                           std::uint64_t seed) {
  instance.validate();
  profile.validate(instance);
  const int n = instance.size();

  std::vector<Rational> per_unit(n);
  for (int i = 0; i < n; ++i) per_unit[i] = profile.per_unit(instance, i);

  std::vector<std::uint64_t> tie_key(n, 0);
  if (tie_mode == TieMode::kSeededRandom) {
    std::mt19937_64 gen(seed);
    for (int i = 0; i < n; ++i) tie_key[i] = gen();
  }

  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (per_unit[a] != per_unit[b]) return per_unit[b] < per_unit[a];
    if (tie_mode == TieMode::kSeededRandom && tie_key[a] != tie_key[b])
      return tie_key[a] < tie_key[b];
    if (instance.bidders[a].size != instance.bidders[b].size)
      return instance.bidders[a].size < instance.bidders[b].size;
    return a < b;
  });
  return order;
}

AllocationResult greedy_allocate(const AuctionInstance& instance,
                                 const BidProfile& profile, TieMode tie_mode,
                                 std::uint64_t seed) {
  AllocationResult result;
  result.ranked = rank_bids(profile, instance, tie_mode, seed);
  Rational used;
  for (std::size_t pos = 0; pos < result.ranked.size(); ++pos) {
    int id = result.ranked[pos];
    const Rational& k = instance.bidders[id].size;
    if (used + k <= instance.capacity) {
      used += k;
      result.winners.push_back(id);
    } else {
      result.first_rejected = id;
      break;  // stop at the first misfit, never skip
    }
  }
  result.used_capacity = used;
  result.remaining_capacity = instance.capacity - used;
  return result;
}

namespace {

// Fills payoffs and revenue from payments; winners get v_i - payment.
AuctionOutcome finalize(std::vector<BidderOutcome> bidders,
                        const AuctionInstance& instance,
                        bool no_reject_price_zero) {
  AuctionOutcome outcome;
  outcome.bidders = std::move(bidders);
  outcome.no_reject_price_zero = no_reject_price_zero;
  for (int i = 0; i < instance.size(); ++i) {
    BidderOutcome& o = outcome.bidders[i];
    o.payoff = o.winner ? instance.bidders[i].value - o.payment : Rational(0);
    outcome.revenue += o.payment;
  }
  return outcome;
}

Rational stop_per_unit(const AllocationResult& alloc, const BidProfile& profile,
                       const AuctionInstance& instance) {
  if (!alloc.first_rejected) return Rational(0);
  return profile.per_unit(instance, *alloc.first_rejected);
}

}  // namespace

AuctionOutcome up_payments(const AllocationResult& alloc,
                           const BidProfile& profile,
                           const AuctionInstance& instance) {
  const Rational price = stop_per_unit(alloc, profile, instance);
  std::vector<BidderOutcome> bidders(instance.size());
  for (int id : alloc.winners) {
    bidders[id].winner = true;
    bidders[id].payment = instance.bidders[id].size * price;
  }
  return finalize(std::move(bidders), instance, !alloc.first_rejected);
}

AuctionOutcome dp_payments(const AllocationResult& alloc,
                           const BidProfile& profile,
                           const AuctionInstance& instance) {
  std::vector<BidderOutcome> bidders(instance.size());
  for (int id : alloc.winners) {
    bidders[id].winner = true;
    bidders[id].payment = profile.bids[id];
  }
  return finalize(std::move(bidders), instance, false);
}

AuctionOutcome gsp_payments(const AllocationResult& alloc,
                            const BidProfile& profile,
                            const AuctionInstance& instance) {
  std::vector<BidderOutcome> bidders(instance.size());
  bool degenerate = false;
  for (std::size_t rank = 0; rank < alloc.winners.size(); ++rank) {
    int id = alloc.winners[rank];
    bidders[id].winner = true;
    if (rank + 1 < alloc.ranked.size()) {
      bidders[id].payment = instance.bidders[id].size *
                            profile.per_unit(instance, alloc.ranked[rank + 1]);
    } else {
      degenerate = true;  // no next bidder: price 0
    }
  }
  return finalize(std::move(bidders), instance, degenerate);
}

AuctionOutcome vcg_payments(const AllocationResult& alloc,
                            const BidProfile& profile,
                            const AuctionInstance& instance) {
  std::vector<BidderOutcome> bidders(instance.size());
  const std::size_t m = alloc.winners.size();
  for (int id : alloc.winners) {
    bidders[id].winner = true;
    Rational remaining = instance.bidders[id].size;
    Rational payment;
    for (std::size_t pos = m; pos < alloc.ranked.size() && remaining > Rational(0);
         ++pos) {
      int loser = alloc.ranked[pos];
      Rational units = min(remaining, instance.bidders[loser].size);
      payment += units * profile.per_unit(instance, loser);
      remaining -= units;
    }
    bidders[id].payment = payment;  // units past the last loser are free
  }
  return finalize(std::move(bidders), instance, false);
}

AuctionOutcome apply_rule(PaymentRule rule, const AllocationResult& alloc,
                          const BidProfile& profile,
                          const AuctionInstance& instance) {
  switch (rule) {
    case PaymentRule::kUP:
      return up_payments(alloc, profile, instance);
    case PaymentRule::kDP:
      return dp_payments(alloc, profile, instance);
    case PaymentRule::kGSP:
      return gsp_payments(alloc, profile, instance);
    case PaymentRule::kVCG:
      return vcg_payments(alloc, profile, instance);
  }
  throw std::logic_error("unreachable payment rule");
}

AuctionOutcome resolve(const AuctionInstance& instance,
                       const BidProfile& profile, PaymentRule rule,
                       TieMode tie_mode, std::uint64_t seed) {
  return apply_rule(rule, greedy_allocate(instance, profile, tie_mode, seed),
                    profile, instance);
}

Rational critical_price(const AuctionInstance& instance,
                        const BidProfile& profile, int winner_id,
                        TieMode tie_mode, std::uint64_t seed) {
  AllocationResult alloc = greedy_allocate(instance, profile, tie_mode, seed);
  if (!alloc.is_winner(winner_id))
    throw std::domain_error("critical_price: bidder is not a winner");
  return stop_per_unit(alloc, profile, instance);
}

std::vector<Rational> payoffs(const AuctionOutcome& outcome,
                              const AuctionInstance& instance) {
  std::vector<Rational> result(outcome.bidders.size());
  for (std::size_t i = 0; i < outcome.bidders.size(); ++i)
    result[i] = outcome.bidders[i].winner
                    ? instance.bidders[i].value - outcome.bidders[i].payment
                    : Rational(0);
  return result;
}

}  // namespace knapsack
