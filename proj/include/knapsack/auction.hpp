#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "knapsack/rational.hpp"

namespace knapsack {

struct Bidder {
  int id = 0;
  Rational size;   // units of knapsack space the object occupies
  Rational value;  // private value realized when the object is packed
};

/// One auction's ground truth: the capacity and the bidders' objects.
/// Standing assumptions: every size is positive and strictly below the
/// capacity, ids are dense 0..n-1, and total demand exceeds capacity.
/// The last assumption can be waived with `relax_demand` for oracle
/// probes; auction runs keep it on.
struct AuctionInstance {
  Rational capacity;
  std::vector<Bidder> bidders;
  bool relax_demand = false;

  int size() const { return static_cast<int>(bidders.size()); }
  Rational total_size() const;
  void validate() const;  // throws std::invalid_argument
};

/// One sealed total bid per bidder, indexed by bidder id.
struct BidProfile {
  std::vector<Rational> bids;

  /// Per-unit bid b_i = B_i / k_i, the ranking key.
  Rational per_unit(const AuctionInstance& instance, int id) const {
    return bids.at(id) / instance.bidders.at(id).size;
  }
  void validate(const AuctionInstance& instance) const;
};

BidProfile truthful_bids(const AuctionInstance& instance);

enum class TieMode {
  kDeterministic,  // smaller size first, then lower bidder id
  kSeededRandom,
};

enum class PaymentRule { kUP, kDP, kGSP, kVCG };

std::string_view to_string(PaymentRule rule);
PaymentRule payment_rule_from_string(std::string_view token);

/// Output of the greedy walk. Winners are a contiguous prefix of `ranked`;
/// the walk stops at the first object that does not fit and records that
/// bidder as `first_rejected` (no skip-and-continue).
struct AllocationResult {
  std::vector<int> ranked;
  std::vector<int> winners;
  std::optional<int> first_rejected;
  Rational used_capacity;
  Rational remaining_capacity;

  bool is_winner(int id) const;
};

struct BidderOutcome {
  bool winner = false;
  Rational payment;
  Rational payoff;
};

struct AuctionOutcome {
  std::vector<BidderOutcome> bidders;
  Rational revenue;
  /// Set when a UP/GSP stop price was needed but no bidder was rejected
  /// (possible only under relax_demand); the price defaults to zero.
  bool no_reject_price_zero = false;
};

/// Bidder ids sorted by per-unit bid, descending; ties broken per mode.
/// The seed only matters for TieMode::kSeededRandom.
std::vector<int> rank_bids(const BidProfile& profile,
                           const AuctionInstance& instance, TieMode tie_mode,
                           std::uint64_t seed = 0);

AllocationResult greedy_allocate(const AuctionInstance& instance,
                                 const BidProfile& profile,
                                 TieMode tie_mode = TieMode::kDeterministic,
                                 std::uint64_t seed = 0);

/// Every winner pays its size times the per-unit bid of the first rejected
/// bidder: a uniform per-unit price.
AuctionOutcome up_payments(const AllocationResult& alloc,
                           const BidProfile& profile,
                           const AuctionInstance& instance);

/// Every winner pays its own total bid.
AuctionOutcome dp_payments(const AllocationResult& alloc,
                           const BidProfile& profile,
                           const AuctionInstance& instance);

/// The winner at rank r pays its size times the per-unit bid of the bidder
/// ranked r+1; for the last winner that is the first rejected bidder.
AuctionOutcome gsp_payments(const AllocationResult& alloc,
                            const BidProfile& profile,
                            const AuctionInstance& instance);

/// Each winner is charged tier by tier: walk the rejected bidders in rank
/// order, pricing min(remaining, k_loser) units at that loser's per-unit
/// bid until the winner's size is covered; units left after the losers run
/// out cost nothing.
AuctionOutcome vcg_payments(const AllocationResult& alloc,
                            const BidProfile& profile,
                            const AuctionInstance& instance);

AuctionOutcome apply_rule(PaymentRule rule, const AllocationResult& alloc,
                          const BidProfile& profile,
                          const AuctionInstance& instance);

/// Allocate then pay in one step.
AuctionOutcome resolve(const AuctionInstance& instance,
                       const BidProfile& profile, PaymentRule rule,
                       TieMode tie_mode = TieMode::kDeterministic,
                       std::uint64_t seed = 0);

/// Myerson threshold for a winner: the per-unit bid of the first rejected
/// bidder. Re-running the auction with the winner's per-unit bid strictly
/// below the threshold loses; at or above (given a winning tie-break) wins.
/// Throws std::domain_error when the bidder is not a winner.
Rational critical_price(const AuctionInstance& instance,
                        const BidProfile& profile, int winner_id,
                        TieMode tie_mode = TieMode::kDeterministic,
                        std::uint64_t seed = 0);

/// Winner payoff v_i - payment, loser payoff 0. May be negative.
std::vector<Rational> payoffs(const AuctionOutcome& outcome,
                              const AuctionInstance& instance);

}  // namespace knapsack
