#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <vector>

#include "knapsack/auction.hpp"
#include "knapsack/config.hpp"
#include "knapsack/rational.hpp"

namespace knapsack {

/// One profitable deviation, replayable through the auction engine.
struct DeviationReport {
  AuctionInstance instance;
  BidProfile profile;  // everyone's bids before the deviation
  int bidder_id = -1;
  PaymentRule rule = PaymentRule::kUP;
  Rational truthful_payoff;
  Rational deviation_bid;
  Rational deviation_payoff;
  /// The same deviation priced under UP; set by the VCG search.
  std::optional<Rational> up_replay_payoff;
};

struct BestResponse {
  std::vector<Rational> best_bids;  // argmax set over the grid, ascending
  Rational payoff;
};

/// Exhaustive payoff maximization for one bidder over a bid grid, all other
/// bids held fixed. Deterministic given tie_mode/seed.
BestResponse best_response(const AuctionInstance& instance,
                           const BidProfile& opponent_bids, int bidder_id,
                           const BidGrid& grid, PaymentRule rule,
                           TieMode tie_mode = TieMode::kDeterministic,
                           std::uint64_t seed = 0);

/// Recomputes one bidder's payoff after swapping in a single bid.
Rational replay_payoff(const AuctionInstance& instance,
                       const BidProfile& profile, int bidder_id,
                       const Rational& bid, PaymentRule rule,
                       TieMode tie_mode = TieMode::kDeterministic);

/// Random valid instances for brute-force sweeps: n in [2, max_n], integer
/// capacity in [cap_lo, cap_hi], integer sizes/values in the given ranges,
/// resampled until total size exceeds capacity.
struct InstanceSampler {
  int max_n = 5;
  int cap_lo = 5;
  int cap_hi = 20;
  int size_lo = 1;
  int size_hi = 10;
  int value_lo = 0;
  int value_hi = 10;

  AuctionInstance sample(std::mt19937_64& rng) const;
};

struct DsicReport {
  long long instances = 0;
  long long profiles = 0;
  long long deviations_checked = 0;
  long long violations = 0;
  std::optional<DeviationReport> first_violation;
};

/// Payoff of `bidder_id` when it bids `bid` against the rest of `profile`.
/// Injectable so tests can rig a broken payment rule and watch the checker
/// catch it.
using PayoffFn = std::function<Rational(
    const AuctionInstance&, const BidProfile&, int bidder_id, const Rational& bid)>;

PayoffFn rule_payoff_fn(PaymentRule rule, TieMode tie_mode = TieMode::kDeterministic);

/// For each sampled instance, bidder, and random opponent profile, checks
/// truthful payoff >= payoff of every grid deviation. Violations are data.
DsicReport verify_dsic(const InstanceSampler& sampler, const BidGrid& grid,
                       long long trials, int profiles_per_instance,
                       const PayoffFn& payoff, std::uint64_t seed);

DsicReport verify_up_dsic(const InstanceSampler& sampler, const BidGrid& grid,
                          long long trials, int profiles_per_instance,
                          std::uint64_t seed);

struct CounterexampleSearch {
  bool found = false;
  long long searched = 0;
  DeviationReport report;  // meaningful only when found
};

/// Seeks a bidder who profits by bidding below value under GSP while still
/// winning. Random search with a fixed constructive fallback, so success
/// does not hinge on sampling luck.
CounterexampleSearch find_gsp_counterexample(long long budget, std::uint64_t seed);

/// Seeks an instance where the highest-losing bidder profits by overbidding
/// under VCG pricing while the identical deviation loses money under UP.
CounterexampleSearch find_vcg_counterexample(long long budget, std::uint64_t seed);

/// Optimal packed value over all feasible bidder subsets. Exponential;
/// guarded to n <= 20.
Rational best_feasible_value(const AuctionInstance& instance);

struct InefficiencyWitness {
  bool found = false;
  long long searched = 0;
  AuctionInstance instance;
  Rational truthful_value;   // packed value under truthful greedy
  Rational best_value;       // best feasible packing
  Rational gap;              // best_value - truthful_value, > 0 when found
  // Sufficient condition on the truthful allocation: the last winner i and
  // the first rejected bidder i' satisfy khat + k_i >= k'_i and v_i < v'_i,
  // so swapping i out for i' is feasible and raises packed value.
  Rational khat;             // capacity left after the truthful walk
  int last_winner = -1;
  int first_rejected = -1;
  bool condition_holds = false;
};

/// Finds an instance where truthful greedy strictly underpacks relative to
/// the best feasible subset, preferring witnesses satisfying the swap
/// condition above. Falls back to a fixed two-bidder construction.
InefficiencyWitness find_up_inefficiency_witness(long long budget,
                                                 std::uint64_t seed);

/// Straight-line reference allocator: selection-sorts bidders by per-unit
/// bid with the same tie keys, then walks the list packing until the first
/// misfit. Shares no code with greedy_allocate.
AllocationResult reference_allocate(const AuctionInstance& instance,
                                    const BidProfile& profile,
                                    TieMode tie_mode = TieMode::kDeterministic,
                                    std::uint64_t seed = 0);

struct ComparisonReport {
  long long trials = 0;
  long long mismatches = 0;
  std::optional<AuctionInstance> first_mismatch;
};

ComparisonReport verify_greedy_reference(const InstanceSampler& sampler,
                                         long long trials, std::uint64_t seed);

struct MonotonicityReport {
  long long triples = 0;
  long long violations = 0;
  std::optional<DeviationReport> first_violation;  // bid where winning flips off
};

/// Winner indicator of one bidder must be non-decreasing in its own bid,
/// opponents fixed, swept over the grid.
MonotonicityReport verify_monotonicity(const InstanceSampler& sampler,
                                       const BidGrid& grid, long long triples,
                                       std::uint64_t seed);

/// For every winner: bidding one grid step below the critical per-unit
/// price (times own size) loses; at or above wins.
struct CriticalPriceReport {
  long long winners_checked = 0;
  long long violations = 0;
};

CriticalPriceReport verify_critical_price(const InstanceSampler& sampler,
                                          long long trials, std::uint64_t seed);

/// Opponent population for psi estimation and the BNE solver. The probe
/// bidder occupies the highest id so deterministic tie-breaks never favor
/// it.
struct BneEnvironment {
  int n_bidders = 2;  // including the probe seat
  Rational capacity = 3;
  ValueDistribution values{1, 10};
  SizeSampler sizes{2, 2, SizeMode::kWithReplacement};
  TieMode tie_mode = TieMode::kDeterministic;
};

using SymmetricStrategy = std::function<Rational(int value, int size)>;

SymmetricStrategy truthful_strategy();

struct PsiEstimate {
  Rational bid;
  int size = 0;
  double psi = 0.0;
  double std_error = 0.0;
  long long count = 0;
};

/// Monte-Carlo probability that an object of size `size` bidding `bid` is
/// packed when opponents draw (value, size) from the environment and bid
/// per `strategy`. Draws are stratified over each opponent's value (and,
/// with replacement, size) support, and identical seeds reuse identical
/// draws, so estimates at different bids are exactly monotone, not just in
/// expectation. The probed bidder wins deterministic ties against
/// equal-size opponents; on atomic opponent bid distributions this keeps
/// best responses attained rather than open suprema.
PsiEstimate estimate_psi(const Rational& bid, int size,
                         const SymmetricStrategy& strategy,
                         const BneEnvironment& env, long long n_samples,
                         std::uint64_t seed);

/// Exact psi by enumerating every opponent (value, size) combination,
/// probability-weighted. Guarded to small environments.
double exact_psi(const Rational& bid, int size,
                 const SymmetricStrategy& strategy, const BneEnvironment& env);

struct BneSolverConfig {
  double damping = 0.5;
  double tol = 1e-3;
  int max_iter = 500;
  long long psi_samples = 4000;
  double fd_step = 0.25;          // central-difference half-width, in bid units
  double derivative_floor = 1e-6; // psi' at or below this is treated as flat
  double bid_min = 0.0;
  std::uint64_t seed = 1;
};

struct BneSolution {
  std::vector<int> value_grid;
  std::vector<int> size_grid;
  /// bids[si][vi] is beta(value_grid[vi], size_grid[si]).
  std::vector<std::vector<double>> bids;
  double residual = 0.0;
  int iterations = 0;
  bool converged = false;
  long long flat_skips = 0;  // grid points skipped on flat-zero psi sweeps

  SymmetricStrategy as_strategy() const;
  double bid_at(int value, int size) const;
};

/// Damped fixed-point iteration on B = v - psi/psi', psi' by central finite
/// difference on draws shared across all sweeps, followed by an isotonic
/// projection in v. Flat psi > 0 steps the bid down instead of dividing;
/// flat psi = 0 leaves the point for the next sweep and counts a skip.
BneSolution solve_dp_bne(const BneEnvironment& env, const BneSolverConfig& config);

struct EpsilonReport {
  double epsilon = 0.0;        // worst payoff shortfall across grid points
  double worst_std_error = 0.0;
  int worst_value = 0;
  int worst_size = 0;
  double worst_alternative_bid = 0.0;
};

/// Checks the solved strategy against fresh draws: for each (value, size),
/// compares the strategy's expected DP payoff with every bid on a check
/// grid of the given step. epsilon is the largest improvement found.
EpsilonReport bne_epsilon_best_response(const BneSolution& solution,
                                        const BneEnvironment& env,
                                        double check_step, long long n_samples,
                                        std::uint64_t seed);

}  // namespace knapsack
