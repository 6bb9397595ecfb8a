#pragma once

#include <cstddef>
#include <deque>
#include <vector>

#include "knapsack/auction.hpp"
#include "knapsack/rational.hpp"

namespace knapsack {

/// R = v/k - B/k. Positive means the bid shades below value, negative means
/// overbidding. Throws std::domain_error on zero size.
Rational learning_ratio(const Rational& value, const Rational& size,
                        const Rational& bid);

enum class FillMode {
  kStopAtFirstMisfit,  // same stopping rule the auction uses
  kSkipAndContinue,    // analysis-only filler: skip misfits, keep walking
};

/// Full-information benchmark S: greedy over value-to-size ratios with the
/// chosen fill rule, summing packed values.
Rational full_info_surplus(const AuctionInstance& instance,
                           TieMode tie_mode = TieMode::kDeterministic,
                           FillMode fill = FillMode::kStopAtFirstMisfit,
                           std::uint64_t seed = 0);

/// C: total value of the bidders the auction actually packed.
Rational achieved_surplus(const AuctionOutcome& outcome,
                          const AuctionInstance& instance);

/// Sum of winner payments (recomputed, equals outcome.revenue).
Rational revenue(const AuctionOutcome& outcome);

/// Analysis-only guard from the stopping-rule footnote: the better of the
/// greedy surplus and the single highest-value object.
Rational surplus_with_top_value_guard(const AuctionInstance& instance,
                                      TieMode tie_mode = TieMode::kDeterministic);

struct RoundMetrics {
  std::vector<Rational> learning_ratios;  // per bidder
  Rational revenue;
  Rational full_info_surplus;  // S
  Rational achieved_surplus;   // C
  Rational efficiency_gap;     // E = S - C, recorded as-is (may be negative)
  Rational efficiency_ratio;   // 100 * C / S, or 100 when S == 0
  /// C exceeded S: the bid ranking out-packed the truthful ranking, which
  /// the stop-rule greedy cannot rule out. Recorded, never asserted away.
  bool gap_negative = false;
};

RoundMetrics compute_round_metrics(const AuctionInstance& instance,
                                   const BidProfile& profile,
                                   const AuctionOutcome& outcome,
                                   TieMode tie_mode = TieMode::kDeterministic,
                                   FillMode fill = FillMode::kStopAtFirstMisfit,
                                   std::uint64_t seed = 0);

struct SummaryStats {
  Rational median;  // exact; midpoint of the two middle samples when even
  double mean;      // accumulated exactly in 128-bit, rounded once
  double stddev;    // population SD (divisor N)
  std::size_t count = 0;
};

/// Order-insensitive summary: median and mean are exact, the SD pass runs
/// over the sorted sample so permuting the stream cannot change any output
/// bit. Keeps the sample in memory (median needs it anyway).
class StatsAccumulator {
 public:
  void add(const Rational& x) { samples_.push_back(x); }
  void merge(const StatsAccumulator& other);
  std::size_t count() const { return samples_.size(); }
  /// Throws std::domain_error on an empty accumulator.
  SummaryStats summarize() const;

 private:
  std::vector<Rational> samples_;
};

/// Windowed mean over the most recent `window` values, used for the
/// report plots.
class RollingMean {
 public:
  explicit RollingMean(std::size_t window);
  double push(double x);
  double mean() const;
  std::size_t size() const { return buffer_.size(); }

 private:
  std::size_t window_;
  std::deque<double> buffer_;
  double sum_ = 0;
};

}  // namespace knapsack
