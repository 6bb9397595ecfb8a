#include "knapsack/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace knapsack {

Rational learning_ratio(const Rational& value, const Rational& size,
                        const Rational& bid) {
  if (!(size > Rational(0)))
    throw std::domain_error("learning_ratio: size must be positive");
  return (value - bid) / size;
}

Rational full_info_surplus(const AuctionInstance& instance, TieMode tie_mode,
                           FillMode fill, std::uint64_t seed) {
  // Rank by value-to-size ratio: exactly the truthful-bid ranking.
  BidProfile truthful = truthful_bids(instance);
  std::vector<int> ranked = rank_bids(truthful, instance, tie_mode, seed);
  Rational used;
  Rational surplus;
  for (int id : ranked) {
    const Rational& k = instance.bidders[id].size;
    if (used + k <= instance.capacity) {
      used += k;
      surplus += instance.bidders[id].value;
    } else if (fill == FillMode::kStopAtFirstMisfit) {
      break;
    }
  }
  return surplus;
}

Rational achieved_surplus(const AuctionOutcome& outcome,
                          const AuctionInstance& instance) {
  Rational surplus;
  for (int i = 0; i < instance.size(); ++i)
    if (outcome.bidders[i].winner) surplus += instance.bidders[i].value;
  return surplus;
}

Rational revenue(const AuctionOutcome& outcome) {
  Rational sum;
  for (const BidderOutcome& b : outcome.bidders) sum += b.payment;
  return sum;
}

Rational surplus_with_top_value_guard(const AuctionInstance& instance,
                                      TieMode tie_mode) {
  Rational best = full_info_surplus(instance, tie_mode);
  for (const Bidder& b : instance.bidders) best = max(best, b.value);
  return best;
}

RoundMetrics compute_round_metrics(const AuctionInstance& instance,
                                   const BidProfile& profile,
                                   const AuctionOutcome& outcome,
                                   TieMode tie_mode, FillMode fill,
                                   std::uint64_t seed) {
  RoundMetrics m;
  m.learning_ratios.reserve(instance.bidders.size());
  for (int i = 0; i < instance.size(); ++i)
    m.learning_ratios.push_back(learning_ratio(
        instance.bidders[i].value, instance.bidders[i].size, profile.bids[i]));
  m.revenue = revenue(outcome);
  m.full_info_surplus = full_info_surplus(instance, tie_mode, fill, seed);
  m.achieved_surplus = achieved_surplus(outcome, instance);
  m.efficiency_gap = m.full_info_surplus - m.achieved_surplus;
  m.gap_negative = m.efficiency_gap < Rational(0);
  m.efficiency_ratio =
      m.full_info_surplus.is_zero()
          ? Rational(100)
          : Rational(100) * m.achieved_surplus / m.full_info_surplus;
  return m;
}

void StatsAccumulator::merge(const StatsAccumulator& other) {
  samples_.insert(samples_.end(), other.samples_.begin(),
                  other.samples_.end());
}

namespace {

// Running sum of rationals in 128-bit, gcd-reduced after every step.
// Denominators in practice divide small lcms, so this never gets close
// to overflow for the sample sizes we summarize; if it ever would, throw
// rather than silently lose exactness.
struct WideSum {
  __int128 num = 0;
  __int128 den = 1;

  static __int128 gcd(__int128 a, __int128 b) {
    if (a < 0) a = -a;
    if (b < 0) b = -b;
    while (b != 0) {
      __int128 t = a % b;
      a = b;
      b = t;
    }
    return a;
  }

  void add(const Rational& x) {
    __int128 xd = x.den();
    __int128 g = gcd(den, xd);
    __int128 scale_mine = xd / g;
    constexpr __int128 kLimit = (__int128(1) << 126);
    if (den > kLimit / (scale_mine == 0 ? 1 : scale_mine))
      throw std::overflow_error("exact mean accumulator overflow");
    __int128 new_den = den * scale_mine;
    __int128 a = num * scale_mine;
    __int128 b = __int128(x.num()) * (new_den / xd);
    num = a + b;
    den = new_den;
    __int128 r = gcd(num, den);
    if (r > 1) {
      num /= r;
      den /= r;
    }
  }

  double over(std::size_t n) const {
    return static_cast<double>(static_cast<long double>(num) /
                               (static_cast<long double>(den) *
                                static_cast<long double>(n)));
  }
};

}  // namespace

SummaryStats StatsAccumulator::summarize() const {
  if (samples_.empty())
    throw std::domain_error("summarize: empty sample");
  std::vector<Rational> sorted = samples_;
  std::sort(sorted.begin(), sorted.end());

  SummaryStats out;
  out.count = sorted.size();
  const std::size_t n = sorted.size();
  out.median = (n % 2 == 1)
                   ? sorted[n / 2]
                   : (sorted[n / 2 - 1] + sorted[n / 2]) / Rational(2);

  WideSum sum;
  for (const Rational& x : sorted) sum.add(x);
  out.mean = sum.over(n);

  double ss = 0;
  for (const Rational& x : sorted) {
    double d = x.to_double() - out.mean;
    ss += d * d;
  }
  out.stddev = std::sqrt(ss / static_cast<double>(n));
  return out;
}

RollingMean::RollingMean(std::size_t window) : window_(window == 0 ? 1 : window) {}

double RollingMean::push(double x) {
  buffer_.push_back(x);
  sum_ += x;
  if (buffer_.size() > window_) {
    sum_ -= buffer_.front();
    buffer_.pop_front();
  }
  return mean();
}

double RollingMean::mean() const {
  return buffer_.empty() ? 0.0 : sum_ / static_cast<double>(buffer_.size());
}

}  // namespace knapsack
