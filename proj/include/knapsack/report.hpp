#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "knapsack/metrics.hpp"
#include "knapsack/rational.hpp"

namespace knapsack {

/// One parsed line of the per-bidder CSV.
struct BidRow {
  long long episode = 0;
  std::string rule;
  int bidder_id = 0;
  Rational value;
  Rational size;
  Rational bid;
  Rational per_unit_bid;
  bool winner = false;
  Rational payment;
  Rational payoff;
  Rational learning_ratio;
  Rational revenue;
  Rational full_info_surplus;
  Rational achieved_surplus;
  Rational efficiency_gap;
  Rational efficiency_ratio;
};

/// Parses text produced by bids_csv_header/bids_csv_rows. Throws
/// std::runtime_error naming the offending line on malformed input.
std::vector<BidRow> parse_bids_csv(const std::string& text);

/// Convergence-window digest of one run, in the layout of the summary
/// tables: pooled plus worst/best agent (by mean payoff in the window).
struct RunSummary {
  std::string rule;
  long long episodes = 0;
  int n_agents = 0;
  long long window_first = 0;
  long long window_last = 0;
  int worst_agent = -1;
  int best_agent = -1;
  SummaryStats learning_ratio_all, learning_ratio_worst, learning_ratio_best;
  SummaryStats payoff_all, payoff_worst, payoff_best;
  SummaryStats revenue;
  SummaryStats efficiency_ratio;
  std::vector<double> per_agent_mean_payoff;
};

/// window_fraction is the trailing share of episodes to summarize
/// (default one tenth), always at least one episode.
RunSummary summarize_run(const std::vector<BidRow>& rows,
                         double window_fraction = 0.10);

nlohmann::json summary_to_json(const RunSummary& summary);

/// Episode-level series for the plots (rows must cover whole episodes).
std::vector<double> episode_revenue_series(const std::vector<BidRow>& rows);
std::vector<double> episode_efficiency_series(const std::vector<BidRow>& rows);
std::vector<double> episode_mean_learning_ratio_series(
    const std::vector<BidRow>& rows);

struct PlotSeries {
  std::string label;
  std::vector<double> y;
};

/// Self-contained SVG line chart; each series is smoothed with a rolling
/// mean of the given window before plotting.
std::string render_line_svg(const std::string& title,
                            const std::string& y_label,
                            const std::vector<PlotSeries>& series,
                            std::size_t rolling_window);

}  // namespace knapsack
