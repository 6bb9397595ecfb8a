#include "knapsack/report.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace knapsack {

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, sep)) out.push_back(field);
  if (!line.empty() && line.back() == sep) out.push_back("");
  return out;
}

Rational parse_rational_field(const std::string& text, const std::string& line) {
  auto parsed = Rational::parse(text);
  if (!parsed) throw std::runtime_error("bad rational '" + text + "' in: " + line);
  return *parsed;
}

}  // namespace

std::vector<BidRow> parse_bids_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::vector<BidRow> rows;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first) {
      first = false;
      if (line.rfind("episode,", 0) == 0) continue;  // header
    }
    const std::vector<std::string> f = split(line, ',');
    if (f.size() != 16) throw std::runtime_error("expected 16 fields in: " + line);
    BidRow row;
    row.episode = std::stoll(f[0]);
    row.rule = f[1];
    row.bidder_id = std::stoi(f[2]);
    row.value = parse_rational_field(f[3], line);
    row.size = parse_rational_field(f[4], line);
    row.bid = parse_rational_field(f[5], line);
    row.per_unit_bid = parse_rational_field(f[6], line);
    row.winner = f[7] == "1";
    row.payment = parse_rational_field(f[8], line);
    row.payoff = parse_rational_field(f[9], line);
    row.learning_ratio = parse_rational_field(f[10], line);
    row.revenue = parse_rational_field(f[11], line);
    row.full_info_surplus = parse_rational_field(f[12], line);
    row.achieved_surplus = parse_rational_field(f[13], line);
    row.efficiency_gap = parse_rational_field(f[14], line);
    row.efficiency_ratio = parse_rational_field(f[15], line);
    rows.push_back(std::move(row));
  }
  return rows;
}

RunSummary summarize_run(const std::vector<BidRow>& rows, double window_fraction) {
  if (rows.empty()) throw std::domain_error("no rows to summarize");
  RunSummary summary;
  summary.rule = rows.front().rule;
  for (const BidRow& row : rows)
    summary.n_agents = std::max(summary.n_agents, row.bidder_id + 1);
  summary.episodes = rows.back().episode + 1;
  if (rows.size() != static_cast<std::size_t>(summary.episodes) *
                         static_cast<std::size_t>(summary.n_agents))
    throw std::runtime_error("row count is not episodes x agents");

  long long window = static_cast<long long>(
      std::ceil(window_fraction * static_cast<double>(summary.episodes)));
  window = std::clamp(window, 1LL, summary.episodes);
  summary.window_first = summary.episodes - window;
  summary.window_last = summary.episodes - 1;

  const int n = summary.n_agents;
  std::vector<StatsAccumulator> agent_payoff(static_cast<std::size_t>(n));
  std::vector<StatsAccumulator> agent_ratio(static_cast<std::size_t>(n));
  StatsAccumulator all_payoff, all_ratio, revenue_acc, efficiency_acc;
  for (const BidRow& row : rows) {
    if (row.episode < summary.window_first) continue;
    const std::size_t a = static_cast<std::size_t>(row.bidder_id);
    agent_payoff[a].add(row.payoff);
    agent_ratio[a].add(row.learning_ratio);
    all_payoff.add(row.payoff);
    all_ratio.add(row.learning_ratio);
    if (row.bidder_id == 0) {
      revenue_acc.add(row.revenue);
      efficiency_acc.add(row.efficiency_ratio);
    }
  }

  summary.per_agent_mean_payoff.resize(static_cast<std::size_t>(n));
  for (int a = 0; a < n; ++a) {
    summary.per_agent_mean_payoff[static_cast<std::size_t>(a)] =
        agent_payoff[static_cast<std::size_t>(a)].summarize().mean;
  }
  summary.worst_agent = static_cast<int>(
      std::min_element(summary.per_agent_mean_payoff.begin(),
                       summary.per_agent_mean_payoff.end()) -
      summary.per_agent_mean_payoff.begin());
  summary.best_agent = static_cast<int>(
      std::max_element(summary.per_agent_mean_payoff.begin(),
                       summary.per_agent_mean_payoff.end()) -
      summary.per_agent_mean_payoff.begin());

  summary.learning_ratio_all = all_ratio.summarize();
  summary.learning_ratio_worst =
      agent_ratio[static_cast<std::size_t>(summary.worst_agent)].summarize();
  summary.learning_ratio_best =
      agent_ratio[static_cast<std::size_t>(summary.best_agent)].summarize();
  summary.payoff_all = all_payoff.summarize();
  summary.payoff_worst =
      agent_payoff[static_cast<std::size_t>(summary.worst_agent)].summarize();
  summary.payoff_best =
      agent_payoff[static_cast<std::size_t>(summary.best_agent)].summarize();
  summary.revenue = revenue_acc.summarize();
  summary.efficiency_ratio = efficiency_acc.summarize();
  return summary;
}

nlohmann::json summary_to_json(const RunSummary& summary) {
  auto stats = [](const SummaryStats& s) {
    return nlohmann::json{{"median", s.median.to_double()},
                          {"median_exact", s.median.str()},
                          {"mean", s.mean},
                          {"sd", s.stddev},
                          {"count", s.count}};
  };
  return nlohmann::json{
      {"schema_version", 1},
      {"rule", summary.rule},
      {"episodes", summary.episodes},
      {"n_agents", summary.n_agents},
      {"window", {{"first_episode", summary.window_first},
                  {"last_episode", summary.window_last}}},
      {"learning_ratio",
       {{"all", stats(summary.learning_ratio_all)},
        {"worst_agent", stats(summary.learning_ratio_worst)},
        {"best_agent", stats(summary.learning_ratio_best)}}},
      {"payoff",
       {{"all", stats(summary.payoff_all)},
        {"worst_agent", stats(summary.payoff_worst)},
        {"best_agent", stats(summary.payoff_best)}}},
      {"revenue", stats(summary.revenue)},
      {"efficiency_ratio", stats(summary.efficiency_ratio)},
      {"worst_agent", summary.worst_agent},
      {"best_agent", summary.best_agent},
      {"per_agent_mean_payoff", summary.per_agent_mean_payoff}};
}

namespace {

template <typename PerEpisode>
std::vector<double> episode_series(const std::vector<BidRow>& rows,
                                   PerEpisode&& value_of) {
  std::vector<double> out;
  for (const BidRow& row : rows) {
    if (row.bidder_id == 0) out.push_back(value_of(row));
  }
  return out;
}

}  // namespace

std::vector<double> episode_revenue_series(const std::vector<BidRow>& rows) {
  return episode_series(rows, [](const BidRow& r) { return r.revenue.to_double(); });
}

std::vector<double> episode_efficiency_series(const std::vector<BidRow>& rows) {
  return episode_series(
      rows, [](const BidRow& r) { return r.efficiency_ratio.to_double(); });
}

std::vector<double> episode_mean_learning_ratio_series(
    const std::vector<BidRow>& rows) {
  std::vector<double> out;
  Rational sum;
  int count = 0;
  long long episode = rows.empty() ? 0 : rows.front().episode;
  for (const BidRow& row : rows) {
    if (row.episode != episode) {
      out.push_back(count == 0 ? 0.0 : (sum / Rational(count)).to_double());
      sum = Rational(0);
      count = 0;
      episode = row.episode;
    }
    sum += row.learning_ratio;
    ++count;
  }
  if (count > 0) out.push_back((sum / Rational(count)).to_double());
  return out;
}

namespace {

std::vector<double> rolled(const std::vector<double>& y, std::size_t window) {
  RollingMean mean(window);
  std::vector<double> out;
  out.reserve(y.size());
  for (double v : y) out.push_back(mean.push(v));
  return out;
}

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(6);
  out << x;
  return out.str();
}

}  // namespace

std::string render_line_svg(const std::string& title, const std::string& y_label,
                            const std::vector<PlotSeries>& series,
                            std::size_t rolling_window) {
  constexpr double kWidth = 800, kHeight = 500;
  constexpr double kLeft = 70, kRight = 20, kTop = 40, kBottom = 50;
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;
  static const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                                  "#ff7f0e", "#8c564b"};

  std::vector<PlotSeries> smooth;
  std::size_t max_len = 0;
  double y_min = 0, y_max = 1;
  bool any = false;
  for (const PlotSeries& s : series) {
    PlotSeries r{s.label, rolled(s.y, std::max<std::size_t>(1, rolling_window))};
    max_len = std::max(max_len, r.y.size());
    for (double v : r.y) {
      if (!any) {
        y_min = y_max = v;
        any = true;
      }
      y_min = std::min(y_min, v);
      y_max = std::max(y_max, v);
    }
    smooth.push_back(std::move(r));
  }
  if (!any || y_min == y_max) {
    y_min -= 1;
    y_max += 1;
  }
  const double pad = 0.05 * (y_max - y_min);
  y_min -= pad;
  y_max += pad;

  auto x_of = [&](std::size_t i, std::size_t len) {
    if (len <= 1) return kLeft;
    return kLeft + plot_w * static_cast<double>(i) / static_cast<double>(len - 1);
  };
  auto y_of = [&](double v) {
    return kTop + plot_h * (1.0 - (v - y_min) / (y_max - y_min));
  };

  std::ostringstream svg;
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth
      << "\" height=\"" << kHeight << "\" viewBox=\"0 0 " << kWidth << " "
      << kHeight << "\">\n";
  svg << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"16\">"
      << title << "</text>\n";
  // Axes.
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop << "\" x2=\"" << kLeft
      << "\" y2=\"" << kTop + plot_h << "\" stroke=\"black\"/>\n";
  svg << "<line x1=\"" << kLeft << "\" y1=\"" << kTop + plot_h << "\" x2=\""
      << kLeft + plot_w << "\" y2=\"" << kTop + plot_h
      << "\" stroke=\"black\"/>\n";
  // Y ticks at min, mid, max.
  for (double frac : {0.0, 0.5, 1.0}) {
    const double v = y_min + frac * (y_max - y_min);
    const double y = y_of(v);
    svg << "<line x1=\"" << kLeft - 4 << "\" y1=\"" << y << "\" x2=\"" << kLeft
        << "\" y2=\"" << y << "\" stroke=\"black\"/>\n";
    svg << "<text x=\"" << kLeft - 8 << "\" y=\"" << y + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt(v) << "</text>\n";
  }
  // X extent labels.
  svg << "<text x=\"" << kLeft << "\" y=\"" << kTop + plot_h + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">0"
         "</text>\n";
  if (max_len > 1)
    svg << "<text x=\"" << kLeft + plot_w << "\" y=\"" << kTop + plot_h + 18
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
           "font-size=\"11\">"
        << max_len - 1 << "</text>\n";
  svg << "<text x=\"" << kLeft + plot_w / 2 << "\" y=\"" << kTop + plot_h + 36
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
         "font-size=\"12\">episode</text>\n";
  svg << "<text x=\"16\" y=\"" << kTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" "
         "transform=\"rotate(-90 16 "
      << kTop + plot_h / 2 << ")\">" << y_label << "</text>\n";

  for (std::size_t s = 0; s < smooth.size(); ++s) {
    const char* color = kColors[s % (sizeof(kColors) / sizeof(kColors[0]))];
    svg << "<polyline fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < smooth[s].y.size(); ++i) {
      if (i) svg << ' ';
      svg << fmt(x_of(i, smooth[s].y.size())) << ',' << fmt(y_of(smooth[s].y[i]));
    }
    svg << "\"/>\n";
    svg << "<text x=\"" << kLeft + plot_w - 8 << "\" y=\""
        << kTop + 16 + 16 * static_cast<double>(s)
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"12\" "
           "fill=\""
        << color << "\">" << smooth[s].label << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

}  // namespace knapsack
