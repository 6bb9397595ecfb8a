// Acceptance gate: exercises every promised property at full scale and
// prints one pass/fail line per criterion. Exit status counts gating
// failures. The full-scale replication (criterion 8) runs only with
// --full-scale and never gates; pass --kauction <path> to also check
// byte determinism through the installed command-line binary.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "knapsack/io.hpp"
#include "knapsack/learning.hpp"
#include "knapsack/metrics.hpp"
#include "knapsack/oracle.hpp"

using namespace knapsack;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Gate {
  int failures = 0;

  void report(int criterion, bool pass, const std::string& detail,
              bool gating = true) {
    std::cout << (pass ? "[PASS]" : "[FAIL]") << " criterion " << criterion
              << ": " << detail << std::endl;
    if (!pass && gating) ++failures;
  }
};

std::string fmt(double x) {
  std::ostringstream out;
  out.precision(4);
  out << x;
  return out.str();
}

void criterion_1(Gate& gate) {
  const auto start = Clock::now();
  const DsicReport r = verify_up_dsic(InstanceSampler{}, BidGrid{}, 1000, 20, 2024);
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << "uniform-price truthfulness: " << r.instances << " instances x 20 profiles, "
         << r.deviations_checked << " deviations, " << r.violations
         << " violations, " << fmt(secs) << "s (target 120s)";
  gate.report(1, r.violations == 0 && secs < 120.0, detail.str());
}

void criterion_2(Gate& gate) {
  const CounterexampleSearch s = find_gsp_counterexample(10000, 7);
  bool ok = s.found;
  std::ostringstream detail;
  if (s.found) {
    const DeviationReport& r = s.report;
    const Rational value = r.instance.bidders[static_cast<std::size_t>(r.bidder_id)].value;
    const Rational replay_dev = replay_payoff(r.instance, r.profile, r.bidder_id,
                                              r.deviation_bid, PaymentRule::kGSP);
    const Rational replay_truth =
        replay_payoff(r.instance, r.profile, r.bidder_id, value, PaymentRule::kGSP);
    ok = r.deviation_bid < value && r.truthful_payoff < r.deviation_payoff &&
         replay_dev == r.deviation_payoff && replay_truth == r.truthful_payoff;
    detail << "rank-pricing underbid: bidder " << r.bidder_id << " bids "
           << r.deviation_bid.str() << " under value " << value.str()
           << ", payoff " << r.truthful_payoff.str() << " -> "
           << r.deviation_payoff.str() << ", replayed exactly";
  } else {
    detail << "no underbidding counterexample in " << s.searched << " instances";
  }
  gate.report(2, ok, detail.str());
}

void criterion_3(Gate& gate) {
  const CounterexampleSearch s = find_vcg_counterexample(10000, 7);
  bool ok = s.found;
  std::ostringstream detail;
  if (s.found) {
    const DeviationReport& r = s.report;
    const Rational replay_vcg = replay_payoff(r.instance, r.profile, r.bidder_id,
                                              r.deviation_bid, PaymentRule::kVCG);
    const Rational replay_up = replay_payoff(r.instance, r.profile, r.bidder_id,
                                             r.deviation_bid, PaymentRule::kUP);
    ok = Rational(0) < r.deviation_payoff && r.up_replay_payoff.has_value() &&
         *r.up_replay_payoff < Rational(0) && replay_vcg == r.deviation_payoff &&
         replay_up == *r.up_replay_payoff;
    detail << "tier-pricing overbid: bidder " << r.bidder_id << " bids "
           << r.deviation_bid.str() << ", payoff " << r.deviation_payoff.str()
           << " under tier pricing vs " << r.up_replay_payoff->str()
           << " under the uniform price";
  } else {
    detail << "no overbidding counterexample in " << s.searched << " instances";
  }
  gate.report(3, ok, detail.str());
}

void criterion_4(Gate& gate) {
  const InefficiencyWitness w = find_up_inefficiency_witness(10000, 7);

  AuctionInstance intro;
  intro.capacity = 10;
  intro.bidders = {Bidder{0, 1, 1}, Bidder{1, Rational(99, 10), 9}};
  const AllocationResult alloc = greedy_allocate(intro, truthful_bids(intro));
  Rational packed;
  for (int id : alloc.winners) packed += intro.bidders[static_cast<std::size_t>(id)].value;
  const Rational best = best_feasible_value(intro);

  const bool ok = w.found && Rational(0) < w.gap && w.condition_holds &&
                  packed == Rational(1) && best == Rational(9) &&
                  best - packed == Rational(8);
  std::ostringstream detail;
  detail << "truthful packing shortfall: witness gap " << w.gap.str()
         << " (searched " << w.searched << "), unit-object instance packs "
         << packed.str() << " of " << best.str() << ", gap "
         << (best - packed).str();
  gate.report(4, ok, detail.str());
}

void criterion_5(Gate& gate) {
  const ComparisonReport cmp = verify_greedy_reference(InstanceSampler{}, 10000, 11);
  const MonotonicityReport mono =
      verify_monotonicity(InstanceSampler{}, BidGrid{}, 1000, 13);
  std::ostringstream detail;
  detail << "allocator vs reference: " << cmp.trials << " instances, "
         << cmp.mismatches << " mismatches; winner monotone over " << mono.triples
         << " bid sweeps, " << mono.violations << " violations";
  gate.report(5, cmp.mismatches == 0 && mono.violations == 0, detail.str());
}

void criterion_6(Gate& gate) {
  const BneEnvironment env;
  const BneSolverConfig config;
  const BneSolution sol = solve_dp_bne(env, config);
  bool shaded = true;
  for (std::size_t si = 0; si < sol.size_grid.size(); ++si) {
    for (std::size_t vi = 1; vi < sol.value_grid.size(); ++vi)
      shaded = shaded &&
               sol.bids[si][vi] < static_cast<double>(sol.value_grid[vi]);
  }
  const EpsilonReport eps = bne_epsilon_best_response(sol, env, 0.25, 4000, 99);
  const double bound = 0.25 + 3.0 * eps.worst_std_error;
  const bool ok = sol.converged && sol.residual < 1e-3 &&
                  sol.iterations <= config.max_iter && shaded &&
                  eps.epsilon <= bound;
  std::ostringstream detail;
  detail << "pay-your-bid equilibrium: residual " << fmt(sol.residual) << " after "
         << sol.iterations << " sweeps, bids shaded below value: "
         << (shaded ? "yes" : "no") << ", best-response slack " << fmt(eps.epsilon)
         << " <= " << fmt(bound);
  gate.report(6, ok, detail.str());
}

struct RuleWindow {
  Rational median_ratio;
  double mean_revenue = 0.0;
  double mean_efficiency = 0.0;
};

// Lab environment with the standard training schedule (1,000 pure-exploration
// episodes, linear decay to zero) and the raw game payoff as the loser reward.
// A punitive loser reward makes agents buy win frequency with overbids: under
// the uniform price an overbid costs nothing until it wins at a price above
// value, and that loss is capped by the penalty, which inverts the efficiency
// ordering the criterion checks.
RuleWindow run_window(PaymentRule rule, std::uint64_t seed, long long episodes) {
  SimConfig config = std::get<SimConfig>(preset("ai"));
  config.rule = rule;
  config.episodes = episodes;
  config.master_seed = seed;
  config.agent.loser_reward = 0.0;
  const long long window_start = episodes - episodes / 10;

  StatsAccumulator ratios, revenue, efficiency;
  run_simulation(config, [&](const EpisodeRecord& r) {
    if (r.episode < window_start) return;
    for (const AgentStep& step : r.agents) ratios.add(step.learning_ratio);
    revenue.add(r.metrics.revenue);
    efficiency.add(r.metrics.efficiency_ratio);
  });

  RuleWindow w;
  w.median_ratio = ratios.summarize().median;
  w.mean_revenue = revenue.summarize().mean;
  w.mean_efficiency = efficiency.summarize().mean;
  return w;
}

void criterion_7(Gate& gate) {
  const auto start = Clock::now();
  const long long episodes = 20000;
  int passing = 0;
  std::ostringstream marks;
  for (std::uint64_t seed = 1; seed <= 3; ++seed) {
    const RuleWindow up = run_window(PaymentRule::kUP, seed, episodes);
    const RuleWindow dp = run_window(PaymentRule::kDP, seed, episodes);
    const RuleWindow gsp = run_window(PaymentRule::kGSP, seed, episodes);

    const bool a =
        up.median_ratio < gsp.median_ratio && gsp.median_ratio < dp.median_ratio;
    const bool b = up.mean_revenue < std::min(dp.mean_revenue, gsp.mean_revenue) &&
                   std::abs(dp.mean_revenue - gsp.mean_revenue) <=
                       0.15 * dp.mean_revenue;
    const bool c = up.mean_efficiency >= gsp.mean_efficiency &&
                   gsp.mean_efficiency >= dp.mean_efficiency - 1.0 &&
                   up.mean_efficiency >= 95.0 && gsp.mean_efficiency >= 95.0 &&
                   dp.mean_efficiency >= 95.0;
    if (a && b && c) ++passing;
    marks << " s" << seed << ':' << (a ? 'a' : '-') << (b ? 'b' : '-')
          << (c ? 'c' : '-');
    std::cerr << "criterion 7 diagnostics, seed " << seed << ": median ratio UP "
              << up.median_ratio.str() << " GSP " << gsp.median_ratio.str()
              << " DP " << dp.median_ratio.str() << "; mean revenue UP "
              << fmt(up.mean_revenue) << " GSP " << fmt(gsp.mean_revenue)
              << " DP " << fmt(dp.mean_revenue) << "; mean efficiency UP "
              << fmt(up.mean_efficiency) << " GSP " << fmt(gsp.mean_efficiency)
              << " DP " << fmt(dp.mean_efficiency) << "\n";
  }
  const double secs = seconds_since(start);
  std::ostringstream detail;
  detail << "learned ordering at 3 seeds x " << episodes
         << " episodes (pure-exploration 1000, loser reward 0):" << marks.str()
         << ", " << passing << "/3 seeds pass all (need 2), " << fmt(secs)
         << "s (target 600s)";
  gate.report(7, passing >= 2 && secs < 600.0, detail.str());
}

void criterion_8(Gate& gate, bool requested) {
  if (!requested) {
    std::cout << "[SKIP] criterion 8: full-scale replication runs via "
                 "--full-scale (scripts/full_scale_check.sh); not gating"
              << std::endl;
    return;
  }
  struct Anchor {
    PaymentRule rule;
    double revenue;
    double efficiency;
  };
  const std::vector<Anchor> anchors = {{PaymentRule::kUP, 10.923, 99.337},
                                       {PaymentRule::kGSP, 16.766, 98.744},
                                       {PaymentRule::kDP, 17.280, 97.959}};
  bool ok = true;
  std::ostringstream detail;
  detail << "full-scale window means:";
  for (const Anchor& anchor : anchors) {
    SimConfig config = std::get<SimConfig>(preset("ai"));
    config.rule = anchor.rule;
    config.master_seed = 1;
    config.agent.loser_reward = 0.0;  // same configuration as criterion 7
    const long long window_start = config.episodes - config.episodes / 10;
    StatsAccumulator revenue, efficiency;
    run_simulation(config, [&](const EpisodeRecord& r) {
      if (r.episode < window_start) return;
      revenue.add(r.metrics.revenue);
      efficiency.add(r.metrics.efficiency_ratio);
    });
    const double rev = revenue.summarize().mean;
    const double eff = efficiency.summarize().mean;
    const bool rev_ok = std::abs(rev - anchor.revenue) <= 0.20 * anchor.revenue;
    const bool eff_ok = std::abs(eff - anchor.efficiency) <= 2.0;
    ok = ok && rev_ok && eff_ok;
    detail << ' ' << to_string(anchor.rule) << " revenue " << fmt(rev) << " vs "
           << fmt(anchor.revenue) << (rev_ok ? "" : " OUT") << ", efficiency "
           << fmt(eff) << " vs " << fmt(anchor.efficiency) << (eff_ok ? "" : " OUT")
           << ';';
  }
  gate.report(8, ok, detail.str(), /*gating=*/false);
}

std::string run_to_strings(const SimConfig& config) {
  std::string bids = bids_csv_header();
  std::string rounds = rounds_csv_header();
  run_simulation(config, [&](const EpisodeRecord& r) {
    bids += bids_csv_rows(r);
    rounds += rounds_csv_row(r);
  });
  return bids + "\x1f" + rounds;
}

bool cli_outputs_identical(const std::string& kauction, std::string& note) {
  const fs::path a = fs::path("acceptance_run_a");
  const fs::path b = fs::path("acceptance_run_b");
  fs::remove_all(a);
  fs::remove_all(b);
  const std::string base = kauction +
                           " run --preset lab --episodes 300 --seed 11 --out ";
  if (std::system((base + a.string() + " > /dev/null").c_str()) != 0 ||
      std::system((base + b.string() + " > /dev/null").c_str()) != 0) {
    note = "command-line run failed";
    return false;
  }
  bool same = true;
  for (const char* name : {"bids.csv", "rounds.csv", "summary.json",
                           "checkpoint.json"}) {
    same = same && read_text_file((a / name).string()) ==
                       read_text_file((b / name).string());
  }
  fs::remove_all(a);
  fs::remove_all(b);
  note = same ? "command-line outputs byte-identical"
              : "command-line outputs differ";
  return same;
}

void criterion_9(Gate& gate, const std::string& kauction) {
  SimConfig config = std::get<SimConfig>(preset("lab"));
  config.episodes = 300;
  config.master_seed = 11;
  const bool in_process = run_to_strings(config) == run_to_strings(config);

  std::string note = "command-line binary not provided";
  bool cli_ok = true;
  if (!kauction.empty()) cli_ok = cli_outputs_identical(kauction, note);

  std::ostringstream detail;
  detail << "repeated seeded runs: in-process streams "
         << (in_process ? "identical" : "DIFFER") << "; " << note;
  gate.report(9, in_process && cli_ok, detail.str());
}

}  // namespace

int main(int argc, char** argv) {
  bool full_scale = false;
  std::string kauction;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--full-scale") {
      full_scale = true;
    } else if (arg == "--kauction" && i + 1 < argc) {
      kauction = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--full-scale] [--kauction <path>]\n";
      return 2;
    }
  }

  Gate gate;
  try {
    criterion_1(gate);
    criterion_2(gate);
    criterion_3(gate);
    criterion_4(gate);
    criterion_5(gate);
    criterion_6(gate);
    criterion_7(gate);
    criterion_8(gate, full_scale);
    criterion_9(gate, kauction);
  } catch (const std::exception& e) {
    std::cerr << "acceptance run aborted: " << e.what() << "\n";
    return 3;
  }

  std::cout << (gate.failures == 0 ? "acceptance: all gating criteria hold"
                                   : "acceptance: " +
                                         std::to_string(gate.failures) +
                                         " gating criteria failed")
            << std::endl;
  return gate.failures;
}
