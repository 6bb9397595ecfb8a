// Command-line front end: run simulations, sweep parameter grids, verify
// the mechanism properties, and render reports from finished runs.

#include <atomic>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "knapsack/io.hpp"
#include "knapsack/learning.hpp"
#include "knapsack/oracle.hpp"
#include "knapsack/report.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace knapsack;

namespace {

std::string default_out_dir() {
  if (const char* env = std::getenv("KAUCTION_OUT")) return env;
  return "out";
}

std::pair<int, int> parse_range(const std::string& text) {
  const auto colon = text.find(':');
  if (colon == std::string::npos)
    throw CLI::ValidationError("expected lo:hi, got '" + text + "'");
  return {std::stoi(text.substr(0, colon)), std::stoi(text.substr(colon + 1))};
}

BidGrid parse_grid(const std::string& text) {
  const auto first = text.find(':');
  const auto second = text.find(':', first + 1);
  if (first == std::string::npos || second == std::string::npos)
    throw CLI::ValidationError("expected min:max:step, got '" + text + "'");
  auto min = Rational::parse(text.substr(0, first));
  auto max = Rational::parse(text.substr(first + 1, second - first - 1));
  auto step = Rational::parse(text.substr(second + 1));
  if (!min || !max || !step)
    throw CLI::ValidationError("unparsable grid '" + text + "'");
  BidGrid grid{*min, *max, *step};
  grid.validate();
  return grid;
}

// Shared flag bundle; only flags the user actually passed override the
// preset's values.
struct RunFlags {
  std::string preset_name;
  std::string rule;
  int agents = 0;
  int capacity = 0;
  std::string values;
  std::string sizes;
  bool replacement = false;
  long long episodes = 0;
  std::uint64_t seed = 0;
  double alpha = -1;
  double loser_reward = 1;  // sentinel: real values are <= 0
  std::string grid;
  std::string out;
  std::string format = "csv";
  long long checkpoint_every = 0;

  CLI::App* attach(CLI::App* cmd) {
    cmd->add_option("--preset", preset_name, "lab, ai, cs-7 or cs-10");
    cmd->add_option("--rule", rule, "UP, DP, GSP or VCG");
    cmd->add_option("--agents", agents, "number of bidders");
    cmd->add_option("--capacity", capacity, "knapsack capacity");
    cmd->add_option("--values", values, "value support lo:hi");
    cmd->add_option("--sizes", sizes, "size support lo:hi");
    cmd->add_flag("--replacement", replacement, "draw sizes with replacement");
    cmd->add_option("--episodes", episodes, "number of auction episodes");
    cmd->add_option("--seed", seed, "master seed");
    cmd->add_option("--alpha", alpha, "Q-learning rate");
    cmd->add_option("--loser-reward", loser_reward, "reward for losing (<= 0)");
    cmd->add_option("--grid", grid, "action grid min:max:step");
    cmd->add_option("--out", out, "output directory");
    cmd->add_option("--format", format, "csv or json")
        ->check(CLI::IsMember({"csv", "json"}));
    cmd->add_option("--checkpoint-every", checkpoint_every,
                    "episodes between checkpoints (0: final only)");
    return cmd;
  }

  void apply(const CLI::App* cmd, SimConfig& config) const {
    if (cmd->count("--rule")) config.rule = payment_rule_from_string(rule);
    if (cmd->count("--agents")) config.n_agents = agents;
    if (cmd->count("--capacity")) config.capacity = capacity;
    if (cmd->count("--values")) {
      auto [lo, hi] = parse_range(values);
      config.values = ValueDistribution{lo, hi};
    }
    if (cmd->count("--sizes")) {
      auto [lo, hi] = parse_range(sizes);
      config.sizes.lo = lo;
      config.sizes.hi = hi;
    }
    if (cmd->count("--replacement"))
      config.sizes.mode = SizeMode::kWithReplacement;
    if (cmd->count("--episodes")) config.episodes = episodes;
    if (cmd->count("--seed")) config.master_seed = seed;
    if (cmd->count("--alpha")) config.agent.alpha = alpha;
    if (cmd->count("--loser-reward")) config.agent.loser_reward = loser_reward;
    if (cmd->count("--grid")) config.agent.action_grid = parse_grid(grid);
    if (cmd->count("--checkpoint-every"))
      config.checkpoint_every = checkpoint_every;
    if (cmd->count("--out"))
      config.out_dir = out;
    else if (config.out_dir.empty())
      config.out_dir = default_out_dir();
  }
};

Preset load_preset(const CLI::App* cmd, const std::string& name) {
  if (cmd->count("--preset")) return preset(name);
  return preset("lab");
}

// Writes bids/rounds CSV (or a streamed JSON array), a final checkpoint,
// and a summary computed over the trailing window.
void execute_run(const SimConfig& config, const std::string& format) {
  fs::create_directories(config.out_dir);
  const fs::path dir(config.out_dir);
  const bool as_json = format == "json";

  std::ofstream bids(dir / (as_json ? "bids.json" : "bids.csv"),
                     std::ios::binary);
  std::ofstream rounds(dir / "rounds.csv", std::ios::binary);
  if (!bids || !rounds)
    throw std::runtime_error("cannot open outputs under " + config.out_dir);
  if (as_json)
    bids << "[\n";
  else
    bids << bids_csv_header();
  rounds << rounds_csv_header();

  bool first_record = true;
  EpisodeSink sink = [&](const EpisodeRecord& record) {
    if (as_json) {
      if (!first_record) bids << ",\n";
      bids << json(record).dump();
      first_record = false;
    } else {
      bids << bids_csv_rows(record);
    }
    rounds << rounds_csv_row(record);
    if (!bids || !rounds) throw std::runtime_error("output write failed");
  };
  CheckpointSink checkpointer = [&](long long next_episode,
                                    const std::vector<Agent>& agents) {
    Checkpoint cp;
    cp.config = config;
    cp.next_episode = next_episode;
    for (const Agent& a : agents) cp.tables.push_back(a.table);
    write_text_file((dir / "checkpoint.json").string(), json(cp).dump(2) + "\n");
  };

  run_simulation(config, sink, checkpointer);
  if (as_json) bids << "\n]\n";
  bids.close();
  rounds.close();

  if (!as_json) {
    const auto rows = parse_bids_csv(read_text_file((dir / "bids.csv").string()));
    const RunSummary summary = summarize_run(rows);
    write_text_file((dir / "summary.json").string(),
                    summary_to_json(summary).dump(2) + "\n");
    std::cout << to_string(config.rule) << " seed " << config.master_seed
              << ": mean revenue " << summary.revenue.mean
              << ", mean efficiency " << summary.efficiency_ratio.mean
              << ", median learning ratio "
              << summary.learning_ratio_all.median.to_double() << "\n";
  }
  std::cout << "wrote " << (dir / (as_json ? "bids.json" : "bids.csv")).string()
            << "\n";
}

int cmd_run(const CLI::App* cmd, const RunFlags& flags) {
  const Preset base = load_preset(cmd, flags.preset_name);
  if (!std::holds_alternative<SimConfig>(base))
    throw CLI::ValidationError("preset '" + flags.preset_name +
                               "' is a sweep; use the sweep subcommand");
  SimConfig config = std::get<SimConfig>(base);
  flags.apply(cmd, config);
  config.validate();
  execute_run(config, flags.format);
  return 0;
}

int cmd_sweep(const CLI::App* cmd, const RunFlags& flags,
              const std::vector<std::uint64_t>& seeds, int jobs) {
  const Preset base = load_preset(cmd, flags.preset_name);
  SweepSpec spec;
  if (std::holds_alternative<SweepSpec>(base)) {
    spec = std::get<SweepSpec>(base);
  } else {
    spec.base = std::get<SimConfig>(base);
    spec.rules = {PaymentRule::kUP, PaymentRule::kDP, PaymentRule::kGSP};
  }
  flags.apply(cmd, spec.base);
  if (!seeds.empty()) spec.seeds = seeds;

  const std::string root =
      cmd->count("--out") ? flags.out : spec.base.out_dir.empty()
                                            ? default_out_dir()
                                            : spec.base.out_dir;
  std::vector<SweepSpec::Cell> cells = spec.cells();
  for (auto& cell : cells) {
    cell.config.out_dir = (fs::path(root) / cell.label).string();
    cell.config.validate();
  }

  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  std::vector<std::string> failures;
  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= cells.size()) return;
      try {
        execute_run(cells[i].config, flags.format);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(log_mutex);
        failures.push_back(cells[i].label + ": " + e.what());
      }
    }
  };
  const int n_threads = std::max(
      1, std::min<int>(jobs, static_cast<int>(cells.size())));
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (std::thread& t : pool) t.join();

  json manifest = json::array();
  for (const auto& cell : cells)
    manifest.push_back({{"label", cell.label}, {"out_dir", cell.config.out_dir}});
  fs::create_directories(root);
  write_text_file((fs::path(root) / "sweep.json").string(),
                  manifest.dump(2) + "\n");
  for (const std::string& f : failures) std::cerr << "cell failed: " << f << "\n";
  return failures.empty() ? 0 : 1;
}

json verify_one(const std::string& check, long long trials, long long budget,
                std::uint64_t seed, bool& ok) {
  const InstanceSampler sampler;  // n <= 5, K <= 20, sizes/values <= 10
  const BidGrid grid;             // integer bids 0..20
  json j;
  j["check"] = check;
  if (check == "up-dsic") {
    const DsicReport report = verify_up_dsic(sampler, grid, trials, 20, seed);
    j["trials"] = report.instances;
    j["profiles"] = report.profiles;
    j["deviations_checked"] = report.deviations_checked;
    j["violations"] = report.violations;
    if (report.first_violation) j["first_counterexample"] = *report.first_violation;
    ok = report.violations == 0;
  } else if (check == "gsp-untruthful" || check == "vcg-untruthful") {
    const CounterexampleSearch found =
        check[0] == 'g' ? find_gsp_counterexample(budget, seed)
                        : find_vcg_counterexample(budget, seed);
    j["trials"] = found.searched;
    j["violations"] = found.found ? 1 : 0;  // the rule is the violator here
    if (found.found) j["first_counterexample"] = found.report;
    ok = found.found;
  } else if (check == "up-inefficiency") {
    const InefficiencyWitness witness = find_up_inefficiency_witness(budget, seed);
    j["trials"] = witness.searched;
    j["violations"] = witness.found ? 1 : 0;
    j["first_counterexample"] = witness;
    ok = witness.found;
  } else if (check == "greedy-reference") {
    const ComparisonReport report = verify_greedy_reference(sampler, trials, seed);
    j["trials"] = report.trials;
    j["violations"] = report.mismatches;
    ok = report.mismatches == 0;
  } else if (check == "monotonicity") {
    const MonotonicityReport report =
        verify_monotonicity(sampler, grid, trials, seed);
    j["trials"] = report.triples;
    j["violations"] = report.violations;
    if (report.first_violation) j["first_counterexample"] = *report.first_violation;
    ok = report.violations == 0;
  } else if (check == "critical-price") {
    const CriticalPriceReport report =
        verify_critical_price(sampler, trials, seed);
    j["trials"] = report.winners_checked;
    j["violations"] = report.violations;
    ok = report.violations == 0;
  } else if (check == "dp-bne") {
    BneEnvironment env;  // 2 bidders, capacity 3, sizes fixed at 2
    BneSolverConfig solver;
    solver.seed = seed;
    const BneSolution solution = solve_dp_bne(env, solver);
    const EpsilonReport eps =
        bne_epsilon_best_response(solution, env, 0.25, 4000, seed + 1);
    bool shaded = true;
    for (std::size_t vi = 1; vi < solution.value_grid.size(); ++vi)
      shaded = shaded && solution.bids[0][vi] <
                             static_cast<double>(solution.value_grid[vi]);
    j["trials"] = solution.iterations;
    j["residuals"] = {solution.residual};
    j["converged"] = solution.converged;
    j["epsilon"] = eps.epsilon;
    j["epsilon_bound"] = 0.25 + 3.0 * eps.worst_std_error;
    j["shaded_below_value"] = shaded;
    ok = solution.converged && shaded &&
         eps.epsilon <= 0.25 + 3.0 * eps.worst_std_error;
    j["violations"] = ok ? 0 : 1;
  } else {
    throw CLI::ValidationError("unknown check '" + check + "'");
  }
  return j;
}

int cmd_verify(const std::string& check, long long trials, long long budget,
               std::uint64_t seed, const std::string& out_file) {
  const std::vector<std::string> all = {
      "up-dsic",        "gsp-untruthful", "vcg-untruthful", "up-inefficiency",
      "greedy-reference", "monotonicity", "critical-price", "dp-bne"};
  json result;
  bool ok = true;
  if (check == "all") {
    result = json::array();
    for (const std::string& name : all) {
      bool one = true;
      result.push_back(verify_one(name, trials, budget, seed, one));
      ok = ok && one;
    }
  } else {
    result = verify_one(check, trials, budget, seed, ok);
  }
  const std::string text = result.dump(2) + "\n";
  if (!out_file.empty())
    write_text_file(out_file, text);
  else
    std::cout << text;
  return ok ? 0 : 1;
}

int cmd_report(const std::vector<std::string>& inputs, const std::string& out,
               double window, std::size_t rolling) {
  fs::create_directories(out);
  std::vector<PlotSeries> ratio_series, revenue_series, efficiency_series;
  for (const std::string& input : inputs) {
    const std::vector<BidRow> rows = parse_bids_csv(read_text_file(input));
    const RunSummary summary = summarize_run(rows, window);
    const std::string label = summary.rule;
    write_text_file(
        (fs::path(out) / ("summary_" + label + ".json")).string(),
        summary_to_json(summary).dump(2) + "\n");
    ratio_series.push_back({label, episode_mean_learning_ratio_series(rows)});
    revenue_series.push_back({label, episode_revenue_series(rows)});
    efficiency_series.push_back({label, episode_efficiency_series(rows)});
  }
  write_text_file((fs::path(out) / "learning_ratio.svg").string(),
                  render_line_svg("Mean learning ratio per round",
                                  "learning ratio", ratio_series, rolling));
  write_text_file((fs::path(out) / "revenue.svg").string(),
                  render_line_svg("Revenue per round", "revenue",
                                  revenue_series, rolling));
  write_text_file((fs::path(out) / "efficiency.svg").string(),
                  render_line_svg("Efficiency ratio per round",
                                  "efficiency ratio", efficiency_series,
                                  rolling));
  std::cout << "wrote report to " << out << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Knapsack auction simulator"};
  app.require_subcommand(1);

  RunFlags run_flags;
  CLI::App* run_cmd = run_flags.attach(
      app.add_subcommand("run", "run one simulation configuration"));

  RunFlags sweep_flags;
  std::vector<std::uint64_t> sweep_seeds;
  int jobs = static_cast<int>(std::thread::hardware_concurrency());
  if (jobs < 1) jobs = 1;
  CLI::App* sweep_cmd = sweep_flags.attach(
      app.add_subcommand("sweep", "run a cross product of configurations"));
  sweep_cmd->add_option("--seeds", sweep_seeds, "master seeds, one run each");
  sweep_cmd->add_option("--jobs", jobs, "parallel cells");

  std::string check = "all";
  long long trials = 1000;
  long long budget = 10000;
  std::uint64_t verify_seed = 1;
  std::string verify_out;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "check the mechanism properties");
  verify_cmd->add_option("--check", check,
                         "up-dsic, gsp-untruthful, vcg-untruthful, "
                         "up-inefficiency, greedy-reference, monotonicity, "
                         "critical-price, dp-bne or all");
  verify_cmd->add_option("--trials", trials, "sampled instances per check");
  verify_cmd->add_option("--budget", budget, "search budget for counterexamples");
  verify_cmd->add_option("--seed", verify_seed, "search seed");
  verify_cmd->add_option("--out", verify_out, "write the JSON report here");

  std::vector<std::string> report_inputs;
  std::string report_out = default_out_dir();
  double report_window = 0.10;
  std::size_t report_rolling = 1000;
  CLI::App* report_cmd =
      app.add_subcommand("report", "summaries and SVG plots from bids.csv files");
  report_cmd->add_option("--in", report_inputs, "bids.csv files, one per rule")
      ->required();
  report_cmd->add_option("--out", report_out, "report output directory");
  report_cmd->add_option("--window", report_window,
                         "trailing fraction of episodes to summarize");
  report_cmd->add_option("--rolling", report_rolling,
                         "rolling-mean window for the plots");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run_cmd->parsed()) return cmd_run(run_cmd, run_flags);
    if (sweep_cmd->parsed())
      return cmd_sweep(sweep_cmd, sweep_flags, sweep_seeds, jobs);
    if (verify_cmd->parsed())
      return cmd_verify(check, trials, budget, verify_seed, verify_out);
    if (report_cmd->parsed())
      return cmd_report(report_inputs, report_out, report_window, report_rolling);
  } catch (const CLI::Error& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
