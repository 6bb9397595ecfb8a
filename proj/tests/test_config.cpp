#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "knapsack/config.hpp"

using namespace knapsack;

TEST_CASE("lab preset matches the laboratory environment") {
  const auto p = preset("lab");
  REQUIRE(std::holds_alternative<SimConfig>(p));
  const SimConfig c = std::get<SimConfig>(p);
  CHECK(c.rule == PaymentRule::kUP);
  CHECK(c.n_agents == 7);
  CHECK(c.capacity == 36);
  CHECK(c.values.lo == 1);
  CHECK(c.values.hi == 10);
  CHECK(c.sizes.lo == 4);
  CHECK(c.sizes.hi == 10);
  CHECK(c.sizes.mode == SizeMode::kWithoutReplacement);
  CHECK(c.episodes == 20);
  CHECK(c.agent.exploration.pure_exploration_episodes == 0);
  CHECK(c.agent.alpha == doctest::Approx(0.1));
  CHECK(c.agent.loser_reward == doctest::Approx(-1.0));
  CHECK(c.agent.action_grid.size() == 21);
  CHECK_NOTHROW(c.validate());
}

TEST_CASE("ai preset extends the lab run") {
  const SimConfig c = std::get<SimConfig>(preset("ai"));
  CHECK(c.episodes == 100000);
  CHECK(c.agent.exploration.pure_exploration_episodes == 1000);
  CHECK(c.n_agents == 7);
  CHECK(c.capacity == 36);
}

TEST_CASE("comparative statics presets enumerate rule x capacity cells") {
  const SweepSpec seven = std::get<SweepSpec>(preset("cs-7"));
  const auto cells = seven.cells();
  REQUIRE(cells.size() == 9);
  std::set<std::string> labels;
  std::set<int> caps;
  for (const auto& cell : cells) {
    labels.insert(cell.label);
    caps.insert(cell.config.capacity);
    CHECK(cell.config.n_agents == 7);
    CHECK_NOTHROW(cell.config.validate());
  }
  CHECK(labels.size() == 9);
  CHECK(caps == std::set<int>{30, 36, 40});
  CHECK(cells.front().label == "UP_K30_n7_s1");

  const SweepSpec ten = std::get<SweepSpec>(preset("cs-10"));
  CHECK(ten.base.n_agents == 10);
  CHECK(ten.base.sizes.lo == 1);
  CHECK(ten.base.sizes.hi == 10);
  CHECK(ten.base.sizes.mode == SizeMode::kWithoutReplacement);
  CHECK(ten.cells().size() == 9);

  CHECK_THROWS_AS(preset("nope"), std::invalid_argument);
}

TEST_CASE("sweep seeds multiply the cell count") {
  SweepSpec sweep = std::get<SweepSpec>(preset("cs-7"));
  sweep.seeds = {1, 2, 3};
  CHECK(sweep.cells().size() == 27);
}

TEST_CASE("size draws without replacement are distinct and in range") {
  std::mt19937_64 rng(5);
  SizeSampler sampler{4, 10, SizeMode::kWithoutReplacement};
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<int> full = sampler.sample(7, rng);
    std::sort(full.begin(), full.end());
    CHECK(full == std::vector<int>{4, 5, 6, 7, 8, 9, 10});

    std::vector<int> part = sampler.sample(5, rng);
    std::set<int> unique(part.begin(), part.end());
    CHECK(unique.size() == 5);
    for (int s : part) {
      CHECK(s >= 4);
      CHECK(s <= 10);
    }
  }
  CHECK_THROWS_AS(sampler.sample(8, rng), std::invalid_argument);
}

TEST_CASE("size draws with replacement can repeat") {
  std::mt19937_64 rng(5);
  SizeSampler sampler{1, 2, SizeMode::kWithReplacement};
  const std::vector<int> draw = sampler.sample(3, rng);
  std::set<int> unique(draw.begin(), draw.end());
  CHECK(unique.size() < draw.size());  // pigeonhole: 3 draws from 2 sizes
  for (int s : draw) {
    CHECK(s >= 1);
    CHECK(s <= 2);
  }
}

TEST_CASE("bid grid enumerates min..max by step") {
  BidGrid grid;
  CHECK(grid.size() == 21);
  const auto values = grid.values();
  CHECK(values.front() == Rational(0));
  CHECK(values.back() == Rational(20));
  CHECK(grid.value_at(5) == Rational(5));
  CHECK(grid.contains(7));
  CHECK_FALSE(grid.contains(Rational(7, 2)));
  CHECK_FALSE(grid.contains(21));
  CHECK_FALSE(grid.contains(-1));

  BidGrid fine{0, 1, Rational(1, 4)};
  CHECK(fine.size() == 5);
  CHECK(fine.contains(Rational(3, 4)));
  CHECK_FALSE(fine.contains(Rational(2, 5)));

  BidGrid bad{0, 10, 0};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  BidGrid backwards{5, 2, 1};
  CHECK_THROWS_AS(backwards.validate(), std::invalid_argument);
}

TEST_CASE("epsilon schedule: pure exploration, then decay to the final value") {
  ExplorationSchedule s;
  s.pure_exploration_episodes = 10;
  const long long total = 111;  // decay spans episodes 10..110

  for (long long e = 0; e < 10; ++e) CHECK(epsilon_at(e, s, total) == 1.0);
  CHECK(epsilon_at(10, s, total) == doctest::Approx(1.0));
  CHECK(epsilon_at(60, s, total) == doctest::Approx(0.5));
  CHECK(epsilon_at(110, s, total) == 0.0);
  CHECK(epsilon_at(200, s, total) == 0.0);
  CHECK_THROWS_AS(epsilon_at(-1, s, total), std::invalid_argument);

  // Degenerate span: everything after the pure phase is final.
  CHECK(epsilon_at(5, s, 10) == 1.0);
  CHECK(epsilon_at(10, s, 10) == 0.0);

  ExplorationSchedule exp = s;
  exp.decay = DecayShape::kExponential;
  exp.final_eps = 0.05;
  double prev = 1.0;
  for (long long e = 10; e < 110; ++e) {
    const double eps = epsilon_at(e, exp, total);
    CHECK(eps <= prev);
    CHECK(eps >= 0.05);
    prev = eps;
  }
}

TEST_CASE("lab environment draws oversubscribe by construction") {
  SimConfig c = std::get<SimConfig>(preset("lab"));
  std::mt19937_64 rng(42);
  long long resamples = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const EnvironmentDraw draw = sample_environment(c, rng, &resamples);
    REQUIRE(draw.sizes.size() == 7);
    REQUIRE(draw.values.size() == 7);
    std::vector<int> sorted = draw.sizes;
    std::sort(sorted.begin(), sorted.end());
    CHECK(sorted == std::vector<int>{4, 5, 6, 7, 8, 9, 10});
    for (int v : draw.values) {
      CHECK(v >= 1);
      CHECK(v <= 10);
    }
    const AuctionInstance instance = instance_from_draw(c, draw);
    CHECK_NOTHROW(instance.validate());
  }
  CHECK(resamples == 0);  // size sum is always 49 > 36
}

TEST_CASE("infeasible draws are resampled and counted") {
  SimConfig c = std::get<SimConfig>(preset("lab"));
  c.n_agents = 2;
  c.capacity = 3;
  c.sizes = SizeSampler{1, 2, SizeMode::kWithReplacement};
  std::mt19937_64 rng(1);
  long long resamples = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const EnvironmentDraw draw = sample_environment(c, rng, &resamples);
    CHECK(draw.sizes == std::vector<int>{2, 2});  // the only oversubscribing draw
  }
  CHECK(resamples > 0);
}

TEST_CASE("infeasible draws reject when resampling is disabled") {
  SimConfig c = std::get<SimConfig>(preset("lab"));
  c.n_agents = 2;
  c.capacity = 2;
  c.sizes = SizeSampler{1, 1, SizeMode::kWithReplacement};
  c.resample_infeasible = false;
  std::mt19937_64 rng(1);
  CHECK_THROWS_AS(sample_environment(c, rng, nullptr), std::runtime_error);
}

TEST_CASE("config validation rejects malformed settings") {
  const SimConfig good = std::get<SimConfig>(preset("lab"));
  CHECK_NOTHROW(good.validate());

  SimConfig c = good;
  c.n_agents = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.capacity = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.episodes = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.values = ValueDistribution{5, 2};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.values = ValueDistribution{-1, 5};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.sizes.lo = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.sizes = SizeSampler{4, 36, SizeMode::kWithReplacement};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);  // size can reach capacity

  c = good;
  c.n_agents = 8;  // support 4..10 only holds seven distinct sizes
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.agent_seed_override = {1, 2, 3};
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.agent.alpha = 1.5;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);

  c = good;
  c.agent.action_grid.step = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}

TEST_CASE("named rng streams are stable, distinct, and uncorrelated") {
  RngStreams a(7), b(7), other(8);
  CHECK(a.derive_seed("env") == b.derive_seed("env"));
  CHECK(a.derive_seed("env") != a.derive_seed("tie"));
  CHECK(a.derive_seed("agent:0") != a.derive_seed("agent:1"));
  CHECK(a.derive_seed("env") != other.derive_seed("env"));

  std::mt19937_64 env = a.stream("env");
  std::mt19937_64 tie = a.stream("tie");
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const int n = 10000;
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    const double x = unit(env);
    const double y = unit(tie);
    sx += x;
    sy += y;
    sxx += x * x;
    syy += y * y;
    sxy += x * y;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double vx = sxx / n - (sx / n) * (sx / n);
  const double vy = syy / n - (sy / n) * (sy / n);
  const double corr = cov / std::sqrt(vx * vy);
  CHECK(std::abs(corr) < 0.05);
}
