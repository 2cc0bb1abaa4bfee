#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>

#include "macs/harness.hpp"

using namespace macs;

TEST_CASE("composition grid covers the 10 mixes exactly once") {
  auto grid = composition_grid();
  REQUIRE(grid.size() == 10);
  std::set<Composition> seen(grid.begin(), grid.end());
  CHECK(seen.size() == 10);
  for (const auto& c : grid) {
    CHECK(c[0] + c[1] + c[2] == 3);
    auto ps = composition_personalities(c);
    CHECK(ps.size() == 3);
    int s = 0, g = 0, n = 0;
    for (Personality p : ps) {
      s += p == Personality::Stubborn;
      g += p == Personality::Suggestible;
      n += p == Personality::Neutral;
    }
    CHECK(s == c[0]);
    CHECK(g == c[1]);
    CHECK(n == c[2]);
  }
  CHECK(composition_label({2, 0, 1}) == "2S/0G/1N");
  CHECK_THROWS_AS(composition_personalities({1, 1, 2}), std::invalid_argument);
}

TEST_CASE("metrics oracle on a hand-built outcome list") {
  // 3 consensus episodes at rounds 2, 4, 6 and one failure at 10
  std::vector<EpisodeOutcome> eps = {{true, 2}, {true, 4}, {true, 6}, {false, 10}};
  auto m = compute_metrics(eps, 10);
  CHECK(m.n == 4);
  CHECK(m.consensus_rate == doctest::Approx(0.75));
  CHECK(m.avg_rounds == doctest::Approx(5.5));
  // population variance: mean 5.5, deviations -3.5,-1.5,0.5,4.5
  const double var = (3.5 * 3.5 + 1.5 * 1.5 + 0.5 * 0.5 + 4.5 * 4.5) / 4.0;
  CHECK(m.std_rounds == doctest::Approx(std::sqrt(var)));
  // a failed episode must be charged the full horizon
  CHECK_THROWS_AS(compute_metrics({{false, 7}}, 10), std::invalid_argument);
}

TEST_CASE("round histogram counts every episode once") {
  std::vector<EpisodeOutcome> eps = {{true, 0}, {true, 3}, {true, 3}, {false, 10}};
  auto h = round_histogram(eps);
  CHECK(h[0] == 1);
  CHECK(h[3] == 2);
  CHECK(h[10] == 1);
  std::size_t total = 0;
  for (std::size_t v : h) total += v;
  CHECK(total == eps.size());
}

TEST_CASE("no-attacker baseline reaches consensus in the expected band") {
  HarnessContext ctx;
  auto grid = composition_grid();
  std::vector<EpisodeOutcome> pooled;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    auto eps = run_setting(AttackSetting::NoAttacker, grid[c], static_cast<int>(c), 30,
                           777, ctx);
    pooled.insert(pooled.end(), eps.begin(), eps.end());
  }
  auto m = compute_metrics(pooled, 10);
  CHECK(m.consensus_rate > 0.85);
  CHECK(m.avg_rounds > 3.0);
  CHECK(m.avg_rounds < 6.5);
}

TEST_CASE("heuristic attacker hurts consensus relative to the baseline") {
  HarnessContext ctx;
  Composition mix = {0, 1, 2};  // suggestible-leaning mixes are attackable
  auto base = compute_metrics(
      run_setting(AttackSetting::NoAttacker, mix, 8, 120, 101, ctx), 10);
  auto attacked = compute_metrics(
      run_setting(AttackSetting::Heuristic, mix, 8, 120, 101, ctx), 10);
  CHECK(attacked.consensus_rate <= base.consensus_rate + 0.05);
  CHECK(attacked.avg_rounds >= base.avg_rounds - 0.5);
}

TEST_CASE("run_setting is deterministic and rejects missing artifacts") {
  HarnessContext ctx;
  Composition mix = {1, 1, 1};
  auto a = run_setting(AttackSetting::Heuristic, mix, 9, 20, 5, ctx);
  auto b = run_setting(AttackSetting::Heuristic, mix, 9, 20, 5, ctx);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].consensus == b[i].consensus);
    CHECK(a[i].rounds_used == b[i].rounds_used);
  }
  CHECK_THROWS_AS(run_setting(AttackSetting::Rl, mix, 0, 5, 5, ctx),
                  std::invalid_argument);
  CHECK_THROWS_AS(run_setting(AttackSetting::GuessedRl, mix, 0, 5, 5, ctx),
                  std::invalid_argument);
}

TEST_CASE("evaluation csv layout and byte-identical reruns") {
  HarnessContext ctx;
  auto r1 = evaluate_grid({AttackSetting::NoAttacker, AttackSetting::Heuristic}, 5, 31,
                          ctx);
  auto r2 = evaluate_grid({AttackSetting::NoAttacker, AttackSetting::Heuristic}, 5, 31,
                          ctx);
  const auto dir = std::filesystem::temp_directory_path();
  const auto p1 = (dir / "macs_eval_a.csv").string();
  const auto p2 = (dir / "macs_eval_b.csv").string();
  write_evaluation_csv(p1, r1);
  write_evaluation_csv(p2, r2);
  std::ifstream f1(p1), f2(p2);
  std::stringstream s1, s2;
  s1 << f1.rdbuf();
  s2 << f2.rdbuf();
  CHECK(s1.str() == s2.str());
  // header + 2 settings * (10 compositions + overall)
  int lines = 0;
  std::string line;
  std::istringstream is(s1.str());
  while (std::getline(is, line))
    if (!line.empty()) ++lines;
  CHECK(lines == 23);
  std::filesystem::remove(p1);
  std::filesystem::remove(p2);

  auto table = format_evaluation_table(r1);
  CHECK(table.find("no_attacker") != std::string::npos);
  CHECK(table.find("overall") != std::string::npos);
  CHECK(table.find("1S/1G/1N") != std::string::npos);
}

TEST_CASE("corpus collection cycles compositions deterministically") {
  auto a = collect_corpus(30, 9);
  auto b = collect_corpus(30, 9);
  REQUIRE(a.size() == 30);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].rounds.size() == b[i].rounds.size());
    // every episode carries 3 benign + 1 malicious agent
    REQUIRE(a[i].rounds[0].agents.size() == 4);
    CHECK(a[i].rounds[0].agents[3].personality == Personality::Malicious);
  }
  // compositions follow the grid cycle
  auto grid = composition_grid();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto expect = composition_personalities(grid[i % grid.size()]);
    for (int j = 0; j < 3; ++j)
      CHECK(a[i].rounds[0].agents[static_cast<std::size_t>(j)].personality ==
            expect[static_cast<std::size_t>(j)]);
  }
}
