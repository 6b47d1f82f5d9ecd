#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "stream_t1/experiment.hpp"

using namespace stream_t1;

namespace {

RunConfig tiny() {
  RunConfig c;
  c.total_chunks = 6;
  c.beam_width = 2;
  c.expansions = 2;
  c.compare_seeds = 3;
  return c;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

}  // namespace

TEST_CASE("strategy lists") {
  CHECK(parse_strategy_list("baselines") == baseline_strategies());
  CHECK(parse_strategy_list("all").size() == 7);
  CHECK(parse_strategy_list(" greedy, stream_t1 ,greedy") ==
        std::vector<Strategy>{Strategy::Greedy, Strategy::StreamT1});
  CHECK_THROWS_AS(parse_strategy_list("greedy,nope"), ConfigError);
  CHECK_THROWS_AS(parse_strategy_list(","), ConfigError);
}

TEST_CASE("compare emits one row per strategy and seed plus means") {
  const Comparison c = compare(tiny(), baseline_strategies());
  CHECK(c.rows.size() == 4 * 3);
  CHECK(c.means.size() == 4);
  for (const auto& m : c.means) CHECK(m.seed == "mean");
  CHECK(c.rows[0].seed == "42");
  CHECK(c.rows[2].seed == "44");

  double bon = 0, st = 0;
  for (const auto& r : c.rows) {
    if (r.strategy == "best_of_n") bon = r.generator_calls;
    if (r.strategy == "stream_t1") st = r.generator_calls;
  }
  CHECK(bon == st);
  CHECK(st == 6 * 4);

  double sum = 0;
  for (const auto& r : c.rows)
    if (r.strategy == "greedy") sum += r.cumulative_final;
  CHECK(c.means[0].cumulative_final == doctest::Approx(sum / 3));

  const std::string table = format_comparison(c);
  CHECK(std::count(table.begin(), table.end(), '\n') == 1 + 12 + 4);
}

TEST_CASE("mismatched budgets are rejected") {
  RunConfig c = tiny();
  c.bon_n = 3;
  CHECK_THROWS_AS(compare(c, {Strategy::StreamT1, Strategy::BestOfN}), BudgetMismatch);
  CHECK_NOTHROW(compare(c, {Strategy::Greedy, Strategy::StreamT1}));
}

TEST_CASE("write_run is deterministic and counts add up") {
  RunConfig c = tiny();
  c.total_chunks = 16;
  const auto dir = std::filesystem::temp_directory_path() / "stream_t1_test_run";
  std::filesystem::remove_all(dir);
  c.output_dir = (dir / "a").string();
  const auto first = write_run(c, run(c));
  c.output_dir = (dir / "b").string();
  const auto second = write_run(c, run(c));
  REQUIRE(first.size() == 2);
  CHECK(first[0].filename() == "log.jsonl");
  CHECK(slurp(first[0]) == slurp(second[0]));
  CHECK(slurp(first[1]) == slurp(second[1]));

  c.log_format = LogFormat::Tsv;
  c.output_dir = (dir / "c").string();
  CHECK(write_run(c, run(c))[0].filename() == "log.tsv");
  std::filesystem::remove_all(dir);
}

TEST_CASE("small run is fast") {
  RunConfig c;
  c.total_chunks = 8;
  c.beam_width = 2;
  c.expansions = 2;
  const auto t0 = std::chrono::steady_clock::now();
  run(c);
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(10));
}

TEST_CASE("verify passes on a clean build") {
  const auto t0 = std::chrono::steady_clock::now();
  const auto results = verify();
  CHECK(std::chrono::steady_clock::now() - t0 < std::chrono::seconds(60));
  CHECK(results.size() >= 6);
  for (const auto& r : results) {
    INFO(format_property(r));
    CHECK(r.passed);
  }
}

TEST_CASE("an injected alpha > 1 fails sink conservation by name") {
  VerifyOptions opts;
  opts.inject_alpha = 1.5;
  for (const auto& r : verify(opts)) {
    if (r.name == "sink-conservation") {
      CHECK_FALSE(r.passed);
      CHECK(format_property(r).rfind("FAIL sink-conservation", 0) == 0);
    } else {
      CHECK(r.passed);
    }
  }
}
