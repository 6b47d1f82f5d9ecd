#include <doctest.h>

#include <algorithm>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

#include "stream_t1/beam.hpp"

using namespace stream_t1;

namespace {

RunConfig small_config(int n = 8, int k = 2, int m = 2) {
  RunConfig c;
  c.total_chunks = n;
  c.beam_width = k;
  c.expansions = m;
  return c;
}

// Repeated argmax, lowest index first among equals.
std::vector<std::size_t> oracle_top_k(std::vector<double> keys, int k) {
  std::vector<std::size_t> out;
  std::vector<bool> taken(keys.size(), false);
  for (int r = 0; r < k; ++r) {
    std::size_t best = keys.size();
    for (std::size_t i = 0; i < keys.size(); ++i)
      if (!taken[i] && (best == keys.size() || keys[i] > keys[best])) best = i;
    taken[best] = true;
    out.push_back(best);
  }
  return out;
}

}  // namespace

TEST_CASE("strategy overrides") {
  const RunConfig c;
  const auto st = resolve_strategy(c, Strategy::StreamT1);
  CHECK(st.beam_width == 4);
  CHECK(st.expansions == 4);
  CHECK(st.beta == 0.5);
  CHECK(st.memory_mode == MemoryMode::Dynamic);
  CHECK(st.ranking == RankingKey::Combined);

  const auto g = resolve_strategy(c, Strategy::Greedy);
  CHECK(g.beam_width == 1);
  CHECK(g.expansions == 1);
  CHECK(g.beta == 0.0);
  CHECK(g.memory_mode == MemoryMode::StaticSink);

  const auto bp = resolve_strategy(c, Strategy::BeamPlain);
  CHECK(bp.beam_width == 4);
  CHECK(bp.beta == 0.0);
  CHECK(bp.memory_mode == MemoryMode::StaticSink);

  CHECK(resolve_strategy(c, Strategy::AblateNoise).beta == 0.0);
  CHECK(resolve_strategy(c, Strategy::AblateNoise).memory_mode == MemoryMode::Dynamic);
  CHECK(resolve_strategy(c, Strategy::AblateFusion).ranking == RankingKey::LongOnly);
  CHECK(resolve_strategy(c, Strategy::AblateMemory).memory_mode == MemoryMode::StaticSink);
  CHECK(resolve_strategy(c, Strategy::AblateMemory).beta == 0.5);
}

TEST_CASE("top-k examples") {
  const std::vector<double> keys = {0.3, 0.9, 0.5, 0.9, 0.1};
  CHECK(select_top_k(keys, 2) == std::vector<std::size_t>{1, 3});
  CHECK(select_top_k(keys, 3) == std::vector<std::size_t>{1, 3, 2});
  CHECK(select_top_k(keys, 5) == std::vector<std::size_t>{1, 3, 2, 0, 4});
  CHECK(select_top_k(keys, 0).empty());
  CHECK_THROWS_AS(select_top_k(keys, 6), std::invalid_argument);
  const std::vector<double> equal(7, 0.25);
  CHECK(select_top_k(equal, 3) == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("top-k matches a brute-force oracle") {
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream rng = split_rng(5, 6, static_cast<std::uint64_t>(trial));
    const int size = 1 + static_cast<int>(rng.uniform() * 30);
    const int k = 1 + static_cast<int>(rng.uniform() * size);
    std::vector<double> keys(static_cast<std::size_t>(size));
    for (double& x : keys)
      x = rng.uniform() < 0.5 ? std::floor(rng.uniform() * 4) : rng.gaussian();
    REQUIRE(select_top_k(keys, k) == oracle_top_k(keys, k));
  }
}

TEST_CASE("prune keeps survivors in rank order") {
  std::vector<BeamCandidate> pool(6);
  const double keys[] = {0.2, 0.8, 0.8, 0.1, 0.5, 0.9};
  for (int i = 0; i < 6; ++i) {
    pool[i].candidate_id = 10 + i;
    pool[i].ranking_key = keys[i];
  }
  const BeamState s = prune(pool, 3, 4);
  REQUIRE(s.survivors.size() == 3);
  CHECK(s.survivors[0].candidate_id == 15);
  CHECK(s.survivors[1].candidate_id == 11);
  CHECK(s.survivors[2].candidate_id == 12);
  CHECK(s.chunk_index == 4);
  CHECK_THROWS_AS(prune(pool, 7, 0), std::invalid_argument);
}

TEST_CASE("beam bookkeeping on a small run") {
  const RunConfig c = small_config(8, 2, 3);
  const RunResult r = run_strategy(c, Strategy::StreamT1);
  CHECK(r.log.size() == 8 * 2);
  CHECK(r.counters.generator_calls == 8 * 2 * 3);
  CHECK(r.counters.short_reward_calls == r.counters.generator_calls);
  CHECK(r.trajectory.chunks.size() == 8);
  CHECK(r.trajectory.records.size() == 8);

  std::map<std::pair<int, int>, const ChunkLogRecord*> by_id;
  for (const auto& rec : r.log) {
    CHECK(by_id.emplace(std::make_pair(rec.chunk_index, rec.candidate_id), &rec).second);
    CHECK(rec.generator_calls_so_far == (rec.chunk_index + 1) * 6);
    if (rec.chunk_index == 0) {
      CHECK(rec.parent_id == -1);
      CHECK(rec.lineage_id == rec.candidate_id);
    } else {
      const auto it = by_id.find({rec.chunk_index - 1, rec.parent_id});
      REQUIRE(it != by_id.end());
      CHECK(it->second->lineage_id == rec.lineage_id);
      CHECK(rec.cumulative_final == doctest::Approx(it->second->cumulative_final + rec.s_final));
    }
  }
  // Within one step, survivors are ordered by their ranking key.
  for (std::size_t i = 0; i + 1 < r.log.size(); i += 2)
    CHECK(r.log[i].s_final >= r.log[i + 1].s_final);
}

TEST_CASE("chunk 0 expands the root into K * M candidates") {
  const RunConfig c = small_config(3, 2, 3);
  const Environment env = make_environment(c);
  BeamSearch search(env, c, resolve_strategy(c, Strategy::StreamT1));
  const auto first = search.expand(search.initial_state());
  CHECK(first.size() == 6);
  std::set<int> ids;
  for (const auto& cand : first) ids.insert(cand.candidate_id);
  CHECK(ids.size() == 6);
  BeamState s = search.step(search.initial_state());
  CHECK(s.survivors.size() == 2);
  CHECK(search.expand(s).size() == 6);
  s = search.step(s);
  s = search.step(s);
  CHECK(s.terminal);
  CHECK_THROWS_AS(search.expand(s), std::logic_error);
}

TEST_CASE("best_of_n spends K * M rollouts and one rollout equals greedy") {
  RunConfig c = small_config(6, 2, 2);
  const RunResult bon = run_strategy(c, Strategy::BestOfN);
  const RunResult st = run_strategy(c, Strategy::StreamT1);
  CHECK(bon.counters.generator_calls == st.counters.generator_calls);
  CHECK(bon.log.size() == 4 * 6);
  CHECK(bon.log.back().generator_calls_so_far == 24);

  c.bon_n = 1;
  const RunResult one = run_strategy(c, Strategy::BestOfN);
  const RunResult greedy = run_strategy(c, Strategy::Greedy);
  CHECK(format_log(one.log, LogFormat::Jsonl) == format_log(greedy.log, LogFormat::Jsonl));
  CHECK(one.trajectory.cumulative_final == greedy.trajectory.cumulative_final);
}

TEST_CASE("best_of_n keeps the best rollout") {
  const RunConfig c = small_config(6, 2, 2);
  const RunResult bon = run_strategy(c, Strategy::BestOfN);
  double best = -1.0;
  for (const auto& rec : bon.log)
    if (rec.chunk_index == 5) best = std::max(best, rec.cumulative_final);
  CHECK(bon.trajectory.cumulative_final == best);
}

TEST_CASE("runs are deterministic") {
  const RunConfig c = small_config(10, 3, 2);
  const RunResult a = run_strategy(c, Strategy::StreamT1);
  const RunResult b = run_strategy(c, Strategy::StreamT1);
  CHECK(format_log(a.log, LogFormat::Jsonl) == format_log(b.log, LogFormat::Jsonl));
  RunConfig d = c;
  d.seed = 43;
  CHECK(format_log(run_strategy(d, Strategy::StreamT1).log, LogFormat::Jsonl) !=
        format_log(a.log, LogFormat::Jsonl));
}

TEST_CASE("replay reconstructs the winning lineage from the log alone") {
  for (Strategy s : {Strategy::StreamT1, Strategy::BeamPlain, Strategy::AblateFusion,
                     Strategy::BestOfN}) {
    CAPTURE(to_string(s));
    const RunConfig c = small_config(16, 2, 2);
    const RunResult r = run_strategy(c, s);
    const auto lineage = winning_lineage(r.log);
    CHECK(lineage == r.trajectory.records);
    const Trajectory t = replay_lineage(c, s, lineage);
    REQUIRE(t.chunks.size() == r.trajectory.chunks.size());
    for (std::size_t i = 0; i < t.chunks.size(); ++i)
      CHECK(t.chunks[i].frames == r.trajectory.chunks[i].frames);
    CHECK(t.cumulative_final == r.trajectory.cumulative_final);
  }
}

TEST_CASE("replay rejects a tampered log") {
  const RunConfig c = small_config(14, 2, 2);
  const RunResult r = run_strategy(c, Strategy::StreamT1);
  auto lineage = winning_lineage(r.log);
  lineage[5].s_short += 1e-9;
  CHECK_THROWS_AS(replay_lineage(c, Strategy::StreamT1, lineage), std::runtime_error);
  lineage = winning_lineage(r.log);
  lineage[13].routing_decision = lineage[13].routing_decision == RoutingDecision::Discard
                                     ? RoutingDecision::EmaSink
                                     : RoutingDecision::Discard;
  CHECK_THROWS_AS(replay_lineage(c, Strategy::StreamT1, lineage), std::runtime_error);
  lineage = winning_lineage(r.log);
  lineage[3].noise_seed_path = "42/3/99";
  CHECK_THROWS_AS(replay_lineage(c, Strategy::StreamT1, lineage), std::runtime_error);

  auto broken = r.log;
  broken.back().parent_id = 999;
  broken[broken.size() - 2].parent_id = 999;
  CHECK_THROWS_AS(winning_lineage(broken), std::runtime_error);
}

TEST_CASE("static sink equals dynamic memory with a closed quality gate") {
  RunConfig c = small_config(20, 2, 2);
  c.tau_short = std::numeric_limits<double>::infinity();
  const RunResult dyn = run_strategy(c, Strategy::StreamT1);
  const RunResult st = run_strategy(c, Strategy::AblateMemory);
  CHECK(format_log(dyn.log, LogFormat::Jsonl) == format_log(st.log, LogFormat::Jsonl));
}

TEST_CASE("the noise ablation differs only through beta") {
  RunConfig c = small_config(10, 2, 2);
  c.beta = 0.0;
  CHECK(format_log(run_strategy(c, Strategy::StreamT1).log, LogFormat::Jsonl) ==
        format_log(run_strategy(c, Strategy::AblateNoise).log, LogFormat::Jsonl));
}

TEST_CASE("survivor caches are independent forks") {
  RunConfig c = small_config(16, 3, 2);
  c.tau_short = -1.0;  // every eviction leaves the window through the sink
  c.tau_long = -1.0;
  const Environment env = make_environment(c);
  BeamSearch search(env, c, resolve_strategy(c, Strategy::StreamT1));
  BeamState s = search.initial_state();
  while (!s.terminal) s = search.step(s);
  for (const auto& sv : s.survivors)
    CHECK(sv.cache.sink().size() == 3u + static_cast<std::size_t>(sv.cache.append_count()));
  // Shared history does not alias: mutating one survivor's cache leaves the others intact.
  auto& a = s.survivors[0];
  const auto before = s.survivors[1].cache.sink();
  a.cache.evict_and_route(a.kv, a.scores);
  CHECK(s.survivors[1].cache.sink() == before);
}

TEST_CASE("summary counters partition the evictions") {
  const RunConfig c = small_config(30, 2, 2);
  for (Strategy s : {Strategy::StreamT1, Strategy::AblateMemory, Strategy::Greedy}) {
    const RunResult r = run_strategy(c, s);
    const auto evictions = std::count_if(r.trajectory.records.begin(), r.trajectory.records.end(),
                                         [](const auto& x) { return x.evicted_chunk >= 0; });
    CHECK(r.summary.appends + r.summary.ema_updates + r.summary.discards == evictions);
    CHECK(evictions == 30 - 3 - 9);
    if (s != Strategy::StreamT1) CHECK(r.summary.discards == evictions);
  }
}
