#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "stream_t1/config.hpp"
#include "stream_t1/generator.hpp"
#include "stream_t1/memory_sink.hpp"
#include "stream_t1/noise.hpp"
#include "stream_t1/reward.hpp"
#include "stream_t1/run_log.hpp"

namespace stream_t1 {

/// Everything a run needs that does not change between chunks.
struct Environment {
  SceneScript script;
  std::shared_ptr<const ShortRewardModel> short_model;
  std::shared_ptr<const LongRewardModel> long_model;
  ToyGenerator generator;
  FusionParams fusion;
  SinkParams sink;
  int reward_window = 10;

  Conditioning conditioning(int chunk_index) const {
    return {script.prompt(chunk_index), script.attractor(chunk_index)};
  }
};

/// Builds the scene script, synthetic oracles and generator for `config`.
Environment make_environment(const RunConfig& config);

/// Search parameters after applying a strategy's overrides.
struct StrategySettings {
  int beam_width = 4;
  int expansions = 4;
  double beta = 0.5;
  MemoryMode memory_mode = MemoryMode::Dynamic;
  RankingKey ranking = RankingKey::Combined;
  /// Added to the in-step candidate index to form the rng candidate index.
  int stream_offset = 0;
};

/// Overrides per strategy: greedy is K = M = 1 with beta = 0 and a static
/// sink; beam_plain keeps K, M but uses beta = 0 and a static sink; the
/// ablations each switch off one mechanism. best_of_n resolves to the greedy
/// settings of a single rollout.
StrategySettings resolve_strategy(const RunConfig& config, Strategy strategy);

/// One accepted chunk of a lineage. Nodes are shared between lineages that
/// have a common prefix.
struct LineageNode {
  LatentChunk chunk;
  NoiseChunk noise;
  RewardScores scores;
  GateFlags flags;
  std::optional<Eviction> eviction;
  int candidate_id = 0;
  int lineage_id = 0;
  int parent_id = -1;
  double cumulative_final = 0.0;
  std::shared_ptr<const LineageNode> parent;
};

struct BeamCandidate {
  int candidate_id = 0;
  int parent_id = -1;
  int lineage_id = 0;
  std::uint64_t stream_index = 0;
  NoiseChunk noise;
  LatentChunk chunk;
  KVEntry kv;
  SinkCache cache;  // forked from the parent; receives `kv` once accepted
  RewardScores scores;
  double ranking_key = 0.0;
  double cumulative_final = 0.0;
  std::shared_ptr<const LineageNode> history;  // parent's lineage, null at chunk 0
  std::shared_ptr<const LineageNode> node;     // set once accepted
};

struct BeamState {
  std::vector<BeamCandidate> survivors;
  int chunk_index = 0;  // next chunk to generate
  bool terminal = false;
};

struct Counters {
  std::int64_t generator_calls = 0;
  std::int64_t short_reward_calls = 0;
  std::int64_t long_reward_calls = 0;
};

/// Indices of the top `k` keys, best first. Equal keys keep input order.
/// Throws std::invalid_argument when fewer than `k` keys are given.
std::vector<std::size_t> select_top_k(std::span<const double> keys, int k);

/// Keeps the top `k` candidates by ranking key. Survivors are not yet
/// inserted into their caches.
BeamState prune(std::vector<BeamCandidate> candidates, int k, int chunk_index);

/// Chunk-level beam search over one environment.
class BeamSearch {
 public:
  BeamSearch(const Environment& env, const RunConfig& config, StrategySettings settings);

  BeamState initial_state() const { return {}; }

  /// K*M candidates (K*M children of the empty root at chunk 0), generated
  /// and scored but not pruned.
  std::vector<BeamCandidate> expand(const BeamState& state);

  /// expand -> prune -> insert each survivor's KV entry into its own cache.
  /// Appends one record per survivor to `log` when given.
  BeamState step(const BeamState& state, std::vector<ChunkLogRecord>* log = nullptr);

  /// Runs all chunks and returns the final state.
  BeamState run(std::vector<ChunkLogRecord>* log = nullptr);

  const Counters& counters() const { return counters_; }
  const StrategySettings& settings() const { return settings_; }

  /// Candidate scores for a chunk extending `history`.
  RewardScores score(const LatentChunk& chunk, const LineageNode* history);

 private:
  BeamCandidate make_candidate(const BeamCandidate* parent, int index, int chunk_index);

  const Environment& env_;
  std::uint64_t seed_;
  int total_chunks_;
  Eigen::Index frames_;
  StrategySettings settings_;
  PropagationParams propagation_;
  SinkCache root_cache_;
  Counters counters_;
};

/// Accepted chunks of one lineage, oldest first.
struct Trajectory {
  std::vector<LatentChunk> chunks;
  std::vector<ChunkLogRecord> records;
  double cumulative_final = 0.0;
};

struct RunResult {
  Strategy strategy = Strategy::StreamT1;
  Trajectory trajectory;
  std::vector<ChunkLogRecord> log;
  Counters counters;
  SummaryRow summary;
};

/// Survivor with the highest cumulative_final (earliest on ties).
const BeamCandidate& best_survivor(const BeamState& state);

Trajectory trajectory_of(const LineageNode& last);

RunResult run_strategy(const RunConfig& config, Strategy strategy);
RunResult run_strategy(const Environment& env, const RunConfig& config, Strategy strategy);
inline RunResult run(const RunConfig& config) { return run_strategy(config, config.strategy); }

/// Records of the winning lineage (highest final cumulative_final, earliest
/// on ties), oldest first, found by following parent_id links. Throws if a
/// link does not resolve.
std::vector<ChunkLogRecord> winning_lineage(std::span<const ChunkLogRecord> log);

/// Regenerates a lineage from its log records alone: noise streams from
/// noise_seed_path, then generation, scoring and routing. Throws
/// std::runtime_error if any regenerated score or routing decision differs
/// from the log.
Trajectory replay_lineage(const RunConfig& config, Strategy strategy,
                          std::span<const ChunkLogRecord> lineage);

}  // namespace stream_t1
