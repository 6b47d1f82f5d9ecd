#include "stream_t1/beam.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>

namespace stream_t1 {

Environment make_environment(const RunConfig& config) {
  SceneScript script = config.scene_file.empty()
                           ? SceneScript::default_script(config.dim, config.total_chunks)
                           : SceneScript::load(config.scene_file).with_total_chunks(config.total_chunks);
  if (script.dim() != config.dim)
    throw ConfigError("scene_file", 0, "scene dimension does not match dim");

  SinkParams sink;
  sink.attn_window = config.attn_window;
  sink.sink_size = config.sink_size;
  sink.alpha = config.alpha;
  sink.tau_short = config.tau_short;
  sink.tau_long = config.tau_long;
  sink.mode = config.memory_mode;
  sink.short_mean = config.short_mean;
  sink.short_mean_decay = config.short_mean_decay;

  DenoiserParams dp;
  dp.attractor_pull = config.attractor_pull;
  dp.pull_floor = config.pull_floor;
  dp.renoise_eta = config.renoise_eta;
  dp.sink_attention_bias = config.sink_attention_bias;
  dp.content_variance = config.content_variance;

  auto short_model = synthetic_short_oracle(script);
  auto long_model = synthetic_long_oracle(script, config.oracle_penalty);
  return Environment{std::move(script),
                     std::move(short_model),
                     std::move(long_model),
                     ToyGenerator(DenoiserWeights::generate(config.weights_seed, config.dim),
                                  NoiseSchedule(config.sigma_schedule), dp),
                     FusionParams{config.tau, config.total_chunks},
                     sink,
                     config.reward_window};
}

StrategySettings resolve_strategy(const RunConfig& config, Strategy strategy) {
  StrategySettings s;
  s.beam_width = config.beam_width;
  s.expansions = config.expansions;
  s.beta = config.beta;
  s.memory_mode = config.memory_mode;
  s.ranking = config.fusion;
  switch (strategy) {
    case Strategy::StreamT1:
      break;
    case Strategy::Greedy:
    case Strategy::BestOfN:
      s.beam_width = 1;
      s.expansions = 1;
      s.beta = 0.0;
      s.memory_mode = MemoryMode::StaticSink;
      break;
    case Strategy::BeamPlain:
      s.beta = 0.0;
      s.memory_mode = MemoryMode::StaticSink;
      break;
    case Strategy::AblateNoise:
      s.beta = 0.0;
      break;
    case Strategy::AblateFusion:
      s.ranking = RankingKey::LongOnly;
      break;
    case Strategy::AblateMemory:
      s.memory_mode = MemoryMode::StaticSink;
      break;
  }
  return s;
}

std::vector<std::size_t> select_top_k(std::span<const double> keys, int k) {
  if (k < 0 || static_cast<std::size_t>(k) > keys.size())
    throw std::invalid_argument("prune: fewer candidates (" + std::to_string(keys.size()) +
                                ") than beam width " + std::to_string(k));
  std::vector<std::size_t> order(keys.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return keys[a] > keys[b]; });
  order.resize(static_cast<std::size_t>(k));
  return order;
}

BeamState prune(std::vector<BeamCandidate> candidates, int k, int chunk_index) {
  std::vector<double> keys;
  keys.reserve(candidates.size());
  for (const auto& c : candidates) keys.push_back(c.ranking_key);
  BeamState state;
  state.chunk_index = chunk_index;
  for (std::size_t i : select_top_k(keys, k)) state.survivors.push_back(std::move(candidates[i]));
  return state;
}

namespace {

SinkCache root_cache_for(const SinkParams& base, MemoryMode mode) {
  SinkCache fresh(base);
  switch (mode) {
    case MemoryMode::Dynamic: {
      SinkParams p = base;
      p.mode = MemoryMode::Dynamic;
      return SinkCache(p);
    }
    case MemoryMode::StaticSink: return static_sink_mode(fresh);
    case MemoryMode::NaiveWindow: return naive_window_mode(fresh);
  }
  return fresh;
}

std::string seed_path(std::uint64_t seed, int chunk, std::uint64_t stream) {
  return std::to_string(seed) + "/" + std::to_string(chunk) + "/" + std::to_string(stream);
}

double ranking_value(const RewardScores& s, RankingKey key) {
  switch (key) {
    case RankingKey::Combined: return s.s_final;
    case RankingKey::LongOnly: return s.s_long;
    case RankingKey::ShortOnly: return s.s_short;
  }
  return s.s_final;
}

ChunkLogRecord make_record(const LineageNode& node, const std::string& path,
                           std::int64_t calls) {
  ChunkLogRecord r;
  r.chunk_index = node.chunk.chunk_index;
  r.candidate_id = node.candidate_id;
  r.lineage_id = node.lineage_id;
  r.parent_id = node.parent_id;
  r.s_short = node.scores.s_short;
  r.s_long = node.scores.s_long;
  r.s_final = node.scores.s_final;
  r.cumulative_final = node.cumulative_final;
  if (node.eviction) {
    r.routing_decision = node.eviction->decision;
    r.evicted_chunk = node.eviction->chunk_index;
  }
  r.c_quality = node.flags.c_quality;
  r.c_transition = node.flags.c_transition;
  r.noise_seed_path = path;
  r.generator_calls_so_far = calls;
  return r;
}

// Last `count` chunks of a lineage followed by `tail`, oldest first.
std::vector<LatentChunk> window_history(const LineageNode* node, int count,
                                        const LatentChunk& tail) {
  std::vector<LatentChunk> out;
  for (; node && static_cast<int>(out.size()) < count; node = node->parent.get())
    out.push_back(node->chunk);
  std::reverse(out.begin(), out.end());
  out.push_back(tail);
  return out;
}

}  // namespace

BeamSearch::BeamSearch(const Environment& env, const RunConfig& config, StrategySettings settings)
    : env_(env),
      seed_(config.seed),
      total_chunks_(config.total_chunks),
      frames_(config.frames),
      settings_(settings),
      propagation_{settings.beta},
      root_cache_(root_cache_for(env.sink, settings.memory_mode)) {
  propagation_.validate();
  if (settings_.beam_width < 1 || settings_.expansions < 1)
    throw std::invalid_argument("beam width and expansions must be >= 1");
}

RewardScores BeamSearch::score(const LatentChunk& chunk, const LineageNode* history) {
  const PromptEmbedding& prompt = env_.script.prompt(chunk.chunk_index);
  const auto window = window_history(history, env_.reward_window - 1, chunk);
  RewardScores s;
  s.chunk_index = chunk.chunk_index;
  s.s_short = short_score(chunk, prompt, *env_.short_model);
  s.s_long = long_score(window, env_.reward_window, prompt, *env_.long_model);
  s.s_final = fuse(s.s_short, s.s_long, chunk.chunk_index, env_.fusion);
  ++counters_.short_reward_calls;
  ++counters_.long_reward_calls;
  return s;
}

BeamCandidate BeamSearch::make_candidate(const BeamCandidate* parent, int index, int chunk_index) {
  BeamCandidate c;
  c.candidate_id = settings_.stream_offset + index;
  c.stream_index = static_cast<std::uint64_t>(c.candidate_id);
  c.parent_id = parent ? parent->candidate_id : -1;
  c.lineage_id = parent ? parent->lineage_id : c.candidate_id;
  c.history = parent ? parent->node : nullptr;
  c.cache = parent ? parent->cache.fork() : root_cache_.fork();

  RngStream rng = split_rng(seed_, static_cast<std::uint64_t>(chunk_index), c.stream_index);
  c.noise = parent ? propagate_noise(parent->noise, propagation_, rng)
                   : initial_noise(rng, frames_, env_.generator.weights().dim());
  c.noise.chunk_index = chunk_index;

  GeneratedChunk gen =
      env_.generator.generate_chunk(c.noise, c.cache, env_.conditioning(chunk_index), rng);
  ++counters_.generator_calls;
  c.chunk = std::move(gen.chunk);
  c.kv = std::move(gen.kv);
  c.scores = score(c.chunk, c.history.get());
  c.ranking_key = ranking_value(c.scores, settings_.ranking);
  c.cumulative_final = (parent ? parent->cumulative_final : 0.0) + c.scores.s_final;
  return c;
}

std::vector<BeamCandidate> BeamSearch::expand(const BeamState& state) {
  if (state.terminal || state.chunk_index >= total_chunks_)
    throw std::logic_error("expand called on a terminal beam state");
  const int k = settings_.beam_width;
  const int m = settings_.expansions;
  std::vector<BeamCandidate> out;
  out.reserve(static_cast<std::size_t>(k * m));
  if (state.chunk_index == 0) {
    for (int i = 0; i < k * m; ++i) out.push_back(make_candidate(nullptr, i, 0));
    return out;
  }
  for (std::size_t p = 0; p < state.survivors.size(); ++p)
    for (int j = 0; j < m; ++j)
      out.push_back(make_candidate(&state.survivors[p], static_cast<int>(p) * m + j,
                                   state.chunk_index));
  return out;
}

BeamState BeamSearch::step(const BeamState& state, std::vector<ChunkLogRecord>* log) {
  const int n = state.chunk_index;
  auto candidates = expand(state);
#ifndef NDEBUG
  std::vector<double> keys;
  for (const auto& c : candidates) keys.push_back(c.ranking_key);
#endif
  BeamState next = prune(std::move(candidates), settings_.beam_width, n);
#ifndef NDEBUG
  // Exhaustive check: no discarded candidate beats the weakest survivor.
  for (std::size_t i = 0; i < keys.size(); ++i) {
    const int idx = static_cast<int>(i) + settings_.stream_offset;
    const bool kept = std::any_of(next.survivors.begin(), next.survivors.end(),
                                  [&](const BeamCandidate& c) { return c.candidate_id == idx; });
    if (!kept && keys[i] > next.survivors.back().ranking_key)
      throw std::logic_error("prune dropped a better candidate");
  }
#endif

  for (auto& s : next.survivors) {
    const InsertResult ins = s.cache.evict_and_route(s.kv, s.scores);
    auto node = std::make_shared<LineageNode>();
    node->chunk = s.chunk;
    node->noise = s.noise;
    node->scores = s.scores;
    node->flags = ins.flags;
    node->eviction = ins.eviction;
    node->candidate_id = s.candidate_id;
    node->lineage_id = s.lineage_id;
    node->parent_id = s.parent_id;
    node->cumulative_final = s.cumulative_final;
    node->parent = s.history;
    s.node = std::move(node);
    if (log)
      log->push_back(make_record(*s.node, seed_path(seed_, n, s.stream_index),
                                 counters_.generator_calls));
  }
  next.chunk_index = n + 1;
  next.terminal = next.chunk_index >= total_chunks_;
  return next;
}

BeamState BeamSearch::run(std::vector<ChunkLogRecord>* log) {
  BeamState state = initial_state();
  while (!state.terminal) state = step(state, log);
  return state;
}

const BeamCandidate& best_survivor(const BeamState& state) {
  if (state.survivors.empty()) throw std::logic_error("beam state has no survivors");
  const BeamCandidate* best = &state.survivors.front();
  for (const auto& s : state.survivors)
    if (s.cumulative_final > best->cumulative_final) best = &s;
  return *best;
}

Trajectory trajectory_of(const LineageNode& last) {
  Trajectory t;
  t.cumulative_final = last.cumulative_final;
  for (const LineageNode* node = &last; node; node = node->parent.get())
    t.chunks.push_back(node->chunk);
  std::reverse(t.chunks.begin(), t.chunks.end());
  return t;
}

namespace {

SummaryRow summarize(Strategy strategy, std::uint64_t seed, const Trajectory& t,
                     const Counters& counters) {
  SummaryRow row;
  row.strategy = std::string(to_string(strategy));
  row.seed = std::to_string(seed);
  row.cumulative_final = t.cumulative_final;
  for (const auto& r : t.records) {
    row.mean_short += r.s_short;
    row.mean_long += r.s_long;
    if (!r.routing_decision) continue;
    switch (*r.routing_decision) {
      case RoutingDecision::Discard: row.discards += 1; break;
      case RoutingDecision::EmaSink: row.ema_updates += 1; break;
      case RoutingDecision::AppendSink: row.appends += 1; break;
    }
  }
  if (!t.records.empty()) {
    row.mean_short /= static_cast<double>(t.records.size());
    row.mean_long /= static_cast<double>(t.records.size());
  }
  row.generator_calls = static_cast<double>(counters.generator_calls);
  return row;
}

}  // namespace

RunResult run_strategy(const RunConfig& config, Strategy strategy) {
  config.validate();
  const Environment env = make_environment(config);
  return run_strategy(env, config, strategy);
}

RunResult run_strategy(const Environment& env, const RunConfig& config, Strategy strategy) {
  RunResult result;
  result.strategy = strategy;
  const StrategySettings settings = resolve_strategy(config, strategy);

  if (strategy == Strategy::BestOfN) {
    std::optional<Trajectory> best;
    for (int r = 0; r < config.effective_bon_n(); ++r) {
      StrategySettings rollout = settings;
      rollout.stream_offset = r;
      BeamSearch search(env, config, rollout);
      std::vector<ChunkLogRecord> log;
      const BeamState final_state = search.run(&log);
      for (auto& rec : log) rec.generator_calls_so_far += result.counters.generator_calls;
      result.counters.generator_calls += search.counters().generator_calls;
      result.counters.short_reward_calls += search.counters().short_reward_calls;
      result.counters.long_reward_calls += search.counters().long_reward_calls;

      Trajectory t = trajectory_of(*best_survivor(final_state).node);
      t.records = log;
      if (!best || t.cumulative_final > best->cumulative_final) best = std::move(t);
      result.log.insert(result.log.end(), log.begin(), log.end());
    }
    result.trajectory = std::move(*best);
  } else {
    BeamSearch search(env, config, settings);
    const BeamState final_state = search.run(&result.log);
    result.counters = search.counters();
    result.trajectory = trajectory_of(*best_survivor(final_state).node);
    result.trajectory.records = winning_lineage(result.log);
  }
  result.summary = summarize(strategy, config.seed, result.trajectory, result.counters);
  return result;
}

std::vector<ChunkLogRecord> winning_lineage(std::span<const ChunkLogRecord> log) {
  if (log.empty()) throw std::invalid_argument("empty log");
  std::map<std::pair<int, int>, const ChunkLogRecord*> index;
  int last_chunk = -1;
  for (const auto& r : log) {
    index.emplace(std::make_pair(r.chunk_index, r.candidate_id), &r);
    last_chunk = std::max(last_chunk, r.chunk_index);
  }
  const ChunkLogRecord* best = nullptr;
  for (const auto& r : log)
    if (r.chunk_index == last_chunk && (!best || r.cumulative_final > best->cumulative_final))
      best = &r;

  std::vector<ChunkLogRecord> out;
  for (const ChunkLogRecord* r = best; r;) {
    out.push_back(*r);
    if (r->chunk_index == 0) break;
    auto it = index.find({r->chunk_index - 1, r->parent_id});
    if (it == index.end())
      throw std::runtime_error("log lineage broken at chunk " + std::to_string(r->chunk_index));
    r = it->second;
  }
  std::reverse(out.begin(), out.end());
  if (out.front().chunk_index != 0) throw std::runtime_error("log lineage does not reach chunk 0");
  return out;
}

Trajectory replay_lineage(const RunConfig& config, Strategy strategy,
                          std::span<const ChunkLogRecord> lineage) {
  const Environment env = make_environment(config);
  const StrategySettings settings = resolve_strategy(config, strategy);
  BeamSearch scorer(env, config, settings);
  SinkCache cache = root_cache_for(env.sink, settings.memory_mode);
  const PropagationParams propagation{settings.beta};

  std::shared_ptr<const LineageNode> node;
  Trajectory t;
  for (const auto& rec : lineage) {
    const int n = rec.chunk_index;
    if (n != static_cast<int>(t.chunks.size()))
      throw std::runtime_error("replay: lineage records out of order at chunk " + std::to_string(n));
    const auto last_slash = rec.noise_seed_path.rfind('/');
    if (last_slash == std::string::npos)
      throw std::runtime_error("replay: malformed noise_seed_path '" + rec.noise_seed_path + "'");
    const std::uint64_t stream = std::stoull(rec.noise_seed_path.substr(last_slash + 1));

    RngStream rng = split_rng(config.seed, static_cast<std::uint64_t>(n), stream);
    NoiseChunk noise = node ? propagate_noise(node->noise, propagation, rng)
                            : initial_noise(rng, config.frames, config.dim);
    noise.chunk_index = n;
    GeneratedChunk gen = env.generator.generate_chunk(noise, cache, env.conditioning(n), rng);
    const RewardScores scores = scorer.score(gen.chunk, node.get());
    const InsertResult ins = cache.evict_and_route(gen.kv, scores);

    const std::optional<RoutingDecision> decision =
        ins.eviction ? std::optional(ins.eviction->decision) : std::nullopt;
    if (scores.s_short != rec.s_short || scores.s_long != rec.s_long ||
        scores.s_final != rec.s_final || decision != rec.routing_decision ||
        ins.flags.c_quality != rec.c_quality || ins.flags.c_transition != rec.c_transition)
      throw std::runtime_error("replay diverged from the log at chunk " + std::to_string(n));

    auto next = std::make_shared<LineageNode>();
    next->chunk = gen.chunk;
    next->noise = std::move(noise);
    next->scores = scores;
    next->flags = ins.flags;
    next->eviction = ins.eviction;
    next->cumulative_final = (node ? node->cumulative_final : 0.0) + scores.s_final;
    next->parent = node;
    node = std::move(next);
    t.chunks.push_back(std::move(gen.chunk));
  }
  t.cumulative_final = node ? node->cumulative_final : 0.0;
  t.records.assign(lineage.begin(), lineage.end());
  return t;
}

}  // namespace stream_t1
