#include "stream_t1/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <numeric>
#include <sstream>

#include "stream_t1/noise.hpp"
#include "stream_t1/reward.hpp"
#include "stream_t1/rng.hpp"
#include "stream_t1/stats.hpp"

namespace stream_t1 {

const std::vector<Strategy>& baseline_strategies() {
  static const std::vector<Strategy> s = {Strategy::Greedy, Strategy::BestOfN,
                                          Strategy::BeamPlain, Strategy::StreamT1};
  return s;
}

const std::vector<Strategy>& all_strategies() {
  static const std::vector<Strategy> s = {
      Strategy::Greedy,      Strategy::BestOfN,      Strategy::BeamPlain,   Strategy::StreamT1,
      Strategy::AblateNoise, Strategy::AblateFusion, Strategy::AblateMemory};
  return s;
}

std::vector<Strategy> parse_strategy_list(const std::string& text) {
  if (text == "baselines") return baseline_strategies();
  if (text == "all") return all_strategies();
  std::vector<Strategy> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    const Strategy s = parse_strategy(item);
    if (std::find(out.begin(), out.end(), s) == out.end()) out.push_back(s);
  }
  if (out.empty()) throw ConfigError("strategy", 0, "empty strategy list");
  return out;
}

namespace {

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out.flush()) throw std::runtime_error("write to " + path.string() + " failed");
}

}  // namespace

std::vector<std::filesystem::path> write_run(const RunConfig& config, const RunResult& result) {
  const std::filesystem::path dir(config.output_dir);
  std::filesystem::create_directories(dir);
  const auto log_path =
      dir / (config.log_format == LogFormat::Jsonl ? "log.jsonl" : "log.tsv");
  write_file(log_path, format_log(result.log, config.log_format));
  const auto summary_path = dir / "summary.csv";
  write_file(summary_path, summary_header() + "\n" + to_csv(result.summary) + "\n");
  return {log_path, summary_path};
}

Comparison compare(const RunConfig& config, const std::vector<Strategy>& strategies) {
  config.validate();
  if (strategies.empty()) throw std::invalid_argument("compare: no strategies");
  Comparison out;
  std::map<std::uint64_t, std::pair<Strategy, double>> budget;

  for (Strategy strategy : strategies) {
    SummaryRow mean;
    mean.strategy = std::string(to_string(strategy));
    mean.seed = "mean";
    for (int i = 0; i < config.compare_seeds; ++i) {
      RunConfig c = config;
      c.seed = config.seed + static_cast<std::uint64_t>(i);
      const RunResult r = run_strategy(c, strategy);
      const SummaryRow& row = r.summary;

      if (strategy != Strategy::Greedy) {
        auto [it, fresh] = budget.try_emplace(c.seed, strategy, row.generator_calls);
        if (!fresh && it->second.second != row.generator_calls)
          throw BudgetMismatch("compute budgets differ on seed " + std::to_string(c.seed) + ": " +
                               std::string(to_string(it->second.first)) + " used " +
                               format_real(it->second.second) + " generator calls, " +
                               mean.strategy + " used " + format_real(row.generator_calls));
      }

      mean.cumulative_final += row.cumulative_final;
      mean.mean_short += row.mean_short;
      mean.mean_long += row.mean_long;
      mean.appends += row.appends;
      mean.ema_updates += row.ema_updates;
      mean.discards += row.discards;
      mean.generator_calls += row.generator_calls;
      out.rows.push_back(row);
    }
    const double n = static_cast<double>(config.compare_seeds);
    for (double* f : {&mean.cumulative_final, &mean.mean_short, &mean.mean_long, &mean.appends,
                      &mean.ema_updates, &mean.discards, &mean.generator_calls})
      *f /= n;
    out.means.push_back(mean);
  }
  return out;
}

std::string format_comparison(const Comparison& c) {
  std::string out = summary_header() + "\n";
  for (const auto& r : c.rows) out += to_csv(r) + "\n";
  for (const auto& r : c.means) out += to_csv(r) + "\n";
  return out;
}

// ---------------------------------------------------------------------------
// verify

namespace {

struct Outcome {
  bool passed = true;
  std::string detail;

  void fail(const std::string& why) {
    if (passed) detail = why;
    passed = false;
  }
};

Outcome rng_determinism(std::uint64_t seed) {
  Outcome o;
  RngStream a(seed), b(seed);
  for (int i = 0; i < 1000; ++i)
    if (a.gaussian() != b.gaussian()) return o.fail("equal seeds diverged at draw " + std::to_string(i)), o;
  RngStream c = split_rng(seed, 3, 0), d = split_rng(seed, 3, 1), e = split_rng(seed, 4, 0);
  const double x = c.uniform(), y = d.uniform(), z = e.uniform();
  if (x == y || x == z) o.fail("split streams collide");
  o.detail = "1000 draws reproduced; split streams distinct";
  return o;
}

Outcome gaussian_moments(std::uint64_t seed) {
  Outcome o;
  RngStream rng = split_rng(seed, 0xfeed, 0);
  std::vector<double> xs(100000);
  for (double& x : xs) x = rng.gaussian();
  const auto m = stats::moments(xs);
  std::ostringstream d;
  d << "mean " << m.mean << ", variance " << m.variance;
  if (std::abs(m.mean) > 0.02 || m.variance < 0.97 || m.variance > 1.03) o.fail(d.str());
  else o.detail = d.str();
  return o;
}

Outcome slerp_moments(std::uint64_t seed) {
  Outcome o;
  std::ostringstream d;
  for (double beta : {0.3, 0.5, 0.8}) {
    RngStream rng = split_rng(seed, 0x5e1e, static_cast<std::uint64_t>(beta * 10));
    const NoiseChunk prev = initial_noise(rng, 1000, 100);
    const NoiseChunk next = propagate_noise(prev, {beta}, rng);
    const std::span<const double> a(prev.values.data(), static_cast<std::size_t>(prev.values.size()));
    const std::span<const double> b(next.values.data(), static_cast<std::size_t>(next.values.size()));
    const auto m = stats::moments(b);
    const double r = stats::correlation(a, b);
    d << "beta " << beta << ": mean " << m.mean << " var " << m.variance << " corr " << r << "; ";
    if (std::abs(m.mean) > 0.02 || m.variance < 0.97 || m.variance > 1.03 ||
        std::abs(r - beta) > 0.02)
      o.fail(d.str());
  }
  if (o.passed) o.detail = d.str();
  return o;
}

Outcome fusion_continuity() {
  Outcome o;
  int checked = 0;
  for (int total : {4, 10, 40})
    for (double tau : {0.25, 0.5, 0.75}) {
      const FusionParams p{tau, total};
      for (int n = 0; n < total; ++n) {
        const double ratio = static_cast<double>(n) / total;
        const double w = ratio <= tau ? ratio : tau;
        const double s = 0.37 + 0.01 * n, l = 0.81 - 0.005 * n;
        const double expect = w * s + (1.0 - w) * l;
        if (std::abs(fuse(s, l, n, p) - expect) > 1e-12)
          o.fail("fuse differs at n=" + std::to_string(n) + ", N=" + std::to_string(total));
        if (ratio == tau && short_weight(n, p) != tau)
          o.fail("branches disagree at n/N = tau for N=" + std::to_string(total));
        ++checked;
      }
    }
  if (o.passed) o.detail = std::to_string(checked) + " grid points";
  return o;
}

Outcome routing_table() {
  Outcome o;
  const struct {
    bool q, t;
    RoutingDecision expect;
  } table[] = {{false, false, RoutingDecision::Discard},
               {false, true, RoutingDecision::Discard},
               {true, false, RoutingDecision::EmaSink},
               {true, true, RoutingDecision::AppendSink}};
  for (const auto& row : table)
    if (route(row.q, row.t) != row.expect)
      o.fail("route(" + std::to_string(row.q) + ", " + std::to_string(row.t) + ") = " +
             std::string(to_string(route(row.q, row.t))));
  if (o.passed) o.detail = "4/4 rows";
  return o;
}

KVEntry random_entry(RngStream& rng, int chunk) {
  return {sample_gaussian(rng, 2, 3), sample_gaussian(rng, 2, 3), chunk};
}

bool within_box(const Matrix& x, const Matrix& a, const Matrix& b) {
  const double eps = 1e-12;
  return ((x.array() >= a.cwiseMin(b).array() - eps) && (x.array() <= a.cwiseMax(b).array() + eps))
      .all();
}

Outcome sink_conservation(std::uint64_t seed, std::optional<double> inject_alpha) {
  Outcome o;
  SinkParams params;
  if (inject_alpha) params.alpha = *inject_alpha;
  int events = 0;
  for (int trial = 0; trial < 1000 && o.passed; ++trial) {
    RngStream rng = split_rng(seed, 0x5111c, static_cast<std::uint64_t>(trial));
    SinkCache cache(params);
    const int length = 5 + static_cast<int>(rng.uniform() * 36);
    int appends = 0;
    for (int n = 0; n < length; ++n) {
      const std::vector<KVEntry> before = cache.sink();
      const KVEntry evicting = cache.window().empty() ? KVEntry{} : cache.window().front().kv;
      const RewardScores scores{rng.uniform(), rng.uniform(), 0.0, n};
      const InsertResult ins = cache.evict_and_route(random_entry(rng, n), scores);
      const std::string at = "trial " + std::to_string(trial) + ", step " + std::to_string(n) + ": ";

      if (ins.eviction) {
        ++events;
        switch (ins.eviction->decision) {
          case RoutingDecision::Discard:
            if (cache.sink() != before) o.fail(at + "discard changed the sink");
            break;
          case RoutingDecision::EmaSink: {
            const KVEntry& slot = cache.sink().back();
            if (cache.sink().size() != before.size() ||
                !within_box(slot.keys, before.back().keys, evicting.keys) ||
                !within_box(slot.values, before.back().values, evicting.values))
              o.fail(at + "EMA slot left the convex hull of its inputs");
            break;
          }
          case RoutingDecision::AppendSink:
            ++appends;
            if (cache.sink().size() != before.size() + 1 || !(cache.sink().back() == evicting))
              o.fail(at + "append did not add the evicted entry");
            break;
        }
      }
      const int seeded = std::min(cache.accepted_count(), params.sink_size);
      if (static_cast<int>(cache.sink().size()) != seeded + appends)
        o.fail(at + "sink length " + std::to_string(cache.sink().size()) + " != " +
               std::to_string(seeded) + " + " + std::to_string(appends) + " appends");
      if (static_cast<int>(cache.window().size()) > params.attn_window)
        o.fail(at + "window exceeds capacity");
      if (!o.passed) break;
    }
  }
  if (o.passed) o.detail = "1000 sequences, " + std::to_string(events) + " evictions";
  return o;
}

Outcome ema_contraction() {
  Outcome o;
  SinkParams params;
  params.sink_size = 1;
  params.attn_window = 1;
  SinkCache cache(params);
  const KVEntry start{Matrix::Ones(2, 3), Matrix::Ones(2, 3), 0};
  const Matrix target = Matrix::Constant(2, 3, -0.5);
  cache.evict_and_route(start, {0.0, 0.5, 0.0, 0});
  const double d0 = (start.keys - target).norm();
  // Rising short scores keep the quality gate open; a flat long score keeps
  // the transition detector shut, so every eviction is an EMA update.
  int updates = 0;
  for (int n = 1; updates < 50; ++n) {
    const InsertResult ins = cache.evict_and_route({target, target, n}, {double(n), 0.5, 0.0, n});
    if (!ins.eviction) continue;
    if (ins.eviction->decision != RoutingDecision::EmaSink) return o.fail("eviction was not EMA"), o;
    ++updates;
  }
  const double ratio = (cache.sink().back().keys - target).norm() / d0;
  const double expect = std::pow(params.alpha, updates);
  std::ostringstream d;
  d << "ratio " << ratio << " vs alpha^" << updates << " = " << expect;
  if (std::abs(ratio - expect) > 1e-9 * expect) o.fail(d.str());
  else o.detail = d.str();
  return o;
}

Outcome prune_vs_sort(std::uint64_t seed) {
  Outcome o;
  for (int trial = 0; trial < 1000; ++trial) {
    RngStream rng = split_rng(seed, 0x9a9e, static_cast<std::uint64_t>(trial));
    const int size = 1 + static_cast<int>(rng.uniform() * 40);
    const int k = 1 + static_cast<int>(rng.uniform() * size);
    std::vector<double> keys(static_cast<std::size_t>(size));
    for (double& x : keys) x = std::floor(rng.uniform() * 6.0) / 4.0;  // heavy duplication

    std::vector<std::size_t> oracle(keys.size());
    std::iota(oracle.begin(), oracle.end(), std::size_t{0});
    std::sort(oracle.begin(), oracle.end(), [&](std::size_t a, std::size_t b) {
      return keys[a] != keys[b] ? keys[a] > keys[b] : a < b;
    });
    oracle.resize(static_cast<std::size_t>(k));
    if (select_top_k(keys, k) != oracle)
      return o.fail("trial " + std::to_string(trial) + ": selection differs from sort oracle"), o;
  }
  o.detail = "1000 pools";
  return o;
}

Outcome determinism_replay(std::uint64_t seed) {
  Outcome o;
  RunConfig c;
  c.seed = seed;
  c.total_chunks = 8;
  c.beam_width = 2;
  c.expansions = 2;
  const RunResult a = run_strategy(c, Strategy::StreamT1);
  const RunResult b = run_strategy(c, Strategy::StreamT1);
  if (format_log(a.log, LogFormat::Jsonl) != format_log(b.log, LogFormat::Jsonl))
    return o.fail("logs of identical runs differ"), o;
  const Trajectory t = replay_lineage(c, Strategy::StreamT1, winning_lineage(a.log));
  if (t.chunks.size() != a.trajectory.chunks.size()) return o.fail("replayed length differs"), o;
  for (std::size_t i = 0; i < t.chunks.size(); ++i)
    if (t.chunks[i].frames != a.trajectory.chunks[i].frames)
      return o.fail("replayed chunk " + std::to_string(i) + " differs"), o;
  if (t.cumulative_final != a.trajectory.cumulative_final)
    return o.fail("replayed cumulative score differs"), o;
  o.detail = std::to_string(a.log.size()) + " records, lineage of " +
             std::to_string(t.chunks.size()) + " chunks replayed";
  return o;
}

Outcome counter_conservation(std::uint64_t seed) {
  Outcome o;
  RunConfig c;
  c.seed = seed;
  c.total_chunks = 20;
  c.beam_width = 2;
  c.expansions = 2;
  const RunResult r = run_strategy(c, Strategy::StreamT1);
  const auto evictions = std::count_if(r.trajectory.records.begin(), r.trajectory.records.end(),
                                       [](const ChunkLogRecord& x) { return x.evicted_chunk >= 0; });
  const double routed = r.summary.appends + r.summary.ema_updates + r.summary.discards;
  if (routed != static_cast<double>(evictions))
    o.fail("routing counts sum to " + format_real(routed) + " over " + std::to_string(evictions) +
           " evictions");
  else
    o.detail = std::to_string(evictions) + " evictions partitioned";
  return o;
}

Outcome config_roundtrip() {
  Outcome o;
  RunConfig c;
  c.memory_mode = MemoryMode::StaticSink;
  c.beta = -0.25;
  c.tau_short = 1.0 / 3.0;
  c.sigma_schedule = {2.0, 0.5, 0.0};
  c.denoise_steps = 3;
  for (const RunConfig& x : {RunConfig{}, c})
    if (parse_config_text(serialize_config(x)) != x) o.fail("parse(serialize(c)) != c");
  if (o.passed) o.detail = "default and modified configs";
  return o;
}

}  // namespace

std::vector<PropertyResult> verify(const VerifyOptions& options) {
  const std::uint64_t seed = options.seed;
  const std::vector<std::pair<std::string, std::function<Outcome()>>> suite = {
      {"rng-determinism", [&] { return rng_determinism(seed); }},
      {"gaussian-moments", [&] { return gaussian_moments(seed); }},
      {"slerp-moments", [&] { return slerp_moments(seed); }},
      {"fusion-continuity", [] { return fusion_continuity(); }},
      {"routing-table", [] { return routing_table(); }},
      {"sink-conservation", [&] { return sink_conservation(seed, options.inject_alpha); }},
      {"ema-contraction", [] { return ema_contraction(); }},
      {"prune-vs-sort", [&] { return prune_vs_sort(seed); }},
      {"counter-conservation", [&] { return counter_conservation(seed); }},
      {"config-roundtrip", [] { return config_roundtrip(); }},
      {"determinism-replay", [&] { return determinism_replay(seed); }},
  };
  std::vector<PropertyResult> out;
  for (const auto& [name, fn] : suite) {
    PropertyResult r;
    r.name = name;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const Outcome o = fn();
      r.passed = o.passed;
      r.detail = o.detail;
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("threw: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.push_back(std::move(r));
  }
  return out;
}

std::string format_property(const PropertyResult& r) {
  std::ostringstream s;
  s << (r.passed ? "PASS " : "FAIL ") << r.name << " (" << std::fixed;
  s.precision(2);
  s << r.seconds << "s): " << r.detail;
  return s.str();
}

}  // namespace stream_t1
