#pragma once

#include <deque>
#include <optional>
#include <string_view>
#include <vector>

#include "stream_t1/latent.hpp"
#include "stream_t1/reward.hpp"

namespace stream_t1 {

/// Keys and values of one chunk's tokens (one row per token).
struct KVEntry {
  Matrix keys;
  Matrix values;
  int source_chunk = 0;

  bool operator==(const KVEntry& other) const {
    return source_chunk == other.source_chunk && keys.rows() == other.keys.rows() &&
           keys.cols() == other.keys.cols() && values.rows() == other.values.rows() &&
           values.cols() == other.values.cols() && keys == other.keys && values == other.values;
  }
};

enum class RoutingDecision { Discard, EmaSink, AppendSink };

enum class MemoryMode {
  Dynamic,      ///< reward-gated Discard / EmaSink / AppendSink
  StaticSink,   ///< first sink_size chunks frozen, evictions discarded
  NaiveWindow,  ///< no sink at all
};

enum class ShortMeanKind { Arithmetic, Exponential };

std::string_view to_string(RoutingDecision d);
std::string_view to_string(MemoryMode m);
std::string_view to_string(ShortMeanKind k);

bool quality_gate(double s_short, double short_mean, double tau_short);

/// Never fires without a previous long score.
bool transition_detector(std::optional<double> prev_long, double cur_long, double tau_long);

RoutingDecision route(bool c_quality, bool c_transition);

struct SinkParams {
  int attn_window = 9;
  int sink_size = 3;
  double alpha = 0.9;
  double tau_short = 0.05;
  double tau_long = 0.1;
  MemoryMode mode = MemoryMode::Dynamic;
  ShortMeanKind short_mean = ShortMeanKind::Arithmetic;
  double short_mean_decay = 0.9;

  /// Domain checks. SinkCache itself does not call this, so faults can be
  /// injected in tests.
  void validate() const;
};

/// Gate outcomes of one accepted chunk, evaluated when it is inserted.
struct GateFlags {
  bool c_quality = false;
  bool c_transition = false;

  bool operator==(const GateFlags&) const = default;
};

struct Eviction {
  int chunk_index = 0;
  RoutingDecision decision = RoutingDecision::Discard;
  GateFlags flags;
};

struct InsertResult {
  GateFlags flags;                  // of the incoming chunk
  std::optional<Eviction> eviction; // set when the window overflowed
};

/// Global attention context: sink rows first, then window rows oldest first.
struct AttentionContext {
  Matrix keys;
  Matrix values;
  Eigen::Index sink_rows = 0;  // leading rows that come from the sink

  Eigen::Index rows() const { return keys.rows(); }
};

/// Sliding-window KV cache with a dynamic sink region.
///
/// The first `sink_size` accepted chunks seed the sink. Later chunks enter the
/// window; once it holds more than `attn_window` entries the oldest one is
/// evicted and routed by the gate flags recorded when *it* was inserted:
/// Discard leaves the sink untouched, EmaSink blends it into the last sink slot
/// with decay alpha, AppendSink adds it as a new sink slot.
///
/// Copying a SinkCache yields a fully independent cache.
class SinkCache {
 public:
  struct WindowSlot {
    KVEntry kv;
    RewardScores scores;
    GateFlags flags;
  };

  explicit SinkCache(SinkParams params = {});

  /// Inserts the KV entry of a freshly accepted chunk. Throws
  /// std::invalid_argument on a shape mismatch with cached entries.
  InsertResult evict_and_route(KVEntry incoming, const RewardScores& scores);

  AttentionContext assemble_context() const;

  SinkCache fork() const { return *this; }

  const SinkParams& params() const { return params_; }
  const std::vector<KVEntry>& sink() const { return sink_; }
  const std::deque<WindowSlot>& window() const { return window_; }
  int accepted_count() const { return accepted_; }
  int append_count() const { return appends_; }
  std::optional<double> prev_long() const { return prev_long_; }
  /// Running mean of accepted short scores, empty before the first insert.
  std::optional<double> short_mean() const;

  bool fresh() const { return accepted_ == 0; }

 private:
  void check_shape(const KVEntry& e) const;
  void apply(RoutingDecision decision, KVEntry evicted);

  SinkParams params_;
  std::vector<KVEntry> sink_;
  std::deque<WindowSlot> window_;
  int accepted_ = 0;
  int appends_ = 0;
  double short_sum_ = 0.0;
  double short_ema_ = 0.0;
  std::optional<double> prev_long_;
};

/// Converts a fresh cache to the frozen-sink baseline. Throws if not fresh.
SinkCache static_sink_mode(const SinkCache& cache);

/// Converts a fresh cache to the window-only baseline (sink_size = 0).
SinkCache naive_window_mode(const SinkCache& cache);

}  // namespace stream_t1
