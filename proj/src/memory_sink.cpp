#include "stream_t1/memory_sink.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace stream_t1 {

std::string_view to_string(RoutingDecision d) {
  switch (d) {
    case RoutingDecision::Discard: return "discard";
    case RoutingDecision::EmaSink: return "ema_sink";
    case RoutingDecision::AppendSink: return "append_sink";
  }
  return "?";
}

std::string_view to_string(MemoryMode m) {
  switch (m) {
    case MemoryMode::Dynamic: return "dynamic";
    case MemoryMode::StaticSink: return "static_sink";
    case MemoryMode::NaiveWindow: return "naive_window";
  }
  return "?";
}

std::string_view to_string(ShortMeanKind k) {
  return k == ShortMeanKind::Arithmetic ? "arithmetic" : "exponential";
}

bool quality_gate(double s_short, double short_mean, double tau_short) {
  return s_short - short_mean > tau_short;
}

bool transition_detector(std::optional<double> prev_long, double cur_long, double tau_long) {
  return prev_long.has_value() && *prev_long - cur_long > tau_long;
}

RoutingDecision route(bool c_quality, bool c_transition) {
  if (!c_quality) return RoutingDecision::Discard;
  return c_transition ? RoutingDecision::AppendSink : RoutingDecision::EmaSink;
}

void SinkParams::validate() const {
  if (attn_window < 1) throw std::invalid_argument("attn_window must be >= 1");
  if (sink_size < 0) throw std::invalid_argument("sink_size must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");
  if (std::isnan(tau_short)) throw std::invalid_argument("tau_short must be a number");
  if (std::isnan(tau_long)) throw std::invalid_argument("tau_long must be a number");
  if (!(short_mean_decay > 0.0 && short_mean_decay < 1.0))
    throw std::invalid_argument("short_mean_decay must lie in (0, 1)");
}

SinkCache::SinkCache(SinkParams params) : params_(params) {
  if (params_.mode == MemoryMode::NaiveWindow) params_.sink_size = 0;
}

std::optional<double> SinkCache::short_mean() const {
  if (accepted_ == 0) return std::nullopt;
  if (params_.short_mean == ShortMeanKind::Exponential) return short_ema_;
  return short_sum_ / accepted_;
}

void SinkCache::check_shape(const KVEntry& e) const {
  if (e.keys.rows() != e.values.rows() || e.keys.cols() != e.values.cols())
    throw std::invalid_argument("KV entry keys and values differ in shape");
  const KVEntry* ref = nullptr;
  if (!sink_.empty()) ref = &sink_.front();
  else if (!window_.empty()) ref = &window_.front().kv;
  if (ref && (ref->keys.rows() != e.keys.rows() || ref->keys.cols() != e.keys.cols()))
    throw std::invalid_argument("KV entry shape does not match cache entries");
}

InsertResult SinkCache::evict_and_route(KVEntry incoming, const RewardScores& scores) {
  check_shape(incoming);

  // Gates use the history before this chunk (Eqs. on the n-th chunk).
  InsertResult result;
  if (const auto mean = short_mean())
    result.flags.c_quality = quality_gate(scores.s_short, *mean, params_.tau_short);
  result.flags.c_transition = transition_detector(prev_long_, scores.s_long, params_.tau_long);

  ++accepted_;
  short_sum_ += scores.s_short;
  short_ema_ = accepted_ == 1 ? scores.s_short
                              : params_.short_mean_decay * short_ema_ +
                                    (1.0 - params_.short_mean_decay) * scores.s_short;
  prev_long_ = scores.s_long;

  if (accepted_ <= params_.sink_size) {
    sink_.push_back(std::move(incoming));
    return result;
  }

  window_.push_back({std::move(incoming), scores, result.flags});
  if (static_cast<int>(window_.size()) <= params_.attn_window) return result;

  WindowSlot oldest = std::move(window_.front());
  window_.pop_front();
  const RoutingDecision decision = params_.mode == MemoryMode::Dynamic
                                       ? route(oldest.flags.c_quality, oldest.flags.c_transition)
                                       : RoutingDecision::Discard;
  result.eviction = Eviction{oldest.kv.source_chunk, decision, oldest.flags};
  apply(decision, std::move(oldest.kv));
  return result;
}

void SinkCache::apply(RoutingDecision decision, KVEntry evicted) {
  switch (decision) {
    case RoutingDecision::Discard:
      return;
    case RoutingDecision::EmaSink:
      if (!sink_.empty()) {
        auto& last = sink_.back();
        const double a = params_.alpha;
        last.keys = a * last.keys + (1.0 - a) * evicted.keys;
        last.values = a * last.values + (1.0 - a) * evicted.values;
        return;
      }
      // Nothing to blend into; keep the entry as the first anchor instead.
      [[fallthrough]];
    case RoutingDecision::AppendSink:
      sink_.push_back(std::move(evicted));
      ++appends_;
      return;
  }
}

AttentionContext SinkCache::assemble_context() const {
  const KVEntry* ref = !sink_.empty() ? &sink_.front()
                       : !window_.empty() ? &window_.front().kv
                                          : nullptr;
  if (!ref) return {};
  const Eigen::Index tokens = ref->keys.rows();
  const Eigen::Index dim = ref->keys.cols();
  const Eigen::Index entries = static_cast<Eigen::Index>(sink_.size() + window_.size());
  AttentionContext ctx{Matrix(entries * tokens, dim), Matrix(entries * tokens, dim),
                       static_cast<Eigen::Index>(sink_.size()) * tokens};
  Eigen::Index row = 0;
  auto put = [&](const KVEntry& e) {
    ctx.keys.middleRows(row, tokens) = e.keys;
    ctx.values.middleRows(row, tokens) = e.values;
    row += tokens;
  };
  for (const auto& e : sink_) put(e);
  for (const auto& slot : window_) put(slot.kv);
  return ctx;
}

SinkCache static_sink_mode(const SinkCache& cache) {
  if (!cache.fresh()) throw std::logic_error("static_sink_mode needs a fresh cache");
  SinkParams p = cache.params();
  p.mode = MemoryMode::StaticSink;
  return SinkCache(p);
}

SinkCache naive_window_mode(const SinkCache& cache) {
  if (!cache.fresh()) throw std::logic_error("naive_window_mode needs a fresh cache");
  SinkParams p = cache.params();
  p.mode = MemoryMode::NaiveWindow;
  p.sink_size = 0;
  return SinkCache(p);
}

}  // namespace stream_t1
