#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "stream_t1/config.hpp"
#include "stream_t1/memory_sink.hpp"

namespace stream_t1 {

/// One surviving candidate after one step.
///
/// `c_quality` / `c_transition` are the gates evaluated for this record's own
/// chunk when it was accepted. `routing_decision` and `evicted_chunk` describe
/// the older chunk (if any) pushed out of the window at this step; its
/// decision was taken from the gates logged on its own record.
struct ChunkLogRecord {
  int chunk_index = 0;
  int candidate_id = 0;
  int lineage_id = 0;
  int parent_id = -1;
  double s_short = 0.0;
  double s_long = 0.0;
  double s_final = 0.0;
  double cumulative_final = 0.0;
  std::optional<RoutingDecision> routing_decision;
  int evicted_chunk = -1;
  bool c_quality = false;
  bool c_transition = false;
  std::string noise_seed_path;  // "<root seed>/<chunk>/<candidate>"
  std::int64_t generator_calls_so_far = 0;

  bool operator==(const ChunkLogRecord&) const = default;
};

/// Field names in serialization order.
const std::vector<std::string>& log_fields();

std::string to_jsonl(const ChunkLogRecord& record);
ChunkLogRecord record_from_jsonl(const std::string& line);
std::string tsv_header();
std::string to_tsv(const ChunkLogRecord& record);

std::string format_log(const std::vector<ChunkLogRecord>& records, LogFormat format);

struct SummaryRow {
  std::string strategy;
  std::string seed;  // numeric seed, or "mean" for aggregate rows
  double cumulative_final = 0.0;
  double mean_short = 0.0;
  double mean_long = 0.0;
  double appends = 0.0;
  double ema_updates = 0.0;
  double discards = 0.0;
  double generator_calls = 0.0;
};

std::string summary_header();
std::string to_csv(const SummaryRow& row);

/// Shortest round-trip decimal form.
std::string format_real(double v);

}  // namespace stream_t1
