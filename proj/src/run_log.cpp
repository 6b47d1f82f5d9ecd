#include "stream_t1/run_log.hpp"

#include <charconv>
#include <stdexcept>

#include <json.hpp>

namespace stream_t1 {

using ordered_json = nlohmann::ordered_json;

std::string format_real(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

const std::vector<std::string>& log_fields() {
  static const std::vector<std::string> fields = {
      "chunk_index",   "candidate_id", "lineage_id",      "parent_id",
      "s_short",       "s_long",       "s_final",         "cumulative_final",
      "routing_decision", "evicted_chunk", "c_quality",   "c_transition",
      "noise_seed_path", "generator_calls_so_far"};
  return fields;
}

namespace {

std::optional<RoutingDecision> decision_from(const std::string& s) {
  for (auto d : {RoutingDecision::Discard, RoutingDecision::EmaSink, RoutingDecision::AppendSink})
    if (to_string(d) == s) return d;
  if (s == "none") return std::nullopt;
  throw std::invalid_argument("unknown routing decision '" + s + "'");
}

std::string decision_name(const std::optional<RoutingDecision>& d) {
  return d ? std::string(to_string(*d)) : "none";
}

}  // namespace

std::string to_jsonl(const ChunkLogRecord& r) {
  ordered_json j;
  j["chunk_index"] = r.chunk_index;
  j["candidate_id"] = r.candidate_id;
  j["lineage_id"] = r.lineage_id;
  j["parent_id"] = r.parent_id;
  j["s_short"] = r.s_short;
  j["s_long"] = r.s_long;
  j["s_final"] = r.s_final;
  j["cumulative_final"] = r.cumulative_final;
  j["routing_decision"] = decision_name(r.routing_decision);
  j["evicted_chunk"] = r.evicted_chunk;
  j["c_quality"] = r.c_quality;
  j["c_transition"] = r.c_transition;
  j["noise_seed_path"] = r.noise_seed_path;
  j["generator_calls_so_far"] = r.generator_calls_so_far;
  return j.dump();
}

ChunkLogRecord record_from_jsonl(const std::string& line) {
  const auto j = ordered_json::parse(line);
  ChunkLogRecord r;
  r.chunk_index = j.at("chunk_index").get<int>();
  r.candidate_id = j.at("candidate_id").get<int>();
  r.lineage_id = j.at("lineage_id").get<int>();
  r.parent_id = j.at("parent_id").get<int>();
  r.s_short = j.at("s_short").get<double>();
  r.s_long = j.at("s_long").get<double>();
  r.s_final = j.at("s_final").get<double>();
  r.cumulative_final = j.at("cumulative_final").get<double>();
  r.routing_decision = decision_from(j.at("routing_decision").get<std::string>());
  r.evicted_chunk = j.at("evicted_chunk").get<int>();
  r.c_quality = j.at("c_quality").get<bool>();
  r.c_transition = j.at("c_transition").get<bool>();
  r.noise_seed_path = j.at("noise_seed_path").get<std::string>();
  r.generator_calls_so_far = j.at("generator_calls_so_far").get<std::int64_t>();
  return r;
}

std::string tsv_header() {
  std::string out;
  for (const auto& f : log_fields()) out += (out.empty() ? "" : "\t") + f;
  return out;
}

std::string to_tsv(const ChunkLogRecord& r) {
  auto b = [](bool v) { return v ? std::string("true") : std::string("false"); };
  return std::to_string(r.chunk_index) + '\t' + std::to_string(r.candidate_id) + '\t' +
         std::to_string(r.lineage_id) + '\t' + std::to_string(r.parent_id) + '\t' +
         format_real(r.s_short) + '\t' + format_real(r.s_long) + '\t' + format_real(r.s_final) +
         '\t' + format_real(r.cumulative_final) + '\t' + decision_name(r.routing_decision) + '\t' +
         std::to_string(r.evicted_chunk) + '\t' + b(r.c_quality) + '\t' + b(r.c_transition) +
         '\t' + r.noise_seed_path + '\t' + std::to_string(r.generator_calls_so_far);
}

std::string format_log(const std::vector<ChunkLogRecord>& records, LogFormat format) {
  std::string out;
  if (format == LogFormat::Tsv) out += tsv_header() + "\n";
  for (const auto& r : records) out += (format == LogFormat::Jsonl ? to_jsonl(r) : to_tsv(r)) + "\n";
  return out;
}

std::string summary_header() {
  return "strategy,seed,cumulative_final,mean_short,mean_long,appends,ema_updates,discards,"
         "generator_calls";
}

std::string to_csv(const SummaryRow& row) {
  return row.strategy + ',' + row.seed + ',' + format_real(row.cumulative_final) + ',' +
         format_real(row.mean_short) + ',' + format_real(row.mean_long) + ',' +
         format_real(row.appends) + ',' + format_real(row.ema_updates) + ',' +
         format_real(row.discards) + ',' + format_real(row.generator_calls);
}

}  // namespace stream_t1
