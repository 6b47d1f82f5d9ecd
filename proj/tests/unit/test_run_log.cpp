#include <doctest.h>

#include <limits>
#include <sstream>

#include <json.hpp>

#include "stream_t1/run_log.hpp"

using namespace stream_t1;

namespace {

ChunkLogRecord sample() {
  ChunkLogRecord r;
  r.chunk_index = 12;
  r.candidate_id = 5;
  r.lineage_id = 3;
  r.parent_id = 1;
  r.s_short = 0.1;
  r.s_long = 1.0 / 3.0;
  r.s_final = 0.30000000000000004;
  r.cumulative_final = 7.25;
  r.routing_decision = RoutingDecision::EmaSink;
  r.evicted_chunk = 3;
  r.c_quality = true;
  r.noise_seed_path = "42/12/5";
  r.generator_calls_so_far = 208;
  return r;
}

}  // namespace

TEST_CASE("jsonl keeps the documented field order") {
  const auto j = nlohmann::ordered_json::parse(to_jsonl(sample()));
  std::vector<std::string> keys;
  for (auto it = j.begin(); it != j.end(); ++it) keys.push_back(it.key());
  CHECK(keys == log_fields());
  CHECK(j["routing_decision"] == "ema_sink");
}

TEST_CASE("jsonl round-trips exactly") {
  const ChunkLogRecord r = sample();
  CHECK(record_from_jsonl(to_jsonl(r)) == r);
  ChunkLogRecord none = r;
  none.routing_decision.reset();
  none.evicted_chunk = -1;
  none.s_short = std::numeric_limits<double>::denorm_min();
  CHECK(record_from_jsonl(to_jsonl(none)) == none);
  CHECK(to_jsonl(none).find("\"routing_decision\":\"none\"") != std::string::npos);
  CHECK_THROWS(record_from_jsonl("{\"chunk_index\": 1}"));
}

TEST_CASE("tsv rows line up with the header") {
  const std::string row = to_tsv(sample());
  const std::string header = tsv_header();
  CHECK(std::count(row.begin(), row.end(), '\t') == std::count(header.begin(), header.end(), '\t'));
  CHECK(row.rfind("12\t5\t3\t1\t0.1\t", 0) == 0);
  CHECK(row.find("\tema_sink\t3\ttrue\tfalse\t42/12/5\t208") != std::string::npos);
}

TEST_CASE("format_log writes one line per record") {
  const std::vector<ChunkLogRecord> recs = {sample(), sample()};
  const auto jsonl = format_log(recs, LogFormat::Jsonl);
  CHECK(std::count(jsonl.begin(), jsonl.end(), '\n') == 2);
  const auto tsv = format_log(recs, LogFormat::Tsv);
  CHECK(std::count(tsv.begin(), tsv.end(), '\n') == 3);
  CHECK(tsv.rfind(tsv_header() + "\n", 0) == 0);
  CHECK(format_log({}, LogFormat::Jsonl).empty());
}

TEST_CASE("summary csv") {
  SummaryRow row{"stream_t1", "42", 25.5, 0.5, 0.75, 1, 4, 23, 640};
  CHECK(to_csv(row) == "stream_t1,42,25.5,0.5,0.75,1,4,23,640");
  CHECK(summary_header().rfind("strategy,seed,cumulative_final", 0) == 0);
}

TEST_CASE("format_real is shortest round-trip") {
  CHECK(format_real(0.1) == "0.1");
  CHECK(format_real(1.0 / 3.0) == "0.3333333333333333");
  CHECK(format_real(640) == "640");
  CHECK(std::stod(format_real(0.30000000000000004)) == 0.30000000000000004);
}
