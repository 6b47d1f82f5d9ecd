#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "stream_t1/memory_sink.hpp"

namespace stream_t1 {

enum class Strategy {
  StreamT1,
  Greedy,
  BestOfN,
  BeamPlain,
  AblateNoise,   // stream_t1 with beta = 0
  AblateFusion,  // stream_t1 pruning on the long score alone
  AblateMemory,  // stream_t1 with a static sink
};

/// Key used to rank candidates during pruning. The logged s_final is always
/// the position-weighted fusion regardless of this choice.
enum class RankingKey { Combined, LongOnly, ShortOnly };

enum class LogFormat { Jsonl, Tsv };

std::string_view to_string(Strategy s);
std::string_view to_string(RankingKey k);
std::string_view to_string(LogFormat f);
Strategy parse_strategy(std::string_view name);

/// Configuration error carrying the offending key and 1-based line number
/// (0 when the error is not tied to a line).
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string key, int line, const std::string& message);

  const std::string& key() const { return key_; }
  int line() const { return line_; }

 private:
  std::string key_;
  int line_;
};

struct RunConfig {
  std::uint64_t seed = 42;
  int total_chunks = 40;
  int frames = 4;
  int dim = 8;

  int beam_width = 4;   // K
  int expansions = 4;   // M
  Strategy strategy = Strategy::StreamT1;
  int bon_n = 0;        // 0 means K * M

  double beta = 0.5;

  double tau = 0.5;
  int reward_window = 10;
  RankingKey fusion = RankingKey::Combined;
  double oracle_penalty = 0.5;

  int attn_window = 9;
  int sink_size = 3;
  double alpha = 0.9;
  double tau_short = 0.05;
  double tau_long = 0.1;
  MemoryMode memory_mode = MemoryMode::Dynamic;
  ShortMeanKind short_mean = ShortMeanKind::Arithmetic;
  double short_mean_decay = 0.9;

  int denoise_steps = 4;
  std::vector<double> sigma_schedule = {1.0, 0.6, 0.3, 0.0};
  std::uint64_t weights_seed = 7;
  double attractor_pull = 0.35;
  double pull_floor = 0.3;
  double renoise_eta = 0.0;
  double sink_attention_bias = 0.0;
  double content_variance = 1.0;

  std::string scene_file;  // empty: built-in default script
  std::string output_dir = "out";
  LogFormat log_format = LogFormat::Jsonl;
  int compare_seeds = 20;

  int effective_bon_n() const { return bon_n > 0 ? bon_n : beam_width * expansions; }

  /// Throws ConfigError naming the first out-of-domain key.
  void validate() const;

  bool operator==(const RunConfig&) const = default;
};

/// Parses the line-oriented `key = value` format. `#` starts a comment,
/// blank lines are ignored, unknown keys are errors. Defaults fill unset keys.
RunConfig parse_config_text(std::string_view text);
RunConfig parse_config(const std::filesystem::path& path);

/// Every key in canonical order; parse_config_text(serialize_config(c)) == c.
std::string serialize_config(const RunConfig& config);

/// Names of all recognised keys, in serialization order.
const std::vector<std::string>& config_keys();

}  // namespace stream_t1
