#include "stream_t1/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace stream_t1 {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::StreamT1: return "stream_t1";
    case Strategy::Greedy: return "greedy";
    case Strategy::BestOfN: return "best_of_n";
    case Strategy::BeamPlain: return "beam_plain";
    case Strategy::AblateNoise: return "ablate_noise";
    case Strategy::AblateFusion: return "ablate_fusion";
    case Strategy::AblateMemory: return "ablate_memory";
  }
  return "?";
}

std::string_view to_string(RankingKey k) {
  switch (k) {
    case RankingKey::Combined: return "combined";
    case RankingKey::LongOnly: return "long_only";
    case RankingKey::ShortOnly: return "short_only";
  }
  return "?";
}

std::string_view to_string(LogFormat f) { return f == LogFormat::Jsonl ? "jsonl" : "tsv"; }

Strategy parse_strategy(std::string_view name) {
  for (auto s : {Strategy::StreamT1, Strategy::Greedy, Strategy::BestOfN, Strategy::BeamPlain,
                 Strategy::AblateNoise, Strategy::AblateFusion, Strategy::AblateMemory})
    if (to_string(s) == name) return s;
  throw ConfigError("strategy", 0, "unknown strategy '" + std::string(name) + "'");
}

ConfigError::ConfigError(std::string key, int line, const std::string& message)
    : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + key + ": " + message
                                  : key + ": " + message),
      key_(std::move(key)),
      line_(line) {}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc{} || ptr != last)
    throw ConfigError(key, 0, "expected a real number, got '" + text + "'");
  return v;
}

template <class Int>
Int parse_int(const std::string& key, const std::string& text) {
  Int v{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw ConfigError(key, 0, "expected an integer, got '" + text + "'");
  return v;
}

struct KeySpec {
  std::string name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <class T>
KeySpec int_key(std::string name, T RunConfig::*field) {
  return {name,
          [name, field](RunConfig& c, const std::string& v) { c.*field = parse_int<T>(name, v); },
          [field](const RunConfig& c) { return std::to_string(c.*field); }};
}

KeySpec real_key(std::string name, double RunConfig::*field) {
  return {name,
          [name, field](RunConfig& c, const std::string& v) { c.*field = parse_double(name, v); },
          [field](const RunConfig& c) { return format_double(c.*field); }};
}

KeySpec string_key(std::string name, std::string RunConfig::*field) {
  return {name, [field](RunConfig& c, const std::string& v) { c.*field = v; },
          [field](const RunConfig& c) { return c.*field; }};
}

template <class Enum, std::size_t N>
KeySpec enum_key(std::string name, Enum RunConfig::*field, const Enum (&options)[N]) {
  std::vector<Enum> opts(std::begin(options), std::end(options));
  return {name,
          [name, field, opts](RunConfig& c, const std::string& v) {
            for (auto o : opts)
              if (to_string(o) == v) {
                c.*field = o;
                return;
              }
            std::string allowed;
            for (auto o : opts) allowed += (allowed.empty() ? "" : ", ") + std::string(to_string(o));
            throw ConfigError(name, 0, "expected one of {" + allowed + "}, got '" + v + "'");
          },
          [field](const RunConfig& c) { return std::string(to_string(c.*field)); }};
}

constexpr Strategy kStrategies[] = {Strategy::StreamT1,    Strategy::Greedy,
                                    Strategy::BestOfN,     Strategy::BeamPlain,
                                    Strategy::AblateNoise, Strategy::AblateFusion,
                                    Strategy::AblateMemory};
constexpr RankingKey kRankings[] = {RankingKey::Combined, RankingKey::LongOnly,
                                    RankingKey::ShortOnly};
constexpr MemoryMode kModes[] = {MemoryMode::Dynamic, MemoryMode::StaticSink,
                                 MemoryMode::NaiveWindow};
constexpr ShortMeanKind kMeans[] = {ShortMeanKind::Arithmetic, ShortMeanKind::Exponential};
constexpr LogFormat kFormats[] = {LogFormat::Jsonl, LogFormat::Tsv};

const std::vector<KeySpec>& key_specs() {
  static const std::vector<KeySpec> specs = [] {
    std::vector<KeySpec> s;
    s.push_back(int_key("seed", &RunConfig::seed));
    s.push_back(int_key("total_chunks", &RunConfig::total_chunks));
    s.push_back(int_key("frames", &RunConfig::frames));
    s.push_back(int_key("dim", &RunConfig::dim));
    s.push_back(int_key("K", &RunConfig::beam_width));
    s.push_back(int_key("M", &RunConfig::expansions));
    s.push_back(enum_key("strategy", &RunConfig::strategy, kStrategies));
    s.push_back(int_key("bon_n", &RunConfig::bon_n));
    s.push_back(real_key("beta", &RunConfig::beta));
    s.push_back(real_key("tau", &RunConfig::tau));
    s.push_back(int_key("reward_window", &RunConfig::reward_window));
    s.push_back(enum_key("fusion", &RunConfig::fusion, kRankings));
    s.push_back(real_key("oracle.penalty", &RunConfig::oracle_penalty));
    s.push_back(int_key("attn_window", &RunConfig::attn_window));
    s.push_back(int_key("sink_size", &RunConfig::sink_size));
    s.push_back(real_key("alpha", &RunConfig::alpha));
    s.push_back(real_key("tau_short", &RunConfig::tau_short));
    s.push_back(real_key("tau_long", &RunConfig::tau_long));
    s.push_back(enum_key("memory_mode", &RunConfig::memory_mode, kModes));
    s.push_back(enum_key("short_mean", &RunConfig::short_mean, kMeans));
    s.push_back(real_key("short_mean_decay", &RunConfig::short_mean_decay));
    s.push_back(int_key("denoise_steps", &RunConfig::denoise_steps));
    s.push_back({"sigma_schedule",
                 [](RunConfig& c, const std::string& v) {
                   std::vector<double> out;
                   std::stringstream in(v);
                   std::string item;
                   while (std::getline(in, item, ','))
                     out.push_back(parse_double("sigma_schedule", trim(item)));
                   c.sigma_schedule = std::move(out);
                 },
                 [](const RunConfig& c) {
                   std::string out;
                   for (double v : c.sigma_schedule)
                     out += (out.empty() ? "" : ", ") + format_double(v);
                   return out;
                 }});
    s.push_back(int_key("weights_seed", &RunConfig::weights_seed));
    s.push_back(real_key("attractor_pull", &RunConfig::attractor_pull));
    s.push_back(real_key("pull_floor", &RunConfig::pull_floor));
    s.push_back(real_key("renoise_eta", &RunConfig::renoise_eta));
    s.push_back(real_key("sink_attention_bias", &RunConfig::sink_attention_bias));
    s.push_back(real_key("content_variance", &RunConfig::content_variance));
    s.push_back(string_key("scene_file", &RunConfig::scene_file));
    s.push_back(string_key("output_dir", &RunConfig::output_dir));
    s.push_back(enum_key("log_format", &RunConfig::log_format, kFormats));
    s.push_back(int_key("compare_seeds", &RunConfig::compare_seeds));
    return s;
  }();
  return specs;
}

void require(bool ok, const char* key, const std::string& message) {
  if (!ok) throw ConfigError(key, 0, message);
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& k : key_specs()) n.push_back(k.name);
    return n;
  }();
  return names;
}

void RunConfig::validate() const {
  require(total_chunks >= 1, "total_chunks", "must be >= 1");
  require(frames >= 1, "frames", "must be >= 1");
  require(dim >= 3, "dim", "must be >= 3 (the default scene uses three axes)");
  require(beam_width >= 1, "K", "must be >= 1");
  require(expansions >= 1, "M", "must be >= 1");
  require(bon_n >= 0, "bon_n", "must be >= 0");
  require(std::abs(beta) < 1.0, "beta", "must lie in the open interval (-1, 1)");
  require(tau > 0.0 && tau <= 1.0, "tau", "must lie in (0, 1]");
  require(reward_window >= 1, "reward_window", "must be >= 1");
  require(oracle_penalty > 0.0 && oracle_penalty < 1.0, "oracle.penalty", "must lie in (0, 1)");
  require(attn_window >= 1, "attn_window", "must be >= 1");
  require(sink_size >= 0, "sink_size", "must be >= 0");
  require(alpha > 0.0 && alpha < 1.0, "alpha", "must lie in (0, 1)");
  require(!std::isnan(tau_short), "tau_short", "must be a number");
  require(!std::isnan(tau_long), "tau_long", "must be a number");
  require(short_mean_decay > 0.0 && short_mean_decay < 1.0, "short_mean_decay",
          "must lie in (0, 1)");
  require(denoise_steps >= 1, "denoise_steps", "must be >= 1");
  require(static_cast<int>(sigma_schedule.size()) == denoise_steps, "sigma_schedule",
          "needs exactly denoise_steps levels");
  for (std::size_t i = 0; i < sigma_schedule.size(); ++i) {
    require(std::isfinite(sigma_schedule[i]) && sigma_schedule[i] >= 0.0, "sigma_schedule",
            "levels must be finite and non-negative");
    require(i == 0 || sigma_schedule[i] < sigma_schedule[i - 1], "sigma_schedule",
            "levels must be strictly decreasing");
  }
  require(!sigma_schedule.empty() && sigma_schedule.back() == 0.0, "sigma_schedule",
          "last level must be 0");
  require(attractor_pull >= 0.0 && attractor_pull <= 1.0, "attractor_pull", "must lie in [0, 1]");
  require(pull_floor >= 0.0 && pull_floor <= 1.0, "pull_floor", "must lie in [0, 1]");
  require(renoise_eta >= 0.0 && renoise_eta <= 1.0, "renoise_eta", "must lie in [0, 1]");
  require(std::isfinite(sink_attention_bias), "sink_attention_bias", "must be finite");
  require(std::isfinite(content_variance) && content_variance > 0.0, "content_variance",
          "must be positive");
  require(!output_dir.empty(), "output_dir", "must not be empty");
  require(compare_seeds >= 1, "compare_seeds", "must be >= 1");
}

RunConfig parse_config_text(std::string_view text) {
  RunConfig config;
  std::map<std::string, int> seen;
  std::istringstream lines{std::string(text)};
  std::string raw;
  int line_no = 0;
  while (std::getline(lines, raw)) {
    ++line_no;
    std::string line = raw;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError(line, line_no, "expected 'key = value'");
    const std::string key = trim(std::string_view(line).substr(0, eq));
    const std::string value = trim(std::string_view(line).substr(eq + 1));
    const auto& specs = key_specs();
    auto it = std::find_if(specs.begin(), specs.end(), [&](const KeySpec& k) { return k.name == key; });
    if (it == specs.end()) throw ConfigError(key, line_no, "unknown key");
    if (seen.count(key)) throw ConfigError(key, line_no, "duplicate key");
    seen[key] = line_no;
    try {
      it->set(config, value);
    } catch (const ConfigError& e) {
      throw ConfigError(key, line_no, std::string(e.what()).substr(key.size() + 2));
    }
  }
  try {
    config.validate();
  } catch (const ConfigError& e) {
    const auto it = seen.find(e.key());
    throw ConfigError(e.key(), it == seen.end() ? 0 : it->second,
                      std::string(e.what()).substr(e.key().size() + 2));
  }
  return config;
}

RunConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config", 0, "cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config_text(buf.str());
}

std::string serialize_config(const RunConfig& config) {
  std::string out;
  for (const auto& k : key_specs()) out += k.name + " = " + k.get(config) + "\n";
  return out;
}

}  // namespace stream_t1
