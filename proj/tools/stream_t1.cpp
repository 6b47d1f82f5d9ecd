// stream_t1 command-line tool: run, compare, verify, print-config.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "stream_t1/config.hpp"
#include "stream_t1/experiment.hpp"

namespace {

enum Exit { kOk = 0, kRunFailure = 1, kConfigError = 2, kVerifyFailure = 3 };

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("stream_t1");
  logger->set_pattern("[%l] %v");
  spdlog::set_default_logger(logger);
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("STREAM_T1_LOG_LEVEL")) {
    const auto parsed = spdlog::level::from_str(level);
    if (parsed == spdlog::level::off && std::string(level) != "off")
      spdlog::warn("unknown STREAM_T1_LOG_LEVEL '{}', keeping info", level);
    else
      spdlog::set_level(parsed);
  }
}

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string strategy;
  std::string out;
};

stream_t1::RunConfig load(const Overrides& o) {
  stream_t1::RunConfig c = o.config_path.empty() ? stream_t1::parse_config_text("")
                                                 : stream_t1::parse_config(o.config_path);
  if (o.seed) c.seed = *o.seed;
  if (!o.strategy.empty()) c.strategy = stream_t1::parse_strategy(o.strategy);
  if (!o.out.empty()) c.output_dir = o.out;
  c.validate();
  return c;
}

void add_common(CLI::App* cmd, Overrides& o, bool with_strategy) {
  cmd->add_option("--config", o.config_path, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", o.seed, "root seed (overrides the file)");
  if (with_strategy) cmd->add_option("--strategy", o.strategy, "strategy name");
  cmd->add_option("--out", o.out, "output directory");
}

int cmd_run(const Overrides& o) {
  const auto config = load(o);
  spdlog::info("run: strategy={} seed={} N={} K={} M={}", stream_t1::to_string(config.strategy),
               config.seed, config.total_chunks, config.beam_width, config.expansions);
  const auto result = stream_t1::run(config);
  for (const auto& path : stream_t1::write_run(config, result))
    spdlog::info("wrote {}", path.string());
  std::cout << stream_t1::summary_header() << "\n" << stream_t1::to_csv(result.summary) << "\n";
  return kOk;
}

int cmd_compare(const Overrides& o, const std::string& strategies) {
  const auto config = load(o);
  const auto list = stream_t1::parse_strategy_list(strategies);
  spdlog::info("compare: {} strategies x {} seeds from {}", list.size(), config.compare_seeds,
               config.seed);
  const auto table = stream_t1::format_comparison(stream_t1::compare(config, list));
  std::filesystem::create_directories(config.output_dir);
  const auto path = std::filesystem::path(config.output_dir) / "compare.csv";
  std::ofstream(path, std::ios::binary) << table;
  spdlog::info("wrote {}", path.string());
  std::cout << table;
  return kOk;
}

int cmd_verify(std::optional<std::uint64_t> seed, std::optional<double> inject_alpha) {
  stream_t1::VerifyOptions opts;
  if (seed) opts.seed = *seed;
  opts.inject_alpha = inject_alpha;
  if (inject_alpha) spdlog::warn("fault injection: sink alpha = {}", *inject_alpha);
  bool ok = true;
  for (const auto& r : stream_t1::verify(opts)) {
    std::cout << stream_t1::format_property(r) << "\n";
    ok = ok && r.passed;
  }
  return ok ? kOk : kVerifyFailure;
}

}  // namespace

int main(int argc, char** argv) {
  setup_logging();
  CLI::App app{"Stream-scaled beam search over a toy chunked video generator"};
  app.require_subcommand(1);

  Overrides run_opts, cmp_opts, print_opts;
  auto* run = app.add_subcommand("run", "run one strategy and write logs + summary");
  add_common(run, run_opts, true);

  std::string strategies = "baselines";
  auto* cmp = app.add_subcommand("compare", "paired-seed comparison table");
  add_common(cmp, cmp_opts, false);
  cmp->add_option("--strategies", strategies,
                  "comma-separated strategy names, 'baselines' or 'all'");

  std::optional<std::uint64_t> verify_seed;
  std::optional<double> inject_alpha;
  auto* ver = app.add_subcommand("verify", "run the invariant suite");
  ver->add_option("--seed", verify_seed, "seed for randomized properties");
  ver->add_option("--inject-alpha", inject_alpha, "fault injection: unchecked sink alpha");

  auto* print = app.add_subcommand("print-config", "print the effective config");
  add_common(print, print_opts, true);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kOk : kConfigError;
  }

  try {
    if (*run) return cmd_run(run_opts);
    if (*cmp) return cmd_compare(cmp_opts, strategies);
    if (*ver) return cmd_verify(verify_seed, inject_alpha);
    if (*print) {
      std::cout << stream_t1::serialize_config(load(print_opts));
      return kOk;
    }
  } catch (const stream_t1::ConfigError& e) {
    spdlog::error("config: {}", e.what());
    return kConfigError;
  } catch (const stream_t1::BudgetMismatch& e) {
    spdlog::error("compare: {}", e.what());
    return kConfigError;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kRunFailure;
  }
  return kRunFailure;
}
