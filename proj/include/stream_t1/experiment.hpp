#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "stream_t1/beam.hpp"
#include "stream_t1/config.hpp"
#include "stream_t1/run_log.hpp"

namespace stream_t1 {

/// Strategies compared by default: the baselines and the full method.
const std::vector<Strategy>& baseline_strategies();
/// Every strategy, ablations included.
const std::vector<Strategy>& all_strategies();

/// Accepts strategy names separated by commas, or "baselines" / "all".
std::vector<Strategy> parse_strategy_list(const std::string& text);

/// Writes the per-chunk log (log.jsonl or log.tsv) and summary.csv into
/// config.output_dir, creating it if needed. Returns the files written.
std::vector<std::filesystem::path> write_run(const RunConfig& config, const RunResult& result);

class BudgetMismatch : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Comparison {
  std::vector<SummaryRow> rows;   // strategy-major, then seed
  std::vector<SummaryRow> means;  // one per strategy, seed = "mean"
};

/// Runs every strategy on compare_seeds consecutive seeds starting at
/// config.seed. Greedy is the single-call reference; every other strategy
/// must report the same generator_calls on each seed or BudgetMismatch is
/// thrown.
Comparison compare(const RunConfig& config, const std::vector<Strategy>& strategies);

std::string format_comparison(const Comparison& c);

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = kDefaultSeed;
  /// Overrides the decay used by the sink-conservation property, bypassing
  /// validation (fault injection).
  std::optional<double> inject_alpha;
};

/// The invariant suite. Each property is independent; a thrown exception
/// counts as a failure of that property.
std::vector<PropertyResult> verify(const VerifyOptions& options = {});

std::string format_property(const PropertyResult& r);

}  // namespace stream_t1
