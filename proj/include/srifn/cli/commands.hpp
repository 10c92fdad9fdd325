#pragma once

#include "srifn/cli/run_config.hpp"
#include "srifn/market_data.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace srifn {

using WrittenFiles = std::vector<std::filesystem::path>;

// Writes `content` to a temporary sibling and renames it into place.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

// Price file -> log returns, restricted to the configured sample range and
// trimmed to assets with a complete, non-constant history over it.
ReturnPanel load_sample(const RunConfig& config);

// Date range for the configured sample. The out-of-sample range starts
// `lookback_days` trading days before the split so that the first rebalance
// falls on the first out-of-sample day.
std::pair<std::optional<Date>, std::optional<Date>> sample_bounds(const ReturnPanel& returns,
                                                                  const RunConfig& config, int lookback_days);

// Output directory name of one backtest combination.
std::string run_name(SelectionRule selection, WeightingRule weighting, double conf_level, int start_offset);

WrittenFiles cmd_synth(const RunConfig& config);
WrittenFiles cmd_network(const RunConfig& config);
WrittenFiles cmd_select(const RunConfig& config);
WrittenFiles cmd_backtest(const RunConfig& config);
WrittenFiles cmd_grid(const RunConfig& config);
WrittenFiles cmd_report(const RunConfig& config);

// Full command line front end. Exit codes: 0 success, 1 user/config error,
// 2 internal error. Errors are reported as one JSON line on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace srifn
