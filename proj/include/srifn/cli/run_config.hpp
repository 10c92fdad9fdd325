#pragma once

#include "srifn/backtest.hpp"
#include "srifn/cli/synthetic.hpp"
#include "srifn/filtering.hpp"
#include "srifn/portfolio.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace srifn {

enum class SampleRange { Full, InSample, OutOfSample };

// Everything a CLI invocation needs. Loaded from a TOML-style key/value file:
//
//   prices = "data/sample_prices.csv"
//   [backtest]
//   lookback_days = 126
//   strategies = [PTP, RBP]
//
// Keys inside a [section] are addressed as `section.key`.
struct RunConfig {
  std::filesystem::path prices;
  std::filesystem::path out = "srifn_out";
  std::optional<Date> start;
  std::optional<Date> end;
  Date split{std::chrono::year{2017}, std::chrono::January, std::chrono::day{1}};
  SampleRange sample = SampleRange::Full;

  SrIfnConfig sr_ifn{0.7, 100, 0, 0};
  std::vector<double> conf_levels;
  BacktestConfig backtest;
  std::vector<SelectionRule> strategies{SelectionRule::Peripheral};
  std::vector<WeightingRule> weightings{WeightingRule::Equal};
  std::vector<int> start_offsets{0};
  std::vector<int> rebalance_grid{21, 42, 63, 84, 105, 126};
  std::vector<int> lookback_grid{63, 126, 189, 252};

  SyntheticSpec synth;  // `blocks` is assembled from the two lists below
  std::vector<std::size_t> synth_block_sizes{11, 11, 11, 11, 11};
  std::vector<double> synth_block_rho{0.7};  // one value applies to every block

  std::optional<std::size_t> report_min_size;
  std::optional<std::size_t> report_max_size;

  RunConfig();
  // Checks every nested invariant; throws InvalidConfig naming the field.
  void validate() const;
  SyntheticSpec synthetic_spec() const;
};

// Applies one `key = value` assignment; throws InvalidConfig naming `key`.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
RunConfig parse_run_config(std::string_view text);
RunConfig load_run_config(const std::filesystem::path& path);

std::vector<std::string> split_list(std::string_view value);

}  // namespace srifn
