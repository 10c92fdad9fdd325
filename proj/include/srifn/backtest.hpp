#pragma once

#include "srifn/filtering.hpp"
#include "srifn/market_data.hpp"
#include "srifn/portfolio.hpp"

#include <json.hpp>

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace srifn {

inline constexpr double kTradingDaysPerYear = 252.0;

struct BacktestConfig {
  int lookback_days = 126;
  int rebalance_days = 84;
  double fee_rate = 0.0020;
  SelectionRule selection = SelectionRule::Peripheral;
  WeightingRule weighting = WeightingRule::Equal;
  SrIfnConfig sr_ifn;
  std::optional<Date> start;
  std::optional<Date> end;
  // Trading days skipped after `start` (varying-start ensembling).
  int start_offset = 0;
  double centrality_floor = kCentralityFloor;

  void validate() const;
};

nlohmann::json to_json(const BacktestConfig& config);

struct MetricSet {
  double annualized_return = 0.0;
  double annualized_stddev = 0.0;
  double sharpe_ratio = 0.0;
  double daily_skewness = 0.0;
  double max_drawdown = 0.0;
  double mean_portfolio_size = 0.0;
};

struct RebalanceRecord {
  Date date;
  std::vector<std::string> assets;
  std::vector<double> weights;
  double turnover = 0.0;
  double cost = 0.0;  // fraction of portfolio value paid in fees
  std::size_t edge_count = 0;
  std::size_t universe_size = 0;
  bool fallback = false;  // selection was empty; previous holdings kept
  std::string note;
};

struct BacktestReport {
  std::vector<Date> dates;
  std::vector<double> gross_returns;  // daily log returns before fees
  std::vector<double> net_returns;    // daily log returns after fees
  std::vector<RebalanceRecord> rebalances;
  MetricSet metrics;        // on net returns
  MetricSet gross_metrics;  // on gross returns
  double total_turnover = 0.0;
  double total_cost = 0.0;
  nlohmann::json config;
};

using WeightMap = std::map<std::string, double>;

// fee_rate * sum_i |new(i) - drifted(i)|; absent assets weigh zero.
double turnover_cost(const WeightMap& previous_drifted, const WeightMap& next, double fee_rate);

MetricSet compute_metrics(std::span<const double> daily_log_returns);

struct WindowAllocation {
  PortfolioAllocation allocation;
  std::size_t edge_count = 0;  // edges of the thresholded network
};

// Selection and weighting on one lookback window (all columns complete).
// Throws EmptySelection when the strategy picks nothing; LongHold is not
// handled here.
WindowAllocation allocate_window(const ReturnPanel& window, const BacktestConfig& config,
                                 std::size_t rebalance_index = 0);

BacktestReport run_backtest(const ReturnPanel& returns, const BacktestConfig& config);

struct GridCell {
  int rebalance_days = 0;
  int lookback_days = 0;
  std::optional<MetricSet> metrics;  // net of fees
  std::optional<MetricSet> gross_metrics;
  std::string error;
};

struct GridResult {
  std::vector<int> rebalance_grid;
  std::vector<int> lookback_grid;
  std::vector<GridCell> cells;  // row-major: rebalance outer, lookback inner
  std::optional<MetricSet> long_hold;
  std::optional<MetricSet> long_hold_gross;
  // Sharpe of the selected portfolio averaged over all successful cells.
  std::optional<double> mean_sharpe;

  const GridCell& cell(std::size_t rebalance_index, std::size_t lookback_index) const {
    return cells.at(rebalance_index * lookback_grid.size() + lookback_index);
  }
};

// One backtest per (rebalance, lookback) cell over the range of `base`.
GridResult grid_search(const ReturnPanel& returns, const BacktestConfig& base, std::span<const int> rebalance_grid,
                       std::span<const int> lookback_grid);

nlohmann::json metrics_json(const MetricSet& metrics);
nlohmann::json report_metrics_json(const BacktestReport& report);
std::string daily_returns_csv(const BacktestReport& report);
std::string rebalance_log_csv(const BacktestReport& report);
// Rows = rebalance periods, columns = lookback windows; failed cells are empty.
std::string grid_sharpe_csv(const GridResult& grid, bool gross = false);
nlohmann::json grid_json(const GridResult& grid);

}  // namespace srifn
