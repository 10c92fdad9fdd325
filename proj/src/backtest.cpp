#include "srifn/backtest.hpp"

#include "srifn/centrality.hpp"
#include "srifn/error.hpp"
#include "srifn/random.hpp"

#include <fmt/format.h>
#include <fmt/ranges.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace srifn {

void BacktestConfig::validate() const {
  if (lookback_days < 2) throw Error(ErrorKind::InvalidConfig, "lookback_days must be >= 2", "lookback_days");
  if (rebalance_days < 1) throw Error(ErrorKind::InvalidConfig, "rebalance_days must be >= 1", "rebalance_days");
  // A full switch costs 2 * fee_rate of value, which must stay below 100%.
  if (!(fee_rate >= 0.0 && fee_rate < 0.5))
    throw Error(ErrorKind::InvalidConfig, "fee_rate must lie in [0, 0.5)", "fee_rate");
  if (start_offset < 0) throw Error(ErrorKind::InvalidConfig, "start_offset must be >= 0", "start_offset");
  if (!(centrality_floor > 0.0))
    throw Error(ErrorKind::InvalidConfig, "centrality_floor must be positive", "centrality_floor");
  if (start && end && *end < *start) throw Error(ErrorKind::InvalidConfig, "end precedes start", "end");
  sr_ifn.validate();
}

nlohmann::json to_json(const BacktestConfig& config) {
  nlohmann::json doc{{"lookback_days", config.lookback_days},
                     {"rebalance_days", config.rebalance_days},
                     {"fee_rate", config.fee_rate},
                     {"selection", to_string(config.selection)},
                     {"weighting", to_string(config.weighting)},
                     {"sr_ifn", to_json(config.sr_ifn)},
                     {"start_offset", config.start_offset},
                     {"centrality_floor", config.centrality_floor}};
  doc["start"] = config.start ? nlohmann::json(format_date(*config.start)) : nlohmann::json();
  doc["end"] = config.end ? nlohmann::json(format_date(*config.end)) : nlohmann::json();
  return doc;
}

double turnover_cost(const WeightMap& previous_drifted, const WeightMap& next, double fee_rate) {
  if (fee_rate < 0.0) throw Error(ErrorKind::InvalidConfig, "fee_rate must be non-negative", "fee_rate");
  double turnover = 0.0;
  auto check = [](const auto& entry) {
    if (entry.second < 0.0) throw Error(ErrorKind::NegativeWeight, "negative weight", entry.first);
  };
  for (const auto& entry : previous_drifted) {
    check(entry);
    const auto it = next.find(entry.first);
    turnover += std::abs((it == next.end() ? 0.0 : it->second) - entry.second);
  }
  for (const auto& entry : next) {
    check(entry);
    if (!previous_drifted.contains(entry.first)) turnover += std::abs(entry.second);
  }
  return fee_rate * turnover;
}

MetricSet compute_metrics(std::span<const double> r) {
  const auto n = r.size();
  if (n < 2) throw Error(ErrorKind::TooFewObservations, "metrics need at least 2 observations");
  const double count = static_cast<double>(n);
  const double mean = std::accumulate(r.begin(), r.end(), 0.0) / count;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : r) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  const double variance = m2 / (count - 1.0);
  // A constant series can leave rounding residue in m2.
  const bool constant = std::all_of(r.begin(), r.end(), [&](double x) { return x == r[0]; });
  if (constant || !(variance > 0.0)) throw Error(ErrorKind::ZeroVariance, "daily returns have zero variance");

  MetricSet m;
  m.annualized_return = kTradingDaysPerYear * mean;
  m.annualized_stddev = std::sqrt(kTradingDaysPerYear * variance);
  m.sharpe_ratio = m.annualized_return / m.annualized_stddev;
  if (n >= 3) {
    // Adjusted Fisher-Pearson coefficient G1.
    const double b2 = m2 / count;
    const double g1 = (m3 / count) / std::pow(b2, 1.5);
    m.daily_skewness = g1 * std::sqrt(count * (count - 1.0)) / (count - 2.0);
  }
  double log_value = 0.0;
  double log_peak = 0.0;
  for (double x : r) {
    log_value += x;
    log_peak = std::max(log_peak, log_value);
    m.max_drawdown = std::min(m.max_drawdown, std::expm1(log_value - log_peak));
  }
  return m;
}

namespace {

CentralityMeasure measure_for(WeightingRule rule) {
  switch (rule) {
    case WeightingRule::InvDegree: return CentralityMeasure::Degree;
    case WeightingRule::InvCbc: return CentralityMeasure::Cbc;
    default: return CentralityMeasure::AbsCorr;
  }
}

WeightMap to_map(const std::vector<std::string>& assets, const Eigen::VectorXd& weights) {
  WeightMap out;
  for (Eigen::Index i = 0; i < weights.size(); ++i)
    if (weights(i) != 0.0) out[assets[static_cast<std::size_t>(i)]] = weights(i);
  return out;
}

}  // namespace

WindowAllocation allocate_window(const ReturnPanel& window, const BacktestConfig& config,
                                 std::size_t rebalance_index) {
  if (window.cols() < 2)
    throw Error(ErrorKind::EmptySelection, fmt::format("universe of {} assets is too small", window.cols()));
  const auto ensemble = bootstrap_ensemble(window, config.sr_ifn);
  const auto net = threshold_ensemble(ensemble, config.sr_ifn.confidence_level);

  AssetSubset subset;
  switch (config.selection) {
    case SelectionRule::Peripheral: subset = select_peripheral(net); break;
    case SelectionRule::Central: subset = select_central(net); break;
    case SelectionRule::Random: {
      const auto count = select_peripheral(net).size();
      const auto seed = derive_seed(splitmix64(config.sr_ifn.base_seed), rebalance_index);
      subset = select_random(window.assets(), count, seed);
      break;
    }
    case SelectionRule::LeastCorrelated:
      subset = select_least_correlated(ensemble.original, select_peripheral(net).size());
      break;
    case SelectionRule::LongHold: subset = window.assets(); break;
  }

  StrategyTag tag{config.selection, config.weighting, to_json(config)};
  auto allocation =
      config.weighting == WeightingRule::Equal
          ? equal_weights(subset, std::move(tag))
          : inverse_centrality_weights(
                subset, bootstrapped_centrality(ensemble, measure_for(config.weighting), config.sr_ifn.threads),
                std::move(tag), config.centrality_floor);
  return {std::move(allocation), net.edge_count()};
}

BacktestReport run_backtest(const ReturnPanel& returns, const BacktestConfig& config) {
  config.validate();
  const Eigen::Index range_begin = (config.start ? returns.lower_bound(*config.start) : 0) + config.start_offset;
  const Eigen::Index range_end =
      config.end ? std::upper_bound(returns.dates().begin(), returns.dates().end(), *config.end) - returns.dates().begin()
                 : returns.rows();
  const Eigen::Index span = std::max<Eigen::Index>(0, range_end - range_begin);

  const bool long_hold = config.selection == SelectionRule::LongHold;
  const Eigen::Index needed = long_hold ? 2 : config.lookback_days + config.rebalance_days;
  if (span < needed)
    throw Error(ErrorKind::InsufficientHistory,
                fmt::format("range holds {} trading days; at least {} are needed", span, needed));

  const Eigen::Index first_day = long_hold ? range_begin : range_begin + config.lookback_days;
  const auto& names = returns.assets();
  const Eigen::Index n_all = returns.cols();

  BacktestReport report;
  report.config = to_json(config);
  Eigen::VectorXd held = Eigen::VectorXd::Zero(n_all);
  bool holding = false;

  for (Eigen::Index day = first_day; day < range_end; ++day) {
    const auto date = returns.dates()[static_cast<std::size_t>(day)];
    double cost = 0.0;
    const bool rebalance_day =
        long_hold ? day == first_day : (day - first_day) % config.rebalance_days == 0;

    if (rebalance_day) {
      RebalanceRecord record;
      record.date = date;
      Eigen::VectorXd target = Eigen::VectorXd::Zero(n_all);

      std::vector<std::size_t> universe;
      const Eigen::Index window_begin = long_hold ? range_begin : day - config.lookback_days;
      const Eigen::Index window_end = long_hold ? range_end : day;
      for (auto col : returns.complete_assets(window_begin, window_end)) {
        const auto column = returns.returns().col(static_cast<Eigen::Index>(col)).segment(window_begin, window_end - window_begin);
        if (long_hold || !(column.array() == column(0)).all()) universe.push_back(col);
      }
      record.universe_size = universe.size();

      std::optional<WindowAllocation> chosen;
      if (long_hold) {
        if (universe.empty())
          throw Error(ErrorKind::InsufficientHistory, "no asset has a complete history over the range");
        AssetSubset all;
        for (auto col : universe) all.push_back(names[col]);
        chosen = WindowAllocation{equal_weights(all, {config.selection, config.weighting, {}}), 0};
      } else {
        try {
          chosen = allocate_window(returns.slice_rows(window_begin, window_end).select_assets(universe), config,
                                report.rebalances.size());
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::EmptySelection) throw;
          record.fallback = true;
          record.note = e.what();
        }
      }

      if (chosen) {
        record.edge_count = chosen->edge_count;
        const auto& picked = chosen->allocation;
        for (std::size_t k = 0; k < picked.size(); ++k) {
          const auto col = std::find(names.begin(), names.end(), picked.assets()[k]) - names.begin();
          target(col) = picked.weights()[k];
        }
      } else if (holding) {
        target = held;
        record.note += "; holding previous allocation";
      } else {
        for (auto col : universe) target(static_cast<Eigen::Index>(col)) = 1.0 / static_cast<double>(universe.size());
        record.note += "; no previous allocation, holding the equally weighted universe";
        if (universe.empty())
          throw Error(ErrorKind::InsufficientHistory, "empty universe at " + format_date(date));
      }

      const auto before = to_map(names, held);
      const auto after = to_map(names, target);
      // Entering from cash trades the whole value.
      record.turnover = holding ? turnover_cost(before, after, 1.0) : 1.0;
      cost = config.fee_rate * record.turnover;
      record.cost = cost;
      for (Eigen::Index i = 0; i < n_all; ++i)
        if (target(i) != 0.0) {
          record.assets.push_back(names[static_cast<std::size_t>(i)]);
          record.weights.push_back(target(i));
        }
      report.total_turnover += record.turnover;
      report.total_cost += cost;
      report.rebalances.push_back(std::move(record));
      held = target;
      holding = true;
    }

    // Buy-and-hold within the day. log(1 + sum w_i (e^r_i - 1)) is evaluated
    // as m + log1p(sum w_i expm1(r_i - m)) with m the largest held return,
    // which is exact for a single holding.
    auto day_return = [&](Eigen::Index i) {
      const double r = returns.returns()(day, i);
      return std::isnan(r) ? 0.0 : r;
    };
    double top = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i = 0; i < n_all; ++i)
      if (held(i) != 0.0) top = std::max(top, day_return(i));
    double excess = 0.0;
    double value = 0.0;
    for (Eigen::Index i = 0; i < n_all; ++i) {
      if (held(i) == 0.0) continue;
      const double r = day_return(i);
      excess += held(i) * std::expm1(r - top);
      held(i) *= std::exp(r);
      value += held(i);
    }
    held /= value;

    const double gross = top + std::log1p(excess);
    const double net = cost > 0.0 ? std::log1p(-cost) + gross : gross;
    report.dates.push_back(date);
    report.gross_returns.push_back(gross);
    report.net_returns.push_back(net);
  }

  report.metrics = compute_metrics(report.net_returns);
  report.gross_metrics = compute_metrics(report.gross_returns);
  double size_sum = 0.0;
  for (const auto& r : report.rebalances) size_sum += static_cast<double>(r.assets.size());
  const double mean_size = size_sum / static_cast<double>(report.rebalances.size());
  report.metrics.mean_portfolio_size = mean_size;
  report.gross_metrics.mean_portfolio_size = mean_size;
  return report;
}

GridResult grid_search(const ReturnPanel& returns, const BacktestConfig& base, std::span<const int> rebalance_grid,
                       std::span<const int> lookback_grid) {
  if (rebalance_grid.empty() || lookback_grid.empty())
    throw Error(ErrorKind::InvalidConfig, "grid search needs nonempty grids", "grid");
  GridResult grid;
  grid.rebalance_grid.assign(rebalance_grid.begin(), rebalance_grid.end());
  grid.lookback_grid.assign(lookback_grid.begin(), lookback_grid.end());

  double sharpe_sum = 0.0;
  std::size_t ok = 0;
  for (int rebalance : rebalance_grid)
    for (int lookback : lookback_grid) {
      GridCell cell{rebalance, lookback, std::nullopt, std::nullopt, {}};
      auto config = base;
      config.rebalance_days = rebalance;
      config.lookback_days = lookback;
      try {
        const auto report = run_backtest(returns, config);
        cell.metrics = report.metrics;
        cell.gross_metrics = report.gross_metrics;
        sharpe_sum += cell.metrics->sharpe_ratio;
        ++ok;
      } catch (const Error& e) {
        cell.error = fmt::format("{}: {}", to_string(e.kind()), e.what());
      }
      grid.cells.push_back(std::move(cell));
    }
  if (ok > 0) grid.mean_sharpe = sharpe_sum / static_cast<double>(ok);

  auto hold = base;
  hold.selection = SelectionRule::LongHold;
  hold.weighting = WeightingRule::Equal;
  try {
    const auto report = run_backtest(returns, hold);
    grid.long_hold = report.metrics;
    grid.long_hold_gross = report.gross_metrics;
  } catch (const Error&) {
    grid.long_hold.reset();
    grid.long_hold_gross.reset();
  }
  return grid;
}

nlohmann::json metrics_json(const MetricSet& m) {
  return {{"annualized_return", m.annualized_return}, {"annualized_stddev", m.annualized_stddev},
          {"sharpe_ratio", m.sharpe_ratio},           {"daily_skewness", m.daily_skewness},
          {"max_drawdown", m.max_drawdown},           {"mean_portfolio_size", m.mean_portfolio_size}};
}

nlohmann::json report_metrics_json(const BacktestReport& report) {
  return {{"metrics", metrics_json(report.metrics)},
          {"gross_metrics", metrics_json(report.gross_metrics)},
          {"total_turnover", report.total_turnover},
          {"total_cost", report.total_cost},
          {"days", report.dates.size()},
          {"rebalances", report.rebalances.size()},
          {"first_date", report.dates.empty() ? "" : format_date(report.dates.front())},
          {"last_date", report.dates.empty() ? "" : format_date(report.dates.back())},
          {"annualization", "return = 252 * mean daily log return; stddev = sqrt(252) * sample stddev; rf = 0"},
          {"config", report.config}};
}

std::string daily_returns_csv(const BacktestReport& report) {
  std::string out = "date,gross,net\n";
  for (std::size_t k = 0; k < report.dates.size(); ++k)
    out += fmt::format("{},{},{}\n", format_date(report.dates[k]), report.gross_returns[k], report.net_returns[k]);
  return out;
}

std::string rebalance_log_csv(const BacktestReport& report) {
  std::string out = "date,universe_size,edge_count,size,turnover,cost,fallback,assets,weights,note\n";
  for (const auto& r : report.rebalances) {
    std::string weights;
    for (std::size_t k = 0; k < r.weights.size(); ++k) weights += fmt::format("{}{}", k ? ";" : "", r.weights[k]);
    std::string note = r.note;
    std::replace(note.begin(), note.end(), ',', ' ');
    std::replace(note.begin(), note.end(), '"', '\'');
    out += fmt::format("{},{},{},{},{},{},{},{},{},{}\n", format_date(r.date), r.universe_size, r.edge_count,
                       r.assets.size(), r.turnover, r.cost, r.fallback ? 1 : 0, fmt::join(r.assets, ";"), weights,
                       note);
  }
  return out;
}

std::string grid_sharpe_csv(const GridResult& grid, bool gross) {
  std::string out = "rebalance\\lookback";
  for (int lookback : grid.lookback_grid) out += fmt::format(",{}", lookback);
  out += "\n";
  for (std::size_t r = 0; r < grid.rebalance_grid.size(); ++r) {
    out += fmt::format("{}", grid.rebalance_grid[r]);
    for (std::size_t l = 0; l < grid.lookback_grid.size(); ++l) {
      const auto& cell = grid.cell(r, l);
      const auto& m = gross ? cell.gross_metrics : cell.metrics;
      out += m ? fmt::format(",{}", m->sharpe_ratio) : std::string(",");
    }
    out += "\n";
  }
  return out;
}

}  // namespace srifn

namespace srifn {

nlohmann::json grid_json(const GridResult& grid) {
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& c : grid.cells) {
    nlohmann::json cell{{"rebalance_days", c.rebalance_days}, {"lookback_days", c.lookback_days}};
    if (c.metrics) cell["metrics"] = metrics_json(*c.metrics);
    if (c.gross_metrics) cell["gross_metrics"] = metrics_json(*c.gross_metrics);
    if (!c.error.empty()) cell["error"] = c.error;
    cells.push_back(std::move(cell));
  }
  nlohmann::json doc{{"rebalance_grid", grid.rebalance_grid}, {"lookback_grid", grid.lookback_grid},
                     {"cells", std::move(cells)}};
  doc["long_hold"] = grid.long_hold ? metrics_json(*grid.long_hold) : nlohmann::json();
  doc["long_hold_gross"] = grid.long_hold_gross ? metrics_json(*grid.long_hold_gross) : nlohmann::json();
  doc["mean_sharpe"] = grid.mean_sharpe ? nlohmann::json(*grid.mean_sharpe) : nlohmann::json();
  return doc;
}

}  // namespace srifn
