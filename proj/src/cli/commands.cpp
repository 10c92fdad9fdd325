#include "srifn/cli/commands.hpp"

#include "srifn/backtest.hpp"
#include "srifn/centrality.hpp"
#include "srifn/error.hpp"
#include "srifn/filtering.hpp"
#include "srifn/portfolio.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

namespace srifn {

namespace fs = std::filesystem;

void write_file_atomic(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::FileNotFound, "cannot write " + tmp.string(), path.string());
    out << content;
    if (!out) throw Error(ErrorKind::FileNotFound, "failed writing " + tmp.string(), path.string());
  }
  fs::rename(tmp, path);
}

namespace {

ReturnPanel load_returns(const RunConfig& config) {
  if (config.prices.empty()) throw Error(ErrorKind::InvalidConfig, "no price file configured", "prices");
  return log_returns(load_prices(config.prices));
}

// Columns with a complete, non-constant history over rows [begin, end).
std::vector<std::size_t> usable_assets(const ReturnPanel& returns, Eigen::Index begin, Eigen::Index end) {
  std::vector<std::size_t> out;
  for (auto col : returns.complete_assets(begin, end)) {
    const auto column = returns.returns().col(static_cast<Eigen::Index>(col)).segment(begin, end - begin);
    if (end - begin > 0 && !(column.array() == column(0)).all()) out.push_back(col);
  }
  return out;
}

std::pair<Eigen::Index, Eigen::Index> bounds_to_rows(const ReturnPanel& returns, std::optional<Date> start,
                                                     std::optional<Date> end) {
  const Eigen::Index begin = start ? returns.lower_bound(*start) : 0;
  const Eigen::Index stop =
      end ? std::upper_bound(returns.dates().begin(), returns.dates().end(), *end) - returns.dates().begin()
          : returns.rows();
  return {begin, std::max(begin, stop)};
}

std::string level_tag(double p) { return fmt::format("p{}", p); }

BacktestConfig backtest_config(const RunConfig& config, SelectionRule selection, WeightingRule weighting,
                               double conf_level, int offset, const ReturnPanel& returns) {
  BacktestConfig bt = config.backtest;
  bt.selection = selection;
  bt.weighting = weighting;
  bt.sr_ifn = config.sr_ifn;
  bt.sr_ifn.confidence_level = conf_level;
  bt.start_offset = offset;
  const auto [start, end] = sample_bounds(returns, config, bt.lookback_days);
  bt.start = start;
  bt.end = end;
  return bt;
}

nlohmann::json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open " + path.string(), path.string());
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, path.string() + ": " + e.what(), path.string());
  }
}

MetricSet average_metrics(const std::vector<MetricSet>& all) {
  MetricSet m;
  for (const auto& x : all) {
    m.annualized_return += x.annualized_return;
    m.annualized_stddev += x.annualized_stddev;
    m.sharpe_ratio += x.sharpe_ratio;
    m.daily_skewness += x.daily_skewness;
    m.max_drawdown += x.max_drawdown;
    m.mean_portfolio_size += x.mean_portfolio_size;
  }
  const double n = static_cast<double>(all.size());
  m.annualized_return /= n;
  m.annualized_stddev /= n;
  m.sharpe_ratio /= n;
  m.daily_skewness /= n;
  m.max_drawdown /= n;
  m.mean_portfolio_size /= n;
  return m;
}

}  // namespace

std::pair<std::optional<Date>, std::optional<Date>> sample_bounds(const ReturnPanel& returns,
                                                                  const RunConfig& config, int lookback_days) {
  std::optional<Date> start = config.start;
  std::optional<Date> end = config.end;
  const Eigen::Index split_row = returns.lower_bound(config.split);
  switch (config.sample) {
    case SampleRange::Full: break;
    case SampleRange::InSample:
      if (split_row == 0) throw Error(ErrorKind::InsufficientHistory, "no data before the split date", "split");
      if (!end || config.split <= *end) end = returns.dates()[static_cast<std::size_t>(split_row - 1)];
      break;
    case SampleRange::OutOfSample: {
      if (split_row >= returns.rows())
        throw Error(ErrorKind::InsufficientHistory, "no data after the split date", "split");
      const Eigen::Index floor_row = start ? returns.lower_bound(*start) : 0;
      const Eigen::Index row = std::max(floor_row, split_row - lookback_days);
      start = returns.dates()[static_cast<std::size_t>(row)];
      break;
    }
  }
  return {start, end};
}

ReturnPanel load_sample(const RunConfig& config) {
  const auto returns = load_returns(config);
  const auto [start, end] = sample_bounds(returns, config, config.backtest.lookback_days);
  const auto [begin, stop] = bounds_to_rows(returns, start, end);
  const auto window = returns.slice_rows(begin, stop);
  return window.select_assets(usable_assets(window, 0, window.rows()));
}

std::string run_name(SelectionRule selection, WeightingRule weighting, double conf_level, int start_offset) {
  if (selection == SelectionRule::LongHold) return fmt::format("LongHold_o{}", start_offset);
  return fmt::format("{}_{}_{}_o{}", to_string(selection), to_string(weighting), level_tag(conf_level), start_offset);
}

WrittenFiles cmd_synth(const RunConfig& config) {
  const auto data = generate_synthetic(config.synthetic_spec());
  const auto path = config.out / "prices.csv";
  write_file_atomic(path, price_csv(data.prices));
  return {path};
}

WrittenFiles cmd_network(const RunConfig& config) {
  const auto window = load_sample(config);
  const auto ensemble = bootstrap_ensemble(window, config.sr_ifn);
  WrittenFiles files;
  for (double p : config.conf_levels) {
    auto echo = to_json(config.sr_ifn);
    echo["confidence_level"] = p;
    echo["first_date"] = window.rows() ? format_date(window.dates().front()) : "";
    echo["last_date"] = window.rows() ? format_date(window.dates().back()) : "";
    const auto path = config.out / fmt::format("network_{}.json", level_tag(p));
    write_file_atomic(path, srifn::to_json(threshold_ensemble(ensemble, p), echo).dump(2) + "\n");
    files.push_back(path);
  }
  files.push_back(config.out / "edge_occurrence.csv");
  write_file_atomic(files.back(), occurrence_csv(window.assets(), edge_occurrence(ensemble)));
  for (auto measure : {CentralityMeasure::Degree, CentralityMeasure::Cbc, CentralityMeasure::AbsCorr}) {
    files.push_back(config.out / fmt::format("centrality_{}.csv", to_string(measure)));
    write_file_atomic(files.back(), centrality_csv(bootstrapped_centrality(ensemble, measure, config.sr_ifn.threads)));
  }
  return files;
}

WrittenFiles cmd_select(const RunConfig& config) {
  const auto returns = load_returns(config);
  const auto [start, end] = sample_bounds(returns, config, config.backtest.lookback_days);
  const auto [begin, stop] = bounds_to_rows(returns, start, end);
  const Eigen::Index window_begin = std::max(begin, stop - config.backtest.lookback_days);
  if (stop - window_begin < 2)
    throw Error(ErrorKind::InsufficientHistory, "range is too short for a lookback window", "backtest.lookback_days");
  const auto cols = usable_assets(returns, window_begin, stop);
  const auto window = returns.slice_rows(window_begin, stop).select_assets(cols);

  WrittenFiles files;
  for (auto selection : config.strategies)
    for (auto weighting : config.weightings)
      for (double p : config.conf_levels) {
        auto bt = backtest_config(config, selection, weighting, p, 0, returns);
        const auto stem = config.out / fmt::format("allocation_{}", run_name(selection, weighting, p, 0));
        nlohmann::json header;
        std::string csv = "asset,weight\n";
        try {
          const auto allocation = selection == SelectionRule::LongHold
                                      ? equal_weights(window.assets(), {selection, WeightingRule::Equal, to_json(bt)})
                                      : allocate_window(window, bt).allocation;
          header = allocation_header_json(allocation);
          csv = allocation_csv(allocation);
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::EmptySelection) throw;
          header = {{"selection", to_string(selection)}, {"weighting", to_string(weighting)}, {"size", 0},
                    {"config", to_json(bt)}, {"error", e.what()}};
        }
        header["window"] = {{"first_date", format_date(window.dates().front())},
                            {"last_date", format_date(window.dates().back())}};
        auto csv_path = stem;
        csv_path += ".csv";
        auto json_path = stem;
        json_path += ".json";
        write_file_atomic(csv_path, csv);
        write_file_atomic(json_path, header.dump(2) + "\n");
        files.push_back(csv_path);
        files.push_back(json_path);
      }
  return files;
}

WrittenFiles cmd_backtest(const RunConfig& config) {
  const auto returns = load_returns(config);
  WrittenFiles files;
  for (auto selection : config.strategies) {
    const bool hold = selection == SelectionRule::LongHold;
    const std::vector<WeightingRule> weightings = hold ? std::vector{WeightingRule::Equal} : config.weightings;
    const std::vector<double> levels = hold ? std::vector{config.sr_ifn.confidence_level} : config.conf_levels;
    for (auto weighting : weightings)
      for (double p : levels)
        for (int offset : config.start_offsets) {
          const auto bt = backtest_config(config, selection, weighting, p, offset, returns);
          const auto report = run_backtest(returns, bt);
          const auto dir = config.out / run_name(selection, weighting, p, offset);
          write_file_atomic(dir / "metrics.json", report_metrics_json(report).dump(2) + "\n");
          write_file_atomic(dir / "daily_returns.csv", daily_returns_csv(report));
          write_file_atomic(dir / "rebalance_log.csv", rebalance_log_csv(report));
          files.push_back(dir / "metrics.json");
          files.push_back(dir / "daily_returns.csv");
          files.push_back(dir / "rebalance_log.csv");
        }
  }
  const auto summary = cmd_report(config);
  files.insert(files.end(), summary.begin(), summary.end());
  return files;
}

WrittenFiles cmd_grid(const RunConfig& config) {
  const auto returns = load_returns(config);
  RunConfig in_sample = config;
  in_sample.sample = SampleRange::InSample;

  std::vector<GridResult> per_level;
  nlohmann::json levels = nlohmann::json::array();
  for (double p : config.conf_levels) {
    const auto base = backtest_config(in_sample, config.strategies.front(), config.weightings.front(), p, 0, returns);
    per_level.push_back(grid_search(returns, base, config.rebalance_grid, config.lookback_grid));
    levels.push_back({{"confidence_level", p}, {"grid", grid_json(per_level.back())}});
  }

  // Cells averaged across confidence levels; a cell that failed at any level
  // is reported as failed.
  GridResult combined = per_level.front();
  double sharpe_sum = 0.0;
  std::size_t ok = 0;
  for (std::size_t c = 0; c < combined.cells.size(); ++c) {
    std::vector<MetricSet> net;
    std::vector<MetricSet> gross;
    for (const auto& g : per_level) {
      if (!g.cells[c].metrics) {
        combined.cells[c].metrics.reset();
        combined.cells[c].gross_metrics.reset();
        combined.cells[c].error = g.cells[c].error;
        net.clear();
        break;
      }
      net.push_back(*g.cells[c].metrics);
      gross.push_back(*g.cells[c].gross_metrics);
    }
    if (net.empty()) continue;
    combined.cells[c].metrics = average_metrics(net);
    combined.cells[c].gross_metrics = average_metrics(gross);
    sharpe_sum += combined.cells[c].metrics->sharpe_ratio;
    ++ok;
  }
  combined.mean_sharpe = ok ? std::optional(sharpe_sum / static_cast<double>(ok)) : std::nullopt;

  auto doc = grid_json(combined);
  doc["selection"] = to_string(config.strategies.front());
  doc["weighting"] = to_string(config.weightings.front());
  doc["fee_rate"] = config.backtest.fee_rate;
  doc["per_confidence_level"] = std::move(levels);

  WrittenFiles files{config.out / "grid_sharpe.csv", config.out / "grid_sharpe_gross.csv", config.out / "grid.json"};
  write_file_atomic(files[0], grid_sharpe_csv(combined, false));
  write_file_atomic(files[1], grid_sharpe_csv(combined, true));
  write_file_atomic(files[2], doc.dump(2) + "\n");
  return files;
}

WrittenFiles cmd_report(const RunConfig& config) {
  struct Row {
    std::string run;
    std::string selection;
    std::string weighting;
    double conf_level = 0.0;
    int offset = 0;
    nlohmann::json doc;
  };
  std::vector<Row> rows;
  if (fs::is_directory(config.out))
    for (const auto& entry : fs::directory_iterator(config.out)) {
      const auto metrics = entry.path() / "metrics.json";
      if (!entry.is_directory() || !fs::exists(metrics)) continue;
      auto doc = read_json(metrics);
      const auto& cfg = doc.at("config");
      const double size = doc.at("metrics").at("mean_portfolio_size").get<double>();
      if (config.report_min_size && size < static_cast<double>(*config.report_min_size)) continue;
      if (config.report_max_size && size > static_cast<double>(*config.report_max_size)) continue;
      rows.push_back({entry.path().filename().string(), cfg.at("selection").get<std::string>(),
                      cfg.at("weighting").get<std::string>(), cfg.at("sr_ifn").at("confidence_level").get<double>(),
                      cfg.at("start_offset").get<int>(), std::move(doc)});
    }
  std::sort(rows.begin(), rows.end(), [](const Row& a, const Row& b) { return a.run < b.run; });

  std::string csv =
      "run,selection,weighting,conf_level,start_offset,days,mean_size,ann_return,ann_stddev,sharpe,skewness,"
      "max_drawdown,gross_sharpe,total_turnover,total_cost\n";
  std::map<std::string, std::vector<const Row*>> groups;
  for (const auto& r : rows) {
    const auto& m = r.doc.at("metrics");
    csv += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", r.run, r.selection, r.weighting, r.conf_level,
                       r.offset, r.doc.at("days").get<std::size_t>(), m.at("mean_portfolio_size").get<double>(),
                       m.at("annualized_return").get<double>(), m.at("annualized_stddev").get<double>(),
                       m.at("sharpe_ratio").get<double>(), m.at("daily_skewness").get<double>(),
                       m.at("max_drawdown").get<double>(),
                       r.doc.at("gross_metrics").at("sharpe_ratio").get<double>(),
                       r.doc.at("total_turnover").get<double>(), r.doc.at("total_cost").get<double>());
    const auto key = r.selection == "LongHold" ? std::string("LongHold")
                                               : fmt::format("{}_{}_{}", r.selection, r.weighting, level_tag(r.conf_level));
    groups[key].push_back(&r);
  }

  std::string across = "group,runs,mean_sharpe,std_sharpe,mean_ann_return,mean_ann_stddev,mean_max_drawdown\n";
  for (const auto& [key, members] : groups) {
    const double n = static_cast<double>(members.size());
    double mean = 0.0;
    double ret = 0.0;
    double vol = 0.0;
    double dd = 0.0;
    for (const auto* r : members) {
      const auto& m = r->doc.at("metrics");
      mean += m.at("sharpe_ratio").get<double>();
      ret += m.at("annualized_return").get<double>();
      vol += m.at("annualized_stddev").get<double>();
      dd += m.at("max_drawdown").get<double>();
    }
    mean /= n;
    double var = 0.0;
    for (const auto* r : members) {
      const double d = r->doc.at("metrics").at("sharpe_ratio").get<double>() - mean;
      var += d * d;
    }
    const double sd = members.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    across += fmt::format("{},{},{},{},{},{},{}\n", key, members.size(), mean, sd, ret / n, vol / n, dd / n);
  }

  WrittenFiles files{config.out / "summary.csv", config.out / "summary_by_offset.csv"};
  write_file_atomic(files[0], csv);
  write_file_atomic(files[1], across);
  return files;
}

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Statistically robust filtered networks for portfolio selection"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> prices;
  std::optional<int> fee_bps;
  std::optional<int> repetitions;
  std::optional<std::string> sample;
  std::vector<std::string> conf_lv;
  std::vector<std::string> strategy;
  std::vector<std::string> weighting;
  std::vector<std::string> rebalance_grid;
  std::vector<std::string> lookback_grid;
  std::vector<std::string> overrides;

  app.add_option("--config", config_path, "key = value configuration file");
  app.add_option("--seed", seed, "base RNG seed (networks, random portfolios, synthetic data)");
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--prices", prices, "price CSV file");
  app.add_option("--fee-bps", fee_bps, "transaction cost in basis points per unit turnover");
  app.add_option("--repetitions", repetitions, "bootstrap repetitions");
  app.add_option("--sample", sample, "full, in or out");
  app.add_option("--conf-lv", conf_lv, "confidence level list")->delimiter(',');
  app.add_option("--strategy", strategy, "PTP, CTP, RBP, PBP or LongHold")->delimiter(',');
  app.add_option("--weighting", weighting, "equal, inv_degree, inv_cbc or inv_abscorr")->delimiter(',');
  app.add_option("--rebalance-grid", rebalance_grid, "grid of rebalance periods")->delimiter(',');
  app.add_option("--lookback-grid", lookback_grid, "grid of lookback windows")->delimiter(',');
  app.add_option("--set", overrides, "extra key=value assignment (repeatable)");

  const std::vector<std::pair<std::string, WrittenFiles (*)(const RunConfig&)>> commands{
      {"synth", cmd_synth},   {"network", cmd_network}, {"select", cmd_select},
      {"backtest", cmd_backtest}, {"grid", cmd_grid},   {"report", cmd_report}};
  const std::map<std::string, std::string> help{
      {"synth", "generate a synthetic factor-model price file"},
      {"network", "build the filtered network, edge occurrences and centralities"},
      {"select", "allocation for the latest lookback window"},
      {"backtest", "walk-forward backtest for every strategy/level/offset combination"},
      {"grid", "in-sample grid search over rebalance and lookback periods"},
      {"report", "summarise backtest outputs"}};
  for (const auto& [name, fn] : commands) app.add_subcommand(name, help.at(name));

  auto fail = [&](int code, std::string_view kind, const std::string& message, const std::string& field) {
    nlohmann::json doc{{"error", kind}, {"message", message}};
    if (!field.empty()) doc["field"] = field;
    err << doc.dump() << "\n";
    return code;
  };

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    return fail(1, "InvalidArguments", e.what(), "");
  }

  try {
    RunConfig config = config_path.empty() ? RunConfig{} : load_run_config(config_path);
    if (seed) set_config_value(config, "seed", std::to_string(*seed));
    if (out_dir) set_config_value(config, "out", *out_dir);
    if (prices) set_config_value(config, "prices", *prices);
    if (fee_bps) set_config_value(config, "backtest.fee_bps", std::to_string(*fee_bps));
    if (repetitions) set_config_value(config, "sr_ifn.repetitions", std::to_string(*repetitions));
    if (sample) set_config_value(config, "sample", *sample);
    auto join = [](const std::vector<std::string>& items) { return fmt::format("[{}]", fmt::join(items, ",")); };
    if (!conf_lv.empty()) set_config_value(config, "sr_ifn.conf_levels", join(conf_lv));
    if (!strategy.empty()) set_config_value(config, "backtest.strategies", join(strategy));
    if (!weighting.empty()) set_config_value(config, "backtest.weightings", join(weighting));
    if (!rebalance_grid.empty()) set_config_value(config, "grid.rebalance_grid", join(rebalance_grid));
    if (!lookback_grid.empty()) set_config_value(config, "grid.lookback_grid", join(lookback_grid));
    for (const auto& assignment : overrides) {
      const auto eq = assignment.find('=');
      if (eq == std::string::npos)
        throw Error(ErrorKind::InvalidConfig, "--set expects key=value", assignment);
      set_config_value(config, assignment.substr(0, eq), assignment.substr(eq + 1));
    }
    if (fee_bps && *fee_bps < 0)
      throw Error(ErrorKind::InvalidConfig, "fee_bps must be non-negative", "backtest.fee_bps");
    config.validate();

    for (const auto& [name, fn] : commands)
      if (app.got_subcommand(name)) {
        for (const auto& file : fn(config)) out << file.string() << "\n";
      }
    return 0;
  } catch (const Error& e) {
    return fail(1, to_string(e.kind()), e.what(), e.subject());
  } catch (const std::exception& e) {
    return fail(2, "InternalError", e.what(), "");
  }
}

}  // namespace srifn
