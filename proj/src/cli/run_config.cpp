#include "srifn/cli/run_config.hpp"

#include "srifn/error.hpp"

#include <fmt/format.h>

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace srifn {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::string_view unquote(std::string_view s) {
  s = trim(s);
  if (s.size() >= 2 && (s.front() == '"' || s.front() == '\'') && s.back() == s.front())
    return s.substr(1, s.size() - 2);
  return s;
}

Error bad(std::string_view key, const std::string& what) {
  return Error(ErrorKind::InvalidConfig, fmt::format("{}: {}", key, what), std::string(key));
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = unquote(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw bad(key, fmt::format("'{}' is not a valid number", text));
  return value;
}

template <class T>
std::vector<T> parse_numbers(std::string_view key, std::string_view text) {
  std::vector<T> out;
  for (const auto& item : split_list(text)) out.push_back(parse_number<T>(key, item));
  return out;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = unquote(text);
  if (text == "true") return true;
  if (text == "false") return false;
  throw bad(key, fmt::format("'{}' is not true or false", text));
}

Date parse_config_date(std::string_view key, std::string_view text) {
  const auto date = parse_date(unquote(text));
  if (!date) throw bad(key, fmt::format("'{}' is not a YYYY-MM-DD date", unquote(text)));
  return *date;
}

template <class Rule, class Parse>
std::vector<Rule> parse_rules(std::string_view key, std::string_view text, Parse parse) {
  std::vector<Rule> out;
  for (const auto& item : split_list(text)) {
    try {
      out.push_back(parse(item));
    } catch (const Error& e) {
      throw bad(key, e.what());
    }
  }
  return out;
}

using Setter = std::function<void(RunConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table{
      {"prices", [](RunConfig& c, auto, auto v) { c.prices = std::string(unquote(v)); }},
      {"out", [](RunConfig& c, auto, auto v) { c.out = std::string(unquote(v)); }},
      {"start", [](RunConfig& c, auto k, auto v) { c.start = parse_config_date(k, v); }},
      {"end", [](RunConfig& c, auto k, auto v) { c.end = parse_config_date(k, v); }},
      {"split", [](RunConfig& c, auto k, auto v) { c.split = parse_config_date(k, v); }},
      {"sample",
       [](RunConfig& c, auto k, auto v) {
         const auto s = unquote(v);
         if (s == "full") c.sample = SampleRange::Full;
         else if (s == "in") c.sample = SampleRange::InSample;
         else if (s == "out") c.sample = SampleRange::OutOfSample;
         else throw bad(k, "expected full, in or out");
       }},
      {"seed",
       [](RunConfig& c, auto k, auto v) {
         c.sr_ifn.base_seed = parse_number<std::uint64_t>(k, v);
         c.synth.seed = c.sr_ifn.base_seed;
       }},
      {"sr_ifn.repetitions", [](RunConfig& c, auto k, auto v) { c.sr_ifn.repetitions = parse_number<int>(k, v); }},
      {"sr_ifn.seed", [](RunConfig& c, auto k, auto v) { c.sr_ifn.base_seed = parse_number<std::uint64_t>(k, v); }},
      {"sr_ifn.threads", [](RunConfig& c, auto k, auto v) { c.sr_ifn.threads = parse_number<unsigned>(k, v); }},
      {"sr_ifn.confidence_level",
       [](RunConfig& c, auto k, auto v) { c.conf_levels = {parse_number<double>(k, v)}; }},
      {"sr_ifn.conf_levels", [](RunConfig& c, auto k, auto v) { c.conf_levels = parse_numbers<double>(k, v); }},
      {"backtest.lookback_days",
       [](RunConfig& c, auto k, auto v) { c.backtest.lookback_days = parse_number<int>(k, v); }},
      {"backtest.rebalance_days",
       [](RunConfig& c, auto k, auto v) { c.backtest.rebalance_days = parse_number<int>(k, v); }},
      {"backtest.fee_bps",
       [](RunConfig& c, auto k, auto v) { c.backtest.fee_rate = parse_number<double>(k, v) / 10000.0; }},
      {"backtest.strategies",
       [](RunConfig& c, auto k, auto v) {
         c.strategies = parse_rules<SelectionRule>(k, v, [](const std::string& s) { return parse_selection_rule(s); });
       }},
      {"backtest.weightings",
       [](RunConfig& c, auto k, auto v) {
         c.weightings = parse_rules<WeightingRule>(k, v, [](const std::string& s) { return parse_weighting_rule(s); });
       }},
      {"backtest.start_offsets", [](RunConfig& c, auto k, auto v) { c.start_offsets = parse_numbers<int>(k, v); }},
      {"backtest.centrality_floor",
       [](RunConfig& c, auto k, auto v) { c.backtest.centrality_floor = parse_number<double>(k, v); }},
      {"grid.rebalance_grid", [](RunConfig& c, auto k, auto v) { c.rebalance_grid = parse_numbers<int>(k, v); }},
      {"grid.lookback_grid", [](RunConfig& c, auto k, auto v) { c.lookback_grid = parse_numbers<int>(k, v); }},
      {"synth.days", [](RunConfig& c, auto k, auto v) { c.synth.n_days = parse_number<std::size_t>(k, v); }},
      {"synth.blocks",
       [](RunConfig& c, auto k, auto v) { c.synth_block_sizes = parse_numbers<std::size_t>(k, v); }},
      {"synth.block_rho", [](RunConfig& c, auto k, auto v) { c.synth_block_rho = parse_numbers<double>(k, v); }},
      {"synth.independent",
       [](RunConfig& c, auto k, auto v) { c.synth.n_independent = parse_number<std::size_t>(k, v); }},
      {"synth.cross_block_rho",
       [](RunConfig& c, auto k, auto v) { c.synth.cross_block_rho = parse_number<double>(k, v); }},
      {"synth.block_spread",
       [](RunConfig& c, auto k, auto v) { c.synth.block_spread = parse_number<double>(k, v); }},
      {"synth.independent_on_market",
       [](RunConfig& c, auto k, auto v) { c.synth.independent_on_market = parse_bool(k, v); }},
      {"synth.independent_rho_max",
       [](RunConfig& c, auto k, auto v) { c.synth.independent_rho_max = parse_number<double>(k, v); }},
      {"synth.daily_vol", [](RunConfig& c, auto k, auto v) { c.synth.daily_vol = parse_number<double>(k, v); }},
      {"synth.drift", [](RunConfig& c, auto k, auto v) { c.synth.drift = parse_number<double>(k, v); }},
      {"synth.seed", [](RunConfig& c, auto k, auto v) { c.synth.seed = parse_number<std::uint64_t>(k, v); }},
      {"synth.start_date", [](RunConfig& c, auto k, auto v) { c.synth.start_date = parse_config_date(k, v); }},
      {"report.min_size",
       [](RunConfig& c, auto k, auto v) { c.report_min_size = parse_number<std::size_t>(k, v); }},
      {"report.max_size",
       [](RunConfig& c, auto k, auto v) { c.report_max_size = parse_number<std::size_t>(k, v); }},
  };
  return table;
}

}  // namespace

std::vector<std::string> split_list(std::string_view value) {
  value = trim(value);
  if (!value.empty() && value.front() == '[') {
    if (value.back() != ']') throw Error(ErrorKind::InvalidConfig, "unterminated list '" + std::string(value) + "'");
    value = value.substr(1, value.size() - 2);
  }
  std::vector<std::string> out;
  while (!trim(value).empty()) {
    const auto comma = value.find(',');
    const auto item = unquote(value.substr(0, comma));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    value.remove_prefix(comma + 1);
  }
  return out;
}

RunConfig::RunConfig() {
  for (int k = 1; k <= 19; ++k) conf_levels.push_back(k * 5 / 100.0);
}

SyntheticSpec RunConfig::synthetic_spec() const {
  SyntheticSpec spec = synth;
  spec.blocks.clear();
  for (std::size_t b = 0; b < synth_block_sizes.size(); ++b)
    spec.blocks.push_back({synth_block_sizes[b], synth_block_rho.size() == 1 ? synth_block_rho[0] : synth_block_rho[b]});
  return spec;
}

void RunConfig::validate() const {
  auto field = [](const Error& e, const char* name) {
    return Error(ErrorKind::InvalidConfig, e.what(), e.subject().empty() ? std::string(name) : fmt::format("{}.{}", name, e.subject()));
  };
  if (conf_levels.empty()) throw Error(ErrorKind::InvalidConfig, "conf_levels must not be empty", "sr_ifn.conf_levels");
  for (double p : conf_levels)
    if (!(p >= 0.0 && p <= 1.0))
      throw Error(ErrorKind::InvalidConfig, fmt::format("confidence level {} outside [0, 1]", p), "sr_ifn.conf_levels");
  try {
    sr_ifn.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::InvalidConfig, e.what(), "sr_ifn." + e.subject());
  }
  try {
    backtest.validate();
  } catch (const Error& e) {
    throw field(e, "backtest");
  }
  if (backtest.fee_rate * 10000.0 < 0.0)
    throw Error(ErrorKind::InvalidConfig, "fee_bps must be non-negative", "backtest.fee_bps");
  if (strategies.empty()) throw Error(ErrorKind::InvalidConfig, "strategies must not be empty", "backtest.strategies");
  if (weightings.empty()) throw Error(ErrorKind::InvalidConfig, "weightings must not be empty", "backtest.weightings");
  if (start_offsets.empty())
    throw Error(ErrorKind::InvalidConfig, "start_offsets must not be empty", "backtest.start_offsets");
  for (int o : start_offsets)
    if (o < 0) throw Error(ErrorKind::InvalidConfig, "start offsets must be >= 0", "backtest.start_offsets");
  if (rebalance_grid.empty()) throw Error(ErrorKind::InvalidConfig, "grid must not be empty", "grid.rebalance_grid");
  if (lookback_grid.empty()) throw Error(ErrorKind::InvalidConfig, "grid must not be empty", "grid.lookback_grid");
  for (int r : rebalance_grid)
    if (r < 1) throw Error(ErrorKind::InvalidConfig, "rebalance periods must be >= 1", "grid.rebalance_grid");
  for (int l : lookback_grid)
    if (l < 2) throw Error(ErrorKind::InvalidConfig, "lookback windows must be >= 2", "grid.lookback_grid");
  if (start && end && *end < *start) throw Error(ErrorKind::InvalidConfig, "end precedes start", "end");
  if (synth_block_rho.empty() || (synth_block_rho.size() != 1 && synth_block_rho.size() != synth_block_sizes.size()))
    throw Error(ErrorKind::InvalidConfig, "block_rho needs one value or one per block", "synth.block_rho");
  if (report_min_size && report_max_size && *report_max_size < *report_min_size)
    throw Error(ErrorKind::InvalidConfig, "max_size below min_size", "report.max_size");
  if (out.empty()) throw Error(ErrorKind::InvalidConfig, "output directory must be set", "out");
}

void set_config_value(RunConfig& config, std::string_view key, std::string_view value) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw bad(key, "unknown configuration key");
  it->second(config, key, value);
}

RunConfig parse_run_config(std::string_view text) {
  RunConfig config;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::string section;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    bool quoted = false;
    for (std::size_t k = 0; k < line.size(); ++k) {
      if (line[k] == '"') quoted = !quoted;
      if (line[k] == '#' && !quoted) {
        line = line.substr(0, k);
        break;
      }
    }
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string_view::npos) {
      section = std::string(trim(line.substr(1, line.size() - 2)));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string_view::npos)
      throw Error(ErrorKind::InvalidConfig, fmt::format("line {}: expected key = value", line_no),
                  fmt::format("line {}", line_no));
    const auto key = std::string(trim(line.substr(0, eq)));
    set_config_value(config, section.empty() ? key : section + "." + key, line.substr(eq + 1));
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open config " + path.string(), "config");
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_run_config(buffer.str());
}

}  // namespace srifn
