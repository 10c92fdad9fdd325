#include "oracles.hpp"
#include "support.hpp"

#include "srifn/cli/commands.hpp"
#include "srifn/cli/run_config.hpp"
#include "srifn/cli/synthetic.hpp"
#include "srifn/centrality.hpp"
#include "srifn/filtering.hpp"

#include <fmt/format.h>
#include <json.hpp>

#include <sstream>

using namespace srifn;
using support::error_kind;
using support::slurp;
using support::TempDir;

namespace {

struct CliResult {
  int code;
  std::string out;
  std::string err;
};

CliResult cli(std::vector<std::string> args) {
  args.insert(args.begin(), "srifn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

SyntheticSpec small_spec(std::uint64_t seed) {
  SyntheticSpec spec;
  spec.n_days = 260;
  spec.blocks = {{5, 0.7}, {5, 0.7}};
  spec.n_independent = 4;
  spec.seed = seed;
  return spec;
}

std::vector<std::string> csv_lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

std::vector<std::string> csv_fields(const std::string& line) {
  std::vector<std::string> out;
  std::istringstream in(line);
  for (std::string f; std::getline(in, f, ',');) out.push_back(f);
  return out;
}

std::string error_field(const std::string& err) { return nlohmann::json::parse(err).value("field", ""); }

}  // namespace

TEST_CASE("config parsing") {
  const auto config = parse_run_config(R"(# comment
prices = "data/x.csv"
seed = 9
[sr_ifn]
repetitions = 12
conf_levels = [0.2, 0.8]
[backtest]
lookback_days = 63
fee_bps = 15
strategies = [PTP, RBP]
weightings = ["equal", "inv_cbc"]
start_offsets = [0, 5]
[synth]
block_spread = 0.1
independent_on_market = true
)");
  CHECK(config.prices == "data/x.csv");
  CHECK(config.sr_ifn.base_seed == 9);
  CHECK(config.synth.seed == 9);
  CHECK(config.sr_ifn.repetitions == 12);
  CHECK(config.conf_levels == std::vector<double>{0.2, 0.8});
  CHECK(config.backtest.lookback_days == 63);
  CHECK(config.backtest.fee_rate == doctest::Approx(0.0015).epsilon(1e-15));
  CHECK(config.strategies == std::vector{SelectionRule::Peripheral, SelectionRule::Random});
  CHECK(config.weightings == std::vector{WeightingRule::Equal, WeightingRule::InvCbc});
  CHECK(config.start_offsets == std::vector<int>{0, 5});
  CHECK(config.synth.block_spread == 0.1);
  CHECK(config.synth.independent_on_market);
  CHECK_NOTHROW(config.validate());

  RunConfig defaults;
  CHECK(defaults.conf_levels.size() == 19);
  CHECK(defaults.backtest.fee_rate == 0.0020);
  CHECK(defaults.rebalance_grid == std::vector<int>{21, 42, 63, 84, 105, 126});
  CHECK(defaults.lookback_grid == std::vector<int>{63, 126, 189, 252});

  RunConfig c;
  auto subject = [&](auto&& f) {
    try {
      f();
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::InvalidConfig);
      return e.subject();
    }
    FAIL("expected InvalidConfig");
    return std::string();
  };
  CHECK(subject([&] { set_config_value(c, "nope", "1"); }) == "nope");
  CHECK(subject([&] { set_config_value(c, "backtest.lookback_days", "abc"); }) == "backtest.lookback_days");
  CHECK(subject([&] { set_config_value(c, "backtest.strategies", "[PTP, XYZ]"); }) == "backtest.strategies");
  CHECK(subject([&] { set_config_value(c, "start", "2020-13-01"); }) == "start");
  CHECK(subject([&] { parse_run_config("just words\n"); }) == "line 1");

  c = {};
  c.conf_levels = {1.5};
  CHECK(subject([&] { c.validate(); }) == "sr_ifn.conf_levels");
  c = {};
  c.backtest.lookback_days = 1;
  CHECK(subject([&] { c.validate(); }).rfind("backtest", 0) == 0);
  c = {};
  c.sr_ifn.repetitions = 0;
  CHECK(subject([&] { c.validate(); }).rfind("sr_ifn", 0) == 0);
  c = {};
  c.lookback_grid = {};
  CHECK(subject([&] { c.validate(); }) == "grid.lookback_grid");
  CHECK(error_kind([] { load_run_config("/nonexistent/config.toml"); }) == ErrorKind::FileNotFound);

  CHECK(split_list("[a, 'b' ,c]") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_list("x") == std::vector<std::string>{"x"});
}

TEST_CASE("synthetic generator") {
  const auto spec = small_spec(3);
  const auto data = generate_synthetic(spec);
  CHECK(data.returns.rows() == 260);
  CHECK(data.returns.cols() == 14);
  CHECK(data.prices.rows() == 261);
  CHECK(data.independent_assets.size() == 4);
  CHECK(data.loadings.cols() == static_cast<Eigen::Index>(spec.n_factors()));

  // implied correlation from the loadings, computed here directly
  const Eigen::MatrixXd& l = data.loadings;
  for (Eigen::Index i = 0; i < 14; ++i)
    for (Eigen::Index j = 0; j < 14; ++j) {
      const double want = i == j ? 1.0 : l.row(i).dot(l.row(j));
      CHECK(std::abs(data.target_correlation(i, j) - want) <= 1e-12);
    }
  for (Eigen::Index i = 0; i < 5; ++i)
    for (Eigen::Index j = 0; j < 5; ++j)
      if (i != j) {
        CHECK(std::abs(data.target_correlation(i, j) - 0.7) <= 1e-12);
        CHECK(std::abs(data.target_correlation(i, j + 5)) <= 1e-12);
      }

  CHECK(price_csv(data.prices) == price_csv(generate_synthetic(spec).prices));
  CHECK(price_csv(data.prices) != price_csv(generate_synthetic(small_spec(4)).prices));

  // sample correlation converges to the target
  auto big = spec;
  big.n_days = 40000;
  big.cross_block_rho = 0.2;
  big.block_spread = 0.05;
  big.independent_rho_max = 0.1;
  big.independent_on_market = true;
  const auto large = generate_synthetic(big);
  CHECK(large.loadings.cols() == 3);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 14; ++i)
    for (Eigen::Index j = i + 1; j < 14; ++j)
      worst = std::max(worst, std::abs(oracle::pearson(large.returns.returns(), i, j) - large.target_correlation(i, j)));
  CHECK(worst < 0.03);
  // the otherwise independent assets share the market factor
  CHECK(large.target_correlation(0, 12) >= 0.0);

  auto bad = spec;
  bad.blocks = {{3, 1.2}};
  CHECK(error_kind([&] { generate_synthetic(bad); }) == ErrorKind::InfeasibleCorrelation);
  bad = spec;
  bad.cross_block_rho = 0.8;  // above the block share
  CHECK(error_kind([&] { generate_synthetic(bad); }) == ErrorKind::InfeasibleCorrelation);
}

TEST_CASE("sample bounds") {
  std::mt19937_64 gen(1);
  const auto returns = oracle::random_returns(100, 3, gen);  // 2020-01-01 onwards
  RunConfig c;
  c.split = returns.dates()[60];
  c.sample = SampleRange::InSample;
  auto [s, e] = sample_bounds(returns, c, 20);
  CHECK_FALSE(s);
  CHECK(*e == returns.dates()[59]);
  c.sample = SampleRange::OutOfSample;
  std::tie(s, e) = sample_bounds(returns, c, 20);
  CHECK(*s == returns.dates()[40]);
  CHECK_FALSE(e);
  c.sample = SampleRange::Full;
  std::tie(s, e) = sample_bounds(returns, c, 20);
  CHECK_FALSE(s);
  CHECK_FALSE(e);
  CHECK(run_name(SelectionRule::Peripheral, WeightingRule::InvCbc, 0.7, 3) == "PTP_inv_cbc_p0.7_o3");
  CHECK(run_name(SelectionRule::LongHold, WeightingRule::InvCbc, 0.7, 0) == "LongHold_o0");
}

TEST_CASE("command line end to end") {
  TempDir dir;
  const auto out = dir.path().string();
  const auto prices = (dir.path() / "prices.csv").string();

  auto r = cli({"synth", "--out", out, "--seed", "5", "--set", "synth.days=400", "--set", "synth.blocks=[5,5]",
                "--set", "synth.independent=4"});
  REQUIRE(r.code == 0);
  CHECK(r.out == prices + "\n");

  const std::vector<std::string> common{"--prices", prices, "--out", out, "--repetitions", "10", "--conf-lv",
                                        "0.5,0.9", "--set", "backtest.lookback_days=60",
                                        "--set", "backtest.rebalance_days=40"};
  auto with = [&](std::vector<std::string> args) {
    args.insert(args.end(), common.begin(), common.end());
    return cli(args);
  };

  r = with({"network"});
  REQUIRE(r.code == 0);
  const auto net = nlohmann::json::parse(slurp(dir.path() / "network_p0.9.json"));
  CHECK(net.contains("edges"));
  CHECK(std::filesystem::exists(dir.path() / "network_p0.5.json"));
  CHECK(std::filesystem::exists(dir.path() / "edge_occurrence.csv"));
  CHECK(std::filesystem::exists(dir.path() / "centrality_cbc.csv"));

  r = with({"select", "--strategy", "CTP,PTP", "--weighting", "inv_cbc"});
  REQUIRE(r.code == 0);
  const auto central = nlohmann::json::parse(slurp(dir.path() / "allocation_CTP_inv_cbc_p0.5_o0.json"));
  CHECK(central.at("selection") == "CTP");
  CHECK(central.contains("window"));
  CHECK(slurp(dir.path() / "allocation_CTP_inv_cbc_p0.5_o0.csv").rfind("asset,weight\n", 0) == 0);

  r = with({"backtest", "--strategy", "PTP,RBP,LongHold", "--fee-bps", "20"});
  REQUIRE(r.code == 0);
  const auto metrics = nlohmann::json::parse(slurp(dir.path() / "RBP_equal_p0.9_o0" / "metrics.json"));
  CHECK(metrics.at("config").at("fee_rate") == 0.002);
  CHECK(std::filesystem::exists(dir.path() / "LongHold_o0" / "daily_returns.csv"));
  const auto summary = slurp(dir.path() / "summary.csv");
  CHECK(std::count(summary.begin(), summary.end(), '\n') == 1 + 2 + 2 + 1);
  const auto by_offset = slurp(dir.path() / "summary_by_offset.csv");
  CHECK(by_offset.find("LongHold,1,") != std::string::npos);

  r = with({"grid", "--rebalance-grid", "20,40", "--lookback-grid", "30,60", "--set", "split=2011-01-03"});
  REQUIRE(r.code == 0);
  const auto grid = nlohmann::json::parse(slurp(dir.path() / "grid.json"));
  CHECK(grid.at("per_confidence_level").size() == 2);
  CHECK(slurp(dir.path() / "grid_sharpe.csv").rfind("rebalance\\lookback,30,60\n", 0) == 0);

  r = with({"report", "--set", "report.min_size=1000"});
  REQUIRE(r.code == 0);
  const auto filtered = slurp(dir.path() / "summary.csv");
  CHECK(std::count(filtered.begin(), filtered.end(), '\n') == 1);
}

TEST_CASE("command line errors") {
  TempDir dir;
  auto r = cli({"backtest", "--prices", (dir.path() / "missing.csv").string(), "--out", dir.path().string()});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err).at("error") == "FileNotFound");

  r = cli({"backtest", "--fee-bps", "-5", "--prices", "x.csv"});
  CHECK(r.code == 1);
  CHECK(error_field(r.err) == "backtest.fee_bps");

  r = cli({"backtest", "--strategy", "XYZ"});
  CHECK(r.code == 1);
  CHECK(error_field(r.err) == "backtest.strategies");

  r = cli({"network", "--conf-lv", "1.5"});
  CHECK(r.code == 1);
  CHECK(error_field(r.err) == "sr_ifn.conf_levels");

  r = cli({"network", "--set", "hello"});
  CHECK(r.code == 1);

  r = cli({"frobnicate"});
  CHECK(r.code == 1);
  CHECK(nlohmann::json::parse(r.err).at("error") == "InvalidArguments");

  r = cli({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("backtest") != std::string::npos);

  // nothing is written when validation fails
  CHECK(std::filesystem::is_empty(dir.path()));
}

TEST_CASE("synthetic generator edge cases") {
  SyntheticSpec noise;
  noise.n_days = 10000;
  noise.n_independent = 10;
  noise.seed = 8;
  const auto pure = generate_synthetic(noise);
  CHECK(pure.loadings.cols() == 0);
  double worst = 0.0;
  for (Eigen::Index i = 0; i < 10; ++i)
    for (Eigen::Index j = i + 1; j < 10; ++j) worst = std::max(worst, std::abs(oracle::pearson(pure.returns.returns(), i, j)));
  CHECK(worst < 0.05);

  SyntheticSpec same;
  same.n_days = 50;
  same.blocks = {{4, 1.0}};
  same.n_independent = 0;
  const auto copies = generate_synthetic(same);
  for (Eigen::Index j = 1; j < 4; ++j) CHECK(copies.returns.returns().col(j) == copies.returns.returns().col(0));
}

TEST_CASE("network command on the bundled sample") {
  TempDir dir;
  const std::string prices = SRIFN_DATA_DIR "/sample_prices.csv";
  auto r = cli({"network", "--prices", prices, "--out", dir.path().string(), "--conf-lv", "0.7,1.0"});
  REQUIRE(r.code == 0);
  const auto first = slurp(dir.path() / "network_p0.7.json");
  const auto net = network_from_json(nlohmann::json::parse(first));
  const auto n = static_cast<Eigen::Index>(net.size());
  CHECK(n == 20);
  CHECK(net.adjacency() == net.adjacency().transpose());
  for (Eigen::Index i = 0; i < n; ++i) {
    CHECK(net.adjacency()(i, i) == 0);
    for (Eigen::Index j = 0; j < n; ++j)
      if (net.adjacency()(i, j) == 0) CHECK(net.similarity()(i, j) == 0.0);
  }
  CHECK(network_from_json(nlohmann::json::parse(slurp(dir.path() / "network_p1.json"))).edge_count() == 0);
  for (const char* measure : {"degree", "cbc", "abs_corr"}) {
    const auto c = centrality_from_csv(slurp(dir.path() / (std::string("centrality_") + measure + ".csv")));
    CHECK(c.size() == 20);
    for (double s : c.scores()) CHECK(s >= 0.0);
  }

  TempDir again;
  r = cli({"network", "--prices", prices, "--out", again.path().string(), "--conf-lv", "0.7,1.0"});
  REQUIRE(r.code == 0);
  for (const char* f : {"network_p0.7.json", "edge_occurrence.csv", "centrality_cbc.csv"})
    CHECK(slurp(dir.path() / f) == slurp(again.path() / f));
}

TEST_CASE("backtest command cross-checks") {
  TempDir dir;
  const auto out = dir.path().string();

  SUBCASE("long hold on a single asset reproduces its returns") {
    std::string csv = "date,X\n";
    std::vector<double> p{100, 101.5, 99.0, 99.7, 104.2, 103.1};
    for (std::size_t t = 0; t < p.size(); ++t) csv += fmt::format("2021-03-{:02},{}\n", t + 1, p[t]);
    const auto file = dir.write("one.csv", csv);
    REQUIRE(cli({"backtest", "--prices", file.string(), "--out", out, "--strategy", "LongHold", "--fee-bps", "0"}).code == 0);
    const auto lines = csv_lines(slurp(dir.path() / "LongHold_o0" / "daily_returns.csv"));
    REQUIRE(lines.size() == p.size());
    const auto column = log_returns(load_prices(file)).returns();
    for (std::size_t t = 1; t < p.size(); ++t) {
      const auto f = csv_fields(lines[t]);
      CHECK(std::stod(f[2]) == column(static_cast<Eigen::Index>(t - 1), 0));
      CHECK(std::abs(std::stod(f[2]) - std::log(p[t] / p[t - 1])) <= 1e-15);
    }
  }

  SUBCASE("peripheral and central logs partition the universe, summary matches direct runs") {
    const std::string prices = SRIFN_DATA_DIR "/sample_prices.csv";
    const std::vector<std::string> args{"backtest", "--prices", prices, "--out", out, "--strategy", "PTP,CTP",
                                        "--conf-lv", "0.6", "--repetitions", "20", "--set",
                                        "backtest.lookback_days=120", "--set", "backtest.rebalance_days=250"};
    REQUIRE(cli(args).code == 0);
    const auto ptp = csv_lines(slurp(dir.path() / "PTP_equal_p0.6_o0" / "rebalance_log.csv"));
    const auto ctp = csv_lines(slurp(dir.path() / "CTP_equal_p0.6_o0" / "rebalance_log.csv"));
    REQUIRE(ptp.size() == ctp.size());
    std::size_t compared = 0;
    for (std::size_t k = 1; k < ptp.size(); ++k) {
      const auto a = csv_fields(ptp[k]);
      const auto b = csv_fields(ctp[k]);
      CHECK(a[0] == b[0]);
      if (a[6] == "1" || b[6] == "1") continue;
      ++compared;
      std::set<std::string> joined;
      std::size_t total = 0;
      for (const auto& field : {a[7], b[7]}) {
        std::istringstream in(field);
        for (std::string x; std::getline(in, x, ';'); ++total) joined.insert(x);
      }
      CHECK(joined.size() == total);
      CHECK(std::to_string(total) == a[1]);
    }
    CHECK(compared > 0);

    RunConfig config;
    for (std::size_t k = 1; k + 1 < args.size(); k += 2) {
      if (args[k] == "--set") {
        const auto eq = args[k + 1].find('=');
        set_config_value(config, args[k + 1].substr(0, eq), args[k + 1].substr(eq + 1));
      }
    }
    config.sr_ifn.repetitions = 20;
    config.sr_ifn.confidence_level = 0.6;
    config.backtest.selection = SelectionRule::Central;
    auto bt = config.backtest;
    bt.sr_ifn = config.sr_ifn;
    const auto direct = run_backtest(log_returns(load_prices(prices)), bt);
    const auto summary = csv_lines(slurp(dir.path() / "summary.csv"));
    bool found = false;
    for (const auto& line : summary) {
      const auto f = csv_fields(line);
      if (f[0] != "CTP_equal_p0.6_o0") continue;
      found = true;
      CHECK(std::stod(f[9]) == doctest::Approx(direct.metrics.sharpe_ratio).epsilon(1e-12));
      CHECK(std::stod(f[11]) == doctest::Approx(direct.metrics.max_drawdown).epsilon(1e-12));
    }
    CHECK(found);
  }

  SUBCASE("grid cells equal backtests at the same parameters") {
    const std::string prices = SRIFN_DATA_DIR "/sample_prices.csv";
    const std::vector<std::string> common{"--prices", prices, "--out", out, "--strategy", "PTP", "--conf-lv", "0.6",
                                          "--repetitions", "10", "--sample", "in", "--set",
                                          "backtest.lookback_days=126", "--set", "backtest.rebalance_days=84"};
    auto grid_args = common;
    grid_args.insert(grid_args.begin(), {"grid", "--rebalance-grid", "84", "--lookback-grid", "126"});
    REQUIRE(cli(grid_args).code == 0);
    auto bt_args = common;
    bt_args.insert(bt_args.begin(), "backtest");
    REQUIRE(cli(bt_args).code == 0);
    const auto grid = nlohmann::json::parse(slurp(dir.path() / "grid.json"));
    const auto metrics = nlohmann::json::parse(slurp(dir.path() / "PTP_equal_p0.6_o0" / "metrics.json"));
    CHECK(grid.at("cells").at(0).at("metrics") == metrics.at("metrics"));
    const auto lines = csv_lines(slurp(dir.path() / "grid_sharpe.csv"));
    REQUIRE(lines.size() == 2);
    CHECK(std::stod(csv_fields(lines[1])[1]) == metrics.at("metrics").at("sharpe_ratio").get<double>());
  }
}
