#include "srifn/cli/synthetic.hpp"

#include "srifn/error.hpp"
#include "srifn/random.hpp"

#include <fmt/format.h>

#include <cmath>

namespace srifn {

std::size_t SyntheticSpec::n_assets() const {
  std::size_t n = n_independent;
  for (const auto& b : blocks) n += b.size;
  return n;
}

std::size_t SyntheticSpec::n_factors() const {
  std::size_t k = blocks.size();
  if (cross_block_rho > 0.0) ++k;
  if (independent_rho_max > 0.0 && !(independent_on_market && cross_block_rho > 0.0)) ++k;
  return k;
}

namespace {

std::vector<Date> trading_days(Date start, std::size_t count) {
  std::vector<Date> out;
  std::chrono::sys_days day{start};
  while (out.size() < count) {
    const std::chrono::weekday wd{day};
    if (wd != std::chrono::Saturday && wd != std::chrono::Sunday) out.emplace_back(day);
    day += std::chrono::days{1};
  }
  return out;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw Error(ErrorKind::InfeasibleCorrelation, what);
}

}  // namespace

SyntheticData generate_synthetic(const SyntheticSpec& spec) {
  const auto n = spec.n_assets();
  if (n == 0) throw Error(ErrorKind::InvalidConfig, "synthetic panel needs at least one asset", "synth");
  if (spec.n_days < 1) throw Error(ErrorKind::InvalidConfig, "synthetic panel needs at least one day", "synth.days");
  if (!(spec.daily_vol >= 0.0))
    throw Error(ErrorKind::InvalidConfig, "daily_vol must be non-negative", "synth.daily_vol");
  require(spec.cross_block_rho >= 0.0 && spec.cross_block_rho <= 1.0, "cross_block_rho must lie in [0, 1]");
  require(spec.block_spread >= 0.0, "block_spread must be non-negative");
  require(spec.independent_rho_max >= 0.0 && spec.independent_rho_max <= 1.0,
          "independent_rho_max must lie in [0, 1]");

  const bool market = spec.cross_block_rho > 0.0;
  const bool residual = spec.independent_rho_max > 0.0;
  const bool on_market = market && spec.independent_on_market;
  const auto k = static_cast<Eigen::Index>(spec.n_factors());
  const Eigen::Index block_base = market ? 1 : 0;
  const Eigen::Index residual_factor = on_market ? 0 : block_base + static_cast<Eigen::Index>(spec.blocks.size());

  Rng rng(spec.seed);
  Eigen::MatrixXd loadings = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), k);
  std::vector<std::string> assets;
  std::vector<std::string> independent;
  Eigen::Index row = 0;
  for (std::size_t b = 0; b < spec.blocks.size(); ++b) {
    const auto& block = spec.blocks[b];
    require(block.rho >= 0.0 && block.rho <= 1.0, fmt::format("block {} rho must lie in [0, 1]", b + 1));
    require(block.rho >= spec.cross_block_rho,
            fmt::format("block {} rho {} is below cross_block_rho {}", b + 1, block.rho, spec.cross_block_rho));
    for (std::size_t m = 0; m < block.size; ++m, ++row) {
      const double share = spec.block_spread == 0.0 ? block.rho
                                                    : block.rho + spec.block_spread * (2.0 * rng.uniform01() - 1.0);
      require(share >= spec.cross_block_rho && share <= 1.0,
              fmt::format("block {} loading share {} leaves [cross_block_rho, 1]", b + 1, share));
      if (market) loadings(row, 0) = std::sqrt(spec.cross_block_rho);
      loadings(row, block_base + static_cast<Eigen::Index>(b)) = std::sqrt(share - spec.cross_block_rho);
      assets.push_back(fmt::format("B{}_{:02}", b + 1, m + 1));
    }
  }
  for (std::size_t m = 0; m < spec.n_independent; ++m, ++row) {
    if (residual) loadings(row, residual_factor) = std::sqrt(spec.independent_rho_max * rng.uniform01());
    assets.push_back(fmt::format("I_{:02}", m + 1));
    independent.push_back(assets.back());
  }

  Eigen::VectorXd idio(static_cast<Eigen::Index>(n));
  for (Eigen::Index i = 0; i < idio.size(); ++i) {
    const double share = 1.0 - loadings.row(i).squaredNorm();
    require(share > -1e-12, fmt::format("asset {} has factor share above 1", assets[static_cast<std::size_t>(i)]));
    idio(i) = std::sqrt(std::max(0.0, share));
  }

  Eigen::MatrixXd target = loadings * loadings.transpose();
  target.diagonal().setOnes();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(target, Eigen::EigenvaluesOnly);
  require(eig.eigenvalues().minCoeff() > -1e-10, "implied correlation matrix is not positive semi-definite");

  const auto days = static_cast<Eigen::Index>(spec.n_days);
  Eigen::MatrixXd returns(days, static_cast<Eigen::Index>(n));
  Eigen::VectorXd factors(k);
  Eigen::VectorXd noise(static_cast<Eigen::Index>(n));
  for (Eigen::Index t = 0; t < days; ++t) {
    for (Eigen::Index f = 0; f < k; ++f) factors(f) = rng.normal();
    for (Eigen::Index i = 0; i < noise.size(); ++i) noise(i) = rng.normal();
    for (Eigen::Index i = 0; i < noise.size(); ++i) {
      double shock = idio(i) == 0.0 ? 0.0 : idio(i) * noise(i);
      for (Eigen::Index f = 0; f < k; ++f)
        if (loadings(i, f) != 0.0) shock += loadings(i, f) * factors(f);
      returns(t, i) = spec.drift + spec.daily_vol * shock;
    }
  }

  auto dates = trading_days(spec.start_date, spec.n_days + 1);
  Eigen::MatrixXd prices(days + 1, static_cast<Eigen::Index>(n));
  prices.row(0).setConstant(100.0);
  for (Eigen::Index t = 0; t < days; ++t)
    for (Eigen::Index i = 0; i < prices.cols(); ++i) prices(t + 1, i) = prices(t, i) * std::exp(returns(t, i));

  std::vector<Date> return_dates(dates.begin() + 1, dates.end());
  return SyntheticData{ReturnPanel(std::move(return_dates), assets, std::move(returns)),
                       PricePanel(std::move(dates), assets, std::move(prices)), std::move(loadings),
                       std::move(target), std::move(independent)};
}

std::string price_csv(const PricePanel& panel) {
  std::string out = "date";
  for (const auto& a : panel.assets()) out += "," + a;
  out += "\n";
  for (Eigen::Index t = 0; t < panel.rows(); ++t) {
    out += format_date(panel.dates()[static_cast<std::size_t>(t)]);
    for (Eigen::Index i = 0; i < panel.cols(); ++i) {
      const double p = panel.prices()(t, i);
      out += std::isnan(p) ? std::string(",") : fmt::format(",{}", p);
    }
    out += "\n";
  }
  return out;
}

}  // namespace srifn
