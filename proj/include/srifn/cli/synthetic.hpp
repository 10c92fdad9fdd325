#pragma once

#include "srifn/market_data.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace srifn {

struct CorrelationBlock {
  std::size_t size = 0;
  double rho = 0.0;  // target pairwise correlation inside the block
};

// Linear factor model for daily log returns:
//   r_i = drift + daily_vol * (sum_f loading_if * z_f + sqrt(1 - sum_f loading_if^2) * e_i)
// with independent standard-normal factors z and noise e. Block members load
// on a shared market factor (share cross_block_rho) and on their block factor
// (share s_i - cross_block_rho), where s_i = rho + block_spread * (2 u_i - 1)
// and u_i ~ U(0, 1); with block_spread = 0 every pair inside a block has
// correlation exactly rho, otherwise pair (i, j) has sqrt(s_i s_j).
// Independent assets load only on a weak residual factor with share
// u_i ~ U(0, independent_rho_max); with independent_on_market that factor is
// the market factor shared with the blocks instead of a separate one.
struct SyntheticSpec {
  std::size_t n_days = 1000;
  std::vector<CorrelationBlock> blocks;
  std::size_t n_independent = 10;
  double cross_block_rho = 0.0;
  double block_spread = 0.0;
  double independent_rho_max = 0.0;
  bool independent_on_market = false;
  double daily_vol = 0.01;
  double drift = 0.0002;
  std::uint64_t seed = 0;
  Date start_date{std::chrono::year{2010}, std::chrono::January, std::chrono::day{4}};

  std::size_t n_assets() const;
  std::size_t n_factors() const;
};

struct SyntheticData {
  ReturnPanel returns;            // the generated log returns
  PricePanel prices;              // close prices starting at 100
  Eigen::MatrixXd loadings;       // assets x factors
  Eigen::MatrixXd target_correlation;
  std::vector<std::string> independent_assets;
};

// Throws InfeasibleCorrelation when the implied correlation matrix is not a
// valid (PSD, unit-diagonal) correlation matrix.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

// CSV in the price-file layout read by load_prices.
std::string price_csv(const PricePanel& panel);

}  // namespace srifn
