#pragma once

#include "srifn/centrality.hpp"
#include "srifn/filtering.hpp"
#include "srifn/market_data.hpp"

#include <json.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srifn {

enum class SelectionRule {
  Peripheral,       // PTP: isolated nodes of the filtered network
  Central,          // CTP: connected nodes
  Random,           // RBP: size-matched uniform sample
  LeastCorrelated,  // PBP: lowest total |corr|
  LongHold,         // equally weighted universe, never rebalanced
};

enum class WeightingRule { Equal, InvDegree, InvCbc, InvAbsCorr };

std::string_view to_string(SelectionRule rule);
std::string_view to_string(WeightingRule rule);
SelectionRule parse_selection_rule(std::string_view name);
WeightingRule parse_weighting_rule(std::string_view name);

inline constexpr double kCentralityFloor = 1e-9;

struct StrategyTag {
  SelectionRule selection = SelectionRule::Peripheral;
  WeightingRule weighting = WeightingRule::Equal;
  nlohmann::json config;  // echo of the parameters that produced the allocation
};

// Long-only, fully invested allocation: positive weights summing to one.
class PortfolioAllocation {
 public:
  PortfolioAllocation(std::vector<std::string> assets, std::vector<double> weights, StrategyTag strategy);

  const std::vector<std::string>& assets() const noexcept { return assets_; }
  const std::vector<double>& weights() const noexcept { return weights_; }
  const StrategyTag& strategy() const noexcept { return strategy_; }
  std::size_t size() const noexcept { return assets_.size(); }

 private:
  std::vector<std::string> assets_;
  std::vector<double> weights_;
  StrategyTag strategy_;
};

using AssetSubset = std::vector<std::string>;

// Selections are returned in universe order.
AssetSubset select_peripheral(const FilteredNetwork& net);
AssetSubset select_central(const FilteredNetwork& net);
AssetSubset select_random(std::span<const std::string> universe, std::size_t count, std::uint64_t seed);
AssetSubset select_least_correlated(const CorrelationMatrix& corr, std::size_t count);

PortfolioAllocation equal_weights(const AssetSubset& subset, StrategyTag strategy = {});
PortfolioAllocation inverse_centrality_weights(const AssetSubset& subset, const CentralityVector& centrality,
                                               StrategyTag strategy = {}, double floor = kCentralityFloor);

// CSV with header `asset,weight`.
std::string allocation_csv(const PortfolioAllocation& allocation);
nlohmann::json allocation_header_json(const PortfolioAllocation& allocation);

}  // namespace srifn
