#include "srifn/portfolio.hpp"

#include "srifn/error.hpp"
#include "srifn/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

namespace srifn {

std::string_view to_string(SelectionRule rule) {
  switch (rule) {
    case SelectionRule::Peripheral: return "PTP";
    case SelectionRule::Central: return "CTP";
    case SelectionRule::Random: return "RBP";
    case SelectionRule::LeastCorrelated: return "PBP";
    case SelectionRule::LongHold: return "LongHold";
  }
  return "unknown";
}

std::string_view to_string(WeightingRule rule) {
  switch (rule) {
    case WeightingRule::Equal: return "equal";
    case WeightingRule::InvDegree: return "inv_degree";
    case WeightingRule::InvCbc: return "inv_cbc";
    case WeightingRule::InvAbsCorr: return "inv_abscorr";
  }
  return "unknown";
}

SelectionRule parse_selection_rule(std::string_view name) {
  for (auto rule : {SelectionRule::Peripheral, SelectionRule::Central, SelectionRule::Random,
                    SelectionRule::LeastCorrelated, SelectionRule::LongHold})
    if (name == to_string(rule)) return rule;
  throw Error(ErrorKind::InvalidConfig, "unknown strategy '" + std::string(name) + "'", "strategy");
}

WeightingRule parse_weighting_rule(std::string_view name) {
  for (auto rule : {WeightingRule::Equal, WeightingRule::InvDegree, WeightingRule::InvCbc, WeightingRule::InvAbsCorr})
    if (name == to_string(rule)) return rule;
  throw Error(ErrorKind::InvalidConfig, "unknown weighting '" + std::string(name) + "'", "weighting");
}

PortfolioAllocation::PortfolioAllocation(std::vector<std::string> assets, std::vector<double> weights,
                                         StrategyTag strategy)
    : assets_(std::move(assets)), weights_(std::move(weights)), strategy_(std::move(strategy)) {
  if (assets_.empty()) throw Error(ErrorKind::EmptySelection, "allocation has no assets");
  if (assets_.size() != weights_.size())
    throw Error(ErrorKind::NegativeWeight, "allocation weights do not match asset count");
  if (std::set<std::string>(assets_.begin(), assets_.end()).size() != assets_.size())
    throw Error(ErrorKind::InvalidConfig, "allocation lists an asset twice");
  double total = 0.0;
  for (std::size_t k = 0; k < weights_.size(); ++k) {
    if (!(weights_[k] > 0.0)) throw Error(ErrorKind::NegativeWeight, "weights must be positive", assets_[k]);
    total += weights_[k];
  }
  if (std::abs(total - 1.0) > 1e-10) throw Error(ErrorKind::NegativeWeight, "weights must sum to 1");
}

AssetSubset select_peripheral(const FilteredNetwork& net) {
  AssetSubset out;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.degree(i) == 0) out.push_back(net.assets()[i]);
  if (out.empty()) throw Error(ErrorKind::EmptySelection, "network has no isolated assets");
  return out;
}

AssetSubset select_central(const FilteredNetwork& net) {
  AssetSubset out;
  for (std::size_t i = 0; i < net.size(); ++i)
    if (net.degree(i) != 0) out.push_back(net.assets()[i]);
  if (out.empty()) throw Error(ErrorKind::EmptySelection, "network has no connected assets");
  return out;
}

AssetSubset select_random(std::span<const std::string> universe, std::size_t count, std::uint64_t seed) {
  if (count > universe.size())
    throw Error(ErrorKind::CountExceedsUniverse,
                fmt::format("cannot draw {} assets from a universe of {}", count, universe.size()));
  std::vector<std::size_t> index(universe.size());
  std::iota(index.begin(), index.end(), 0);
  Rng rng(seed);
  // Partial Fisher-Yates: the first `count` slots are a uniform sample.
  for (std::size_t k = 0; k < count; ++k) std::swap(index[k], index[k + rng.uniform_index(index.size() - k)]);
  index.resize(count);
  std::sort(index.begin(), index.end());
  AssetSubset out;
  for (auto i : index) out.push_back(universe[i]);
  return out;
}

AssetSubset select_least_correlated(const CorrelationMatrix& corr, std::size_t count) {
  const auto n = static_cast<std::size_t>(corr.size());
  if (count > n)
    throw Error(ErrorKind::CountExceedsUniverse, fmt::format("cannot pick {} assets from a universe of {}", count, n));
  std::vector<double> total(n, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      if (i != j) total[i] += std::abs(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return total[a] < total[b]; });
  order.resize(count);
  std::sort(order.begin(), order.end());
  AssetSubset out;
  for (auto i : order) out.push_back(corr.assets()[i]);
  return out;
}

PortfolioAllocation equal_weights(const AssetSubset& subset, StrategyTag strategy) {
  if (subset.empty()) throw Error(ErrorKind::EmptySelection, "cannot weight an empty selection");
  std::vector<double> weights(subset.size(), 1.0 / static_cast<double>(subset.size()));
  return PortfolioAllocation(subset, std::move(weights), std::move(strategy));
}

PortfolioAllocation inverse_centrality_weights(const AssetSubset& subset, const CentralityVector& centrality,
                                               StrategyTag strategy, double floor) {
  if (subset.empty()) throw Error(ErrorKind::EmptySelection, "cannot weight an empty selection");
  std::vector<double> weights;
  double total = 0.0;
  for (const auto& asset : subset) {
    const double inverse = 1.0 / std::max(centrality.score_of(asset), floor);
    weights.push_back(inverse);
    total += inverse;
  }
  for (auto& w : weights) w /= total;
  return PortfolioAllocation(subset, std::move(weights), std::move(strategy));
}

std::string allocation_csv(const PortfolioAllocation& allocation) {
  std::string out = "asset,weight\n";
  for (std::size_t k = 0; k < allocation.size(); ++k)
    out += fmt::format("{},{}\n", allocation.assets()[k], allocation.weights()[k]);
  return out;
}

nlohmann::json allocation_header_json(const PortfolioAllocation& allocation) {
  return {{"selection", to_string(allocation.strategy().selection)},
          {"weighting", to_string(allocation.strategy().weighting)},
          {"size", allocation.size()},
          {"config", allocation.strategy().config}};
}

}  // namespace srifn
