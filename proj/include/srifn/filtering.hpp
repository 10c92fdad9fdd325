#pragma once

#include "srifn/market_data.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <cstdint>
#include <string>
#include <vector>

namespace srifn {

struct SrIfnConfig {
  double confidence_level = 0.7;
  int repetitions = 100;
  std::uint64_t base_seed = 0;
  // Worker threads for the bootstrap repetitions; 0 picks the hardware
  // concurrency. Results do not depend on this value.
  unsigned threads = 0;

  void validate() const;
};

struct Edge {
  std::size_t i = 0;
  std::size_t j = 0;
};

// Undirected filtered graph over a fixed asset list. `similarity` holds the
// signed correlation on retained edges and a structural zero elsewhere;
// `occurrence` is the bootstrap edge frequency (1 on every edge of a plain
// TMFG).
class FilteredNetwork {
 public:
  FilteredNetwork(std::vector<std::string> assets, Eigen::MatrixXi adjacency, Eigen::MatrixXd similarity,
                  Eigen::MatrixXd occurrence);

  const std::vector<std::string>& assets() const noexcept { return assets_; }
  const Eigen::MatrixXi& adjacency() const noexcept { return adjacency_; }
  const Eigen::MatrixXd& similarity() const noexcept { return similarity_; }
  const Eigen::MatrixXd& occurrence() const noexcept { return occurrence_; }

  std::size_t size() const noexcept { return assets_.size(); }
  std::size_t edge_count() const;
  int degree(std::size_t node) const { return adjacency_.row(static_cast<Eigen::Index>(node)).sum(); }
  // Edges with i < j, sorted by (i, j).
  std::vector<Edge> edges() const;

 private:
  std::vector<std::string> assets_;
  Eigen::MatrixXi adjacency_;
  Eigen::MatrixXd similarity_;
  Eigen::MatrixXd occurrence_;
};

// Triangulated Maximally Filtered Graph. Vertices join greedily by |corr|
// gain starting from the heaviest 4-clique; ties go to the lowest index.
FilteredNetwork tmfg(const CorrelationMatrix& corr);

// Bootstrap repetitions of Algorithm-style SR-IFN, kept so that thresholds and
// ensembled centralities can be taken from the same sub-networks.
struct BootstrapEnsemble {
  CorrelationMatrix original;
  std::vector<CorrelationMatrix> correlations;  // one per repetition
  std::vector<FilteredNetwork> networks;        // TMFG of each correlation
  Eigen::MatrixXi counts;                       // edge occurrence counts
  int repetitions = 0;
};

BootstrapEnsemble bootstrap_ensemble(const ReturnPanel& window, const SrIfnConfig& config);

Eigen::MatrixXd edge_occurrence(const BootstrapEnsemble& ensemble);
Eigen::MatrixXd edge_occurrence(const ReturnPanel& window, const SrIfnConfig& config);

// Keeps edges whose occurrence frequency is strictly above confidence_level.
FilteredNetwork threshold_ensemble(const BootstrapEnsemble& ensemble, double confidence_level);
FilteredNetwork sr_ifn(const ReturnPanel& window, const SrIfnConfig& config);

nlohmann::json to_json(const SrIfnConfig& config);
nlohmann::json to_json(const FilteredNetwork& network, const nlohmann::json& config_echo = {});
FilteredNetwork network_from_json(const nlohmann::json& doc);
std::string occurrence_csv(const std::vector<std::string>& assets, const Eigen::MatrixXd& occurrence);

// Vertex order produced by maximum cardinality search (first visited first).
std::vector<std::size_t> maximum_cardinality_order(const Eigen::MatrixXi& adjacency);
// True when the reverse of the MCS order is a perfect elimination ordering.
bool is_chordal(const Eigen::MatrixXi& adjacency);

}  // namespace srifn
