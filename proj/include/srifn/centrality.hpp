#pragma once

#include "srifn/filtering.hpp"
#include "srifn/market_data.hpp"

#include <Eigen/Dense>

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace srifn {

enum class CentralityMeasure { Degree, Cbc, AbsCorr };

std::string_view to_string(CentralityMeasure measure);
CentralityMeasure parse_centrality_measure(std::string_view name);

class CentralityVector {
 public:
  CentralityVector(std::vector<std::string> assets, CentralityMeasure measure, std::vector<double> scores);

  const std::vector<std::string>& assets() const noexcept { return assets_; }
  CentralityMeasure measure() const noexcept { return measure_; }
  const std::vector<double>& scores() const noexcept { return scores_; }
  std::size_t size() const noexcept { return scores_.size(); }

  // Score of a named asset; throws MissingCentrality when absent.
  double score_of(std::string_view asset) const;

 private:
  std::vector<std::string> assets_;
  CentralityMeasure measure_;
  std::vector<double> scores_;
};

// k_i / (n - 1)
CentralityVector degree_centrality(const FilteredNetwork& net);

// exp(A) of a symmetric matrix through its eigendecomposition.
Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& adjacency);

// Normalised communicability betweenness on the binary adjacency of `net`:
// the mean relative drop of exp(A)[j][k] over ordered pairs j != k not
// involving v when v's edges are removed.
CentralityVector communicability_betweenness(const FilteredNetwork& net);

// Sum of |C[i][j]| over the other members of `subset`.
CentralityVector abs_correlation_centrality(const CorrelationMatrix& corr, std::span<const std::size_t> subset);

// Average of the chosen measure over the bootstrap sub-networks (or, for
// AbsCorr, over the bootstrap correlations of the full universe).
CentralityVector bootstrapped_centrality(const BootstrapEnsemble& ensemble, CentralityMeasure measure,
                                         unsigned threads = 0);
CentralityVector bootstrapped_centrality(const ReturnPanel& window, const SrIfnConfig& config,
                                         CentralityMeasure measure);

// CSV with header `asset,measure,score`.
std::string centrality_csv(const CentralityVector& centrality);
CentralityVector centrality_from_csv(std::string_view text);

}  // namespace srifn
