#include "srifn/centrality.hpp"

#include "srifn/error.hpp"
#include "srifn/parallel.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>

namespace srifn {

std::string_view to_string(CentralityMeasure measure) {
  switch (measure) {
    case CentralityMeasure::Degree: return "degree";
    case CentralityMeasure::Cbc: return "cbc";
    case CentralityMeasure::AbsCorr: return "abs_corr";
  }
  return "unknown";
}

CentralityMeasure parse_centrality_measure(std::string_view name) {
  if (name == "degree") return CentralityMeasure::Degree;
  if (name == "cbc") return CentralityMeasure::Cbc;
  if (name == "abs_corr") return CentralityMeasure::AbsCorr;
  throw Error(ErrorKind::ParseError, "unknown centrality measure '" + std::string(name) + "'", "measure");
}

CentralityVector::CentralityVector(std::vector<std::string> assets, CentralityMeasure measure,
                                   std::vector<double> scores)
    : assets_(std::move(assets)), measure_(measure), scores_(std::move(scores)) {
  if (assets_.size() != scores_.size())
    throw Error(ErrorKind::MissingCentrality, "centrality vector length does not match asset count");
  for (std::size_t k = 0; k < scores_.size(); ++k)
    if (!(scores_[k] >= 0.0))
      throw Error(ErrorKind::MissingCentrality, "centrality scores must be non-negative", assets_[k]);
}

double CentralityVector::score_of(std::string_view asset) const {
  const auto it = std::find(assets_.begin(), assets_.end(), asset);
  if (it == assets_.end())
    throw Error(ErrorKind::MissingCentrality, "no centrality for asset " + std::string(asset), std::string(asset));
  return scores_[static_cast<std::size_t>(it - assets_.begin())];
}

CentralityVector degree_centrality(const FilteredNetwork& net) {
  const auto n = net.size();
  if (n < 2) throw Error(ErrorKind::TooFewAssets, "degree centrality needs at least 2 nodes");
  std::vector<double> scores(n);
  for (std::size_t i = 0; i < n; ++i) scores[i] = static_cast<double>(net.degree(i)) / static_cast<double>(n - 1);
  return CentralityVector(net.assets(), CentralityMeasure::Degree, std::move(scores));
}

Eigen::MatrixXd matrix_exponential(const Eigen::MatrixXd& adjacency) {
  if (adjacency.rows() != adjacency.cols())
    throw Error(ErrorKind::NonSymmetricInput, "matrix exponential needs a square matrix");
  const double scale = std::max(1.0, adjacency.cwiseAbs().maxCoeff());
  if ((adjacency - adjacency.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw Error(ErrorKind::NonSymmetricInput, "matrix exponential needs a symmetric matrix");
  if (adjacency.size() == 0) return adjacency;
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(adjacency);
  const Eigen::MatrixXd& q = eig.eigenvectors();
  Eigen::MatrixXd result = q * eig.eigenvalues().array().exp().matrix().asDiagonal() * q.transpose();
  return (0.5 * (result + result.transpose())).eval();
}

namespace {

// exp(A) evaluated one connected component at a time, so pairs in different
// components get an exact zero instead of eigen-solver round-off.
Eigen::MatrixXd communicability(const Eigen::MatrixXd& adjacency) {
  const Eigen::Index n = adjacency.rows();
  std::vector<Eigen::Index> component(static_cast<std::size_t>(n), -1);
  Eigen::Index components = 0;
  for (Eigen::Index s = 0; s < n; ++s) {
    if (component[static_cast<std::size_t>(s)] >= 0) continue;
    std::vector<Eigen::Index> stack{s};
    component[static_cast<std::size_t>(s)] = components;
    while (!stack.empty()) {
      const auto u = stack.back();
      stack.pop_back();
      for (Eigen::Index v = 0; v < n; ++v)
        if (adjacency(u, v) != 0.0 && component[static_cast<std::size_t>(v)] < 0) {
          component[static_cast<std::size_t>(v)] = components;
          stack.push_back(v);
        }
    }
    ++components;
  }

  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index c = 0; c < components; ++c) {
    std::vector<Eigen::Index> members;
    for (Eigen::Index v = 0; v < n; ++v)
      if (component[static_cast<std::size_t>(v)] == c) members.push_back(v);
    const auto m = static_cast<Eigen::Index>(members.size());
    if (m == 1) {
      out(members[0], members[0]) = 1.0;
      continue;
    }
    Eigen::MatrixXd block(m, m);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) block(a, b) = adjacency(members[a], members[b]);
    const Eigen::MatrixXd g = matrix_exponential(block);
    for (Eigen::Index a = 0; a < m; ++a)
      for (Eigen::Index b = 0; b < m; ++b) out(members[a], members[b]) = g(a, b);
  }
  return out;
}

}  // namespace

CentralityVector communicability_betweenness(const FilteredNetwork& net) {
  const auto n = static_cast<Eigen::Index>(net.size());
  if (n < 3) throw Error(ErrorKind::TooFewAssets, "communicability betweenness needs at least 3 nodes");
  const Eigen::MatrixXd adjacency = net.adjacency().cast<double>();
  const Eigen::MatrixXd g = communicability(adjacency);
  const double norm = static_cast<double>((n - 1) * (n - 1) - (n - 1));

  std::vector<double> scores(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index v = 0; v < n; ++v) {
    if (net.degree(static_cast<std::size_t>(v)) == 0) continue;
    Eigen::MatrixXd removed = adjacency;
    removed.row(v).setZero();
    removed.col(v).setZero();
    const Eigen::MatrixXd gv = communicability(removed);
    double raw = 0.0;
    for (Eigen::Index j = 0; j < n; ++j) {
      if (j == v) continue;
      for (Eigen::Index k = 0; k < n; ++k) {
        if (k == v || k == j || g(j, k) == 0.0) continue;
        raw += (g(j, k) - gv(j, k)) / g(j, k);
      }
    }
    scores[static_cast<std::size_t>(v)] = std::max(0.0, raw / norm);
  }
  return CentralityVector(net.assets(), CentralityMeasure::Cbc, std::move(scores));
}

CentralityVector abs_correlation_centrality(const CorrelationMatrix& corr, std::span<const std::size_t> subset) {
  if (subset.size() < 2) throw Error(ErrorKind::SubsetTooSmall, "absolute-correlation centrality needs >= 2 assets");
  std::vector<std::string> assets;
  std::vector<double> scores;
  for (const auto i : subset) {
    if (i >= static_cast<std::size_t>(corr.size()))
      throw Error(ErrorKind::SubsetTooSmall, fmt::format("subset index {} outside the universe", i));
    double sum = 0.0;
    for (const auto j : subset)
      if (j != i) sum += std::abs(corr(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)));
    assets.push_back(corr.assets()[i]);
    scores.push_back(sum);
  }
  return CentralityVector(std::move(assets), CentralityMeasure::AbsCorr, std::move(scores));
}

CentralityVector bootstrapped_centrality(const BootstrapEnsemble& ensemble, CentralityMeasure measure,
                                         unsigned threads) {
  const auto reps = static_cast<std::size_t>(ensemble.repetitions);
  const auto n = static_cast<std::size_t>(ensemble.original.size());
  std::vector<std::size_t> universe(n);
  for (std::size_t i = 0; i < n; ++i) universe[i] = i;

  std::vector<std::vector<double>> per_rep(reps);
  parallel_for(reps, threads, [&](std::size_t k) {
    switch (measure) {
      case CentralityMeasure::Degree: per_rep[k] = degree_centrality(ensemble.networks[k]).scores(); break;
      case CentralityMeasure::Cbc: per_rep[k] = communicability_betweenness(ensemble.networks[k]).scores(); break;
      case CentralityMeasure::AbsCorr:
        per_rep[k] = abs_correlation_centrality(ensemble.correlations[k], universe).scores();
        break;
    }
  });

  std::vector<double> mean(n, 0.0);
  for (const auto& scores : per_rep)
    for (std::size_t i = 0; i < n; ++i) mean[i] += scores[i];
  for (auto& m : mean) m /= static_cast<double>(reps);
  return CentralityVector(ensemble.original.assets(), measure, std::move(mean));
}

CentralityVector bootstrapped_centrality(const ReturnPanel& window, const SrIfnConfig& config,
                                         CentralityMeasure measure) {
  return bootstrapped_centrality(bootstrap_ensemble(window, config), measure, config.threads);
}

std::string centrality_csv(const CentralityVector& centrality) {
  std::string out = "asset,measure,score\n";
  for (std::size_t k = 0; k < centrality.size(); ++k)
    out += fmt::format("{},{},{}\n", centrality.assets()[k], to_string(centrality.measure()), centrality.scores()[k]);
  return out;
}

CentralityVector centrality_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "asset,measure,score")
    throw Error(ErrorKind::ParseError, "centrality CSV must start with 'asset,measure,score'");
  std::vector<std::string> assets;
  std::vector<double> scores;
  std::optional<CentralityMeasure> measure;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    if (c1 == std::string::npos || c2 == std::string::npos)
      throw Error(ErrorKind::ParseError, "bad centrality row '" + line + "'");
    const auto m = parse_centrality_measure(std::string_view(line).substr(c1 + 1, c2 - c1 - 1));
    if (measure && *measure != m) throw Error(ErrorKind::ParseError, "mixed measures in centrality CSV");
    measure = m;
    double score = 0.0;
    const char* first = line.data() + c2 + 1;
    const char* last = line.data() + line.size();
    if (std::from_chars(first, last, score).ptr != last)
      throw Error(ErrorKind::ParseError, "bad centrality score in '" + line + "'");
    assets.push_back(line.substr(0, c1));
    scores.push_back(score);
  }
  return CentralityVector(std::move(assets), measure.value_or(CentralityMeasure::Degree), std::move(scores));
}

}  // namespace srifn
