#include "srifn/filtering.hpp"

#include "srifn/error.hpp"
#include "srifn/parallel.hpp"
#include "srifn/random.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace srifn {

void SrIfnConfig::validate() const {
  if (!(confidence_level >= 0.0 && confidence_level <= 1.0))
    throw Error(ErrorKind::InvalidConfig, "confidence_level must lie in [0, 1]", "confidence_level");
  if (repetitions < 1) throw Error(ErrorKind::InvalidConfig, "repetitions must be >= 1", "repetitions");
}

FilteredNetwork::FilteredNetwork(std::vector<std::string> assets, Eigen::MatrixXi adjacency,
                                 Eigen::MatrixXd similarity, Eigen::MatrixXd occurrence)
    : assets_(std::move(assets)),
      adjacency_(std::move(adjacency)),
      similarity_(std::move(similarity)),
      occurrence_(std::move(occurrence)) {
  const auto n = static_cast<Eigen::Index>(assets_.size());
  if (adjacency_.rows() != n || adjacency_.cols() != n || similarity_.rows() != n || similarity_.cols() != n ||
      occurrence_.rows() != n || occurrence_.cols() != n)
    throw Error(ErrorKind::NonSymmetricInput, "network matrices must be n x n");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (adjacency_(i, i) != 0) throw Error(ErrorKind::NonSymmetricInput, "self-loop in network");
    for (Eigen::Index j = 0; j < n; ++j) {
      if (adjacency_(i, j) != adjacency_(j, i) || (adjacency_(i, j) != 0 && adjacency_(i, j) != 1))
        throw Error(ErrorKind::NonSymmetricInput, "adjacency must be symmetric and binary");
      if (similarity_(i, j) != 0.0 && adjacency_(i, j) == 0)
        throw Error(ErrorKind::NonSymmetricInput, "similarity is nonzero off the edge set");
    }
  }
}

std::size_t FilteredNetwork::edge_count() const { return static_cast<std::size_t>(adjacency_.sum() / 2); }

std::vector<Edge> FilteredNetwork::edges() const {
  std::vector<Edge> out;
  const auto n = static_cast<Eigen::Index>(size());
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j)
      if (adjacency_(i, j) != 0) out.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j)});
  return out;
}

namespace {

using Face = std::array<Eigen::Index, 3>;

Face make_face(Eigen::Index a, Eigen::Index b, Eigen::Index c) {
  Face f{a, b, c};
  std::sort(f.begin(), f.end());
  return f;
}

// Heaviest 4-clique by total |corr|, lexicographically first on ties.
std::array<Eigen::Index, 4> seed_clique(const Eigen::MatrixXd& w) {
  const Eigen::Index n = w.rows();

  // suffix_max(x, k): max over d >= k, d != x of w(x, d).
  Eigen::MatrixXd suffix_max = Eigen::MatrixXd::Constant(n, n + 1, -1.0);
  for (Eigen::Index x = 0; x < n; ++x)
    for (Eigen::Index k = n - 1; k >= 0; --k)
      suffix_max(x, k) = std::max(suffix_max(x, k + 1), k == x ? -1.0 : w(x, k));
  // pair_suffix_max(k): heaviest edge with both ends >= k.
  Eigen::VectorXd pair_suffix_max = Eigen::VectorXd::Constant(n + 1, -1.0);
  for (Eigen::Index k = n - 1; k >= 0; --k)
    pair_suffix_max(k) = std::max(pair_suffix_max(k + 1), suffix_max(k, k + 1));

  // Greedy lower bound so that the exact search prunes from the start.
  double guess = -1.0;
  {
    Eigen::Index best_i = 0;
    Eigen::Index best_j = 1;
    for (Eigen::Index i = 0; i < n; ++i)
      for (Eigen::Index j = i + 1; j < n; ++j)
        if (w(i, j) > w(best_i, best_j)) {
          best_i = i;
          best_j = j;
        }
    std::vector<Eigen::Index> members{best_i, best_j};
    while (members.size() < 4) {
      Eigen::Index pick = -1;
      double pick_gain = -1.0;
      for (Eigen::Index v = 0; v < n; ++v) {
        if (std::find(members.begin(), members.end(), v) != members.end()) continue;
        double g = 0.0;
        for (auto m : members) g += w(v, m);
        if (g > pick_gain) {
          pick_gain = g;
          pick = v;
        }
      }
      members.push_back(pick);
    }
    std::sort(members.begin(), members.end());
    const auto [a, b, c, d] = std::array{members[0], members[1], members[2], members[3]};
    guess = ((((w(a, b) + w(a, c)) + w(b, c)) + w(a, d)) + w(b, d)) + w(c, d);
  }

  std::array<Eigen::Index, 4> best{0, 1, 2, 3};
  double best_value = -std::numeric_limits<double>::infinity();
  auto floor = [&] { return std::max(guess, best_value); };
  // Bounds follow the same summation order as the exact value, so a strict
  // `bound < floor` never discards a maximiser (rounded addition is monotone).
  for (Eigen::Index a = 0; a + 3 < n; ++a)
    for (Eigen::Index b = a + 1; b + 2 < n; ++b) {
      const double ab = w(a, b);
      const double pair_bound = ((((ab + suffix_max(a, b + 1)) + suffix_max(b, b + 1)) + suffix_max(a, b + 1)) +
                                 suffix_max(b, b + 1)) +
                                pair_suffix_max(b + 1);
      if (pair_bound < floor()) continue;
      for (Eigen::Index c = b + 1; c + 1 < n; ++c) {
        const double partial = (ab + w(a, c)) + w(b, c);
        const double bound = ((partial + suffix_max(a, c + 1)) + suffix_max(b, c + 1)) + suffix_max(c, c + 1);
        if (bound < floor()) continue;
        for (Eigen::Index d = c + 1; d < n; ++d) {
          const double value = ((partial + w(a, d)) + w(b, d)) + w(c, d);
          if (value > best_value) {
            best_value = value;
            best = {a, b, c, d};
          }
        }
      }
    }
  return best;
}

struct FaceState {
  Face face;
  Eigen::Index best_vertex = -1;
  double best_gain = -1.0;
  bool alive = true;
};

double face_gain(const Eigen::MatrixXd& w, const Face& f, Eigen::Index v) {
  return (w(v, f[0]) + w(v, f[1])) + w(v, f[2]);
}

void rescore(FaceState& s, const Eigen::MatrixXd& w, const std::vector<char>& placed) {
  s.best_vertex = -1;
  s.best_gain = -1.0;
  for (Eigen::Index v = 0; v < w.rows(); ++v) {
    if (placed[static_cast<std::size_t>(v)]) continue;
    const double g = face_gain(w, s.face, v);
    if (g > s.best_gain) {
      s.best_gain = g;
      s.best_vertex = v;
    }
  }
}

// (gain desc, vertex asc, face asc)
bool better(const FaceState& a, const FaceState& b) {
  if (a.best_gain != b.best_gain) return a.best_gain > b.best_gain;
  if (a.best_vertex != b.best_vertex) return a.best_vertex < b.best_vertex;
  return a.face < b.face;
}

FilteredNetwork network_from_adjacency(const CorrelationMatrix& corr, Eigen::MatrixXi adjacency) {
  const Eigen::Index n = corr.size();
  Eigen::MatrixXd similarity = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (adjacency(i, j) != 0) similarity(i, j) = corr(i, j);
  Eigen::MatrixXd occurrence = adjacency.cast<double>();
  return FilteredNetwork(corr.assets(), std::move(adjacency), std::move(similarity), std::move(occurrence));
}

}  // namespace

FilteredNetwork tmfg(const CorrelationMatrix& corr) {
  const Eigen::Index n = corr.size();
  if (n < 2) throw Error(ErrorKind::TooFewAssets, fmt::format("TMFG needs at least 2 assets, got {}", n));
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  if (n < 4) {
    adjacency.setOnes();
    adjacency.diagonal().setZero();
    return network_from_adjacency(corr, std::move(adjacency));
  }

  const Eigen::MatrixXd w = corr.values().cwiseAbs();
  auto link = [&](Eigen::Index a, Eigen::Index b) {
    adjacency(a, b) = 1;
    adjacency(b, a) = 1;
  };

  const auto seed = seed_clique(w);
  std::vector<char> placed(static_cast<std::size_t>(n), 0);
  for (std::size_t x = 0; x < 4; ++x) {
    placed[static_cast<std::size_t>(seed[x])] = 1;
    for (std::size_t y = x + 1; y < 4; ++y) link(seed[x], seed[y]);
  }

  std::vector<FaceState> faces;
  faces.reserve(static_cast<std::size_t>(2 * n));
  for (std::size_t skip = 0; skip < 4; ++skip) {
    std::vector<Eigen::Index> tri;
    for (std::size_t x = 0; x < 4; ++x)
      if (x != skip) tri.push_back(seed[x]);
    faces.push_back({make_face(tri[0], tri[1], tri[2])});
  }
  for (auto& f : faces) rescore(f, w, placed);

  for (Eigen::Index step = 4; step < n; ++step) {
    std::size_t chosen = faces.size();
    for (std::size_t k = 0; k < faces.size(); ++k)
      if (faces[k].alive && (chosen == faces.size() || better(faces[k], faces[chosen]))) chosen = k;

    const Face host = faces[chosen].face;
    const Eigen::Index v = faces[chosen].best_vertex;
    placed[static_cast<std::size_t>(v)] = 1;
    for (auto u : host) link(v, u);

    faces[chosen].alive = false;
    const std::size_t first_new = faces.size();
    faces.push_back({make_face(host[0], host[1], v)});
    faces.push_back({make_face(host[0], host[2], v)});
    faces.push_back({make_face(host[1], host[2], v)});
    if (step + 1 == n) break;
    for (std::size_t k = 0; k < faces.size(); ++k)
      if (faces[k].alive && (k >= first_new || faces[k].best_vertex == v)) rescore(faces[k], w, placed);
  }
  return network_from_adjacency(corr, std::move(adjacency));
}

BootstrapEnsemble bootstrap_ensemble(const ReturnPanel& window, const SrIfnConfig& config) {
  config.validate();
  if (window.cols() < 2)
    throw Error(ErrorKind::TooFewAssets, fmt::format("SR-IFN needs at least 2 assets, got {}", window.cols()));
  BootstrapEnsemble ensemble{correlation(window), {}, {}, {}, config.repetitions};

  const auto reps = static_cast<std::size_t>(config.repetitions);
  std::vector<std::optional<CorrelationMatrix>> correlations(reps);
  std::vector<std::optional<FilteredNetwork>> networks(reps);
  parallel_for(reps, config.threads, [&](std::size_t k) {
    const auto seed = derive_seed(config.base_seed, static_cast<std::uint64_t>(k + 1));
    auto boot = correlation(bootstrap_rows(window, seed), ZeroVariancePolicy::ZeroOut);
    networks[k].emplace(tmfg(boot));
    correlations[k].emplace(std::move(boot));
  });

  const Eigen::Index n = window.cols();
  ensemble.counts = Eigen::MatrixXi::Zero(n, n);
  for (std::size_t k = 0; k < reps; ++k) {
    ensemble.counts += networks[k]->adjacency();
    ensemble.correlations.push_back(std::move(*correlations[k]));
    ensemble.networks.push_back(std::move(*networks[k]));
  }
  return ensemble;
}

Eigen::MatrixXd edge_occurrence(const BootstrapEnsemble& ensemble) {
  return ensemble.counts.cast<double>() / static_cast<double>(ensemble.repetitions);
}

Eigen::MatrixXd edge_occurrence(const ReturnPanel& window, const SrIfnConfig& config) {
  return edge_occurrence(bootstrap_ensemble(window, config));
}

FilteredNetwork threshold_ensemble(const BootstrapEnsemble& ensemble, double confidence_level) {
  const Eigen::MatrixXd occurrence = edge_occurrence(ensemble);
  const Eigen::Index n = occurrence.rows();
  Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
  Eigen::MatrixXd similarity = Eigen::MatrixXd::Zero(n, n);
  Eigen::MatrixXd kept = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j)
      if (i != j && occurrence(i, j) > confidence_level) {
        adjacency(i, j) = 1;
        similarity(i, j) = ensemble.original(i, j);
        kept(i, j) = occurrence(i, j);
      }
  return FilteredNetwork(ensemble.original.assets(), std::move(adjacency), std::move(similarity), std::move(kept));
}

FilteredNetwork sr_ifn(const ReturnPanel& window, const SrIfnConfig& config) {
  return threshold_ensemble(bootstrap_ensemble(window, config), config.confidence_level);
}

nlohmann::json to_json(const SrIfnConfig& config) {
  return {{"confidence_level", config.confidence_level},
          {"repetitions", config.repetitions},
          {"base_seed", config.base_seed}};
}

nlohmann::json to_json(const FilteredNetwork& network, const nlohmann::json& config_echo) {
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : network.edges()) {
    const auto i = static_cast<Eigen::Index>(e.i);
    const auto j = static_cast<Eigen::Index>(e.j);
    edges.push_back({{"i", e.i},
                     {"j", e.j},
                     {"similarity", network.similarity()(i, j)},
                     {"occurrence", network.occurrence()(i, j)}});
  }
  nlohmann::json doc{{"assets", network.assets()}, {"edges", std::move(edges)}};
  if (!config_echo.is_null()) doc["config"] = config_echo;
  return doc;
}

FilteredNetwork network_from_json(const nlohmann::json& doc) {
  try {
    auto assets = doc.at("assets").get<std::vector<std::string>>();
    const auto n = static_cast<Eigen::Index>(assets.size());
    Eigen::MatrixXi adjacency = Eigen::MatrixXi::Zero(n, n);
    Eigen::MatrixXd similarity = Eigen::MatrixXd::Zero(n, n);
    Eigen::MatrixXd occurrence = Eigen::MatrixXd::Zero(n, n);
    for (const auto& e : doc.at("edges")) {
      const auto i = e.at("i").get<Eigen::Index>();
      const auto j = e.at("j").get<Eigen::Index>();
      if (i < 0 || j < 0 || i >= n || j >= n || i == j)
        throw Error(ErrorKind::ParseError, fmt::format("bad edge ({}, {})", i, j));
      adjacency(i, j) = adjacency(j, i) = 1;
      similarity(i, j) = similarity(j, i) = e.at("similarity").get<double>();
      occurrence(i, j) = occurrence(j, i) = e.at("occurrence").get<double>();
    }
    return FilteredNetwork(std::move(assets), std::move(adjacency), std::move(similarity), std::move(occurrence));
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::ParseError, std::string("network document: ") + e.what());
  }
}

std::string occurrence_csv(const std::vector<std::string>& assets, const Eigen::MatrixXd& occurrence) {
  std::string out = "asset";
  for (const auto& a : assets) out += "," + a;
  out += "\n";
  for (Eigen::Index i = 0; i < occurrence.rows(); ++i) {
    out += assets[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < occurrence.cols(); ++j) out += fmt::format(",{}", occurrence(i, j));
    out += "\n";
  }
  return out;
}

std::vector<std::size_t> maximum_cardinality_order(const Eigen::MatrixXi& adjacency) {
  const auto n = static_cast<std::size_t>(adjacency.rows());
  std::vector<int> weight(n, 0);
  std::vector<char> visited(n, 0);
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t step = 0; step < n; ++step) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v)
      if (!visited[v] && (pick == n || weight[v] > weight[pick])) pick = v;
    visited[pick] = 1;
    order.push_back(pick);
    for (std::size_t u = 0; u < n; ++u)
      if (!visited[u] && adjacency(static_cast<Eigen::Index>(pick), static_cast<Eigen::Index>(u)) != 0) ++weight[u];
  }
  return order;
}

bool is_chordal(const Eigen::MatrixXi& adjacency) {
  const auto order = maximum_cardinality_order(adjacency);
  const auto n = order.size();
  std::vector<std::size_t> position(n);
  for (std::size_t k = 0; k < n; ++k) position[order[k]] = k;
  // Reverse MCS order is a perfect elimination ordering iff every vertex's
  // earlier-visited neighbours are pairwise adjacent.
  for (std::size_t v = 0; v < n; ++v) {
    std::vector<Eigen::Index> earlier;
    for (std::size_t u = 0; u < n; ++u)
      if (position[u] < position[v] && adjacency(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(u)) != 0)
        earlier.push_back(static_cast<Eigen::Index>(u));
    for (std::size_t a = 0; a < earlier.size(); ++a)
      for (std::size_t b = a + 1; b < earlier.size(); ++b)
        if (adjacency(earlier[a], earlier[b]) == 0) return false;
  }
  return true;
}

}  // namespace srifn
