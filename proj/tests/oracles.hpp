#pragma once

// Straightforward re-implementations used as references by the tests. They
// deliberately avoid the library's code paths (no eigensolver, no cached
// face scores, no branch-and-bound) and favour obviousness over speed.

#include "srifn/market_data.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <random>
#include <set>
#include <utility>
#include <vector>

namespace oracle {

inline Eigen::MatrixXd taylor_exp(const Eigen::MatrixXd& a, int terms = 40) {
  const auto n = a.rows();
  Eigen::MatrixXd sum = Eigen::MatrixXd::Identity(n, n);
  Eigen::MatrixXd term = Eigen::MatrixXd::Identity(n, n);
  for (int k = 1; k <= terms; ++k) {
    term = term * a / static_cast<double>(k);
    sum += term;
  }
  return sum;
}

// Communicability betweenness evaluated literally from its definition.
inline std::vector<double> cbc(const Eigen::MatrixXi& adjacency) {
  const auto n = adjacency.rows();
  const Eigen::MatrixXd a = adjacency.cast<double>();
  const Eigen::MatrixXd g = taylor_exp(a);
  std::vector<double> out(static_cast<std::size_t>(n), 0.0);
  for (Eigen::Index v = 0; v < n; ++v) {
    Eigen::MatrixXd removed = a;
    for (Eigen::Index u = 0; u < n; ++u) {
      removed(v, u) = 0.0;
      removed(u, v) = 0.0;
    }
    const Eigen::MatrixXd gv = taylor_exp(removed);
    double raw = 0.0;
    for (Eigen::Index j = 0; j < n; ++j)
      for (Eigen::Index k = 0; k < n; ++k) {
        if (j == k || j == v || k == v) continue;
        if (g(j, k) == 0.0) continue;
        raw += (g(j, k) - gv(j, k)) / g(j, k);
      }
    const double m = static_cast<double>(n - 1);
    out[static_cast<std::size_t>(v)] = std::max(0.0, raw / (m * m - m));
  }
  return out;
}

inline double pearson(const Eigen::MatrixXd& x, Eigen::Index a, Eigen::Index b) {
  const auto s = x.rows();
  double ma = 0.0;
  double mb = 0.0;
  for (Eigen::Index t = 0; t < s; ++t) {
    ma += x(t, a);
    mb += x(t, b);
  }
  ma /= static_cast<double>(s);
  mb /= static_cast<double>(s);
  double sab = 0.0;
  double saa = 0.0;
  double sbb = 0.0;
  for (Eigen::Index t = 0; t < s; ++t) {
    sab += (x(t, a) - ma) * (x(t, b) - mb);
    saa += (x(t, a) - ma) * (x(t, a) - ma);
    sbb += (x(t, b) - mb) * (x(t, b) - mb);
  }
  return (sab / static_cast<double>(s - 1)) /
         std::sqrt((saa / static_cast<double>(s - 1)) * (sbb / static_cast<double>(s - 1)));
}

// TMFG by explicit face enumeration: exhaustive seed clique search, then at
// every step scan every (unplaced vertex, face) pair.
inline std::set<std::pair<int, int>> tmfg_edges(const Eigen::MatrixXd& corr) {
  const int n = static_cast<int>(corr.rows());
  auto w = [&](int i, int j) { return std::abs(corr(i, j)); };
  std::set<std::pair<int, int>> edges;
  auto add = [&](int i, int j) { edges.insert({std::min(i, j), std::max(i, j)}); };

  std::array<int, 4> seed{};
  double best = -1.0;
  for (int a = 0; a < n; ++a)
    for (int b = a + 1; b < n; ++b)
      for (int c = b + 1; c < n; ++c)
        for (int d = c + 1; d < n; ++d) {
          const double total = w(a, b) + w(a, c) + w(b, c) + w(a, d) + w(b, d) + w(c, d);
          if (total > best) {
            best = total;
            seed = {a, b, c, d};
          }
        }
  std::vector<std::array<int, 3>> faces;
  std::vector<bool> placed(static_cast<std::size_t>(n), false);
  for (int x = 0; x < 4; ++x) {
    placed[static_cast<std::size_t>(seed[x])] = true;
    for (int y = x + 1; y < 4; ++y) add(seed[x], seed[y]);
    std::array<int, 3> f{};
    int k = 0;
    for (int y = 0; y < 4; ++y)
      if (y != x) f[k++] = seed[y];
    faces.push_back(f);
  }
  for (int step = 4; step < n; ++step) {
    int best_v = -1;
    std::size_t best_f = 0;
    double best_gain = -1.0;
    for (int v = 0; v < n; ++v) {
      if (placed[static_cast<std::size_t>(v)]) continue;
      for (std::size_t f = 0; f < faces.size(); ++f) {
        const double gain = w(v, faces[f][0]) + w(v, faces[f][1]) + w(v, faces[f][2]);
        if (gain > best_gain) {
          best_gain = gain;
          best_v = v;
          best_f = f;
        }
      }
    }
    const auto host = faces[best_f];
    faces.erase(faces.begin() + static_cast<std::ptrdiff_t>(best_f));
    for (int u : host) add(best_v, u);
    faces.push_back({host[0], host[1], best_v});
    faces.push_back({host[0], host[2], best_v});
    faces.push_back({host[1], host[2], best_v});
    placed[static_cast<std::size_t>(best_v)] = true;
  }
  return edges;
}

struct Moments {
  double mean = 0.0;
  double stddev = 0.0;
  double skewness = 0.0;
  double max_drawdown = 0.0;
};

inline Moments moments(const std::vector<double>& r) {
  const double n = static_cast<double>(r.size());
  Moments m;
  for (double x : r) m.mean += x;
  m.mean /= n;
  double m2 = 0.0;
  double m3 = 0.0;
  for (double x : r) {
    m2 += (x - m.mean) * (x - m.mean);
    m3 += (x - m.mean) * (x - m.mean) * (x - m.mean);
  }
  m.stddev = std::sqrt(m2 / (n - 1.0));
  const double g1 = (m3 / n) / std::pow(m2 / n, 1.5);
  m.skewness = g1 * std::sqrt(n * (n - 1.0)) / (n - 2.0);
  double value = 1.0;
  double peak = 1.0;
  for (double x : r) {
    value *= std::exp(x);
    peak = std::max(peak, value);
    m.max_drawdown = std::min(m.max_drawdown, value / peak - 1.0);
  }
  return m;
}

inline Eigen::MatrixXd random_correlation(int n, std::mt19937_64& gen) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd x(3 * n, n);
  for (Eigen::Index t = 0; t < x.rows(); ++t)
    for (Eigen::Index i = 0; i < n; ++i) x(t, i) = normal(gen);
  // a shared component so off-diagonals are not all tiny
  for (Eigen::Index t = 0; t < x.rows(); ++t) {
    const double common = normal(gen);
    for (Eigen::Index i = 0; i < n; ++i) x(t, i) += 0.5 * common * static_cast<double>(i % 3);
  }
  Eigen::MatrixXd c(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) c(i, j) = i == j ? 1.0 : pearson(x, i, j);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = i + 1; j < n; ++j) c(j, i) = c(i, j);
  return c;
}

inline std::vector<std::string> names(int n, const char* prefix = "A") {
  std::vector<std::string> out;
  for (int i = 0; i < n; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

inline std::vector<srifn::Date> days(std::size_t n) {
  std::vector<srifn::Date> out;
  std::chrono::sys_days d{std::chrono::year{2020} / 1 / 1};
  for (std::size_t i = 0; i < n; ++i) out.emplace_back(d + std::chrono::days{static_cast<int>(i)});
  return out;
}

inline srifn::ReturnPanel random_returns(std::size_t rows, int cols, std::mt19937_64& gen, double scale = 0.01) {
  std::normal_distribution<double> normal;
  Eigen::MatrixXd r(static_cast<Eigen::Index>(rows), cols);
  for (Eigen::Index t = 0; t < r.rows(); ++t) {
    const double common = normal(gen);
    for (Eigen::Index i = 0; i < cols; ++i) r(t, i) = scale * (normal(gen) + 0.4 * common * ((i % 2) ? 1.0 : 0.0));
  }
  return srifn::ReturnPanel(days(rows), names(cols), std::move(r));
}

}  // namespace oracle
