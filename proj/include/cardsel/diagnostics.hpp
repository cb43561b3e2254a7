#pragma once

/**
 * @file diagnostics.hpp
 * @brief Dependence-structure diagnostics for Sigma / rho and cross-run
 *        stability measures.
 */

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cardsel/calibration.hpp"
#include "cardsel/error.hpp"
#include "cardsel/stats.hpp"

namespace cardsel {

struct DependenceReport {
  std::size_t n = 0;
  double median_offdiag_rho = 0.0;
  std::map<double, double> share_above;  ///< threshold -> fraction of rho_ij > threshold
  double share_negative = 0.0;
  double eig_share_top1 = 0.0;
  double eig_share_top5 = 0.0;
  double min_eig = 0.0;
  double condition_proxy = 0.0;        ///< lambda_max / smallest positive lambda
  double positive_eig_tolerance = 0.0;  ///< lambdas at or below this count as zero
  double trace = 0.0;
  std::vector<double> eigenvalues;  ///< descending
};

/// Off-diagonal correlation statistics and the eigen-spectrum of the
/// materialized covariance. An eigenvalue is treated as positive when it
/// exceeds 1e-12 * lambda_max.
inline DependenceReport dependence_report(const FactorCovariance& fc, std::span<const double> thresholds = {}) {
  if (fc.size() < 2) fail(ErrorKind::InvalidInput, "dependence_report needs at least 2 assets");
  const Eigen::MatrixXd sigma = materialize_dense(fc);
  const Eigen::MatrixXd rho = correlation_from_covariance(sigma);
  const auto n = static_cast<std::size_t>(sigma.rows());

  std::vector<double> offdiag;
  offdiag.reserve(n * (n - 1) / 2);
  for (Eigen::Index i = 0; i < sigma.rows(); ++i)
    for (Eigen::Index j = i + 1; j < sigma.cols(); ++j) offdiag.push_back(rho(i, j));
  std::sort(offdiag.begin(), offdiag.end());
  const double pairs = static_cast<double>(offdiag.size());

  DependenceReport r;
  r.n = n;
  r.median_offdiag_rho = quantile_sorted(offdiag, 0.5);
  static constexpr double kDefaultThresholds[] = {0.5};
  if (thresholds.empty()) thresholds = kDefaultThresholds;
  for (double t : thresholds) {
    const auto above = static_cast<double>(offdiag.end() - std::upper_bound(offdiag.begin(), offdiag.end(), t));
    r.share_above[t] = above / pairs;
  }
  r.share_negative =
      static_cast<double>(std::lower_bound(offdiag.begin(), offdiag.end(), 0.0) - offdiag.begin()) / pairs;

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) fail(ErrorKind::Internal, "eigen-decomposition failed");
  r.eigenvalues.assign(es.eigenvalues().data(), es.eigenvalues().data() + es.eigenvalues().size());
  std::sort(r.eigenvalues.begin(), r.eigenvalues.end(), std::greater<>());
  r.trace = sigma.trace();
  const double eig_sum = std::accumulate(r.eigenvalues.begin(), r.eigenvalues.end(), 0.0);
  if (std::abs(eig_sum - r.trace) > 1e-8 * std::abs(r.trace))
    fail(ErrorKind::Internal, "trace identity violated: sum(lambda) = " + format_double(eig_sum) +
                                  ", trace = " + format_double(r.trace));
  r.eig_share_top1 = r.eigenvalues.front() / r.trace;
  double top5 = 0.0;
  for (std::size_t k = 0; k < std::min<std::size_t>(5, n); ++k) top5 += r.eigenvalues[k];
  r.eig_share_top5 = top5 / r.trace;
  r.min_eig = r.eigenvalues.back();
  r.positive_eig_tolerance = 1e-12 * r.eigenvalues.front();
  double smallest_positive = std::numeric_limits<double>::infinity();
  for (double l : r.eigenvalues)
    if (l > r.positive_eig_tolerance) smallest_positive = std::min(smallest_positive, l);
  r.condition_proxy = r.eigenvalues.front() / smallest_positive;
  return r;
}

/// |A n B| / |A u B| over index sets (duplicates ignored).
inline double jaccard_overlap(std::span<const std::size_t> a, std::span<const std::size_t> b) {
  if (a.empty() || b.empty()) fail(ErrorKind::InvalidInput, "jaccard_overlap requires nonempty sets");
  const std::set<std::size_t> sa(a.begin(), a.end()), sb(b.begin(), b.end());
  std::size_t inter = 0;
  for (auto x : sa) inter += sb.count(x);
  const std::size_t uni = sa.size() + sb.size() - inter;
  return static_cast<double>(inter) / static_cast<double>(uni);
}

struct Merge {
  std::size_t left_min;   ///< smallest asset index in the left cluster
  std::size_t right_min;  ///< smallest asset index in the right cluster
  double distance;
  std::size_t size;
};

struct ClusterOrder {
  std::vector<std::size_t> order;  ///< asset indices, dendrogram leaf order
  std::vector<Merge> merges;
  std::string linkage = "average";
  std::string distance = "1 - rho";
};

/**
 * Agglomerative clustering on d_ij = 1 - rho_ij with average linkage
 * (Lance-Williams update). At each step the closest pair merges; ties within
 * 1e-12 go to the pair whose smallest member indices are lexicographically
 * smallest, and the cluster holding the smaller index is placed on the left.
 * Identity rho therefore returns the input order.
 */
inline ClusterOrder cluster_order(const Eigen::MatrixXd& rho, std::optional<std::vector<std::size_t>> subset = std::nullopt) {
  std::vector<std::size_t> items;
  if (subset) {
    items = *subset;
    std::sort(items.begin(), items.end());
    if (std::adjacent_find(items.begin(), items.end()) != items.end())
      fail(ErrorKind::InvalidInput, "cluster_order: subset has duplicates");
  } else {
    items.resize(static_cast<std::size_t>(rho.rows()));
    std::iota(items.begin(), items.end(), std::size_t{0});
  }
  for (auto i : items)
    if (i >= static_cast<std::size_t>(rho.rows())) fail(ErrorKind::InvalidInput, "cluster_order: index out of range");

  ClusterOrder out;
  const std::size_t m = items.size();
  if (m == 0) return out;

  struct Cluster {
    std::vector<std::size_t> leaves;
    std::size_t min_index;
    bool active = true;
  };
  std::vector<Cluster> clusters;
  clusters.reserve(m);
  for (auto i : items) clusters.push_back({{i}, i, true});
  std::vector<std::vector<double>> d(m, std::vector<double>(m, 0.0));
  for (std::size_t a = 0; a < m; ++a)
    for (std::size_t b = 0; b < m; ++b)
      d[a][b] = 1.0 - rho(static_cast<Eigen::Index>(items[a]), static_cast<Eigen::Index>(items[b]));

  for (std::size_t step = 1; step < m; ++step) {
    std::size_t best_a = m, best_b = m;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < m; ++a) {
      if (!clusters[a].active) continue;
      for (std::size_t b = a + 1; b < m; ++b) {
        if (!clusters[b].active) continue;
        const double dist = d[a][b];
        bool take = dist < best - 1e-12;
        if (!take && std::abs(dist - best) <= 1e-12) {
          auto key = [&](std::size_t x, std::size_t y) {
            const auto p = clusters[x].min_index, q = clusters[y].min_index;
            return std::pair{std::min(p, q), std::max(p, q)};
          };
          take = key(a, b) < key(best_a, best_b);
        }
        if (take) {
          best = dist;
          best_a = a;
          best_b = b;
        }
      }
    }
    if (clusters[best_b].min_index < clusters[best_a].min_index) std::swap(best_a, best_b);
    auto& left = clusters[best_a];
    auto& right = clusters[best_b];
    const double na = static_cast<double>(left.leaves.size());
    const double nb = static_cast<double>(right.leaves.size());
    out.merges.push_back({left.min_index, right.min_index, best, left.leaves.size() + right.leaves.size()});
    for (std::size_t c = 0; c < m; ++c) {
      if (!clusters[c].active || c == best_a || c == best_b) continue;
      const double nd = (na * d[best_a][c] + nb * d[best_b][c]) / (na + nb);
      d[best_a][c] = d[c][best_a] = nd;
    }
    left.leaves.insert(left.leaves.end(), right.leaves.begin(), right.leaves.end());
    left.min_index = std::min(left.min_index, right.min_index);
    right.active = false;
    right.leaves.clear();
  }
  for (const auto& c : clusters)
    if (c.active) out.order = c.leaves;
  return out;
}

/// Indices of the `count` assets with the most firms (ties: input order).
inline std::vector<std::size_t> top_by_firms(const Universe& universe, std::size_t count) {
  std::vector<std::size_t> idx(universe.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  std::stable_sort(idx.begin(), idx.end(),
                   [&](std::size_t a, std::size_t b) { return universe.asset(a).firms > universe.asset(b).firms; });
  idx.resize(std::min(count, idx.size()));
  std::sort(idx.begin(), idx.end());
  return idx;
}

}  // namespace cardsel
