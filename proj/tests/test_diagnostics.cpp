#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

#include "test_support.hpp"

using namespace cardsel;
using cardsel::testing::random_universe;

TEST(Dependence, DiagonalCovariance) {
  // Zero betas leave only residual variance.
  const FactorCovariance fc({0.0, 0.0, 0.0, 0.0}, 0.0289, {0.04, 0.01, 0.09, 0.16});
  const auto r = dependence_report(fc);
  EXPECT_EQ(r.median_offdiag_rho, 0.0);
  EXPECT_EQ(r.share_negative, 0.0);
  EXPECT_EQ(r.share_above.at(0.5), 0.0);
  EXPECT_NEAR(r.eig_share_top1, 0.16 / 0.30, 1e-12);
  EXPECT_NEAR(r.eig_share_top5, 1.0, 1e-12);
  EXPECT_NEAR(r.condition_proxy, 16.0, 1e-9);
  EXPECT_NEAR(r.min_eig, 0.01, 1e-12);
}

TEST(Dependence, RankOneLimit) {
  const FactorCovariance fc({0.8, 1.2, 1.5, 0.4}, 0.0289, {0.0, 0.0, 0.0, 0.0});
  const auto r = dependence_report(fc);
  EXPECT_NEAR(r.median_offdiag_rho, 1.0, 1e-12);
  EXPECT_NEAR(r.eig_share_top1, 1.0, 1e-12);
  EXPECT_NEAR(r.min_eig, 0.0, 1e-12);
  // Only one eigenvalue clears the positive threshold.
  EXPECT_NEAR(r.condition_proxy, 1.0, 1e-12);
}

TEST(Dependence, SharesAndTraceIdentityOnRandomUniverses) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    const auto fc = build_factor_covariance(random_universe(10 + seed * 3, seed));
    const std::vector<double> thresholds{0.3, 0.5, 0.7};
    const auto r = dependence_report(fc, thresholds);
    const auto rho = correlation_from_covariance(materialize_dense(fc));
    std::size_t above = 0, pairs = 0;
    std::vector<double> off;
    for (Eigen::Index i = 0; i < rho.rows(); ++i)
      for (Eigen::Index j = i + 1; j < rho.cols(); ++j) {
        ++pairs;
        above += rho(i, j) > 0.5;
        off.push_back(rho(i, j));
      }
    EXPECT_DOUBLE_EQ(r.share_above.at(0.5), static_cast<double>(above) / static_cast<double>(pairs));
    EXPECT_NEAR(r.share_above.at(0.5) + static_cast<double>(pairs - above) / static_cast<double>(pairs), 1.0, 1e-15);
    EXPECT_GE(r.share_above.at(0.3), r.share_above.at(0.5));
    EXPECT_GE(r.share_above.at(0.5), r.share_above.at(0.7));
    EXPECT_DOUBLE_EQ(r.median_offdiag_rho, quantile(off, 0.5));
    EXPECT_LE(r.eig_share_top1, r.eig_share_top5);
    EXPECT_LE(r.eig_share_top5, 1.0 + 1e-12);
    const double sum = std::accumulate(r.eigenvalues.begin(), r.eigenvalues.end(), 0.0);
    EXPECT_NEAR(sum, r.trace, 1e-8 * r.trace);
    EXPECT_TRUE(std::is_sorted(r.eigenvalues.rbegin(), r.eigenvalues.rend()));
    EXPECT_GE(r.min_eig, -1e-10);
    const auto again = dependence_report(fc, thresholds);
    EXPECT_EQ(again.eigenvalues, r.eigenvalues);
    EXPECT_EQ(again.median_offdiag_rho, r.median_offdiag_rho);
  }
}

TEST(Dependence, NeedsTwoAssets) {
  const FactorCovariance fc({1.0}, 0.04, {0.05});
  EXPECT_THROW(dependence_report(fc), Error);
}

TEST(Jaccard, SetArithmetic) {
  const std::vector<std::size_t> a{1, 2, 3, 4}, b{3, 4, 5, 6}, c{7, 8};
  EXPECT_EQ(jaccard_overlap(a, a), 1.0);
  EXPECT_EQ(jaccard_overlap(a, c), 0.0);
  EXPECT_NEAR(jaccard_overlap(a, b), 2.0 / 6.0, 1e-15);
  EXPECT_EQ(jaccard_overlap(a, b), jaccard_overlap(b, a));
  const std::vector<std::size_t> empty;
  EXPECT_THROW(jaccard_overlap(a, empty), Error);
}

TEST(Cluster, IdentityKeepsInputOrder) {
  const auto order = cluster_order(Eigen::MatrixXd::Identity(6, 6));
  EXPECT_EQ(order.order, (std::vector<std::size_t>{0, 1, 2, 3, 4, 5}));
  EXPECT_EQ(order.merges.size(), 5u);
  EXPECT_EQ(order.linkage, "average");
}

TEST(Cluster, PerfectlyCorrelatedPairEndsUpAdjacent) {
  Eigen::MatrixXd rho = Eigen::MatrixXd::Identity(4, 4);
  rho(0, 3) = rho(3, 0) = 1.0;
  const auto c = cluster_order(rho);
  const auto pos0 = std::find(c.order.begin(), c.order.end(), 0u) - c.order.begin();
  const auto pos3 = std::find(c.order.begin(), c.order.end(), 3u) - c.order.begin();
  EXPECT_EQ(std::abs(pos0 - pos3), 1);
  EXPECT_EQ(c.merges[0].left_min, 0u);
  EXPECT_EQ(c.merges[0].right_min, 3u);
  EXPECT_NEAR(c.merges[0].distance, 0.0, 1e-15);
}

TEST(Cluster, AverageLinkageDistancesMatchBruteForce) {
  // Merge heights under average linkage equal the mean pairwise distance
  // between the two merged leaf sets.
  const auto u = random_universe(12, 44);
  const auto rho = correlation_from_covariance(materialize_dense(build_factor_covariance(u)));
  const auto c = cluster_order(rho);
  std::vector<std::set<std::size_t>> groups;
  for (std::size_t i = 0; i < 12; ++i) groups.push_back({i});
  for (const auto& m : c.merges) {
    auto find = [&](std::size_t idx) {
      return std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return *g.begin() == idx; });
    };
    auto a = find(m.left_min), b = find(m.right_min);
    ASSERT_NE(a, groups.end());
    ASSERT_NE(b, groups.end());
    double total = 0.0;
    for (auto i : *a)
      for (auto j : *b) total += 1.0 - rho(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    EXPECT_NEAR(m.distance, total / static_cast<double>(a->size() * b->size()), 1e-12);
    std::set<std::size_t> merged = *a;
    merged.insert(b->begin(), b->end());
    EXPECT_EQ(m.size, merged.size());
    const auto ia = a - groups.begin(), ib = b - groups.begin();
    groups.erase(groups.begin() + std::max(ia, ib));
    groups.erase(groups.begin() + std::min(ia, ib));
    groups.push_back(merged);
  }
}

TEST(Cluster, SubsetOrderIsAPermutation) {
  const auto u = random_universe(30, 2);
  const auto rho = correlation_from_covariance(materialize_dense(build_factor_covariance(u)));
  const auto top = top_by_firms(u, 25);
  ASSERT_EQ(top.size(), 25u);
  const auto c = cluster_order(rho, top);
  std::vector<std::size_t> sorted = c.order;
  std::sort(sorted.begin(), sorted.end());
  EXPECT_EQ(sorted, top);
  EXPECT_EQ(cluster_order(rho, top).order, c.order);
  EXPECT_THROW(cluster_order(rho, std::vector<std::size_t>{1, 1}), Error);
  EXPECT_THROW(cluster_order(rho, std::vector<std::size_t>{99}), Error);
}

TEST(TopByFirms, PicksLargestAndBreaksTiesByInputOrder) {
  using cardsel::testing::asset;
  const Universe u({asset("a", 1, 0.3, 5), asset("b", 1, 0.3, 50), asset("c", 1, 0.3, 5), asset("d", 1, 0.3, 20)},
                   cardsel::testing::reference_market());
  EXPECT_EQ(top_by_firms(u, 2), (std::vector<std::size_t>{1, 3}));
  EXPECT_EQ(top_by_firms(u, 3), (std::vector<std::size_t>{0, 1, 3}));
  EXPECT_EQ(top_by_firms(u, 10).size(), 4u);
}
