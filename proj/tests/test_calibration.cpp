#include <gtest/gtest.h>

#include <cmath>
#include <cstring>

#include "test_support.hpp"

using namespace cardsel;
using cardsel::testing::asset;
using cardsel::testing::reference_market;

namespace {

double round3(double x) { return std::round(x * 1000.0) / 1000.0; }

CsvTable table_of(std::string text) { return parse_csv(std::move(text)); }

}  // namespace

TEST(Ingest, CapmReturnsMatchIndustryRows) {
  const auto u = ingest_universe(table_of("id,name,firms,beta,sigma\n"
                                          "swi,Software (Internet),29,1.689,0.526\n"
                                          "rbs,Retail (Building Supply),14,1.535,0.459\n"
                                          "zb,Zero Beta,3,0,0.2\n"),
                                 reference_market(), Units::Decimal);
  EXPECT_DOUBLE_EQ(round3(u.mu(0)), 0.111);
  EXPECT_NEAR(u.mu(0), 0.1111, 5e-5);
  EXPECT_DOUBLE_EQ(round3(u.mu(1)), 0.105);
  EXPECT_NEAR(u.mu(1), 0.1046, 5e-5);
  EXPECT_DOUBLE_EQ(u.mu(2), 0.0397);
  for (std::size_t i = 0; i < u.size(); ++i)
    EXPECT_LT(std::abs(u.mu(i) - (0.0397 + u.asset(i).beta * 0.0423)), 1e-12);
}

TEST(Ingest, ColumnsMatchedByNameAndUnknownColumnsWarned) {
  const auto u = ingest_universe(table_of("sigma,beta,extra,id,firms,name\n0.3,1.1,x,a,5,Alpha\n"), reference_market(),
                                 Units::Decimal);
  EXPECT_EQ(u.asset(0).id, "a");
  EXPECT_EQ(u.asset(0).name, "Alpha");
  EXPECT_DOUBLE_EQ(u.asset(0).beta, 1.1);
  EXPECT_DOUBLE_EQ(u.asset(0).sigma, 0.3);
  const bool warned = std::any_of(u.audit().begin(), u.audit().end(), [](const AuditEntry& e) {
    return e.level == AuditEntry::Level::Warning && e.message.find("extra") != std::string::npos;
  });
  EXPECT_TRUE(warned);
}

TEST(Ingest, QuotedNamesWithCommas) {
  const auto u = ingest_universe(
      table_of("id,name,firms,beta,sigma\r\nfin,\"Financial Svcs. (Non-bank & Insurance), \"\"x\"\"\",10,0.97,0.3\r\n"),
      reference_market(), Units::Decimal);
  EXPECT_EQ(u.asset(0).name, "Financial Svcs. (Non-bank & Insurance), \"x\"");
}

TEST(Ingest, RejectsDuplicateIdsNamingTheId) {
  try {
    ingest_universe(table_of("id,name,firms,beta,sigma\na,A,1,1,0.2\na,B,1,1,0.3\n"), reference_market(), Units::Decimal);
    FAIL() << "expected rejection";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::InvalidInput);
    EXPECT_NE(std::string(e.what()).find("'a'"), std::string::npos);
  }
}

TEST(Ingest, RejectsNonpositiveSigmaAndEmptyTables) {
  EXPECT_THROW(ingest_universe(table_of("id,name,firms,beta,sigma\na,A,1,1,0\n"), reference_market(), Units::Decimal), Error);
  EXPECT_THROW(ingest_universe(table_of("id,name,firms,beta,sigma\na,A,1,1,-0.2\n"), reference_market(), Units::Decimal), Error);
  EXPECT_THROW(ingest_universe(table_of("id,name,firms,beta,sigma\n"), reference_market(), Units::Decimal), Error);
  EXPECT_THROW(ingest_universe(table_of("id,name,beta,sigma\na,A,1,0.2\n"), reference_market(), Units::Decimal), Error);
}

TEST(Ingest, PercentLookingValuesUnderDecimalFlagWarn) {
  const auto u = ingest_universe(table_of("id,name,firms,beta,sigma\na,A,1,1.2,52.6\n"), reference_market(), Units::Decimal);
  const bool warned = std::any_of(u.audit().begin(), u.audit().end(), [](const AuditEntry& e) {
    return e.level == AuditEntry::Level::Warning && e.message.find("percent") != std::string::npos;
  });
  EXPECT_TRUE(warned);
}

TEST(Ingest, PercentUnitsRoundTripBitForBit) {
  const auto pct = ingest_universe(table_of("id,name,firms,beta,sigma\n"
                                            "a,A,29,1.689,52.6\nb,B,14,1.535,45.9\nc,C,7,0.83,17.3\nd,D,1,1.1,33.33\n"),
                                   MarketParams{3.97, 4.23, 17.0}, Units::Percent);
  const auto dec = ingest_universe(table_of("id,name,firms,beta,sigma\n"
                                            "a,A,29,1.689,0.526\nb,B,14,1.535,0.459\nc,C,7,0.83,0.173\nd,D,1,1.1,0.3333\n"),
                                   MarketParams{0.0397, 0.0423, 0.17}, Units::Decimal);
  ASSERT_EQ(pct.size(), dec.size());
  for (std::size_t i = 0; i < pct.size(); ++i) {
    EXPECT_EQ(std::memcmp(&pct.asset(i).sigma, &dec.asset(i).sigma, sizeof(double)), 0) << i;
    EXPECT_EQ(std::memcmp(&pct.asset(i).beta, &dec.asset(i).beta, sizeof(double)), 0) << i;
    EXPECT_EQ(std::memcmp(&pct.mu()[i], &dec.mu()[i], sizeof(double)), 0) << i;
  }
  EXPECT_EQ(pct.market().rf, dec.market().rf);
  EXPECT_EQ(pct.market().erp, dec.market().erp);
  EXPECT_EQ(*pct.market().sigma_m, *dec.market().sigma_m);
  // Exported text is identical too.
  EXPECT_EQ(inputs_csv(pct), inputs_csv(dec));
  const bool audited = std::any_of(pct.audit().begin(), pct.audit().end(), [](const AuditEntry& e) {
    return e.message.find("percent -> decimal") != std::string::npos;
  });
  EXPECT_TRUE(audited);
}

TEST(FactorCovariance, TwoAssetHandComputation) {
  const Universe u({asset("a", 1, 0.3), asset("b", 1, 0.3)}, {0.0397, 0.0423, 0.2});
  const auto fc = build_factor_covariance(u);
  EXPECT_NEAR(fc.covariance(0, 1), 0.04, 1e-15);
  EXPECT_NEAR(fc.resid_var()[0], 0.05, 1e-15);
  EXPECT_NEAR(fc.resid_var()[1], 0.05, 1e-15);
  EXPECT_TRUE(fc.clip_events().empty());
  const auto sigma = materialize_dense(fc);
  EXPECT_NEAR(sigma(0, 0), 0.09, 1e-15);
  EXPECT_NEAR(sigma(0, 1), 0.04, 1e-15);
  EXPECT_NEAR(sigma(1, 0), 0.04, 1e-15);
  EXPECT_NEAR(sigma(1, 1), 0.09, 1e-15);
}

TEST(FactorCovariance, ZeroBetaDecouples) {
  const Universe u({asset("a", 0, 0.3), asset("b", 1.2, 0.4), asset("c", 0.7, 0.25)}, reference_market());
  const auto sigma = materialize_dense(build_factor_covariance(u));
  for (int j = 1; j < 3; ++j) {
    EXPECT_EQ(sigma(0, j), 0.0);
    EXPECT_EQ(sigma(j, 0), 0.0);
  }
}

TEST(FactorCovariance, ClipBranchIsLoggedNotFatal) {
  const Universe u({asset("hot", 1.2, 0.2), asset("ok", 0.5, 0.3)}, {0.0397, 0.0423, 0.2});
  const auto fc = build_factor_covariance(u);
  EXPECT_EQ(fc.resid_var()[0], 0.0);
  ASSERT_EQ(fc.clip_events().size(), 1u);
  EXPECT_EQ(fc.clip_events()[0].id, "hot");
  EXPECT_NEAR(fc.clip_events()[0].deficit, 0.0576 - 0.04, 1e-15);
  // Diagonal falls back to the systematic part.
  EXPECT_NEAR(materialize_dense(fc)(0, 0), 1.2 * 1.2 * 0.04, 1e-15);
}

TEST(FactorCovariance, RefusesToBuildWithoutSigmaM) {
  const Universe u({asset("a", 1, 0.3)}, reference_market(std::nullopt));
  try {
    build_factor_covariance(u);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("sigma_m required"), std::string::npos);
  }
}

TEST(Materialize, SingleAssetAndSymmetry) {
  const FactorCovariance one({1.0}, 0.04, {0.05});
  const auto s1 = materialize_dense(one);
  ASSERT_EQ(s1.rows(), 1);
  EXPECT_NEAR(s1(0, 0), 0.09, 1e-15);

  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const auto fc = build_factor_covariance(cardsel::testing::random_universe(40, seed));
    const auto s = materialize_dense(fc);
    EXPECT_EQ((s - s.transpose()).cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Correlation, TwoAssetAndDiagonalCases) {
  Eigen::MatrixXd s(2, 2);
  s << 0.09, 0.04, 0.04, 0.09;
  const auto rho = correlation_from_covariance(s);
  EXPECT_NEAR(rho(0, 1), 0.04 / 0.09, 1e-15);
  EXPECT_NEAR(rho(0, 1), 0.4444, 1e-4);
  EXPECT_EQ(rho(0, 0), 1.0);

  Eigen::MatrixXd d = Eigen::Vector3d(0.1, 0.2, 0.3).asDiagonal();
  EXPECT_TRUE(correlation_from_covariance(d).isIdentity(0.0));
}

TEST(Correlation, RankOneLimitGivesSignOfBetaProduct) {
  const FactorCovariance fc({0.8, -1.1, 1.5}, 0.03, {0.0, 0.0, 0.0});
  const auto rho = correlation_from_covariance(materialize_dense(fc));
  EXPECT_NEAR(rho(0, 1), -1.0, 1e-12);
  EXPECT_NEAR(rho(0, 2), 1.0, 1e-12);
  EXPECT_NEAR(rho(1, 2), -1.0, 1e-12);
}

TEST(Correlation, ZeroDiagonalRejectedNamingAsset) {
  Eigen::MatrixXd s = Eigen::MatrixXd::Zero(2, 2);
  s(0, 0) = 0.1;
  const std::vector<std::string> ids{"a", "ghost"};
  try {
    correlation_from_covariance(s, ids);
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("ghost"), std::string::npos);
  }
}

TEST(PsdGate, IdentityPassesUntouched) {
  const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(4, 4);
  const auto r = psd_gate(id);
  EXPECT_NEAR(r.min_eig_before, 1.0, 1e-14);
  EXPECT_EQ(r.jitter, 0.0);
  EXPECT_EQ(std::memcmp(r.matrix.data(), id.data(), sizeof(double) * 16), 0);
}

TEST(PsdGate, RankOneFactorMatrixNeedsNoJitter) {
  const FactorCovariance fc({0.9, 1.3, 0.4}, 0.04, {0.0, 0.0, 0.0});
  const auto r = psd_gate(materialize_dense(fc));
  EXPECT_GE(r.min_eig_before, -1e-12);
  EXPECT_EQ(r.jitter, 0.0);
}

TEST(PsdGate, SmallNegativeEigenvalueGetsDocumentedJitter) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 1.0 + 1e-8, 1.0 + 1e-8, 1.0;  // eigenvalues 2+1e-8 and -1e-8
  const auto r = psd_gate(m);
  EXPECT_LT(r.min_eig_before, -1e-10);
  EXPECT_GT(r.jitter, 0.0);
  EXPECT_GE(r.min_eig_after, -1e-10);

  const auto fixed = psd_gate(m, EpsilonPolicy::fixed(1e-7));
  EXPECT_EQ(fixed.jitter, 1e-7);
  EXPECT_GE(fixed.min_eig_after, 0.0);
}

TEST(PsdGate, LargeNegativeEigenvalueIsAHardFailure) {
  Eigen::MatrixXd m(2, 2);
  m << 1.0, 2.0, 2.0, 1.0;
  EXPECT_THROW(psd_gate(m), Error);
}

TEST(Calibration, RandomUniversesSatisfyInvariants) {
  // Diagonal match, rho bounds and PSD-by-structure over many instances,
  // including clipped assets (high beta, low sigma).
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    SyntheticSpec spec;
    spec.n = 5 + seed % 60;
    spec.seed = seed;
    spec.sigma_lo = 0.05;  // forces some clip events
    const auto u = synthetic_universe(spec);
    const auto fc = build_factor_covariance(u);
    const auto s = materialize_dense(fc);
    for (std::size_t i = 0; i < u.size(); ++i) {
      const double total = u.asset(i).sigma * u.asset(i).sigma;
      const double sys = u.asset(i).beta * u.asset(i).beta * fc.var_m();
      const auto ii = static_cast<Eigen::Index>(i);
      if (total >= sys) EXPECT_NEAR(s(ii, ii), total, 1e-12);
      else EXPECT_EQ(s(ii, ii), sys);
    }
    const auto rho = correlation_from_covariance(s);
    for (Eigen::Index i = 0; i < rho.rows(); ++i) {
      EXPECT_EQ(rho(i, i), 1.0);
      for (Eigen::Index j = 0; j < rho.cols(); ++j) EXPECT_LE(std::abs(rho(i, j)), 1.0 + 1e-12);
    }
    EXPECT_GE(min_eigenvalue(s), -1e-10);
  }
}

TEST(Calibration, RestrictToSubsetCopiesFactorEntries) {
  const auto u = cardsel::testing::random_universe(10, 4);
  const auto fc = build_factor_covariance(u);
  const std::vector<std::size_t> pick{7, 2, 5};
  const auto sub = restrict_to(u, fc, pick);
  ASSERT_EQ(sub.universe.size(), 3u);
  for (std::size_t k = 0; k < pick.size(); ++k) {
    EXPECT_EQ(sub.universe.asset(k).id, u.asset(pick[k]).id);
    EXPECT_EQ(sub.fc.beta()[k], fc.beta()[pick[k]]);
    EXPECT_EQ(sub.fc.resid_var()[k], fc.resid_var()[pick[k]]);
    EXPECT_EQ(sub.universe.mu(k), u.mu(pick[k]));
  }
}
