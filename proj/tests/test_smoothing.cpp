#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "fladle/error.hpp"
#include "fladle/simulation.hpp"
#include "fladle/smoothing.hpp"
#include "helpers.hpp"
#include "properties.hpp"

using namespace fladle;

namespace {

const EvaluationGrid kGrid = EvaluationGrid::uniform(51);

// GCV for the pooled mean smoother built from explicit weighted least squares
// rows, one per observation point.
double brute_gcv_mean(const FunctionalDataset& data, double h) {
  std::vector<double> t, y;
  for (const auto& s : data.subjects()) {
    t.insert(t.end(), s.times.begin(), s.times.end());
    y.insert(y.end(), s.values.begin(), s.values.end());
  }
  const std::size_t N = t.size();
  double rss = 0.0, trace = 0.0;
  for (std::size_t k = 0; k < N; ++k) {
    Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
    Eigen::Vector2d b = Eigen::Vector2d::Zero();
    std::vector<double> w(N);
    for (std::size_t l = 0; l < N; ++l) {
      w[l] = epanechnikov((t[l] - t[k]) / h);
      const Eigen::Vector2d x(1.0, t[l] - t[k]);
      A += w[l] * x * x.transpose();
      b += w[l] * y[l] * x;
    }
    const Eigen::Vector2d beta = A.ldlt().solve(b);
    const Eigen::Vector2d e0 = A.ldlt().solve(Eigen::Vector2d(1.0, 0.0));
    rss += (y[k] - beta[0]) * (y[k] - beta[0]);
    trace += w[k] * e0[0];  // hat weight of the point on itself
  }
  const double denom = 1.0 - trace / static_cast<double>(N);
  return rss / (denom * denom);
}

std::vector<RawCovPair> pairs_from_surface(std::size_t n, std::size_t m, std::uint64_t seed,
                                           const std::function<double(double, double)>& g) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<RawCovPair> out;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> t(m);
    for (auto& x : t) x = u(rng);
    for (std::size_t j = 0; j < m; ++j) {
      for (std::size_t l = 0; l < m; ++l) {
        if (j != l) out.push_back(RawCovPair{t[j], t[l], g(t[j], t[l]), i});
      }
    }
  }
  return out;
}

}  // namespace

TEST(MeanSmoother, ReproducesConstant) {
  const auto d = test::irregular_dataset(40, 8, 1, [](std::size_t, double) { return 5.0; });
  const auto est = local_linear_mean(d, 0.1, kGrid);
  for (Eigen::Index i = 0; i < est.values.size(); ++i) EXPECT_NEAR(est.values[i], 5.0, 1e-8);
}

TEST(MeanSmoother, ReproducesLineForEveryAdmissibleBandwidth) {
  const auto d = test::irregular_dataset(40, 8, 2, [](std::size_t, double t) { return 2.0 * t + 1.0; });
  for (double h : candidate_bandwidths(d)) {
    const auto est = local_linear_mean(d, h, kGrid);
    for (std::size_t i = 0; i < kGrid.size(); ++i) EXPECT_NEAR(est.values[i], 2.0 * kGrid[i] + 1.0, 1e-8);
  }
}

TEST(MeanSmoother, DegenerateWindowNamesGridPoint) {
  SubjectRecord s{"a", {0.0, 0.02, 0.04}, {1, 2, 3}};
  const FunctionalDataset d({s});
  try {
    local_linear_mean(d, 0.05, kGrid);
    FAIL() << "expected an error";
  } catch (const BandwidthTooSmallError& e) {
    EXPECT_NE(std::string(e.what()).find("t="), std::string::npos);
  }
}

TEST(MeanSmoother, SimulatedMeanWithinCltBound) {
  // The scores alone move the pooled mean by sd sqrt(Var X(t) / n), about 0.27
  // here, so the error is measured in those units.
  const auto cfg = test::simple_config(200, 26, 0.1, TimeDesign::IrregularUniform, 5);
  const auto lambda = simple_eigenvalues();
  int good = 0;
  const int reps = 20;
  for (int r = 0; r < reps; ++r) {
    const auto g = generate(cfg, static_cast<std::uint64_t>(r));
    const double h = gcv_bandwidth_mean(g.data, candidate_bandwidths(g.data), kGrid);
    const auto est = local_linear_mean(g.data, h, kGrid);
    bool ok = true;
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      const double t = kGrid[i];
      const double sd = std::sqrt((test::fourier_cov(lambda, t, t) + cfg.sigma2_eps) / 200.0);
      ok = ok && std::abs(est.values[static_cast<Eigen::Index>(i)] - paper_mean(t)) <= 4.0 * sd;
    }
    if (ok) ++good;
  }
  EXPECT_GE(good, 19);
}

TEST(MeanGcv, MatchesBruteForceFormula) {
  const auto d = test::irregular_dataset(15, 6, 7, [](std::size_t i, double t) {
    return std::sin(6 * t) + 0.3 * std::cos(17.0 * t + static_cast<double>(i));
  });
  const auto cands = candidate_bandwidths(d);
  std::vector<GcvPoint> trace;
  const double chosen = gcv_bandwidth_mean(d, cands, kGrid, &trace);
  double best = std::numeric_limits<double>::infinity(), best_h = 0.0;
  for (const auto& p : trace) {
    if (!p.admissible) continue;
    const double brute = brute_gcv_mean(d, p.bandwidth);
    EXPECT_NEAR(p.score, brute, 1e-9 * brute);
    if (brute < best) {
      best = brute;
      best_h = p.bandwidth;
    }
  }
  EXPECT_EQ(chosen, best_h);
}

TEST(MeanGcv, NoiselessLineMatchesBruteForceArgmin) {
  const auto d = test::irregular_dataset(20, 6, 8, [](std::size_t, double t) { return 3.0 * t - 1.0; });
  const auto cands = candidate_bandwidths(d);
  std::vector<GcvPoint> trace;
  const double chosen = gcv_bandwidth_mean(d, cands, kGrid, &trace);
  // every admissible candidate fits exactly, so all scores sit at round-off
  for (const auto& p : trace) {
    if (!p.admissible) continue;
    EXPECT_LT(p.score, 1e-12);
    EXPECT_LT(brute_gcv_mean(d, p.bandwidth), 1e-12);
  }
  EXPECT_TRUE(std::find(cands.begin(), cands.end(), chosen) != cands.end());
}

TEST(MeanGcv, SingletonCandidate) {
  const auto d = test::irregular_dataset(20, 6, 9, [](std::size_t, double t) { return t; });
  EXPECT_EQ(gcv_bandwidth_mean(d, {0.1}, kGrid), 0.1);
}

TEST(MeanGcv, AllInadmissibleThrows) {
  SubjectRecord s{"a", {0.0, 0.5, 1.0}, {1, 2, 3}};
  EXPECT_THROW(gcv_bandwidth_mean(FunctionalDataset({s}), {0.01, 0.02}, kGrid), BandwidthSelectionError);
}

TEST(MeanGcv, PureNoisePrefersLargestCandidate) {
  int largest = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    std::mt19937_64 rng(1000 + r);
    std::normal_distribution<double> z;
    const auto d = test::irregular_dataset(50, 10, 2000 + r, [&](std::size_t, double) { return z(rng); });
    const auto cands = candidate_bandwidths(d);
    if (gcv_bandwidth_mean(d, cands, kGrid) == cands.back()) ++largest;
  }
  // One extra degree of freedom beats its GCV penalty with probability near
  // P(chi2_1 > 2) = 0.16, so the largest candidate wins about 80% of the time.
  EXPECT_GE(largest, 35);
}

TEST(Candidates, LogSpacedFromGapToHalf) {
  const auto d = test::irregular_dataset(30, 10, 4, [](std::size_t, double t) { return t; });
  const auto c = candidate_bandwidths(d, 10);
  ASSERT_EQ(c.size(), 10u);
  EXPECT_NEAR(c.back(), 0.5, 1e-12);
  for (std::size_t k = 2; k < c.size(); ++k) EXPECT_NEAR(c[k] / c[k - 1], c[1] / c[0], 1e-9);
  std::vector<double> pooled;
  for (const auto& s : d.subjects()) pooled.insert(pooled.end(), s.times.begin(), s.times.end());
  std::sort(pooled.begin(), pooled.end());
  double gap = 0.0;
  for (std::size_t k = 1; k < pooled.size(); ++k) gap = std::max(gap, pooled[k] - pooled[k - 1]);
  EXPECT_NEAR(c.front(), 1.5 * gap, 1e-12);
}

TEST(RawPairs, CountsAndCentering) {
  const auto mean = MeanEstimate{kGrid, Eigen::VectorXd::Zero(51), 0.1};
  const FunctionalDataset one({SubjectRecord{"a", {0.2, 0.6}, {1.0, 2.0}}});
  EXPECT_EQ(raw_cov_pairs(one, mean).size(), 2u);
  const FunctionalDataset two(
      {SubjectRecord{"a", {0.1, 0.2, 0.3}, {1, 2, 3}}, SubjectRecord{"b", {0.4, 0.5, 0.6}, {1, 2, 3}}});
  EXPECT_EQ(raw_cov_pairs(two, mean).size(), 12u);
  const FunctionalDataset single({SubjectRecord{"a", {0.3}, {1.0}}});
  EXPECT_TRUE(raw_cov_pairs(single, mean).empty());

  // values equal to the grid mean at every observation time give zero raw covariances
  Eigen::VectorXd mu(51);
  for (Eigen::Index i = 0; i < 51; ++i) mu[i] = std::sin(3.0 * kGrid[static_cast<std::size_t>(i)]);
  const MeanEstimate sm{kGrid, mu, 0.1};
  const FunctionalDataset exact({SubjectRecord{"a", {0.1, 0.33, 0.7}, {sm.at(0.1), sm.at(0.33), sm.at(0.7)}}});
  for (const auto& p : raw_cov_pairs(exact, sm)) EXPECT_EQ(p.r, 0.0);
}

TEST(SurfaceSmoother, ReproducesConstantAndPlane) {
  const auto c = pairs_from_surface(60, 8, 3, [](double, double) { return 1.0; });
  const auto ec = local_linear_cov(c, 0.2, kGrid);
  EXPECT_LT((ec.matrix.array() - 1.0).abs().maxCoeff(), 1e-8);
  const auto p = pairs_from_surface(60, 8, 4, [](double s, double t) { return s + t; });
  for (double h : {0.15, 0.3}) {
    const auto ep = local_linear_cov(p, h, kGrid);
    for (std::size_t i = 0; i < kGrid.size(); ++i) {
      for (std::size_t j = 0; j < kGrid.size(); ++j) {
        ASSERT_NEAR(ep.matrix(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)), kGrid[i] + kGrid[j], 1e-8);
      }
    }
  }
}

TEST(SurfaceSmoother, ExactlySymmetric) {
  const auto p = pairs_from_surface(40, 6, 5, [](double s, double t) { return std::sin(5 * s) * t; });
  const auto e = local_linear_cov(p, 0.2, kGrid);
  EXPECT_TRUE((e.matrix.array() == e.matrix.transpose().array()).all());
}

TEST(SurfaceSmoother, DegenerateWindowNamesPoint) {
  const auto p = pairs_from_surface(2, 3, 6, [](double, double) { return 1.0; });
  try {
    local_linear_cov(p, 0.03, kGrid);
    FAIL() << "expected an error";
  } catch (const BandwidthTooSmallError& e) {
    EXPECT_NE(std::string(e.what()).find("("), std::string::npos);
  }
}

// The max-entry distance to the population covariance is dominated by the
// sampling error of the scores themselves (an estimator handed the true curves
// is off by 1.7 to 4.6 at these sizes), so the surface is compared with the
// covariance of the generated curves.
TEST(SurfaceSmoother, SimulatedCovarianceTracksCurveCovariance) {
  const auto cfg = test::simple_config(200, 26, 0.1, TimeDesign::IrregularUniform, 6);
  const double norm = test::true_cov(simple_eigenvalues(), kGrid).norm();
  int good = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    const auto g = generate(cfg, static_cast<std::uint64_t>(r));
    const auto cands = candidate_bandwidths(g.data);
    const auto mean = local_linear_mean(g.data, gcv_bandwidth_mean(g.data, cands, kGrid), kGrid);
    const auto pairs = raw_cov_pairs(g.data, mean);
    const auto cov = local_linear_cov(pairs, cv_bandwidth_cov(pairs, cands, kGrid), kGrid);
    const double rel = (cov.matrix - test::empirical_curve_cov(g.scores, kGrid)).norm() / norm;
    if (rel <= 0.2) ++good;
  }
  EXPECT_GE(good, 45) << good << " of " << reps;
}

TEST(SurfaceGcv, SingletonAndFixedRule) {
  const auto p = pairs_from_surface(40, 6, 7, [](double s, double t) { return s * t; });
  EXPECT_EQ(gcv_bandwidth_cov(p, {0.25}, kGrid), 0.25);
  EXPECT_EQ(cv_bandwidth_cov(p, {0.25}, kGrid), 0.25);
  EXPECT_NEAR(fixed_cov_bandwidth(200), std::pow(200.0, -0.2) / 6.0, 1e-15);
  // 200^(-1/5) / 6 = 0.05776
  EXPECT_NEAR(fixed_cov_bandwidth(200), 0.0578, 1e-4);
}

TEST(SurfaceGcv, BinnedScoreTracksExactScore) {
  // Binned and unbinned GCV should rank the candidates the same way.
  std::mt19937_64 rng(8);
  std::normal_distribution<double> z;
  auto p = pairs_from_surface(60, 8, 9, [](double s, double t) { return 4.0 * std::cos(2 * std::numbers::pi * (s - t)); });
  for (auto& q : p) q.r += z(rng);
  const std::vector<double> cands = {0.08, 0.12, 0.18, 0.27, 0.4};
  std::vector<GcvPoint> trace;
  const double binned_h = gcv_bandwidth_cov(p, cands, kGrid, &trace);
  double best = std::numeric_limits<double>::infinity(), exact_h = 0.0;
  for (std::size_t k = 0; k < cands.size(); ++k) {
    const double e = gcv_score_cov_exact(p, trace[k].bandwidth);
    EXPECT_NEAR(trace[k].score, e, 0.02 * e);
    if (e < best) {
      best = e;
      exact_h = trace[k].bandwidth;
    }
  }
  EXPECT_EQ(binned_h, exact_h);
}

TEST(SurfaceCv, ScoresFiniteAndFoldWise) {
  auto p = pairs_from_surface(50, 8, 10, [](double s, double t) { return s * t; });
  const auto sc = cv_scores_cov(p, {0.1, 0.2, 0.4}, kGrid, 5);
  ASSERT_EQ(sc.size(), 3u);
  for (double v : sc) EXPECT_TRUE(std::isfinite(v));
  EXPECT_THROW(cv_score_cov(p, 0.2, kGrid, 1), BandwidthSelectionError);
}

TEST(SurfaceSelection, BandwidthInvariantUnderScaling) {
  const auto cfg = test::simple_config(80, 10, 0.5, TimeDesign::IrregularUniform, 12);
  const auto g = generate(cfg, 0);
  for (double c : {0.1, 10.0}) {
    const auto scaled = g.data.scaled(c);
    const auto cands = candidate_bandwidths(g.data);
    const double hm = gcv_bandwidth_mean(g.data, cands, kGrid);
    EXPECT_EQ(gcv_bandwidth_mean(scaled, cands, kGrid), hm);
    const auto mean = local_linear_mean(g.data, hm, kGrid);
    const auto mean_c = local_linear_mean(scaled, hm, kGrid);
    EXPECT_LT((mean_c.values - c * mean.values).cwiseAbs().maxCoeff(), 1e-9 * c * mean.values.cwiseAbs().maxCoeff());
    const auto pairs = raw_cov_pairs(g.data, mean);
    const auto pairs_c = raw_cov_pairs(scaled, mean_c);
    EXPECT_EQ(gcv_bandwidth_cov(pairs_c, cands, kGrid), gcv_bandwidth_cov(pairs, cands, kGrid));
    EXPECT_EQ(cv_bandwidth_cov(pairs_c, cands, kGrid), cv_bandwidth_cov(pairs, cands, kGrid));
    const auto cov = local_linear_cov(pairs, 0.2, kGrid);
    const auto cov_c = local_linear_cov(pairs_c, 0.2, kGrid);
    EXPECT_LT((cov_c.matrix - c * c * cov.matrix).cwiseAbs().maxCoeff(),
              1e-9 * c * c * cov.matrix.cwiseAbs().maxCoeff());
  }
}

TEST(DenseRegular, SampleMean) {
  const auto two = test::regular_dataset(2, 11, [](std::size_t i, double) { return i == 0 ? 0.0 : 2.0; });
  const auto m2 = dense_regular_mean(two);
  EXPECT_TRUE((m2.values.array() == 1.0).all());
  const auto one = test::regular_dataset(1, 11, [](std::size_t, double t) { return t * t; });
  const auto m1 = dense_regular_mean(one);
  for (std::size_t j = 0; j < 11; ++j) EXPECT_EQ(m1.values[static_cast<Eigen::Index>(j)], one[0].values[j]);
}

TEST(DenseRegular, MismatchedDesignThrows) {
  const FunctionalDataset d({SubjectRecord{"a", {0.0, 0.5, 1.0}, {1, 2, 3}}, SubjectRecord{"b", {0.0, 0.6, 1.0}, {1, 2, 3}}});
  EXPECT_THROW(dense_regular_mean(d), DesignMismatchError);
  EXPECT_FALSE(is_dense_regular(d));
}

TEST(DenseRegular, MeanWithinCltBound) {
  const auto cfg = test::simple_config(100, 51, 0.5, TimeDesign::Regular, 13);
  const auto lambda = simple_eigenvalues();
  int good = 0;
  const int reps = 40;
  for (int r = 0; r < reps; ++r) {
    const auto g = generate(cfg, static_cast<std::uint64_t>(r));
    const auto m = dense_regular_mean(g.data);
    bool ok = true;
    for (std::size_t j = 0; j < m.grid.size(); ++j) {
      const double t = m.grid[j];
      const double sd = std::sqrt((test::fourier_cov(lambda, t, t) + cfg.sigma2_eps) / 100.0);
      ok = ok && std::abs(m.values[static_cast<Eigen::Index>(j)] - paper_mean(t)) <= 4.0 * sd;
    }
    if (ok) ++good;
  }
  EXPECT_GE(good, 38);
}

TEST(Rice, PureNoiseAndConstantCurves) {
  std::mt19937_64 rng(14);
  std::normal_distribution<double> z;
  const auto noise = test::regular_dataset(200, 51, [&](std::size_t, double) { return z(rng); });
  EXPECT_NEAR(rice_sigma2(noise), 1.0, 0.15);
  std::normal_distribution<double> level(0.0, 3.0);
  std::vector<double> levels(200);
  for (auto& l : levels) l = level(rng);
  const auto consts = test::regular_dataset(200, 51, [&](std::size_t i, double) { return levels[i] + 2.0 * z(rng); });
  EXPECT_NEAR(rice_sigma2(consts), 4.0, 0.5);
}

TEST(Rice, SmoothCurvesGiveNearZero) {
  const auto d = test::regular_dataset(30, 201, [](std::size_t i, double t) { return std::sin(3 * t + i); });
  const double delta = 1.0 / 200.0;
  EXPECT_LE(rice_sigma2(d), 9.0 * delta * delta / 2.0);
  EXPECT_GE(rice_sigma2(d), 0.0);
}

TEST(Rice, NeedsThreePoints) {
  const auto d = test::regular_dataset(5, 2, [](std::size_t, double t) { return t; });
  EXPECT_THROW(rice_sigma2(d), InsufficientDataError);
}

TEST(DenseRegularCov, TwoPointEmpiricalCovariance) {
  const std::size_t m = 21;
  auto phi = [](double t) { return std::sqrt(2.0) * std::sin(2 * std::numbers::pi * t); };
  const auto d = test::regular_dataset(2, m, [&](std::size_t i, double t) { return (i == 0 ? 1.0 : -1.0) * phi(t); });
  const auto mean = dense_regular_mean(d);
  const auto cov = dense_regular_cov(d, mean, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < m; ++k) {
      EXPECT_NEAR(cov.matrix(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)), phi(mean.grid[j]) * phi(mean.grid[k]),
                  1e-12);
    }
  }
}

TEST(DenseRegularCov, NoiseSubtractedOnDiagonalOnly) {
  std::mt19937_64 rng(15);
  std::normal_distribution<double> z;
  const auto d = test::regular_dataset(20, 11, [&](std::size_t, double) { return z(rng); });
  const auto mean = dense_regular_mean(d);
  const auto raw = dense_regular_cov(d, mean, 0.0);
  const auto adj = dense_regular_cov(d, mean, 0.7);
  const Eigen::MatrixXd diff = raw.matrix - adj.matrix;
  EXPECT_LT((diff - 0.7 * Eigen::MatrixXd::Identity(11, 11)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE((raw.matrix.array() == raw.matrix.transpose().array()).all());
}

TEST(DenseRegularCov, SimulatedCovarianceWithinCltBound) {
  const std::size_t n = 100;
  const auto cfg = test::simple_config(n, 51, 0.1, TimeDesign::Regular, 16);
  const auto grid = EvaluationGrid::uniform(51);
  const Eigen::MatrixXd G = test::true_cov(simple_eigenvalues(), grid);
  int within = 0, close = 0;
  const int reps = 50;
  for (int r = 0; r < reps; ++r) {
    const auto g = generate(cfg, static_cast<std::uint64_t>(r));
    const auto mean = dense_regular_mean(g.data);
    const auto cov = dense_regular_cov(g.data, mean, rice_sigma2(g.data));
    bool ok = true;
    for (Eigen::Index i = 0; i < G.rows(); ++i) {
      for (Eigen::Index j = 0; j < G.cols(); ++j) {
        // Gaussian sample-covariance sd of entry (i, j)
        const double sd = std::sqrt((G(i, i) * G(j, j) + G(i, j) * G(i, j)) / static_cast<double>(n));
        ok = ok && std::abs(cov.matrix(i, j) - G(i, j)) <= 4.0 * sd;
      }
    }
    if (ok) ++within;
    if ((cov.matrix - test::empirical_curve_cov(g.scores, grid)).norm() <= 0.1 * G.norm()) ++close;
  }
  EXPECT_GE(within, 45) << within << " of " << reps;
  EXPECT_GE(close, 45) << close << " of " << reps;
}

TEST(NoiseVariance, IrregularEstimateIsClampedAndPositive) {
  const auto d = test::irregular_dataset(50, 10, 17, [](std::size_t i, double t) { return std::sin(4 * t) * (1.0 + 0.1 * i); });
  const auto mean = local_linear_mean(d, 0.2, kGrid);
  const auto cov = local_linear_cov(raw_cov_pairs(d, mean), 0.2, kGrid);
  EXPECT_GE(irregular_sigma2(d, mean, cov), 1e-6);
}

TEST(LocalLinear, AffineReproductionProperty) {
  const std::string msg = test::check_affine_reproduction(20, 77);
  EXPECT_TRUE(msg.empty()) << msg;
}
