#include <cmath>
#include <random>

#include <Eigen/Eigenvalues>
#include <gtest/gtest.h>

#include "erp/error.hpp"
#include "erp/regress.hpp"

using namespace erp;

namespace {

Matrix gaussian(Eigen::Index rows, Eigen::Index cols, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix m(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = z(rng);
  return m;
}

Vector gaussian(Eigen::Index n, std::uint64_t seed) { return gaussian(n, 1, seed).col(0); }

Matrix add_intercept(const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

// Correlation matrix built with explicit loops.
Matrix correlation(const Matrix& x) {
  const auto n = x.rows();
  const auto p = x.cols();
  Matrix c(p, p);
  std::vector<double> mu(p), sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) s += x(i, j);
    mu[j] = s / n;
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (x(i, j) - mu[j]) * (x(i, j) - mu[j]);
    sd[j] = std::sqrt(ss / (n - 1));
  }
  for (Eigen::Index a = 0; a < p; ++a)
    for (Eigen::Index b = 0; b < p; ++b) {
      double s = 0.0;
      for (Eigen::Index i = 0; i < n; ++i) s += (x(i, a) - mu[a]) * (x(i, b) - mu[b]);
      c(a, b) = s / (n - 1) / (sd[a] * sd[b]);
    }
  return c;
}

}  // namespace

TEST(Ols, ExactLine) {
  Matrix x(10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    y[i] = 2.0 * i + 1.0;
  }
  const auto fit = ols_fit(y, x);
  EXPECT_NEAR(fit.coefficients[0], 1.0, 1e-12);
  EXPECT_NEAR(fit.coefficients[1], 2.0, 1e-12);
  EXPECT_NEAR(fit.r2, 1.0, 1e-12);
}

TEST(Ols, OrthogonalRegressorHasZeroSlope) {
  Matrix x(4, 1);
  x << 1, -1, 1, -1;
  Vector y(4);
  y << 1, 1, -1, -1;
  EXPECT_NEAR(ols_fit(y, x).coefficients[1], 0.0, 1e-14);
}

TEST(Ols, MatchesNormalEquations) {
  const Matrix x = gaussian(50, 3, 10);
  const Vector y = gaussian(50, 11) + 0.5 * x.col(1);
  const Matrix d = add_intercept(x);
  const Vector beta = (d.transpose() * d).ldlt().solve(d.transpose() * y);
  const auto fit = ols_fit(y, x);
  for (Eigen::Index i = 0; i < beta.size(); ++i) EXPECT_NEAR(fit.coefficients[i], beta[i], 1e-10);
  const Vector orth = d.transpose() * fit.residuals;
  EXPECT_LE(orth.cwiseAbs().maxCoeff(), 1e-8 * y.norm());
  EXPECT_LE((y - fit.fitted - fit.residuals).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LE(fit.r2, 1.0);
  EXPECT_LT(fit.adjusted_r2, fit.r2);
}

TEST(Ols, RankDeficiencyNamesColumns) {
  Matrix x = gaussian(30, 3, 2);
  x.col(2) = 2.0 * x.col(0) - x.col(1);
  try {
    ols_fit(gaussian(30, 3), x, {"a", "b", "c"});
    FAIL() << "expected a rank error";
  } catch (const EstimationError& e) {
    const std::string what = e.what();
    EXPECT_TRUE(what.find("a") != std::string::npos || what.find("b") != std::string::npos ||
                what.find("c") != std::string::npos)
        << what;
  }
  Matrix constant = Matrix::Constant(30, 1, 4.0);
  EXPECT_THROW(ols_fit(gaussian(30, 4), constant, {"k"}), EstimationError);
}

TEST(Ols, PreconditionsEnforced) {
  EXPECT_THROW(ols_fit(gaussian(3, 1), gaussian(3, 2, 1)), InsufficientDataError);
  Matrix x = gaussian(20, 1, 1);
  x(3, 0) = kMissing;
  EXPECT_THROW(ols_fit(gaussian(20, 2), x), EstimationError);
}

TEST(Hac, DefaultLag) {
  EXPECT_EQ(newey_west_default_lag(100), 4);
  EXPECT_EQ(newey_west_default_lag(828), 6);
  EXPECT_EQ(newey_west_default_lag(50), 3);
}

TEST(Hac, LagZeroIsWhite) {
  const Matrix x = gaussian(80, 2, 3);
  const Vector y = gaussian(80, 4) + x.col(0);
  const auto fit = ols_fit(y, x);
  const Matrix d = add_intercept(x);
  const Matrix bread = (d.transpose() * d).inverse();
  Matrix meat = Matrix::Zero(3, 3);
  for (Eigen::Index i = 0; i < d.rows(); ++i)
    meat += fit.residuals[i] * fit.residuals[i] * d.row(i).transpose() * d.row(i);
  const Matrix white = bread * meat * bread;
  const Vector t = hac_tstats(fit, 0);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(t[i], fit.coefficients[i] / std::sqrt(white(i, i)), 1e-10);
}

TEST(Hac, BartlettWeightsMatchDirectSum) {
  const Matrix x = gaussian(60, 1, 5);
  const Vector y = gaussian(60, 6);
  const auto fit = ols_fit(y, x);
  const Matrix d = add_intercept(x);
  const int lag = 3;
  Matrix s = Matrix::Zero(2, 2);
  for (int l = -lag; l <= lag; ++l) {
    const double w = 1.0 - std::abs(l) / (lag + 1.0);
    for (Eigen::Index t = 0; t < d.rows(); ++t) {
      const Eigen::Index u = t - l;
      if (u < 0 || u >= d.rows()) continue;
      s += w * fit.residuals[t] * fit.residuals[u] * d.row(t).transpose() * d.row(u);
    }
  }
  const Matrix bread = (d.transpose() * d).inverse();
  const Matrix want = bread * s * bread;
  const Matrix got = hac_covariance(d, fit.residuals, lag);
  EXPECT_LE((want - got).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Hac, ErrorsOnDegenerateInputs) {
  Matrix x(10, 1);
  Vector y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i;
    y[i] = 3.0 - i;
  }
  const auto fit = ols_fit(y, x);
  EXPECT_THROW(hac_tstats(fit), EstimationError);
  const auto noisy = ols_fit(gaussian(10, 1), x);
  EXPECT_THROW(hac_tstats(noisy, 10), SizeError);
}

TEST(Hac, NullRejectionRateNearNominal) {
  int rejections = 0;
  const int reps = 1000;
  for (int r = 0; r < reps; ++r) {
    const Matrix x = gaussian(250, 1, 1000 + r);
    const Vector y = gaussian(250, 5000 + r);
    if (std::abs(ols_fit(y, x).hac_tstats[1]) > 1.96) ++rejections;
  }
  const double rate = static_cast<double>(rejections) / reps;
  EXPECT_GE(rate, 0.03);
  EXPECT_LE(rate, 0.07);
}

TEST(Ols, TStatisticsInvariantToRegressorScale) {
  const Matrix x = gaussian(90, 2, 12);
  const Vector y = gaussian(90, 13) + 0.3 * x.col(1);
  Matrix scaled = x;
  scaled.col(1) *= 17.0;
  const auto a = ols_fit(y, x);
  const auto b = ols_fit(y, scaled);
  for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(a.hac_tstats[i], b.hac_tstats[i], 1e-9);
}

TEST(Bootstrap, ExtremeStatisticGivesTinyP) {
  const Vector x = gaussian(100, 7);
  const Vector y = x + 1e-3 * gaussian(100, 8);
  BootstrapOptions opts;
  opts.replications = 500;
  opts.seed = 1;
  EXPECT_LE(wild_bootstrap_pvalue(y, x, opts), 1.0 / 500);
}

TEST(Bootstrap, DeterministicAndThreadIndependent) {
  const Vector x = gaussian(120, 9);
  const Vector y = gaussian(120, 10);
  BootstrapOptions opts;
  opts.replications = 400;
  opts.seed = 99;
  const double p1 = wild_bootstrap_pvalue(y, x, opts);
  EXPECT_EQ(p1, wild_bootstrap_pvalue(y, x, opts));
  opts.threads = 3;
  EXPECT_EQ(p1, wild_bootstrap_pvalue(y, x, opts));
  EXPECT_GT(p1, 0.0);
  EXPECT_LT(p1, 1.0);
  opts.statistic = BootstrapStatistic::kSlope;
  const double ps = wild_bootstrap_pvalue(y, x, opts);
  EXPECT_GT(ps, 0.0);
  EXPECT_LT(ps, 1.0);
}

TEST(Bootstrap, NullPValuesSpreadAcrossUnitInterval) {
  int below_half = 0;
  const int draws = 60;
  BootstrapOptions opts;
  opts.replications = 200;
  for (int s = 0; s < draws; ++s) {
    opts.seed = static_cast<std::uint64_t>(s);
    const double p = wild_bootstrap_pvalue(gaussian(80, 300 + s), gaussian(80, 600 + s), opts);
    if (p < 0.5) ++below_half;
  }
  EXPECT_GT(below_half, 15);
  EXPECT_LT(below_half, 45);
}

TEST(Bootstrap, TooFewReplicationsRejected) {
  BootstrapOptions opts;
  opts.replications = 99;
  EXPECT_THROW(wild_bootstrap_pvalue(gaussian(50, 1), gaussian(50, 2), opts), ConfigError);
}

TEST(Bootstrap, MultipleRegressorColumn) {
  const Matrix x = gaussian(100, 2, 20);
  const Vector y = gaussian(100, 21) + 2.0 * x.col(1);
  BootstrapOptions opts;
  opts.replications = 200;
  EXPECT_LE(wild_bootstrap_pvalue(y, x, 1, opts), 1.0 / 200);
  EXPECT_GT(wild_bootstrap_pvalue(y, x, 0, opts), 0.01);
}

TEST(Pca, PerfectlyCorrelatedColumns) {
  Matrix x(40, 2);
  x.col(0) = gaussian(40, 1);
  x.col(1) = 2.0 * x.col(0);
  const auto pca = pca_extract(x, 1);
  EXPECT_NEAR(pca.explained[0], 1.0, 1e-12);
}

TEST(Pca, ExplainedVarianceMatchesDirectEigensolve) {
  const Matrix x = gaussian(100, 5, 30) * gaussian(5, 5, 31);
  const auto pca = pca_extract(x, 3);
  Eigen::SelfAdjointEigenSolver<Matrix> es(correlation(x));
  Vector ev = es.eigenvalues().reverse();
  for (Eigen::Index i = 0; i < 5; ++i) EXPECT_NEAR(pca.explained[i], ev[i] / 5.0, 1e-8);
  double total = 0.0;
  for (Eigen::Index i = 0; i < 5; ++i) {
    total += pca.explained[i];
    if (i > 0) EXPECT_LE(pca.explained[i], pca.explained[i - 1]);
  }
  EXPECT_LE(total, 1.0 + 1e-12);
}

TEST(Pca, LoadingsOrthonormalWithPinnedSigns) {
  const Matrix x = gaussian(100, 6, 40) * gaussian(6, 6, 41);
  const auto pca = pca_extract(x, 4);
  const Matrix gram = pca.loadings.transpose() * pca.loadings;
  EXPECT_LE((gram - Matrix::Identity(4, 4)).cwiseAbs().maxCoeff(), 1e-10);
  for (Eigen::Index k = 0; k < 4; ++k) {
    Eigen::Index idx = 0;
    pca.loadings.col(k).cwiseAbs().maxCoeff(&idx);
    EXPECT_GT(pca.loadings(idx, k), 0.0);
  }
}

TEST(Pca, ScoresCentredWithEigenvalueCovariance) {
  const Matrix x = gaussian(120, 4, 50) * gaussian(4, 4, 51);
  const auto pca = pca_extract(x, 4);
  const Matrix f = pca.scores(x);
  const Vector means = f.colwise().mean();
  EXPECT_LE(means.cwiseAbs().maxCoeff(), 1e-10);
  const Matrix cov = f.transpose() * f / (f.rows() - 1.0);
  for (Eigen::Index a = 0; a < 4; ++a)
    for (Eigen::Index b = 0; b < 4; ++b)
      EXPECT_NEAR(cov(a, b), a == b ? pca.eigenvalues[a] : 0.0, 1e-8);
}

TEST(Pca, ScoresInvariantToColumnScale) {
  const Matrix x = gaussian(80, 3, 60) * gaussian(3, 3, 61);
  Matrix scaled = x;
  scaled.col(2) *= 250.0;
  const Matrix a = pca_extract(x, 2).scores(x);
  const Matrix b = pca_extract(scaled, 2).scores(scaled);
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(Pca, Errors) {
  Matrix x = gaussian(30, 3, 70);
  x.col(1).setConstant(2.0);
  try {
    pca_extract(x, 1, {"p", "flat", "q"});
    FAIL() << "expected a zero-variance error";
  } catch (const EstimationError& e) {
    EXPECT_NE(std::string(e.what()).find("flat"), std::string::npos);
  }
  EXPECT_THROW(pca_extract(gaussian(30, 3, 71), 4), SizeError);
  EXPECT_THROW(pca_extract(gaussian(3, 3, 72), 1), SizeError);
}

TEST(PcRegression, FirstComponentSignalSelectsOne) {
  const Matrix x = gaussian(200, 5, 80) * gaussian(5, 5, 81);
  const Matrix scores = pca_extract(x, 5).scores(x);
  const Vector y = scores.col(0) + 0.05 * gaussian(200, 82);
  const auto pc = pc_regression(y, x, 3);
  EXPECT_EQ(pc.pca.k, 1);
}

TEST(PcRegression, NoiseMostlyPicksOneComponent) {
  int ones = 0;
  const int seeds = 40;
  for (int s = 0; s < seeds; ++s) {
    const Matrix x = gaussian(150, 6, 900 + s);
    const auto pc = pc_regression(gaussian(150, 2000 + s), x, 3);
    if (pc.pca.k == 1) ++ones;
  }
  EXPECT_GT(ones, seeds / 3);
}

TEST(PcRegression, SelectedKHasMaximalAdjustedR2) {
  for (int s = 0; s < 20; ++s) {
    const Matrix x = gaussian(100, 5, 3000 + s);
    const Vector y = gaussian(100, 4000 + s) + 0.2 * x.col(s % 5);
    const auto pc = pc_regression(y, x, 3);
    ASSERT_EQ(pc.adjusted_r2.size(), 3u);
    for (double a : pc.adjusted_r2) EXPECT_GE(pc.adjusted_r2[pc.pca.k - 1], a);
    EXPECT_EQ(pc.pca.loadings.cols(), pc.pca.k);
  }
}

TEST(PcRegression, SingleComponentRangeMatchesDirectFit) {
  const Matrix x = gaussian(90, 4, 5);
  const Vector y = gaussian(90, 6);
  const auto pc = pc_regression(y, x, 1);
  const auto pca = pca_extract(x, 1);
  const auto direct = ols_fit(y, pca.scores(x));
  EXPECT_EQ(pc.pca.k, 1);
  for (Eigen::Index i = 0; i < 2; ++i) EXPECT_NEAR(pc.fit.coefficients[i], direct.coefficients[i], 1e-12);
}
