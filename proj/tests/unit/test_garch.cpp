#include <cmath>
#include <numeric>
#include <random>

#include <gtest/gtest.h>

#include "erp/garch.hpp"
#include "erp/stats.hpp"

using namespace erp;
using namespace erp::stats;

namespace {

// Data-generating recursion written out independently of the library.
std::vector<double> simulate(double mu, double omega, double alpha, double beta, std::size_t n,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  double s2 = omega / (1.0 - alpha - beta);
  double e = 0.0;
  std::vector<double> out;
  for (std::size_t t = 0; t < n + 1000; ++t) {
    s2 = omega + alpha * e * e + beta * s2;
    e = std::sqrt(s2) * z(rng);
    if (t >= 1000) out.push_back(mu + e);
  }
  return out;
}

std::vector<double> squared(const std::vector<double>& x) {
  std::vector<double> out(x.size());
  const double m = mean(x);
  for (std::size_t i = 0; i < x.size(); ++i) out[i] = (x[i] - m) * (x[i] - m);
  return out;
}

}  // namespace

TEST(GarchFit, RecoversSimulatedParameters) {
  const auto r = simulate(0.0, 0.05, 0.10, 0.85, 20000, 42);
  const auto p = fit_garch11(r);
  EXPECT_NEAR(p.omega, 0.05, 0.05);
  EXPECT_NEAR(p.alpha, 0.10, 0.05);
  EXPECT_NEAR(p.beta, 0.85, 0.05);
  EXPECT_TRUE(p.valid());
}

TEST(GarchFit, FilteringRemovesVolatilityClustering) {
  const auto r = simulate(0.0, 0.05, 0.10, 0.85, 20000, 43);
  const auto f = filter_returns(r, fit_garch11(r));
  const double raw = std::abs(autocorrelation(squared(r), 1));
  const double filtered = std::abs(autocorrelation(squared(f), 1));
  EXPECT_LE(filtered, 0.5 * raw) << "raw " << raw << " filtered " << filtered;
}

TEST(GarchFit, IidInputHasMatchingUnconditionalVariance) {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z(0.0, 0.01);
  std::vector<double> r(10000);
  for (auto& v : r) v = z(rng);
  const auto p = fit_garch11(r);
  const double sv = sample_variance(r);
  EXPECT_LT(p.alpha, 0.05);
  EXPECT_NEAR(p.unconditional_variance() / sv, 1.0, 0.10);
  const auto f = filter_returns(r, p);
  EXPECT_NEAR(sample_variance(f), 1.0, 0.05);
}

TEST(GarchFit, ConstantSeriesRejected) {
  const std::vector<double> r(500, 0.001);
  EXPECT_ANY_THROW(fit_garch11(r));
}

TEST(GarchFit, TooShortRejected) {
  const auto r = simulate(0.0, 0.05, 0.10, 0.85, 100, 1);
  EXPECT_ANY_THROW(fit_garch11(r));
}

TEST(GarchFit, AcceptedStepsNeverLowerLikelihood) {
  const auto r = simulate(0.01, 0.02, 0.07, 0.9, 3000, 8);
  std::vector<double> trace;
  GarchOptions opts;
  opts.loglik_trace = &trace;
  const auto p = fit_garch11(r, opts);
  ASSERT_GE(trace.size(), 2u);
  for (std::size_t i = 1; i < trace.size(); ++i) EXPECT_GE(trace[i], trace[i - 1] - 1e-9 * std::abs(trace[i - 1]));
  EXPECT_NEAR(p.loglik, garch_loglik(r, p), 1e-6 * std::abs(p.loglik));
}

TEST(GarchFit, FilteredSeriesIsScaleEquivariant) {
  const auto r = simulate(0.0005, 2e-6, 0.08, 0.9, 3000, 12);
  std::vector<double> scaled(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) scaled[i] = 250.0 * r[i];
  const auto a = filter_returns(r, fit_garch11(r));
  const auto b = filter_returns(scaled, fit_garch11(scaled));
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) ASSERT_NEAR(a[i], b[i], 1e-8) << i;
}

TEST(GarchFilter, ArchFreeRecursionCollapses) {
  GarchParams p;
  p.omega = 0.04;
  const std::vector<double> r{0.1, -0.3, 0.25, 0.0};
  const auto f = filter_returns(r, p);
  for (std::size_t i = 0; i < r.size(); ++i) EXPECT_DOUBLE_EQ(f[i], r[i] / 0.2);
}

TEST(GarchFilter, VariancesFollowTheRecursion) {
  GarchParams p;
  p.mu = 0.1;
  p.omega = 0.2;
  p.alpha = 0.1;
  p.beta = 0.7;
  const std::vector<double> r{0.5, -1.0, 2.0, 0.3};
  const auto s2 = garch_variances(r, p);
  double expect = 0.2 / (1.0 - 0.8);
  EXPECT_DOUBLE_EQ(s2[0], expect);
  for (std::size_t t = 1; t < r.size(); ++t) {
    expect = 0.2 + 0.1 * (r[t - 1] - 0.1) * (r[t - 1] - 0.1) + 0.7 * expect;
    EXPECT_NEAR(s2[t], expect, 1e-15);
    EXPECT_GT(s2[t], 0.0);
  }
}

TEST(GarchSimulate, DeterministicForSeed) {
  GarchParams p;
  p.omega = 0.05;
  p.alpha = 0.1;
  p.beta = 0.85;
  EXPECT_EQ(simulate_garch11(p, 100, 9), simulate_garch11(p, 100, 9));
  EXPECT_NE(simulate_garch11(p, 100, 9), simulate_garch11(p, 100, 10));
}
