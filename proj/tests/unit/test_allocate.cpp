#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include <gtest/gtest.h>

#include "erp/allocate.hpp"
#include "erp/error.hpp"
#include "erp/regime.hpp"

using namespace erp;

namespace {

std::vector<YearMonth> months_from(YearMonth start, std::size_t n) {
  std::vector<YearMonth> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(start);
    start = start.next();
  }
  return out;
}

std::vector<double> normals(std::size_t n, std::uint64_t seed, double mu, double sd) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(mu, sd);
  std::vector<double> out(n);
  for (auto& v : out) v = z(rng);
  return out;
}

PortfolioTrack constant_track(const std::vector<double>& net) {
  PortfolioTrack t;
  t.months = months_from({2000, 1}, net.size());
  t.weights.assign(net.size(), 1.0);
  t.gross = net;
  t.net = net;
  t.turnover.assign(net.size(), 0.0);
  return t;
}

}  // namespace

TEST(Weights, Examples) {
  const AllocationConfig cfg;
  const std::vector<double> var{0.002, 0.002, 0.002};
  const auto w = allocation_weights(std::vector<double>{0.005, -0.01, 10.0}, var, cfg);
  EXPECT_NEAR(w[0], 0.5, 1e-15);
  EXPECT_EQ(w[1], 0.0);
  EXPECT_EQ(w[2], 1.5);
}

TEST(Weights, ClampHoldsOnAdversarialForecasts) {
  const AllocationConfig cfg;
  const double big = std::numeric_limits<double>::max();
  const std::vector<double> f{big, -big, 1e-300, -1e-300, 0.0, 3.0, -3.0};
  const std::vector<double> v{1e-300, 1e-300, 1e300, 1e-3, 0.01, 1e-12, 1e-12};
  for (double w : allocation_weights(f, v, cfg)) {
    EXPECT_GE(w, 0.0);
    EXPECT_LE(w, 1.5);
  }
}

TEST(Weights, MissingAndInvalidInputs) {
  const AllocationConfig cfg;
  const auto w = allocation_weights(std::vector<double>{kMissing, 0.01}, std::vector<double>{0.01, kMissing}, cfg);
  EXPECT_TRUE(std::isnan(w[0]));
  EXPECT_TRUE(std::isnan(w[1]));
  EXPECT_THROW(allocation_weights(std::vector<double>{0.01}, std::vector<double>{0.0}, cfg), ValidationError);
}

TEST(Weights, HigherRiskAversionNeverRaisesWeight) {
  const auto f = normals(50, 1, 0.003, 0.004);
  const std::vector<double> v(50, 0.002);
  AllocationConfig lo;
  lo.w_min = -1e9;
  lo.w_max = 1e9;
  AllocationConfig hi = lo;
  hi.kappa = 8.0;
  const auto a = allocation_weights(f, v, lo);
  const auto b = allocation_weights(f, v, hi);
  for (std::size_t i = 0; i < f.size(); ++i)
    if (f[i] >= 0) {
      EXPECT_LE(b[i], a[i]);
    }
}

TEST(Config, Validation) {
  AllocationConfig cfg;
  EXPECT_NO_THROW(cfg.validate());
  cfg.kappa = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AllocationConfig{};
  cfg.w_min = 2.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = AllocationConfig{};
  cfg.variance_window = 11;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

TEST(RollingVariance, TrailingWindow) {
  std::vector<double> x(20);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(i * i % 7);
  const auto v = rolling_variance(x, 12);
  for (std::size_t t = 0; t < 12; ++t) EXPECT_TRUE(std::isnan(v[t]));
  for (std::size_t t = 12; t < x.size(); ++t) {
    double m = 0.0;
    for (std::size_t i = t - 12; i < t; ++i) m += x[i];
    m /= 12.0;
    double ss = 0.0;
    for (std::size_t i = t - 12; i < t; ++i) ss += (x[i] - m) * (x[i] - m);
    EXPECT_NEAR(v[t], ss / 11.0, 1e-12);
  }
}

TEST(Portfolio, FullAndZeroAllocation) {
  const auto months = months_from({2000, 1}, 12);
  const auto eq = normals(12, 2, 0.01, 0.04);
  const auto rf = normals(12, 3, 0.002, 0.0005);
  const AllocationConfig cfg;
  const auto full = portfolio_returns(months, std::vector<double>(12, 1.0), eq, rf, cfg);
  const auto none = portfolio_returns(months, std::vector<double>(12, 0.0), eq, rf, cfg);
  for (std::size_t t = 0; t < 12; ++t) {
    EXPECT_EQ(full.gross[t], eq[t]);
    EXPECT_EQ(none.gross[t], rf[t]);
  }
}

TEST(Portfolio, AlternatingWeightsPayFiftyBasisPoints) {
  const auto months = months_from({2000, 1}, 10);
  std::vector<double> w(10);
  for (std::size_t t = 0; t < w.size(); ++t) w[t] = t % 2 ? 0.0 : 1.0;
  const auto eq = normals(10, 4, 0.01, 0.04);
  const std::vector<double> rf(10, 0.001);
  AllocationConfig cfg;
  cfg.cost_bps = 50.0;
  const auto track = portfolio_returns(months, w, eq, rf, cfg);
  for (std::size_t t = 0; t < 10; ++t) {
    EXPECT_NEAR(track.net[t], track.gross[t] - 0.005, 1e-15);
    EXPECT_LT(track.net[t], track.gross[t]);
  }
  EXPECT_EQ(track.turnover.back(), 10.0);
}

TEST(Portfolio, CostDifferenceEqualsTurnover) {
  const auto months = months_from({2000, 1}, 60);
  auto w = normals(60, 5, 0.7, 0.5);
  for (auto& v : w) v = std::clamp(v, 0.0, 1.5);
  const auto eq = normals(60, 6, 0.01, 0.04);
  const std::vector<double> rf(60, 0.002);
  AllocationConfig free;
  AllocationConfig costly;
  costly.cost_bps = 50.0;
  const auto a = portfolio_returns(months, w, eq, rf, free);
  const auto b = portfolio_returns(months, w, eq, rf, costly);
  double sum_diff = 0.0;
  double sum_turn = 0.0;
  double prev = 0.0;
  for (std::size_t t = 0; t < 60; ++t) {
    sum_diff += a.net[t] - b.net[t];
    sum_turn += std::abs(w[t] - prev);
    prev = w[t];
  }
  EXPECT_NEAR(sum_diff, 0.005 * sum_turn, 1e-14);
  EXPECT_NEAR(b.turnover.back(), sum_turn, 1e-12);
}

TEST(Portfolio, ConstantWeightsOnlyPayOnEntry) {
  const auto months = months_from({2000, 1}, 24);
  const std::vector<double> w(24, 0.8);
  const auto eq = normals(24, 7, 0.01, 0.04);
  const std::vector<double> rf(24, 0.002);
  AllocationConfig costly;
  costly.cost_bps = 50.0;
  const auto a = portfolio_returns(months, w, eq, rf, AllocationConfig{});
  const auto b = portfolio_returns(months, w, eq, rf, costly);
  for (std::size_t t = 1; t < 24; ++t) EXPECT_EQ(a.net[t], b.net[t]);
}

TEST(Portfolio, MissingWeightRejected) {
  const auto months = months_from({2000, 1}, 3);
  const std::vector<double> w{0.5, kMissing, 0.5};
  const std::vector<double> r(3, 0.01);
  EXPECT_THROW(portfolio_returns(months, w, r, r, AllocationConfig{}), ValidationError);
}

TEST(Cer, Examples) {
  const Mask all2(2, true);
  EXPECT_NEAR(*cer(constant_track({0.01, 0.01, 0.01}), 7.0, Mask(3, true)), 0.01, 1e-15);
  EXPECT_NEAR(*cer(constant_track({0.01, 0.03}), 5.0, all2), 0.0195, 1e-15);
  EXPECT_FALSE(cer(constant_track({0.01, 0.03}), 5.0, Mask{true, false}).has_value());
}

TEST(Cer, PopulationVariance) {
  EXPECT_NEAR(*cer(constant_track({0.01, 0.03}), 5.0, Mask(2, true), CerVariance::kPopulation), 0.01975, 1e-15);
}

TEST(CerGain, LinearityAndAntisymmetry) {
  const auto base = normals(48, 8, 0.005, 0.03);
  auto shifted = base;
  for (auto& v : shifted) v += 0.001;
  const auto ha = constant_track(base);
  const auto model = constant_track(shifted);
  const Mask all(48, true);
  EXPECT_NEAR(*cer_gain(model, ha, 5.0, all), 1.2, 1e-10);
  EXPECT_EQ(*cer_gain(ha, ha, 5.0, all), 0.0);
  const auto other = constant_track(normals(48, 9, 0.006, 0.02));
  EXPECT_DOUBLE_EQ(*cer_gain(other, ha, 5.0, all), -*cer_gain(ha, other, 5.0, all));
}

TEST(OffsetMask, WindowsAfterEvents) {
  const auto months = months_from({2000, 1}, 24);
  const auto m = offset_mask(months, {YearMonth{2000, 5}}, 1, 3);
  for (std::size_t t = 0; t < 24; ++t) EXPECT_EQ(m[t], t >= 5 && t <= 7) << t;
  const auto pooled = offset_mask(months, {YearMonth{2000, 5}, YearMonth{2000, 6}}, 1, 3);
  EXPECT_EQ(mask_count(pooled), 4u);
}

TEST(HoldingGrid, HandConstructedBuckets) {
  // Shocks at 2000-03 (peak) and 2000-02, 2000-10 (troughs) on a 30-month track.
  const auto n = 30;
  auto model_net = normals(n, 10, 0.006, 0.03);
  auto ha_net = normals(n, 11, 0.005, 0.03);
  auto model = constant_track(model_net);
  auto ha = constant_track(ha_net);
  const std::vector<YearMonth> peaks{{2000, 3}};
  const std::vector<YearMonth> troughs{{2000, 2}, {2000, 10}};
  const auto grid = holding_period_grid(model, ha, peaks, troughs, 5.0);
  ASSERT_EQ(grid.size(), 8u);
  EXPECT_EQ(grid[0].bucket, "G1-G3");
  EXPECT_EQ(grid[0].regime, "peak");
  EXPECT_EQ(grid[3].bucket, "G10-G12");
  EXPECT_EQ(grid[4].regime, "trough");

  auto expect_cell = [&](const HoldingCell& c, std::vector<int> idx) {
    Mask m(n, false);
    for (int i : idx) m[i] = true;
    EXPECT_EQ(c.months, idx.size()) << c.regime << " " << c.bucket;
    EXPECT_EQ(c.shock_gain, cer_gain(model, ha, 5.0, m));
    EXPECT_EQ(c.stable_gain, cer_gain(model, ha, 5.0, mask_not(m)));
  };
  expect_cell(grid[0], {3, 4, 5});
  expect_cell(grid[1], {6, 7, 8});
  expect_cell(grid[3], {12, 13, 14});
  // Trough G7-G9: 2000-02 gives indices 8..10, 2000-10 gives 16..18.
  expect_cell(grid[6], {8, 9, 10, 16, 17, 18});
  // Trough G1-G3 and G10-G12.
  expect_cell(grid[4], {2, 3, 4, 10, 11, 12});
  expect_cell(grid[7], {11, 12, 13, 19, 20, 21});

  for (const auto& c : holding_period_grid(ha, ha, peaks, troughs, 5.0)) {
    EXPECT_EQ(*c.shock_gain, 0.0);
    EXPECT_EQ(*c.stable_gain, 0.0);
  }
}

TEST(HoldingGrid, OverlappingShocksCountedOnce) {
  const auto track = constant_track(normals(20, 12, 0.0, 0.01));
  const auto grid = holding_period_grid(track, track, {{2000, 2}, {2000, 3}}, {}, 5.0);
  EXPECT_EQ(grid[0].months, 4u);
  EXPECT_FALSE(grid[4].shock_gain.has_value());
}
