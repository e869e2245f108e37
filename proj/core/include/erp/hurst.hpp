#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erp/marketdata.hpp"

namespace erp {

/// How many length-n segments the residual series is cut into before the
/// tail is truncated. Both are capped by the residual length.
enum class SegmentCountRule {
  kNMinusOne,  ///< floor(N / (n - 1))
  kN,          ///< floor(N / n)
};

/// Fluctuation detrending moving-average analysis settings.
struct FdmaaConfig {
  int window = 215;  ///< sliding window length in days
  int n_min = 5;
  int n_max = 43;
  int phi = 30;       ///< number of (log n, log F) points
  int position = 0;   ///< moving-average position; only backward (0) is supported
  SegmentCountRule segment_rule = SegmentCountRule::kNMinusOne;

  /// Throws ConfigError unless 2 <= n_min < n_max < window, phi >= 3, position == 0.
  void validate() const;
};

/// Step 1: running sum y(d) = sum_{i<=d} r(i).
std::vector<double> cumulative_profile(std::span<const double> r);

/// Step 2: backward moving average (1/n) sum_{k=0}^{n-1} y(d-k), for the
/// 1-based positions d = n..N. Result has N - n + 1 entries.
std::vector<double> backward_moving_average(std::span<const double> y, int n);

/// Step 3: epsilon(i) = y(i) - moving average, for i = n..N.
std::vector<double> detrended_residual(std::span<const double> y, int n);

/// Number of segments actually used for a residual of the given length.
/// `series_length` is the N of the window (defaults to the residual length).
std::size_t segment_count(std::size_t residual_length, int n, SegmentCountRule rule,
                          std::size_t series_length = 0);

/// Step 4: F(n) = sqrt(mean_v F_v^2(n)), with F_v^2 = (1/n) sum eps_v(i)^2 over
/// disjoint segments starting at the first residual. Throws SizeError when
/// n exceeds the residual length.
double segment_rms(std::span<const double> eps, int n, SegmentCountRule rule = SegmentCountRule::kNMinusOne,
                   std::size_t series_length = 0);

/// The phi segment sizes: log-spaced on [n_min, n_max], rounded, made
/// strictly increasing. Fewer than phi when the integer range is smaller.
std::vector<int> scale_grid(const FdmaaConfig& cfg);

struct HurstFit {
  double h = 0.0;
  double r2 = 0.0;
  int points = 0;
};

/// Step 5: least-squares slope of log F on log n. Points with F <= 0 are
/// skipped; throws EstimationError when fewer than three remain.
HurstFit fit_hurst(std::span<const int> sizes, std::span<const double> fluctuation);

/// F(n) for every n in the grid, computed on one window of returns.
std::vector<double> fluctuation_function(std::span<const double> returns, const FdmaaConfig& cfg);

/// Steps 1-5 on a single window.
HurstFit estimate_hurst(std::span<const double> returns, const FdmaaConfig& cfg);

/// Local Hurst exponents, one per window end date. Failed windows hold NaN.
struct HurstSeries {
  std::vector<Date> dates;
  std::vector<double> h;
  std::vector<double> r2;

  std::size_t size() const { return h.size(); }
  /// Estimate present and inside (0, 1).
  bool in_range(std::size_t i) const { return h[i] > 0.0 && h[i] < 1.0; }
};

/// Slides a `cfg.window`-day window one day at a time. Windows are computed
/// independently on `threads` workers (0 = hardware concurrency); the result
/// does not depend on the thread count.
HurstSeries local_hurst(const ReturnSeries& filtered, const FdmaaConfig& cfg, unsigned threads = 1);

/// Autocovariance of unit-variance fractional Gaussian noise at lag k.
double fgn_autocovariance(double hurst, long k);

/// Exact fractional Gaussian noise by circulant embedding. Deterministic for
/// a seed; throws ValidationError unless 0 < hurst < 1.
std::vector<double> generate_fgn(double hurst, std::size_t length, std::uint64_t seed);

}  // namespace erp
