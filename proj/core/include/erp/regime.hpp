#pragma once

#include <span>
#include <vector>

#include "erp/hurst.hpp"
#include "erp/marketdata.hpp"

namespace erp {

/// Monthly Bullish ratio B_t and Bullish Index BU_t = log(B_t / B_{t-1}).
/// bu[0] is NaN (no predecessor).
struct BullishSeries {
  std::vector<YearMonth> months;
  std::vector<double> b;
  std::vector<double> bu;
  std::vector<int> qualifying_days;
  std::vector<int> trading_days;

  std::size_t size() const { return months.size(); }
};

/// Fraction of trading days in each month with r(d) > 0 and H(d) > threshold.
/// Returns and H are inner-joined on date; months without joined days are
/// absent. Throws InsufficientDataError when the join is empty.
BullishSeries bullish_ratio(const ReturnSeries& daily, const HurstSeries& hurst, double h_threshold = 0.5);

/// log(B_t / B_{t-1}), with 0 whenever either ratio is 0. First entry NaN.
std::vector<double> bullish_index(std::span<const double> ratio);

enum class ShockRule { kFixed, kQuantile };

struct ShockConfig {
  ShockRule rule = ShockRule::kFixed;
  double threshold = 1.0;   ///< fixed rule: BU > +threshold is a peak, BU < -threshold a trough
  double quantile = 0.025;  ///< quantile rule: top/bottom fraction flagged
};

/// Indices (into the BU series) of positive and negative shocks.
struct Shocks {
  std::vector<std::size_t> peaks;
  std::vector<std::size_t> troughs;
};

/// NaN entries never qualify. Quantile mode flags ceil(q * T) values per side
/// (T = defined values), including every value tied with the boundary.
Shocks detect_shocks(std::span<const double> bu, const ShockConfig& cfg = {});

/// Drops the top and bottom `trim` fraction of the defined BU values, then
/// flags the top/bottom `q` fraction of what remains.
Shocks trimmed_quantile_shocks(std::span<const double> bu, double trim = 0.05, double q = 0.05);

/// Conditioning masks on a monthly timeline.
struct RegimeMasks {
  Mask peak;
  Mask trough;
  Mask stable_plus;   ///< !peak
  Mask stable_minus;  ///< !trough
  Mask recession;
  Mask expansion;     ///< !recession

  std::size_t size() const { return peak.size(); }
};

/// Union over events of [t + from, t + to], clipped to [0, length).
Mask event_window_mask(std::span<const std::size_t> events, std::size_t length, long from, long to);

/// Peak/trough true on [t - before, t + after] around each shock.
RegimeMasks insample_masks(const Shocks& shocks, std::size_t length, int before = 3, int after = 3);

/// Peak/trough true on [t + 1, t + horizon] after each shock.
RegimeMasks oos_masks(const Shocks& shocks, std::size_t length, int horizon = 3);

/// Fills recession/expansion from a calendar for the given months.
void attach_business_cycle(RegimeMasks& masks, const std::vector<YearMonth>& months,
                           const RecessionCalendar& calendar);

Mask mask_and(const Mask& a, const Mask& b);
Mask mask_not(const Mask& a);
std::size_t mask_count(const Mask& a);

}  // namespace erp
