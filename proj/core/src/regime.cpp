#include "erp/regime.hpp"

#include <algorithm>
#include <cmath>

#include "erp/error.hpp"

namespace erp {

BullishSeries bullish_ratio(const ReturnSeries& daily, const HurstSeries& hurst, double h_threshold) {
  BullishSeries out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < daily.size() && j < hurst.size()) {
    if (daily.dates[i] < hurst.dates[j]) {
      ++i;
    } else if (hurst.dates[j] < daily.dates[i]) {
      ++j;
    } else {
      const YearMonth ym = year_month_of(daily.dates[i]);
      if (out.months.empty() || out.months.back() != ym) {
        out.months.push_back(ym);
        out.qualifying_days.push_back(0);
        out.trading_days.push_back(0);
      }
      ++out.trading_days.back();
      // A missing H compares false and so never qualifies.
      if (daily.values[i] > 0.0 && hurst.h[j] > h_threshold) ++out.qualifying_days.back();
      ++i;
      ++j;
    }
  }
  if (out.months.empty()) throw InsufficientDataError("bullish_ratio: returns and Hurst series share no dates");
  out.b.resize(out.months.size());
  for (std::size_t t = 0; t < out.months.size(); ++t)
    out.b[t] = static_cast<double>(out.qualifying_days[t]) / out.trading_days[t];
  out.bu = bullish_index(out.b);
  return out;
}

std::vector<double> bullish_index(std::span<const double> ratio) {
  std::vector<double> bu(ratio.size(), kMissing);
  for (std::size_t t = 1; t < ratio.size(); ++t)
    bu[t] = (ratio[t - 1] == 0.0 || ratio[t] == 0.0) ? 0.0 : std::log(ratio[t] / ratio[t - 1]);
  return bu;
}

namespace {

/// k-th largest of the defined values (k >= 1).
double kth_largest(std::vector<double> values, std::size_t k) {
  std::sort(values.begin(), values.end(), std::greater<>());
  return values[k - 1];
}

}  // namespace

Shocks detect_shocks(std::span<const double> bu, const ShockConfig& cfg) {
  Shocks s;
  if (cfg.rule == ShockRule::kFixed) {
    for (std::size_t t = 0; t < bu.size(); ++t) {
      if (bu[t] > cfg.threshold) s.peaks.push_back(t);
      if (bu[t] < -cfg.threshold) s.troughs.push_back(t);
    }
    return s;
  }
  if (!(cfg.quantile > 0.0 && cfg.quantile < 0.5)) throw ConfigError("shock quantile must lie in (0, 0.5)");
  std::vector<double> defined;
  for (double v : bu)
    if (!is_missing(v)) defined.push_back(v);
  if (defined.empty()) return s;
  const auto k = static_cast<std::size_t>(std::ceil(cfg.quantile * static_cast<double>(defined.size()) - 1e-12));
  if (k == 0) return s;
  const double top = kth_largest(defined, k);
  std::vector<double> negated(defined.size());
  std::transform(defined.begin(), defined.end(), negated.begin(), [](double v) { return -v; });
  const double bottom = -kth_largest(negated, k);
  for (std::size_t t = 0; t < bu.size(); ++t) {
    if (is_missing(bu[t])) continue;
    if (bu[t] >= top) s.peaks.push_back(t);
    if (bu[t] <= bottom) s.troughs.push_back(t);
  }
  return s;
}

Shocks trimmed_quantile_shocks(std::span<const double> bu, double trim, double q) {
  ShockConfig outer{ShockRule::kQuantile, 0.0, trim};
  const Shocks extremes = detect_shocks(bu, outer);
  std::vector<double> trimmed(bu.begin(), bu.end());
  for (auto t : extremes.peaks) trimmed[t] = kMissing;
  for (auto t : extremes.troughs) trimmed[t] = kMissing;
  return detect_shocks(trimmed, ShockConfig{ShockRule::kQuantile, 0.0, q});
}

Mask event_window_mask(std::span<const std::size_t> events, std::size_t length, long from, long to) {
  Mask m(length, false);
  const auto n = static_cast<long>(length);
  for (auto e : events) {
    const long lo = std::max(0L, static_cast<long>(e) + from);
    const long hi = std::min(n - 1, static_cast<long>(e) + to);
    for (long t = lo; t <= hi; ++t) m[static_cast<std::size_t>(t)] = true;
  }
  return m;
}

namespace {

RegimeMasks from_windows(Mask peak, Mask trough) {
  RegimeMasks r;
  r.stable_plus = mask_not(peak);
  r.stable_minus = mask_not(trough);
  r.peak = std::move(peak);
  r.trough = std::move(trough);
  r.recession.assign(r.peak.size(), false);
  r.expansion.assign(r.peak.size(), true);
  return r;
}

}  // namespace

RegimeMasks insample_masks(const Shocks& shocks, std::size_t length, int before, int after) {
  return from_windows(event_window_mask(shocks.peaks, length, -before, after),
                      event_window_mask(shocks.troughs, length, -before, after));
}

RegimeMasks oos_masks(const Shocks& shocks, std::size_t length, int horizon) {
  return from_windows(event_window_mask(shocks.peaks, length, 1, horizon),
                      event_window_mask(shocks.troughs, length, 1, horizon));
}

void attach_business_cycle(RegimeMasks& masks, const std::vector<YearMonth>& months,
                           const RecessionCalendar& calendar) {
  if (months.size() != masks.size()) throw SizeError("attach_business_cycle: timeline length mismatch");
  masks.recession = calendar.mask(months);
  masks.expansion = mask_not(masks.recession);
}

Mask mask_and(const Mask& a, const Mask& b) {
  if (a.size() != b.size()) throw SizeError("mask_and: length mismatch");
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] && b[i];
  return out;
}

Mask mask_not(const Mask& a) {
  Mask out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = !a[i];
  return out;
}

std::size_t mask_count(const Mask& a) { return static_cast<std::size_t>(std::count(a.begin(), a.end(), true)); }

}  // namespace erp
