#include "erp/allocate.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "erp/error.hpp"
#include "erp/stats.hpp"

namespace erp {

void AllocationConfig::validate() const {
  if (!(kappa > 0.0)) throw ConfigError("allocate: kappa must be > 0");
  if (!(w_min <= w_max)) throw ConfigError("allocate: weight bounds out of order");
  if (variance_window < 12) throw ConfigError("allocate: variance window must be >= 12 months");
  if (!(cost_bps >= 0.0)) throw ConfigError("allocate: cost_bps must be >= 0");
}

std::vector<double> rolling_variance(std::span<const double> x, int window) {
  if (window < 2) throw ConfigError("rolling_variance: window must be >= 2");
  const auto w = static_cast<std::size_t>(window);
  std::vector<double> out(x.size(), kMissing);
  for (std::size_t t = w; t < x.size(); ++t) out[t] = stats::sample_variance(x.subspan(t - w, w));
  return out;
}

std::vector<double> allocation_weights(std::span<const double> forecast, std::span<const double> variance,
                                       const AllocationConfig& cfg) {
  cfg.validate();
  if (forecast.size() != variance.size()) throw SizeError("allocation_weights: length mismatch");
  std::vector<double> w(forecast.size(), kMissing);
  for (std::size_t t = 0; t < w.size(); ++t) {
    if (is_missing(forecast[t]) || is_missing(variance[t])) continue;
    if (!(variance[t] > 0.0)) throw ValidationError("allocation_weights: variance forecast must be positive");
    w[t] = std::clamp(forecast[t] / (cfg.kappa * variance[t]), cfg.w_min, cfg.w_max);
  }
  return w;
}

PortfolioTrack portfolio_returns(const std::vector<YearMonth>& months, std::span<const double> weights,
                                 std::span<const double> equity, std::span<const double> rf,
                                 const AllocationConfig& cfg) {
  const std::size_t n = months.size();
  if (weights.size() != n || equity.size() != n || rf.size() != n)
    throw SizeError("portfolio_returns: series lengths differ");
  PortfolioTrack tr;
  tr.months = months;
  tr.weights.assign(weights.begin(), weights.end());
  double prev = 0.0;
  double cum = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const double w = weights[t];
    if (is_missing(w)) throw ValidationError("portfolio_returns: weight missing at " + months[t].str());
    const double g = w * equity[t] + (1.0 - w) * rf[t];
    const double dw = std::abs(w - prev);
    cum += dw;
    tr.gross.push_back(g);
    tr.net.push_back(g - cfg.cost_bps / 1e4 * dw);
    tr.turnover.push_back(cum);
    prev = w;
  }
  return tr;
}

std::optional<double> cer(const PortfolioTrack& track, double kappa, const Mask& mask, CerVariance variance) {
  if (mask.size() != track.size()) throw SizeError("cer: mask length differs from track");
  std::vector<double> r;
  for (std::size_t t = 0; t < track.size(); ++t)
    if (mask[t]) r.push_back(track.net[t]);
  if (r.size() < 2) return std::nullopt;
  const double n = static_cast<double>(r.size());
  const double v = stats::sample_variance(r) * (variance == CerVariance::kPopulation ? (n - 1.0) / n : 1.0);
  return stats::mean(r) - 0.5 * kappa * v;
}

std::optional<double> cer_gain(const PortfolioTrack& model, const PortfolioTrack& ha, double kappa,
                               const Mask& mask, CerVariance variance) {
  if (model.months != ha.months) throw SizeError("cer_gain: tracks cover different months");
  const auto a = cer(model, kappa, mask, variance);
  const auto b = cer(ha, kappa, mask, variance);
  if (!a || !b) return std::nullopt;
  return 12.0 * (*a - *b) * 100.0;
}

Mask offset_mask(const std::vector<YearMonth>& months, const std::vector<YearMonth>& events, int from, int to) {
  std::set<int> hit;
  for (const auto& e : events)
    for (int k = from; k <= to; ++k) hit.insert(e.index() + k);
  Mask m(months.size(), false);
  for (std::size_t t = 0; t < months.size(); ++t) m[t] = hit.count(months[t].index()) != 0;
  return m;
}

std::vector<HoldingCell> holding_period_grid(const PortfolioTrack& model, const PortfolioTrack& ha,
                                             const std::vector<YearMonth>& peaks,
                                             const std::vector<YearMonth>& troughs, double kappa,
                                             CerVariance variance) {
  std::vector<HoldingCell> out;
  for (const auto* regime : {"peak", "trough"}) {
    const auto& events = std::string(regime) == "peak" ? peaks : troughs;
    for (int lo = 1; lo <= 10; lo += 3) {
      HoldingCell c;
      c.bucket = "G" + std::to_string(lo) + "-G" + std::to_string(lo + 2);
      c.regime = regime;
      const Mask m = offset_mask(model.months, events, lo, lo + 2);
      c.months = static_cast<std::size_t>(std::count(m.begin(), m.end(), true));
      c.shock_gain = cer_gain(model, ha, kappa, m, variance);
      Mask rest(m.size());
      for (std::size_t t = 0; t < m.size(); ++t) rest[t] = !m[t];
      c.stable_gain = cer_gain(model, ha, kappa, rest, variance);
      out.push_back(std::move(c));
    }
  }
  return out;
}

}  // namespace erp
