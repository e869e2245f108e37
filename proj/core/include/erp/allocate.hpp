#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "erp/types.hpp"

namespace erp {

enum class CerVariance { kSample, kPopulation };

struct AllocationConfig {
  double kappa = 5.0;
  double w_min = 0.0;
  double w_max = 1.5;
  int variance_window = 60;  ///< months
  double cost_bps = 0.0;     ///< per unit of turnover
  bool simple_returns = false;
  CerVariance cer_variance = CerVariance::kSample;

  /// Throws ConfigError unless kappa > 0, w_min <= w_max and window >= 12.
  void validate() const;
};

/// out[t] = sample variance (n-1) of x[t-window .. t-1]; NaN for t < window.
std::vector<double> rolling_variance(std::span<const double> x, int window);

/// w = clamp(forecast / (kappa * variance), w_min, w_max). NaN where either
/// input is missing. Forecasts and variances are in fraction units.
std::vector<double> allocation_weights(std::span<const double> forecast, std::span<const double> variance,
                                       const AllocationConfig& cfg);

struct PortfolioTrack {
  std::vector<YearMonth> months;
  std::vector<double> weights;
  std::vector<double> gross;
  std::vector<double> net;
  std::vector<double> turnover;  ///< cumulative sum of |w_t - w_{t-1}|

  std::size_t size() const { return months.size(); }
};

/// gross = w * equity + (1 - w) * rf; net = gross - cost_bps / 1e4 * |w_t - w_{t-1}|
/// with the weight before the first month taken as 0. All weights must be
/// defined.
PortfolioTrack portfolio_returns(const std::vector<YearMonth>& months, std::span<const double> weights,
                                 std::span<const double> equity, std::span<const double> rf,
                                 const AllocationConfig& cfg);

/// mean - kappa/2 * var of masked net returns, var with divisor n-1 or n.
/// nullopt with fewer than two masked months.
std::optional<double> cer(const PortfolioTrack& track, double kappa, const Mask& mask,
                          CerVariance variance = CerVariance::kSample);

/// 12 * (CER_model - CER_ha) * 100, annualised percent.
std::optional<double> cer_gain(const PortfolioTrack& model, const PortfolioTrack& ha, double kappa,
                               const Mask& mask, CerVariance variance = CerVariance::kSample);

/// True for months m with m - e in [from, to] for some event month e.
Mask offset_mask(const std::vector<YearMonth>& months, const std::vector<YearMonth>& events, int from, int to);

struct HoldingCell {
  std::string bucket;  ///< "G1-G3" etc.
  std::string regime;  ///< "peak" or "trough"
  std::size_t months = 0;
  std::optional<double> shock_gain;
  std::optional<double> stable_gain;  ///< on the complement of the bucket mask
};

/// Table-5 grid: buckets G1-G3, G4-G6, G7-G9, G10-G12 after each peak and
/// each trough, pooled as a set union.
std::vector<HoldingCell> holding_period_grid(const PortfolioTrack& model, const PortfolioTrack& ha,
                                             const std::vector<YearMonth>& peaks,
                                             const std::vector<YearMonth>& troughs, double kappa,
                                             CerVariance variance = CerVariance::kSample);

}  // namespace erp
