#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "erp/regime.hpp"
#include "erp/regress.hpp"

namespace erp {

/// Conditional R^2 against the full-sample mean of `actual`. nullopt when the
/// mask selects nothing or the masked denominator is zero.
std::optional<double> conditional_r2(std::span<const double> actual, std::span<const double> fitted,
                                     const Mask& mask);

/// One-step-ahead forecasts for target months. forecasts at index i use data
/// through the month before months[i].
struct ForecastSet {
  std::string id;
  std::vector<YearMonth> months;
  std::vector<double> actual;
  std::vector<double> model;
  std::vector<double> ha;
  std::vector<int> components;  ///< selected K per step (PC models); 0 marks a fallback
  std::size_t fallbacks = 0;    ///< steps that used the historical average

  std::size_t size() const { return months.size(); }
};

/// Running mean forecasts: element i is mean(y[0 .. first + i - 1]), the
/// forecast for index first + i. Covers targets first..y.size(), so the
/// last element forecasts one period beyond the data. Requires first >= 1.
std::vector<double> historical_average(std::span<const double> y, std::size_t first);

/// Recursive predictive regression y[u] = a + b x[u-1]. Target indices run
/// from `first` to the end; the fit for target s uses pairs u = 1..s-1.
/// Requires first - 1 >= min_window. Singular fits fall back to HA.
ForecastSet recursive_forecast(const std::vector<YearMonth>& months, std::span<const double> y,
                               std::span<const double> x, std::size_t first, std::size_t min_window = 60,
                               std::string id = {});

/// Principal-component version: at each target s the components are
/// extracted from rows 0..s-1 of X (columns constant over that window are
/// left out), K is picked by adjusted R^2 and the forecast uses row s-1.
ForecastSet recursive_pc_forecast(const std::vector<YearMonth>& months, std::span<const double> y,
                                  const Matrix& x, std::size_t first, int k_max = 3,
                                  std::size_t min_window = 60, std::string id = {});

/// Sum over masked entries of (a - b)^2.
double masked_sse(std::span<const double> a, std::span<const double> b, const Mask& mask);

/// 1 - SSE(model) / SSE(HA) over the mask; nullopt for an empty mask or a
/// zero denominator.
std::optional<double> r2_os(const ForecastSet& fs, const Mask& mask);

struct ClarkWest {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// MSFE-adjusted statistic: HAC t-ratio of the mean of
/// f = (r - ha)^2 - [(r - model)^2 - (ha - model)^2] over the masked months.
/// nullopt with fewer than 10 months or a zero-variance f.
std::optional<ClarkWest> clark_west(const ForecastSet& fs, const Mask& mask);

/// "***", "**", "*" or "" for p below 1%, 5% and 10%.
std::string significance_stars(std::optional<double> p);

using NamedMask = std::pair<std::string, Mask>;

/// One row of the in-sample table.
struct InSampleRow {
  std::string predictor;
  int components = 1;
  std::size_t nobs = 0;
  double slope = 0.0;
  double hac_t = 0.0;
  std::optional<double> bootstrap_p;
  double r2 = 0.0;
  std::vector<std::pair<std::string, std::optional<double>>> conditional;
};

/// Regresses target[i] on predictor[i] (already lagged) and reports the
/// conditional R^2 under each mask. Skips the bootstrap when options is
/// empty.
InSampleRow insample_row(const std::string& name, std::span<const double> target,
                         std::span<const double> predictor, const std::vector<NamedMask>& masks,
                         const std::optional<BootstrapOptions>& bootstrap);

struct OosCell {
  std::string mask;
  std::size_t months = 0;
  std::optional<double> r2_os;
  std::optional<ClarkWest> cw;
};

struct OosRow {
  std::string model;
  std::size_t fallbacks = 0;
  std::vector<OosCell> cells;
};

OosRow oos_row(const ForecastSet& fs, const std::vector<NamedMask>& masks);

}  // namespace erp
