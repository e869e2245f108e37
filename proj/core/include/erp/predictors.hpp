#pragma once

#include <span>
#include <string>
#include <vector>

#include "erp/marketdata.hpp"

namespace erp {

/// Moving-average convention for the technical rules.
enum class MaConvention {
  kStandard,  ///< (1/j) sum_{i=0}^{j-1} P_{t-i}
  kLiteral,   ///< (1/j) sum_{i=1}^{j-1} P_{t-i}, as typeset in the source text
};

/// Trailing moving average of length j; leading j-1 entries are NaN.
std::vector<double> moving_average(std::span<const double> x, int j, MaConvention conv = MaConvention::kStandard);

/// 1 when MA_s >= MA_l, else 0. NaN until l observations exist.
std::vector<double> ma_signal(std::span<const double> prices, int s, int l,
                              MaConvention conv = MaConvention::kStandard);

/// 1 when P_t >= P_{t-m}, else 0. NaN for t < m.
std::vector<double> mom_signal(std::span<const double> prices, int m);

/// OBV_t = sum_{k=1}^{t} VOL_k D_k, D_k = +1 if P_k >= P_{k-1} else -1.
/// Entry 0 is NaN (no prior price). Throws ValidationError on a missing
/// volume.
std::vector<double> on_balance_volume(std::span<const double> prices, std::span<const double> volumes);

/// Moving-average cross rule applied to on-balance volume.
std::vector<double> obv_signal(std::span<const double> prices, std::span<const double> volumes, int s, int l,
                               MaConvention conv = MaConvention::kStandard);

/// Named monthly columns over a month axis. NaN marks an unavailable value.
struct ColumnSet {
  std::vector<YearMonth> months;
  std::vector<std::string> names;
  std::vector<std::vector<double>> values;  // one vector per column

  const std::vector<double>& column(const std::string& name) const;
};

/// The 14 macroeconomic predictors in reporting units:
/// DP DY EP DE (logs), ERPV (annualised 12-month std of the premium, as a
/// fraction), BM, NEER (fractions), TBR LTY TMS DYS (annual percent),
/// LTR DRS INFL (monthly percent; INFL lagged one month).
ColumnSet build_macro(const MacroPanel& panel, const PremiumSeries& premium);

/// The 14 technical signals on month-end prices and summed monthly volume.
ColumnSet build_technical(const MonthlyMarket& market, MaConvention conv = MaConvention::kStandard);

const std::vector<std::string>& macro_predictor_names();
const std::vector<std::string>& technical_predictor_names();

/// Aligned 28-column matrix; rows are months where every column is defined.
struct PredictorPanel {
  std::vector<YearMonth> months;
  std::vector<std::string> names;
  Matrix values;            ///< months x 28, macro columns first
  std::size_t dropped = 0;  ///< rows removed for missing history

  static constexpr int kMacroColumns = 14;
  static constexpr int kTechColumns = 14;
  std::size_t size() const { return months.size(); }
};

PredictorPanel build_predictor_panel(const ColumnSet& macro, const ColumnSet& technical);

}  // namespace erp
