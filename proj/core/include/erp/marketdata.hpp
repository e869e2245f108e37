#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "erp/types.hpp"

namespace erp {

/// Daily closing prices (currency units) and optional share volume.
/// Dates strictly increasing, prices strictly positive, at least two rows.
struct DailySeries {
  std::vector<Date> dates;
  std::vector<double> close;
  std::vector<std::optional<double>> volume;

  std::size_t size() const { return dates.size(); }
  void validate() const;
};

/// Dated daily log returns in natural-log units, r(d) = log(p_d / p_{d-1}).
struct ReturnSeries {
  std::vector<Date> dates;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// Goyal-style monthly panel keyed by year-month. Yields are annual fractions,
/// Rfree/infl/ltr/corpr are monthly fractions.
struct MacroPanel {
  std::vector<YearMonth> months;
  std::map<std::string, std::vector<double>> columns;

  std::size_t size() const { return months.size(); }
  bool has(const std::string& name) const { return columns.count(name) != 0; }
  /// Throws SchemaError when absent.
  const std::vector<double>& column(const std::string& name) const;
};

/// Inclusive (start, end) month intervals, ordered and non-overlapping.
struct RecessionCalendar {
  std::vector<std::pair<YearMonth, YearMonth>> intervals;

  bool contains(YearMonth m) const;
  Mask mask(const std::vector<YearMonth>& months) const;
};

/// Monthly log equity risk premium in percent.
struct PremiumSeries {
  std::vector<YearMonth> months;
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
};

/// How the monthly index return entering the premium is formed.
enum class PremiumConstruction {
  kTotalReturn,  ///< log((Index_t + D12_t / 12) / Index_{t-1})
  kPriceReturn,  ///< log(Index_t / Index_{t-1})
};

/// Column names required in the monthly macro CSV.
const std::vector<std::string>& macro_required_columns();

DailySeries read_daily_prices(std::istream& in, const std::string& source = "<stream>");
DailySeries load_daily_prices(const std::filesystem::path& path);
/// Writes `date,close,volume` with round-trip precision.
void write_daily_prices(std::ostream& out, const DailySeries& series);

ReturnSeries daily_log_returns(const DailySeries& prices);

MacroPanel read_macro_panel(std::istream& in, const std::string& source = "<stream>");
MacroPanel load_macro_panel(const std::filesystem::path& path);

PremiumSeries monthly_equity_premium(const MacroPanel& panel,
                                     PremiumConstruction construction = PremiumConstruction::kTotalReturn);

RecessionCalendar read_recessions(std::istream& in, const std::string& source = "<stream>");
RecessionCalendar load_recessions(const std::filesystem::path& path);

/// Daily series collapsed to calendar months: last close of the month and the
/// summed volume (NaN when any day in the month lacks volume).
struct MonthlyMarket {
  std::vector<YearMonth> months;
  std::vector<double> close;
  std::vector<double> volume;

  std::size_t size() const { return months.size(); }
};

MonthlyMarket monthly_market(const DailySeries& daily);

}  // namespace erp
