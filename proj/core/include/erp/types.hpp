#pragma once

#include <chrono>
#include <compare>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace erp {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Boolean selector over a monthly (or forecast) timeline.
using Mask = std::vector<bool>;

using Date = std::chrono::year_month_day;

/// Calendar month key. Ordered, hashable through index().
struct YearMonth {
  int year = 1970;
  int month = 1;  // 1..12

  constexpr int index() const { return year * 12 + (month - 1); }
  static constexpr YearMonth from_index(int i) {
    const int y = i >= 0 ? i / 12 : -((-i + 11) / 12);
    return YearMonth{y, i - y * 12 + 1};
  }
  constexpr YearMonth next() const { return from_index(index() + 1); }
  constexpr YearMonth prev() const { return from_index(index() - 1); }

  friend constexpr auto operator<=>(const YearMonth& a, const YearMonth& b) {
    return a.index() <=> b.index();
  }
  friend constexpr bool operator==(const YearMonth& a, const YearMonth& b) = default;

  /// "YYYY-MM".
  std::string str() const;
  /// Accepts "YYYY-MM" and "YYYYMM".
  static YearMonth parse(std::string_view text);
};

YearMonth year_month_of(const Date& d);

/// Strict ISO "YYYY-MM-DD"; throws ValidationError on anything else.
Date parse_iso_date(std::string_view text);
std::string format_iso_date(const Date& d);

/// Short-hand for NaN, used as the "absent" marker in numeric series.
inline constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return v != v; }

}  // namespace erp
