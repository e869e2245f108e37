#include "erp/marketdata.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "csv.hpp"
#include "erp/error.hpp"

namespace erp {

using detail::LineReader;
using detail::parse_double;
using detail::split;
using detail::trim;

namespace {

std::ifstream open_or_throw(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

}  // namespace

std::string YearMonth::str() const {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02d", year, month);
  return buf;
}

YearMonth YearMonth::parse(std::string_view text) {
  text = trim(text);
  int y = 0;
  int m = 0;
  bool ok = false;
  if (text.size() == 7 && text[4] == '-') {
    ok = parse_int(text.substr(0, 4), y) && parse_int(text.substr(5, 2), m);
  } else if (text.size() == 6) {
    ok = parse_int(text.substr(0, 4), y) && parse_int(text.substr(4, 2), m);
  }
  if (!ok || m < 1 || m > 12) throw ValidationError("invalid year-month '" + std::string(text) + "'");
  return YearMonth{y, m};
}

YearMonth year_month_of(const Date& d) {
  return YearMonth{static_cast<int>(d.year()), static_cast<int>(static_cast<unsigned>(d.month()))};
}

Date parse_iso_date(std::string_view text) {
  text = trim(text);
  int y = 0;
  int m = 0;
  int d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
      !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
    throw ValidationError("invalid ISO date '" + std::string(text) + "'");
  }
  const Date date{std::chrono::year{y}, std::chrono::month{static_cast<unsigned>(m)},
                  std::chrono::day{static_cast<unsigned>(d)}};
  if (!date.ok()) throw ValidationError("invalid calendar date '" + std::string(text) + "'");
  return date;
}

std::string format_iso_date(const Date& d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()),
                static_cast<unsigned>(d.month()), static_cast<unsigned>(d.day()));
  return buf;
}

// ---------------------------------------------------------------------------
// Daily prices

void DailySeries::validate() const {
  if (dates.size() != close.size() || dates.size() != volume.size())
    throw ValidationError("daily series: column lengths differ");
  if (dates.size() < 2) throw ValidationError("daily series: need at least 2 rows");
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (!(close[i] > 0.0) || !std::isfinite(close[i]))
      throw ValidationError("daily series: non-positive price on " + format_iso_date(dates[i]));
    if (volume[i] && *volume[i] < 0.0)
      throw ValidationError("daily series: negative volume on " + format_iso_date(dates[i]));
    if (i > 0) {
      if (dates[i] == dates[i - 1])
        throw ValidationError("daily series: duplicate date " + format_iso_date(dates[i]));
      if (dates[i] < dates[i - 1])
        throw ValidationError("daily series: dates out of order at " + format_iso_date(dates[i]));
    }
  }
}

DailySeries read_daily_prices(std::istream& in, const std::string& source) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError(source, 0, "empty file");
  const auto header = split(line);
  if (header.size() < 2 || header.size() > 3 || header[0] != "date" || header[1] != "close" ||
      (header.size() == 3 && header[2] != "volume")) {
    throw ParseError(source, reader.line_no(), "expected header 'date,close,volume'");
  }
  DailySeries s;
  while (reader.next(line)) {
    const auto f = split(line);
    if (f.size() < 2 || f.size() > header.size())
      throw ParseError(source, reader.line_no(), "expected " + std::to_string(header.size()) + " fields");
    Date date;
    try {
      date = parse_iso_date(f[0]);
    } catch (const ValidationError& e) {
      throw ParseError(source, reader.line_no(), e.what());
    }
    const auto close = parse_double(f[1]);
    if (!close) throw ParseError(source, reader.line_no(), "invalid close '" + std::string(f[1]) + "'");
    std::optional<double> volume;
    if (f.size() == 3 && !f[2].empty()) {
      volume = parse_double(f[2]);
      if (!volume) throw ParseError(source, reader.line_no(), "invalid volume '" + std::string(f[2]) + "'");
    }
    s.dates.push_back(date);
    s.close.push_back(*close);
    s.volume.push_back(volume);
  }
  s.validate();
  return s;
}

DailySeries load_daily_prices(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_daily_prices(in, path.string());
}

void write_daily_prices(std::ostream& out, const DailySeries& series) {
  out << "date,close,volume\n";
  // Shortest representation that parses back to the same double.
  auto shortest = [](double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  };
  for (std::size_t i = 0; i < series.size(); ++i) {
    out << format_iso_date(series.dates[i]) << ',' << shortest(series.close[i]) << ',';
    if (series.volume[i]) out << shortest(*series.volume[i]);
    out << '\n';
  }
}

ReturnSeries daily_log_returns(const DailySeries& prices) {
  if (prices.size() < 2) throw InsufficientDataError("daily_log_returns: need at least 2 prices");
  ReturnSeries r;
  r.dates.assign(prices.dates.begin() + 1, prices.dates.end());
  r.values.resize(prices.size() - 1);
  for (std::size_t i = 0; i + 1 < prices.size(); ++i)
    r.values[i] = std::log(prices.close[i + 1] / prices.close[i]);
  return r;
}

MonthlyMarket monthly_market(const DailySeries& daily) {
  MonthlyMarket m;
  for (std::size_t i = 0; i < daily.size(); ++i) {
    const YearMonth ym = year_month_of(daily.dates[i]);
    const double vol = daily.volume[i] ? *daily.volume[i] : kMissing;
    if (m.months.empty() || m.months.back() != ym) {
      m.months.push_back(ym);
      m.close.push_back(daily.close[i]);
      m.volume.push_back(vol);
    } else {
      m.close.back() = daily.close[i];
      m.volume.back() += vol;  // NaN propagates
    }
  }
  return m;
}

// ---------------------------------------------------------------------------
// Macro panel

const std::vector<std::string>& macro_required_columns() {
  static const std::vector<std::string> cols = {"Index", "D12", "E12",  "bm",    "tbl",  "AAA", "BAA",
                                                "lty",   "ntis", "Rfree", "infl", "ltr", "corpr"};
  return cols;
}

const std::vector<double>& MacroPanel::column(const std::string& name) const {
  const auto it = columns.find(name);
  if (it == columns.end()) throw SchemaError("macro panel: missing column '" + name + "'");
  return it->second;
}

MacroPanel read_macro_panel(std::istream& in, const std::string& source) {
  LineReader reader(in);
  std::string line;
  if (!reader.next(line)) throw ParseError(source, 0, "empty file");
  const auto header_views = split(line);
  std::vector<std::string> header(header_views.begin(), header_views.end());
  if (header.empty() || header[0] != "yyyymm")
    throw ParseError(source, reader.line_no(), "first column must be 'yyyymm'");
  for (const auto& req : macro_required_columns()) {
    if (std::find(header.begin(), header.end(), req) == header.end())
      throw SchemaError(source + ": missing column '" + req + "'");
  }
  auto is_required = [](const std::string& name) {
    const auto& req = macro_required_columns();
    return std::find(req.begin(), req.end(), name) != req.end();
  };

  MacroPanel panel;
  std::vector<std::vector<double>> values(header.size());
  std::vector<bool> extra_ok(header.size(), true);
  while (reader.next(line)) {
    const auto f = split(line);
    if (f.size() != header.size())
      throw ParseError(source, reader.line_no(), "expected " + std::to_string(header.size()) + " fields");
    YearMonth ym;
    try {
      ym = YearMonth::parse(f[0]);
    } catch (const ValidationError& e) {
      throw ParseError(source, reader.line_no(), e.what());
    }
    if (!panel.months.empty() && ym <= panel.months.back()) {
      throw ValidationError(source + ":" + std::to_string(reader.line_no()) + ": month " + ym.str() +
                            (ym == panel.months.back() ? " duplicated" : " out of order"));
    }
    panel.months.push_back(ym);
    for (std::size_t c = 1; c < header.size(); ++c) {
      const auto v = parse_double(f[c]);
      if (!v) {
        if (is_required(header[c])) {
          throw ValidationError(source + ":" + std::to_string(reader.line_no()) + ": missing value for '" +
                                header[c] + "' in " + ym.str());
        }
        extra_ok[c] = false;
      }
      values[c].push_back(v.value_or(kMissing));
    }
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (is_required(header[c]) || extra_ok[c]) panel.columns[header[c]] = std::move(values[c]);
  }
  return panel;
}

MacroPanel load_macro_panel(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_macro_panel(in, path.string());
}

PremiumSeries monthly_equity_premium(const MacroPanel& panel, PremiumConstruction construction) {
  const auto& index = panel.column("Index");
  const auto& rfree = panel.column("Rfree");
  const std::vector<double>* d12 = nullptr;
  if (construction == PremiumConstruction::kTotalReturn) d12 = &panel.column("D12");
  if (panel.size() < 2) throw InsufficientDataError("monthly_equity_premium: need at least 2 months");

  PremiumSeries p;
  for (std::size_t t = 1; t < panel.size(); ++t) {
    const double payout = d12 ? (*d12)[t] / 12.0 : 0.0;
    const double gross = (index[t] + payout) / index[t - 1];
    if (!(gross > 0.0) || !(1.0 + rfree[t] > 0.0))
      throw ValidationError("monthly_equity_premium: non-positive gross return in " + panel.months[t].str());
    p.months.push_back(panel.months[t]);
    p.values.push_back(100.0 * (std::log(gross) - std::log1p(rfree[t])));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Recessions

bool RecessionCalendar::contains(YearMonth m) const {
  return std::any_of(intervals.begin(), intervals.end(),
                     [m](const auto& iv) { return iv.first <= m && m <= iv.second; });
}

Mask RecessionCalendar::mask(const std::vector<YearMonth>& months) const {
  Mask out(months.size());
  for (std::size_t i = 0; i < months.size(); ++i) out[i] = contains(months[i]);
  return out;
}

RecessionCalendar read_recessions(std::istream& in, const std::string& source) {
  LineReader reader(in);
  std::string line;
  RecessionCalendar cal;
  if (!reader.next(line)) return cal;
  const auto header = split(line);
  if (header.size() != 2 || header[0] != "start" || header[1] != "end")
    throw ParseError(source, reader.line_no(), "expected header 'start,end'");
  while (reader.next(line)) {
    const auto f = split(line);
    if (f.size() != 2) throw ParseError(source, reader.line_no(), "expected 2 fields");
    YearMonth a;
    YearMonth b;
    try {
      a = YearMonth::parse(f[0]);
      b = YearMonth::parse(f[1]);
    } catch (const ValidationError& e) {
      throw ParseError(source, reader.line_no(), e.what());
    }
    if (b < a) throw ValidationError(source + ": inverted interval " + a.str() + ".." + b.str());
    if (!cal.intervals.empty()) {
      const auto& last = cal.intervals.back();
      if (a <= last.second) {
        throw ValidationError(source + ": interval " + a.str() + ".." + b.str() + " overlaps or precedes " +
                              last.first.str() + ".." + last.second.str());
      }
    }
    cal.intervals.emplace_back(a, b);
  }
  return cal;
}

RecessionCalendar load_recessions(const std::filesystem::path& path) {
  auto in = open_or_throw(path);
  return read_recessions(in, path.string());
}

}  // namespace erp
