#include "erp/predictors.hpp"

#include <cmath>
#include <map>

#include "erp/error.hpp"
#include "erp/stats.hpp"

namespace erp {

std::vector<double> moving_average(std::span<const double> x, int j, MaConvention conv) {
  if (j < 1) throw ConfigError("moving_average: length must be >= 1");
  std::vector<double> out(x.size(), kMissing);
  const auto uj = static_cast<std::size_t>(j);
  const std::size_t first_term = conv == MaConvention::kStandard ? 0 : 1;
  for (std::size_t t = uj - 1; t < x.size(); ++t) {
    double s = 0.0;
    for (std::size_t i = first_term; i < uj; ++i) s += x[t - i];
    out[t] = s / j;
  }
  return out;
}

namespace {

std::vector<double> cross_signal(std::span<const double> x, int s, int l, MaConvention conv) {
  if (s >= l) throw ConfigError("moving-average rule needs s < l");
  const auto short_ma = moving_average(x, s, conv);
  const auto long_ma = moving_average(x, l, conv);
  std::vector<double> out(x.size(), kMissing);
  for (std::size_t t = 0; t < x.size(); ++t) {
    if (is_missing(short_ma[t]) || is_missing(long_ma[t])) continue;
    out[t] = short_ma[t] >= long_ma[t] ? 1.0 : 0.0;
  }
  return out;
}

}  // namespace

std::vector<double> ma_signal(std::span<const double> prices, int s, int l, MaConvention conv) {
  return cross_signal(prices, s, l, conv);
}

std::vector<double> mom_signal(std::span<const double> prices, int m) {
  if (m < 1) throw ConfigError("mom_signal: m must be >= 1");
  std::vector<double> out(prices.size(), kMissing);
  for (std::size_t t = static_cast<std::size_t>(m); t < prices.size(); ++t)
    out[t] = prices[t] >= prices[t - m] ? 1.0 : 0.0;
  return out;
}

std::vector<double> on_balance_volume(std::span<const double> prices, std::span<const double> volumes) {
  if (prices.size() != volumes.size()) throw SizeError("on_balance_volume: prices and volumes differ in length");
  std::vector<double> obv(prices.size(), kMissing);
  double acc = 0.0;
  for (std::size_t k = 1; k < prices.size(); ++k) {
    if (is_missing(volumes[k])) throw ValidationError("on_balance_volume: missing volume at month " + std::to_string(k));
    acc += volumes[k] * (prices[k] - prices[k - 1] >= 0.0 ? 1.0 : -1.0);
    obv[k] = acc;
  }
  return obv;
}

std::vector<double> obv_signal(std::span<const double> prices, std::span<const double> volumes, int s, int l,
                               MaConvention conv) {
  const auto obv = on_balance_volume(prices, volumes);
  if (obv.size() <= 1) return std::vector<double>(obv.size(), kMissing);
  auto tail = cross_signal(std::span<const double>(obv).subspan(1), s, l, conv);
  tail.insert(tail.begin(), kMissing);
  return tail;
}

const std::vector<double>& ColumnSet::column(const std::string& name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return values[i];
  throw SchemaError("no column '" + name + "'");
}

const std::vector<std::string>& macro_predictor_names() {
  static const std::vector<std::string> n = {"DP",  "DY",  "EP",  "DE",  "ERPV", "BM",  "NEER",
                                             "TBR", "LTY", "LTR", "TMS", "DYS",  "DRS", "INFL"};
  return n;
}

const std::vector<std::string>& technical_predictor_names() {
  static const std::vector<std::string> n = {"MA_1_9",  "MA_1_12",  "MA_2_9",  "MA_2_12",  "MA_3_9",
                                             "MA_3_12", "MOM_9",    "MOM_12",  "VOL_1_9",  "VOL_1_12",
                                             "VOL_2_9", "VOL_2_12", "VOL_3_9", "VOL_3_12"};
  return n;
}

ColumnSet build_macro(const MacroPanel& panel, const PremiumSeries& premium) {
  const auto& index = panel.column("Index");
  const auto& d12 = panel.column("D12");
  const auto& e12 = panel.column("E12");
  const auto& bm = panel.column("bm");
  const auto& tbl = panel.column("tbl");
  const auto& aaa = panel.column("AAA");
  const auto& baa = panel.column("BAA");
  const auto& lty = panel.column("lty");
  const auto& ntis = panel.column("ntis");
  const auto& infl = panel.column("infl");
  const auto& ltr = panel.column("ltr");
  const auto& corpr = panel.column("corpr");
  const std::size_t n = panel.size();

  // Premium by month for ERPV.
  std::map<int, double> prem;
  for (std::size_t i = 0; i < premium.size(); ++i) prem[premium.months[i].index()] = premium.values[i] / 100.0;

  ColumnSet out;
  out.months = panel.months;
  out.names = macro_predictor_names();
  out.values.assign(out.names.size(), std::vector<double>(n, kMissing));
  auto& v = out.values;
  std::vector<double> window;
  for (std::size_t t = 0; t < n; ++t) {
    v[0][t] = std::log(d12[t]) - std::log(index[t]);
    if (t > 0) v[1][t] = std::log(d12[t]) - std::log(index[t - 1]);
    v[2][t] = std::log(e12[t]) - std::log(index[t]);
    v[3][t] = std::log(d12[t]) - std::log(e12[t]);

    window.clear();
    for (int k = 0; k < 12; ++k) {
      const auto it = prem.find(panel.months[t].index() - k);
      if (it == prem.end()) break;
      window.push_back(it->second);
    }
    if (window.size() == 12) v[4][t] = std::sqrt(12.0) * stats::sample_stddev(window);

    v[5][t] = bm[t];
    v[6][t] = ntis[t];
    v[7][t] = 100.0 * tbl[t];
    v[8][t] = 100.0 * lty[t];
    v[9][t] = 100.0 * ltr[t];
    v[10][t] = 100.0 * (lty[t] - tbl[t]);
    v[11][t] = 100.0 * (baa[t] - aaa[t]);
    v[12][t] = 100.0 * (corpr[t] - ltr[t]);
    if (t > 0) v[13][t] = 100.0 * infl[t - 1];
  }
  return out;
}

ColumnSet build_technical(const MonthlyMarket& market, MaConvention conv) {
  ColumnSet out;
  out.months = market.months;
  out.names = technical_predictor_names();
  const std::span<const double> p(market.close);
  const std::span<const double> vol(market.volume);
  for (int s : {1, 2, 3})
    for (int l : {9, 12}) out.values.push_back(ma_signal(p, s, l, conv));
  out.values.push_back(mom_signal(p, 9));
  out.values.push_back(mom_signal(p, 12));
  for (int s : {1, 2, 3})
    for (int l : {9, 12}) out.values.push_back(obv_signal(p, vol, s, l, conv));
  return out;
}

PredictorPanel build_predictor_panel(const ColumnSet& macro, const ColumnSet& technical) {
  std::map<int, std::size_t> tech_row;
  for (std::size_t i = 0; i < technical.months.size(); ++i) tech_row[technical.months[i].index()] = i;

  PredictorPanel panel;
  panel.names = macro.names;
  panel.names.insert(panel.names.end(), technical.names.begin(), technical.names.end());
  const auto ncol = static_cast<Eigen::Index>(panel.names.size());

  std::vector<std::vector<double>> rows;
  for (std::size_t i = 0; i < macro.months.size(); ++i) {
    const auto it = tech_row.find(macro.months[i].index());
    std::vector<double> row;
    row.reserve(panel.names.size());
    for (const auto& col : macro.values) row.push_back(col[i]);
    for (const auto& col : technical.values) row.push_back(it == tech_row.end() ? kMissing : col[it->second]);
    bool complete = true;
    for (double x : row) complete = complete && !is_missing(x);
    if (!complete) {
      ++panel.dropped;
      continue;
    }
    panel.months.push_back(macro.months[i]);
    rows.push_back(std::move(row));
  }
  panel.values.resize(static_cast<Eigen::Index>(rows.size()), ncol);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (Eigen::Index c = 0; c < ncol; ++c) panel.values(static_cast<Eigen::Index>(r), c) = rows[r][c];
  return panel;
}

}  // namespace erp
