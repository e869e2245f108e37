#include "erp/evaluate.hpp"

#include <cmath>

#include "erp/error.hpp"
#include "erp/stats.hpp"

namespace erp {

namespace {

void require_aligned(std::size_t a, std::size_t b, std::size_t m, const char* what) {
  if (a != b || a != m) throw SizeError(std::string(what) + ": series and mask lengths differ");
}

ForecastSet make_set(const std::vector<YearMonth>& months, std::span<const double> y, std::size_t first,
                     std::size_t min_window, std::string id) {
  if (months.size() != y.size()) throw SizeError("forecast: months and y differ in length");
  if (first < 1 || first >= y.size()) throw SizeError("forecast: first target outside the sample");
  if (first - 1 < min_window)
    throw InsufficientDataError("forecast: first target leaves " + std::to_string(first - 1) +
                                " estimation months, need " + std::to_string(min_window));
  ForecastSet fs;
  fs.id = std::move(id);
  const auto ha = historical_average(y, first);
  for (std::size_t s = first; s < y.size(); ++s) {
    fs.months.push_back(months[s]);
    fs.actual.push_back(y[s]);
    fs.ha.push_back(ha[s - first]);
  }
  fs.model.assign(fs.size(), kMissing);
  fs.components.assign(fs.size(), 0);
  return fs;
}

}  // namespace

std::optional<double> conditional_r2(std::span<const double> actual, std::span<const double> fitted,
                                     const Mask& mask) {
  require_aligned(actual.size(), fitted.size(), mask.size(), "conditional_r2");
  const double mean = stats::mean(actual);
  double num = 0.0;
  double den = 0.0;
  std::size_t n = 0;
  for (std::size_t t = 0; t < actual.size(); ++t) {
    if (!mask[t]) continue;
    ++n;
    num += (actual[t] - fitted[t]) * (actual[t] - fitted[t]);
    den += (actual[t] - mean) * (actual[t] - mean);
  }
  if (n == 0 || den == 0.0) return std::nullopt;
  return 1.0 - num / den;
}

std::vector<double> historical_average(std::span<const double> y, std::size_t first) {
  if (first < 1) throw SizeError("historical_average: first target must be >= 1");
  std::vector<double> out;
  if (first > y.size()) return out;
  double sum = 0.0;
  for (std::size_t i = 0; i < first; ++i) sum += y[i];
  for (std::size_t s = first; s <= y.size(); ++s) {
    out.push_back(sum / static_cast<double>(s));
    if (s < y.size()) sum += y[s];
  }
  return out;
}

ForecastSet recursive_forecast(const std::vector<YearMonth>& months, std::span<const double> y,
                               std::span<const double> x, std::size_t first, std::size_t min_window,
                               std::string id) {
  if (x.size() != y.size()) throw SizeError("recursive_forecast: x and y differ in length");
  ForecastSet fs = make_set(months, y, first, min_window, std::move(id));
  for (std::size_t s = first; s < y.size(); ++s) {
    const auto n = static_cast<Eigen::Index>(s - 1);
    const Vector yy = Eigen::Map<const Vector>(y.data() + 1, n);
    const Matrix xx = Eigen::Map<const Vector>(x.data(), n);
    const std::size_t i = s - first;
    try {
      const OlsFit fit = ols_fit(yy, xx);
      fs.model[i] = fit.coefficients[0] + fit.coefficients[1] * x[s - 1];
      fs.components[i] = 1;
    } catch (const Error&) {
      fs.model[i] = fs.ha[i];
      ++fs.fallbacks;
    }
  }
  return fs;
}

ForecastSet recursive_pc_forecast(const std::vector<YearMonth>& months, std::span<const double> y,
                                  const Matrix& x, std::size_t first, int k_max, std::size_t min_window,
                                  std::string id) {
  if (static_cast<std::size_t>(x.rows()) != y.size()) throw SizeError("recursive_pc_forecast: X and y row counts differ");
  if (k_max < 1) throw ConfigError("recursive_pc_forecast: K_max must be >= 1");
  ForecastSet fs = make_set(months, y, first, min_window, std::move(id));
  for (std::size_t s = first; s < y.size(); ++s) {
    const auto rows = static_cast<Eigen::Index>(s);
    const std::size_t i = s - first;
    std::vector<Eigen::Index> keep;
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const auto col = x.col(c).head(rows - 1);
      if (col.maxCoeff() > col.minCoeff()) keep.push_back(c);
    }
    try {
      if (keep.empty()) throw EstimationError("no varying columns");
      Matrix window(rows, static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j) window.col(static_cast<Eigen::Index>(j)) = x.col(keep[j]).head(rows);
      const int k = std::min<int>(k_max, static_cast<int>(keep.size()));
      const PcaModel pca = pca_extract(window, k);
      const Matrix f = pca.scores(window);
      const Vector yy = Eigen::Map<const Vector>(y.data() + 1, rows - 1);
      const ComponentSelection sel = select_components(yy, f.topRows(rows - 1), k);
      const auto& b = sel.fit.coefficients;
      fs.model[i] = b[0] + f.row(rows - 1).head(sel.k).dot(b.tail(sel.k));
      fs.components[i] = sel.k;
    } catch (const Error&) {
      fs.model[i] = fs.ha[i];
      ++fs.fallbacks;
    }
  }
  return fs;
}

double masked_sse(std::span<const double> a, std::span<const double> b, const Mask& mask) {
  require_aligned(a.size(), b.size(), mask.size(), "masked_sse");
  double s = 0.0;
  for (std::size_t t = 0; t < a.size(); ++t)
    if (mask[t]) s += (a[t] - b[t]) * (a[t] - b[t]);
  return s;
}

std::optional<double> r2_os(const ForecastSet& fs, const Mask& mask) {
  if (mask_count(mask) == 0) return std::nullopt;
  const double den = masked_sse(fs.actual, fs.ha, mask);
  if (den == 0.0) return std::nullopt;
  return 1.0 - masked_sse(fs.actual, fs.model, mask) / den;
}

std::optional<ClarkWest> clark_west(const ForecastSet& fs, const Mask& mask) {
  require_aligned(fs.size(), fs.model.size(), mask.size(), "clark_west");
  std::vector<double> f;
  for (std::size_t t = 0; t < fs.size(); ++t) {
    if (!mask[t]) continue;
    const double e_ha = fs.actual[t] - fs.ha[t];
    const double e_m = fs.actual[t] - fs.model[t];
    const double d = fs.ha[t] - fs.model[t];
    f.push_back(e_ha * e_ha - (e_m * e_m - d * d));
  }
  if (f.size() < 10) return std::nullopt;
  const Eigen::Index n = static_cast<Eigen::Index>(f.size());
  const Vector fv = Eigen::Map<const Vector>(f.data(), n);
  const Vector u = fv.array() - fv.mean();
  if (!(u.cwiseAbs().maxCoeff() > 0.0)) return std::nullopt;
  const Matrix ones = Matrix::Ones(n, 1);
  const Matrix cov = hac_covariance(ones, u, newey_west_default_lag(f.size()));
  if (!(cov(0, 0) > 0.0)) return std::nullopt;
  ClarkWest cw;
  cw.statistic = fv.mean() / std::sqrt(cov(0, 0));
  cw.p_value = stats::normal_upper_tail(cw.statistic);
  return cw;
}

std::string significance_stars(std::optional<double> p) {
  if (!p) return "";
  if (*p < 0.01) return "***";
  if (*p < 0.05) return "**";
  if (*p < 0.10) return "*";
  return "";
}

InSampleRow insample_row(const std::string& name, std::span<const double> target,
                         std::span<const double> predictor, const std::vector<NamedMask>& masks,
                         const std::optional<BootstrapOptions>& bootstrap) {
  if (target.size() != predictor.size()) throw SizeError("insample_row: target and predictor differ in length");
  const auto n = static_cast<Eigen::Index>(target.size());
  const Vector y = Eigen::Map<const Vector>(target.data(), n);
  const Matrix x = Eigen::Map<const Vector>(predictor.data(), n);
  const OlsFit fit = ols_fit(y, x, {name});
  InSampleRow row;
  row.predictor = name;
  row.nobs = fit.nobs;
  row.slope = fit.coefficients[1];
  row.hac_t = fit.hac_tstats[1];
  row.r2 = fit.r2;
  if (bootstrap) row.bootstrap_p = wild_bootstrap_pvalue(y, x, 0, *bootstrap);
  const std::vector<double> fitted(fit.fitted.data(), fit.fitted.data() + n);
  for (const auto& [label, mask] : masks) row.conditional.emplace_back(label, conditional_r2(target, fitted, mask));
  return row;
}

OosRow oos_row(const ForecastSet& fs, const std::vector<NamedMask>& masks) {
  OosRow row;
  row.model = fs.id;
  row.fallbacks = fs.fallbacks;
  for (const auto& [label, mask] : masks) {
    OosCell c;
    c.mask = label;
    c.months = mask_count(mask);
    c.r2_os = r2_os(fs, mask);
    c.cw = clark_west(fs, mask);
    row.cells.push_back(std::move(c));
  }
  return row;
}

}  // namespace erp
