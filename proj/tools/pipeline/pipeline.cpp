#include "pipeline/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "erp/error.hpp"
#include "erp/regress.hpp"
#include "erp/stats.hpp"

#ifndef ERP_VERSION_STRING
#define ERP_VERSION_STRING "unknown"
#endif

namespace erp::pipeline {

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

std::string num(const std::optional<double>& v) { return v ? num(*v) : "NA"; }

std::string pct(const std::optional<double>& v) { return v ? num(100.0 * *v) : "NA"; }

std::string sha256_hex(const std::string& data) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 15];
  }
  return out;
}

template <class F>
auto staged(const char* tag, F&& f) -> decltype(f()) {
  try {
    return f();
  } catch (const StageError&) {
    throw;
  } catch (const std::exception& e) {
    throw StageError(tag, e.what());
  }
}

const std::vector<std::string> kOosMasks = {"all", "exp", "rec", "peak", "stable_plus", "trough", "stable_minus"};
const std::vector<std::string> kPcModels = {"PC-ECON", "PC-TECH", "PC-ALL"};

std::string group_of(std::size_t column) { return column < 14 ? "ECON" : "TECH"; }

SummaryRow summarize(int table, const std::string& name, const std::vector<double>& values) {
  std::vector<double> v;
  for (double x : values)
    if (!is_missing(x)) v.push_back(x);
  SummaryRow r;
  r.table = table;
  r.variable = name;
  r.n = v.size();
  if (v.empty()) {
    r.mean = r.sd = r.min = r.max = r.ac1 = kMissing;
    return r;
  }
  r.mean = stats::mean(v);
  r.sd = stats::sample_stddev(v);
  r.min = *std::min_element(v.begin(), v.end());
  r.max = *std::max_element(v.begin(), v.end());
  r.ac1 = v.size() > 2 ? stats::autocorrelation(v, 1) : kMissing;
  return r;
}

Mask month_filter(const std::vector<YearMonth>& months, YearMonth split, bool before) {
  Mask m(months.size());
  for (std::size_t t = 0; t < months.size(); ++t) m[t] = before ? months[t] < split : !(months[t] < split);
  return m;
}

}  // namespace

std::optional<Stage> parse_stage(const std::string& name) {
  static const std::map<std::string, Stage> m = {
      {"ingest", Stage::kIngest},     {"garch", Stage::kGarch},       {"hurst", Stage::kHurst},
      {"regime", Stage::kRegime},     {"predictors", Stage::kPredictors}, {"insample", Stage::kInsample},
      {"oos", Stage::kOos},           {"allocate", Stage::kAllocate}, {"report", Stage::kReport},
      {"all", Stage::kReport}};
  const auto it = m.find(name);
  if (it == m.end()) return std::nullopt;
  return it->second;
}

const char* stage_name(Stage s) {
  switch (s) {
    case Stage::kIngest: return "ingest";
    case Stage::kGarch: return "garch";
    case Stage::kHurst: return "hurst";
    case Stage::kRegime: return "regime";
    case Stage::kPredictors: return "predictors";
    case Stage::kInsample: return "insample";
    case Stage::kOos: return "oos";
    case Stage::kAllocate: return "allocate";
    case Stage::kReport: return "report";
  }
  return "?";
}

struct Pipeline::Cache {
  std::optional<DailySeries> daily;
  std::optional<ReturnSeries> returns;
  std::optional<MacroPanel> macro;
  std::optional<RecessionCalendar> recessions;
  std::optional<PremiumSeries> premium;
  std::optional<GarchParams> garch;
  bool garch_converged = true;
  std::optional<HurstSeries> hurst;
  std::optional<BullishSeries> bullish;
  std::optional<Shocks> shocks;
  std::optional<PredictorPanel> predictors;
  std::optional<Timeline> timeline;
  std::optional<std::vector<InSampleRow>> insample;
  std::optional<std::vector<ForecastSet>> forecasts;
  std::optional<std::vector<OosRow>> oos;
  std::optional<std::vector<AllocationRow>> allocation;
  std::optional<std::vector<HoldingCell>> holding;
  std::optional<std::vector<RobustnessRow>> robustness;
  std::optional<std::vector<SummaryRow>> summary;
  std::vector<std::string> stages;
};

Pipeline::Pipeline(PipelineConfig cfg, AllocationOverrides overrides)
    : cfg_(std::move(cfg)), overrides_(std::move(overrides)), cache_(std::make_shared<Cache>()) {
  if (overrides_.kappa) cfg_.allocation.kappa = *overrides_.kappa;
  if (overrides_.cost_bps) cfg_.allocation.cost_bps = *overrides_.cost_bps;
  staged("allocate", [&] {
    cfg_.allocation.validate();
    return 0;
  });
  for (const auto& m : overrides_.masks)
    if (std::find(kOosMasks.begin(), kOosMasks.end(), m) == kOosMasks.end())
      throw StageError("allocate", "unknown mask '" + m + "'");
}

void Pipeline::write_file(const std::string& name, const std::string& contents) {
  std::filesystem::create_directories(cfg_.output_dir);
  const auto path = cfg_.output_dir / name;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("output", "cannot write " + path.string());
  out << contents;
  if (!out) throw StageError("output", "write failed for " + path.string());
  if (std::find(written_.begin(), written_.end(), name) == written_.end()) written_.push_back(name);
}

// ---------------------------------------------------------------- ingest

const DailySeries& Pipeline::daily() {
  if (!cache_->daily) cache_->daily = staged("daily", [&] { return load_daily_prices(cfg_.daily); });
  return *cache_->daily;
}

const MacroPanel& Pipeline::macro() {
  if (!cache_->macro) cache_->macro = staged("macro", [&] { return load_macro_panel(cfg_.macro); });
  return *cache_->macro;
}

const RecessionCalendar& Pipeline::recessions() {
  if (!cache_->recessions)
    cache_->recessions = staged("recessions", [&] { return load_recessions(cfg_.recessions); });
  return *cache_->recessions;
}

const PremiumSeries& Pipeline::premium() {
  if (!cache_->premium) {
    const auto& panel = macro();
    cache_->premium = staged("macro", [&] { return monthly_equity_premium(panel, cfg_.premium); });
    std::string csv = "month,premium\n";
    for (std::size_t i = 0; i < cache_->premium->size(); ++i)
      csv += cache_->premium->months[i].str() + "," + num(cache_->premium->values[i]) + "\n";
    write_file("premium.csv", csv);
  }
  return *cache_->premium;
}

// ---------------------------------------------------------------- garch / hurst

const GarchParams& Pipeline::garch() {
  if (!cache_->garch) {
    const auto& d = daily();
    staged("garch", [&] {
      cache_->returns = daily_log_returns(d);
      try {
        cache_->garch = fit_garch11(*cache_->returns);
      } catch (const GarchFitError& e) {
        std::cerr << "erp: [garch] warning: " << e.what() << "; using the best iterate\n";
        cache_->garch = e.best();
        cache_->garch_converged = false;
      }
      return 0;
    });
    const auto& g = *cache_->garch;
    nlohmann::ordered_json j;
    j["mu"] = g.mu;
    j["omega"] = g.omega;
    j["alpha"] = g.alpha;
    j["beta"] = g.beta;
    j["loglik"] = g.loglik;
    j["converged"] = cache_->garch_converged;
    write_file("garch.json", j.dump(2) + "\n");
  }
  return *cache_->garch;
}

const HurstSeries& Pipeline::hurst() {
  if (!cache_->hurst) {
    const auto& params = garch();
    cache_->hurst = staged("hurst", [&] {
      const ReturnSeries filtered = filter_returns(*cache_->returns, params);
      return local_hurst(filtered, cfg_.hurst, cfg_.threads);
    });
    const auto& h = *cache_->hurst;
    std::string csv = "date,h,r2\n";
    std::string fig = "date,h\n";
    for (std::size_t i = 0; i < h.size(); ++i) {
      const std::string date = format_iso_date(h.dates[i]);
      csv += date + "," + num(h.h[i]) + "," + num(h.r2[i]) + "\n";
      fig += date + "," + num(h.h[i]) + "\n";
    }
    write_file("hurst.csv", csv);
    write_file("fig1_hurst.csv", fig);
  }
  return *cache_->hurst;
}

// ---------------------------------------------------------------- regime

const BullishSeries& Pipeline::bullish() {
  if (!cache_->bullish) {
    const auto& h = hurst();
    cache_->bullish = staged("regime", [&] { return bullish_ratio(*cache_->returns, h, cfg_.h_threshold); });
    cache_->shocks = staged("regime", [&] { return detect_shocks(cache_->bullish->bu, cfg_.shocks); });
    const auto& b = *cache_->bullish;
    std::vector<int> peak(b.size(), 0), trough(b.size(), 0);
    for (auto t : cache_->shocks->peaks) peak[t] = 1;
    for (auto t : cache_->shocks->troughs) trough[t] = 1;
    std::string csv = "month,b,bu,peak,trough\n";
    std::string fig = "month,bu\n";
    for (std::size_t t = 0; t < b.size(); ++t) {
      csv += b.months[t].str() + "," + num(b.b[t]) + "," + num(b.bu[t]) + "," + std::to_string(peak[t]) + "," +
             std::to_string(trough[t]) + "\n";
      fig += b.months[t].str() + "," + num(b.bu[t]) + "\n";
    }
    write_file("regime.csv", csv);
    write_file("fig2_bullish.csv", fig);
  }
  return *cache_->bullish;
}

const Shocks& Pipeline::shocks() {
  bullish();
  return *cache_->shocks;
}

// ---------------------------------------------------------------- predictors

const PredictorPanel& Pipeline::predictors() {
  if (!cache_->predictors) {
    const auto& prem = premium();
    const auto& d = daily();
    cache_->predictors = staged("predictors", [&] {
      const ColumnSet m = build_macro(macro(), prem);
      const ColumnSet t = build_technical(monthly_market(d), cfg_.ma_convention);
      return build_predictor_panel(m, t);
    });
    const auto& p = *cache_->predictors;
    if (p.dropped > 0)
      std::cerr << "erp: [predictors] dropped " << p.dropped << " month(s) with incomplete predictor history\n";
    std::string csv = "month";
    for (const auto& n : p.names) csv += "," + n;
    csv += "\n";
    for (Eigen::Index r = 0; r < p.values.rows(); ++r) {
      csv += p.months[static_cast<std::size_t>(r)].str();
      for (Eigen::Index c = 0; c < p.values.cols(); ++c) csv += "," + num(p.values(r, c));
      csv += "\n";
    }
    write_file("predictors.csv", csv);
  }
  return *cache_->predictors;
}

const Timeline& Pipeline::timeline() {
  if (!cache_->timeline) {
    const auto& p = predictors();
    const auto& prem = premium();
    cache_->timeline = staged("predictors", [&] {
      std::map<int, double> pm;
      for (std::size_t i = 0; i < prem.size(); ++i) pm[prem.months[i].index()] = prem.values[i];
      std::map<int, double> rf;
      const auto& rfree = macro().column("Rfree");
      for (std::size_t i = 0; i < macro().size(); ++i) rf[macro().months[i].index()] = rfree[i];
      // Keep the last run of consecutive months with a premium.
      std::size_t begin = 0;
      for (std::size_t i = 0; i < p.size(); ++i) {
        const bool gap = i > 0 && p.months[i].index() != p.months[i - 1].index() + 1;
        if (gap || !pm.count(p.months[i].index())) begin = pm.count(p.months[i].index()) ? i : i + 1;
      }
      if (p.size() - begin < 3) throw InsufficientDataError("fewer than 3 consecutive months with complete predictors");
      Timeline tl;
      tl.names = p.names;
      tl.x = p.values.bottomRows(static_cast<Eigen::Index>(p.size() - begin));
      for (std::size_t i = begin; i < p.size(); ++i) {
        tl.months.push_back(p.months[i]);
        tl.premium.push_back(pm.at(p.months[i].index()));
        tl.rf.push_back(rf.at(p.months[i].index()));
      }
      return tl;
    });
  }
  return *cache_->timeline;
}

// ---------------------------------------------------------------- in-sample

const std::vector<InSampleRow>& Pipeline::insample() {
  if (cache_->insample) return *cache_->insample;
  const auto& tl = timeline();
  const auto& b = bullish();
  const auto& sh = shocks();
  const auto& rec = recessions();
  cache_->insample = staged("insample", [&] {
    const std::size_t n = tl.size() - 1;
    std::vector<YearMonth> targets(tl.months.begin() + 1, tl.months.end());
    std::vector<double> y(tl.premium.begin() + 1, tl.premium.end());
    std::vector<YearMonth> peaks, troughs;
    for (auto t : sh.peaks) peaks.push_back(b.months[t]);
    for (auto t : sh.troughs) troughs.push_back(b.months[t]);
    const Mask peak = offset_mask(targets, peaks, -cfg_.insample_before, cfg_.insample_after);
    const Mask trough = offset_mask(targets, troughs, -cfg_.insample_before, cfg_.insample_after);
    const Mask recession = rec.mask(targets);
    const std::vector<NamedMask> masks = {{"exp", mask_not(recession)}, {"rec", recession},
                                          {"peak", peak},               {"stable_plus", mask_not(peak)},
                                          {"trough", trough},           {"stable_minus", mask_not(trough)}};
    std::vector<InSampleRow> rows;
    for (Eigen::Index c = 0; c < tl.x.cols(); ++c) {
      std::vector<double> x(tl.x.col(c).data(), tl.x.col(c).data() + n);
      BootstrapOptions bo;
      bo.replications = cfg_.bootstrap_replications;
      bo.seed = stats::derive_seed(cfg_.seed, static_cast<std::uint64_t>(c));
      bo.threads = std::max(1u, cfg_.threads);
      try {
        rows.push_back(insample_row(tl.names[static_cast<std::size_t>(c)], y, x, masks, bo));
      } catch (const EstimationError& e) {
        InSampleRow r;
        r.predictor = tl.names[static_cast<std::size_t>(c)];
        r.nobs = n;
        r.slope = r.hac_t = r.r2 = kMissing;
        for (const auto& [label, m] : masks) r.conditional.emplace_back(label, std::nullopt);
        std::cerr << "erp: [insample] " << r.predictor << ": " << e.what() << "\n";
        rows.push_back(std::move(r));
      }
    }
    const Vector yv = Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(n));
    for (std::size_t g = 0; g < kPcModels.size(); ++g) {
      const Eigen::Index lo = g == 1 ? 14 : 0;
      const Eigen::Index hi = g == 0 ? 14 : 28;
      std::vector<Eigen::Index> keep;
      for (Eigen::Index c = lo; c < hi; ++c) {
        const auto col = tl.x.col(c).head(static_cast<Eigen::Index>(n));
        if (col.maxCoeff() > col.minCoeff()) keep.push_back(c);
      }
      InSampleRow r;
      r.predictor = kPcModels[g];
      r.nobs = n;
      Matrix xg(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(keep.size()));
      for (std::size_t j = 0; j < keep.size(); ++j)
        xg.col(static_cast<Eigen::Index>(j)) = tl.x.col(keep[j]).head(static_cast<Eigen::Index>(n));
      const PcRegression pc = pc_regression(yv, xg, cfg_.k_max);
      r.components = pc.pca.k;
      r.slope = pc.fit.coefficients[1];
      r.hac_t = pc.fit.hac_tstats[1];
      r.r2 = pc.fit.r2;
      BootstrapOptions bo;
      bo.replications = cfg_.bootstrap_replications;
      bo.seed = stats::derive_seed(cfg_.seed, 100 + g);
      bo.threads = std::max(1u, cfg_.threads);
      r.bootstrap_p = wild_bootstrap_pvalue(yv, pc.pca.scores(xg), 0, bo);
      const std::vector<double> fitted(pc.fit.fitted.data(), pc.fit.fitted.data() + n);
      for (const auto& [label, m] : masks) r.conditional.emplace_back(label, conditional_r2(y, fitted, m));
      rows.push_back(std::move(r));
    }
    return rows;
  });

  std::string csv = "predictor,group,k,nobs,slope,hac_t,boot_p,stars,r2";
  for (const auto& [label, v] : cache_->insample->front().conditional) csv += ",r2_" + label;
  csv += "\n";
  for (std::size_t i = 0; i < cache_->insample->size(); ++i) {
    const auto& r = (*cache_->insample)[i];
    csv += r.predictor + "," + (i < 28 ? group_of(i) : "PC") + "," + std::to_string(r.components) + "," +
           std::to_string(r.nobs) + "," + num(r.slope) + "," + num(r.hac_t) + "," + num(r.bootstrap_p) + "," +
           significance_stars(r.bootstrap_p) + "," + pct(std::optional<double>(r.r2));
    for (const auto& [label, v] : r.conditional) csv += "," + pct(v);
    csv += "\n";
  }
  write_file("insample.csv", csv);
  return *cache_->insample;
}

// ---------------------------------------------------------------- out-of-sample

std::vector<NamedMask> Pipeline::oos_masks_for(const std::vector<YearMonth>& months) const {
  const auto& b = *cache_->bullish;
  const auto& sh = *cache_->shocks;
  std::vector<YearMonth> peaks, troughs;
  for (auto t : sh.peaks) peaks.push_back(b.months[t]);
  for (auto t : sh.troughs) troughs.push_back(b.months[t]);
  const Mask peak = offset_mask(months, peaks, 1, cfg_.oos_horizon);
  const Mask trough = offset_mask(months, troughs, 1, cfg_.oos_horizon);
  const Mask recession = cache_->recessions->mask(months);
  return {{"all", Mask(months.size(), true)},
          {"exp", mask_not(recession)},
          {"rec", recession},
          {"peak", peak},
          {"stable_plus", mask_not(peak)},
          {"trough", trough},
          {"stable_minus", mask_not(trough)}};
}

const std::vector<ForecastSet>& Pipeline::forecasts() {
  if (cache_->forecasts) return *cache_->forecasts;
  const auto& tl = timeline();
  cache_->forecasts = staged("oos", [&] {
    const auto it = std::find(tl.months.begin(), tl.months.end(), cfg_.oos_start);
    if (it == tl.months.end())
      throw ConfigError("oos.start " + cfg_.oos_start.str() + " is outside the evaluation sample " +
                        tl.months.front().str() + ".." + tl.months.back().str());
    const auto first = static_cast<std::size_t>(it - tl.months.begin());
    const auto mw = static_cast<std::size_t>(cfg_.min_window);
    std::vector<ForecastSet> sets;
    for (Eigen::Index c = 0; c < tl.x.cols(); ++c) {
      const std::vector<double> x(tl.x.col(c).data(), tl.x.col(c).data() + tl.x.rows());
      sets.push_back(recursive_forecast(tl.months, tl.premium, x, first, mw, tl.names[static_cast<std::size_t>(c)]));
    }
    sets.push_back(recursive_pc_forecast(tl.months, tl.premium, tl.x.leftCols(14), first, cfg_.k_max, mw, "PC-ECON"));
    sets.push_back(recursive_pc_forecast(tl.months, tl.premium, tl.x.rightCols(14), first, cfg_.k_max, mw, "PC-TECH"));
    sets.push_back(recursive_pc_forecast(tl.months, tl.premium, tl.x, first, cfg_.k_max, mw, "PC-ALL"));
    return sets;
  });
  return *cache_->forecasts;
}

const std::vector<OosRow>& Pipeline::oos() {
  if (cache_->oos) return *cache_->oos;
  const auto& sets = forecasts();
  bullish();
  recessions();
  cache_->oos = staged("oos", [&] {
    const auto masks = oos_masks_for(sets.front().months);
    std::vector<OosRow> rows;
    for (const auto& fs : sets) rows.push_back(oos_row(fs, masks));
    return rows;
  });
  std::string csv = "model,group,fallbacks";
  for (const auto& m : kOosMasks) csv += ",r2os_" + m + ",cw_" + m + ",cw_p_" + m + ",stars_" + m;
  csv += "\n";
  for (std::size_t i = 0; i < cache_->oos->size(); ++i) {
    const auto& r = (*cache_->oos)[i];
    csv += r.model + "," + (i < 28 ? group_of(i) : "PC") + "," + std::to_string(r.fallbacks);
    for (const auto& c : r.cells) {
      const std::optional<double> p = c.cw ? std::optional<double>(c.cw->p_value) : std::nullopt;
      csv += "," + pct(c.r2_os) + "," + (c.cw ? num(c.cw->statistic) : "NA") + "," + num(p) + "," +
             significance_stars(p);
    }
    csv += "\n";
  }
  write_file("oos.csv", csv);
  return *cache_->oos;
}

// ---------------------------------------------------------------- allocation

PortfolioTrack Pipeline::track_for(const ForecastSet& fs, bool use_ha, double cost_bps) {
  const auto& prem = premium();
  const auto& tl = timeline();
  const bool simple = cfg_.allocation.simple_returns;
  auto excess = [&](double percent) { return simple ? std::expm1(percent / 100.0) : percent / 100.0; };

  std::map<int, double> xs;
  for (std::size_t i = 0; i < prem.size(); ++i) xs[prem.months[i].index()] = excess(prem.values[i]);
  std::map<int, double> rf;
  for (std::size_t i = 0; i < tl.size(); ++i) rf[tl.months[i].index()] = tl.rf[i];

  const int w = cfg_.allocation.variance_window;
  std::vector<double> forecast, variance, equity, riskfree;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    const int m = fs.months[i].index();
    std::vector<double> past;
    for (int k = m - w; k < m; ++k) {
      const auto it = xs.find(k);
      if (it != xs.end()) past.push_back(it->second);
    }
    if (static_cast<int>(past.size()) < w)
      throw InsufficientDataError("fewer than " + std::to_string(w) + " months of premium history before " +
                                  fs.months[i].str());
    variance.push_back(stats::sample_variance(past));
    forecast.push_back(excess(use_ha ? fs.ha[i] : fs.model[i]));
    const double r_f = rf.at(m);
    const double log_rf = std::log1p(r_f);
    if (simple) {
      equity.push_back((1.0 + r_f) * std::exp(fs.actual[i] / 100.0) - 1.0);
      riskfree.push_back(r_f);
    } else {
      equity.push_back(fs.actual[i] / 100.0 + log_rf);
      riskfree.push_back(log_rf);
    }
  }
  AllocationConfig ac = cfg_.allocation;
  ac.cost_bps = cost_bps;
  const auto weights = allocation_weights(forecast, variance, ac);
  return portfolio_returns(fs.months, weights, equity, riskfree, ac);
}

const std::vector<AllocationRow>& Pipeline::allocation() {
  if (cache_->allocation) return *cache_->allocation;
  const auto& sets = forecasts();
  bullish();
  recessions();
  const double kappa = cfg_.allocation.kappa;
  std::vector<double> costs = {0.0};
  if (cfg_.allocation.cost_bps != 0.0) costs.push_back(cfg_.allocation.cost_bps);

  cache_->allocation = staged("allocate", [&] {
    auto masks = oos_masks_for(sets.front().months);
    if (!overrides_.masks.empty())
      std::erase_if(masks, [&](const NamedMask& m) {
        return std::find(overrides_.masks.begin(), overrides_.masks.end(), m.first) == overrides_.masks.end();
      });
    std::vector<AllocationRow> rows;
    for (double cost : costs) {
      for (const auto& fs : sets) {
        const PortfolioTrack model = track_for(fs, false, cost);
        const PortfolioTrack ha = track_for(fs, true, cost);
        AllocationRow r;
        r.model = fs.id;
        r.cost_bps = cost;
        r.mean_turnover = model.turnover.back() / static_cast<double>(model.size());
        for (const auto& [label, m] : masks) r.gains.emplace_back(label, cer_gain(model, ha, kappa, m, cfg_.allocation.cer_variance));
        rows.push_back(std::move(r));
      }
    }
    return rows;
  });

  cache_->holding = staged("allocate", [&] {
    const auto& b = *cache_->bullish;
    std::vector<YearMonth> peaks, troughs;
    for (auto t : cache_->shocks->peaks) peaks.push_back(b.months[t]);
    for (auto t : cache_->shocks->troughs) troughs.push_back(b.months[t]);
    std::vector<HoldingCell> cells;
    std::string fig = "holding,model,regime,cer_gain\n";
    for (std::size_t g = 0; g < kPcModels.size(); ++g) {
      const auto& fs = sets[28 + g];
      const PortfolioTrack model = track_for(fs, false, cfg_.holding_cost_bps);
      const PortfolioTrack ha = track_for(fs, true, cfg_.holding_cost_bps);
      for (auto c : holding_period_grid(model, ha, peaks, troughs, kappa, cfg_.allocation.cer_variance)) {
        c.bucket = fs.id + ":" + c.bucket;
        cells.push_back(std::move(c));
      }
      for (const char* regime : {"peak", "trough"}) {
        const auto& events = std::string(regime) == "peak" ? peaks : troughs;
        for (int h = 1; h <= 12; ++h) {
          const Mask m = offset_mask(model.months, events, 1, h);
          fig += std::to_string(h) + "," + fs.id + "," + regime + "," + num(cer_gain(model, ha, kappa, m, cfg_.allocation.cer_variance)) + "\n";
        }
      }
    }
    write_file("fig3_cer_by_holding.csv", fig);
    return cells;
  });

  std::string csv = "model,group,kappa,cost_bps,mean_turnover";
  for (const auto& [label, v] : cache_->allocation->front().gains) csv += ",cer_gain_" + label;
  csv += "\n";
  for (std::size_t i = 0; i < cache_->allocation->size(); ++i) {
    const auto& r = (*cache_->allocation)[i];
    const std::size_t k = i % sets.size();
    csv += r.model + "," + (k < 28 ? group_of(k) : "PC") + "," + num(kappa) + "," + num(r.cost_bps) + "," +
           num(r.mean_turnover);
    for (const auto& [label, v] : r.gains) csv += "," + num(v);
    csv += "\n";
  }
  write_file("allocation.csv", csv);

  std::string hp = "model,regime,bucket,months,cer_gain_shock,cer_gain_stable\n";
  for (const auto& c : *cache_->holding) {
    const auto colon = c.bucket.find(':');
    hp += c.bucket.substr(0, colon) + "," + c.regime + "," + c.bucket.substr(colon + 1) + "," +
          std::to_string(c.months) + "," + num(c.shock_gain) + "," + num(c.stable_gain) + "\n";
  }
  write_file("holding_periods.csv", hp);
  return *cache_->allocation;
}

const std::vector<HoldingCell>& Pipeline::holding() {
  allocation();
  return *cache_->holding;
}

// ---------------------------------------------------------------- report

const std::vector<RobustnessRow>& Pipeline::robustness() {
  if (cache_->robustness) return *cache_->robustness;
  const auto& sets = forecasts();
  const auto& h = hurst();
  const auto& b = bullish();
  recessions();
  cache_->robustness = staged("report", [&] {
    const auto& months = sets.front().months;
    const auto base = oos_masks_for(months);
    auto find = [&](const std::string& name) -> const Mask& {
      for (const auto& [l, m] : base)
        if (l == name) return m;
      throw std::logic_error("mask " + name);
    };
    const Mask& exp = find("exp");
    const double kappa = cfg_.allocation.kappa;
    const double cost = cfg_.allocation.cost_bps;

    std::vector<RobustnessRow> rows;
    auto emit = [&](const std::string& proc, const ForecastSet& fs, const PortfolioTrack& model,
                    const PortfolioTrack& ha, const std::string& label, const Mask& m) {
      RobustnessRow r;
      r.procedure = proc;
      r.model = fs.id;
      r.mask = label;
      r.months = mask_count(m);
      r.r2_os = r2_os(fs, m);
      r.cw = clark_west(fs, m);
      if (r.months > 0) {
        r.msfe_model = masked_sse(fs.actual, fs.model, m) / static_cast<double>(r.months);
        r.msfe_ha = masked_sse(fs.actual, fs.ha, m) / static_cast<double>(r.months);
      }
      r.cer_gain = cer_gain(model, ha, kappa, m, cfg_.allocation.cer_variance);
      rows.push_back(std::move(r));
    };

    // Trimmed shocks on the full BU series.
    const Shocks trimmed = trimmed_quantile_shocks(b.bu, cfg_.trim, cfg_.trim_quantile);
    std::vector<YearMonth> tp, tt;
    for (auto t : trimmed.peaks) tp.push_back(b.months[t]);
    for (auto t : trimmed.troughs) tt.push_back(b.months[t]);
    const Mask tpeak = offset_mask(months, tp, 1, cfg_.oos_horizon);
    const Mask ttrough = offset_mask(months, tt, 1, cfg_.oos_horizon);

    // Monthly mean local H.
    std::map<int, std::pair<double, int>> hsum;
    for (std::size_t i = 0; i < h.size(); ++i) {
      if (is_missing(h.h[i])) continue;
      auto& [s, n] = hsum[year_month_of(h.dates[i]).index()];
      s += h.h[i];
      ++n;
    }

    for (std::size_t k = 0; k < sets.size(); ++k) {
      const auto& fs = sets[k];
      const PortfolioTrack model = track_for(fs, false, cost);
      const PortfolioTrack ha = track_for(fs, true, cost);
      for (const char* name : {"peak", "stable_plus", "trough", "stable_minus"})
        emit("recession_excluded", fs, model, ha, name, mask_and(find(name), exp));
      if (k < 28) continue;
      for (const bool before : {true, false}) {
        const Mask sub = month_filter(months, cfg_.subsample_split, before);
        const std::string proc = before ? "subsample_pre_" + cfg_.subsample_split.str()
                                        : "subsample_from_" + cfg_.subsample_split.str();
        for (const char* name : {"all", "peak", "stable_plus", "trough", "stable_minus"})
          emit(proc, fs, model, ha, name, mask_and(find(name), sub));
      }
      emit("trimmed", fs, model, ha, "peak", tpeak);
      emit("trimmed", fs, model, ha, "stable_plus", mask_not(tpeak));
      emit("trimmed", fs, model, ha, "trough", ttrough);
      emit("trimmed", fs, model, ha, "stable_minus", mask_not(ttrough));
      for (double thr : cfg_.h_conditions) {
        Mask above(months.size(), false), below(months.size(), false);
        for (std::size_t t = 0; t < months.size(); ++t) {
          const auto it = hsum.find(months[t].index());
          if (it == hsum.end()) continue;
          const double mh = it->second.first / it->second.second;
          above[t] = mh > thr;
          below[t] = !(mh > thr);
        }
        emit("h_conditioned", fs, model, ha, "h_gt_" + num(thr), above);
        emit("h_conditioned", fs, model, ha, "h_le_" + num(thr), below);
      }
    }
    return rows;
  });

  std::string csv = "procedure,model,mask,months,r2os,cw,cw_p,stars,msfe_model,msfe_ha,cer_gain\n";
  for (const auto& r : *cache_->robustness) {
    const std::optional<double> p = r.cw ? std::optional<double>(r.cw->p_value) : std::nullopt;
    csv += r.procedure + "," + r.model + "," + r.mask + "," + std::to_string(r.months) + "," + pct(r.r2_os) + "," +
           (r.cw ? num(r.cw->statistic) : "NA") + "," + num(p) + "," + significance_stars(p) + "," +
           num(r.msfe_model) + "," + num(r.msfe_ha) + "," + num(r.cer_gain) + "\n";
  }
  write_file("robustness.csv", csv);
  return *cache_->robustness;
}

const std::vector<SummaryRow>& Pipeline::summary() {
  if (cache_->summary) return *cache_->summary;
  const auto& h = hurst();
  const auto& b = bullish();
  const auto& prem = premium();
  cache_->summary = staged("report", [&] {
    std::vector<SummaryRow> rows;
    rows.push_back(summarize(1, "daily_log_return", cache_->returns->values));
    rows.push_back(summarize(1, "local_hurst", h.h));
    rows.push_back(summarize(1, "bullish_index", b.bu));
    rows.push_back(summarize(1, "bullish_ratio", b.b));
    rows.push_back(summarize(2, "ERP", prem.values));
    const ColumnSet m = build_macro(macro(), prem);
    for (std::size_t i = 0; i < m.names.size(); ++i) rows.push_back(summarize(2, m.names[i], m.values[i]));
    return rows;
  });
  std::string csv = "table,variable,n,mean,sd,min,max,ac1\n";
  for (const auto& r : *cache_->summary)
    csv += std::to_string(r.table) + "," + r.variable + "," + std::to_string(r.n) + "," + num(r.mean) + "," +
           num(r.sd) + "," + num(r.min) + "," + num(r.max) + "," + num(r.ac1) + "\n";
  write_file("summary_stats.csv", csv);
  return *cache_->summary;
}

// ---------------------------------------------------------------- driver

void Pipeline::run(Stage target) {
  using enum Stage;
  auto in = [&](std::initializer_list<Stage> set) { return std::find(set.begin(), set.end(), target) != set.end(); };
  auto mark = [&](Stage s) { cache_->stages.emplace_back(stage_name(s)); };
  daily();
  macro();
  recessions();
  premium();
  mark(kIngest);
  if (in({kGarch, kHurst, kRegime, kInsample, kOos, kAllocate, kReport})) {
    garch();
    mark(kGarch);
  }
  if (in({kHurst, kRegime, kInsample, kOos, kAllocate, kReport})) {
    hurst();
    mark(kHurst);
  }
  if (in({kRegime, kInsample, kOos, kAllocate, kReport})) {
    bullish();
    mark(kRegime);
  }
  if (in({kPredictors, kInsample, kOos, kAllocate, kReport})) {
    timeline();
    mark(kPredictors);
  }
  if (in({kInsample, kReport})) {
    insample();
    mark(kInsample);
  }
  if (in({kOos, kAllocate, kReport})) {
    oos();
    mark(kOos);
  }
  if (in({kAllocate, kReport})) {
    allocation();
    mark(kAllocate);
  }
  if (target == Stage::kReport) {
    summary();
    robustness();
    std::string shading = "start,end\n";
    for (const auto& [s, e] : recessions().intervals) shading += s.str() + "," + e.str() + "\n";
    write_file("recession_shading.csv", shading);
    mark(Stage::kReport);
  }
  write_manifest();
}

void Pipeline::write_manifest() {
  nlohmann::ordered_json j;
  j["tool"] = "erp";
  j["version"] = ERP_VERSION_STRING;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
               std::to_string(EIGEN_MINOR_VERSION);
  const std::string text = cfg_.canonical_text();
  j["config_sha256"] = sha256_hex(text);
  nlohmann::ordered_json c;
  for (const auto& [k, v] : cfg_.canonical)
    if (k != "output.dir") c[k] = v;
  j["config"] = c;
  j["stages"] = cache_->stages;
  j["shock_detection"] = "full-sample BU, " + cfg_.canonical.at("regime.shock_rule") + " rule";
  if (cache_->forecasts) {
    nlohmann::ordered_json fb;
    for (const auto& fs : *cache_->forecasts) fb[fs.id] = fs.fallbacks;
    j["forecast_fallbacks"] = fb;
  }
  if (cache_->predictors) j["predictor_rows_dropped"] = cache_->predictors->dropped;
  std::vector<std::string> names = written_;
  std::sort(names.begin(), names.end());
  nlohmann::ordered_json files;
  for (const auto& n : names) {
    std::ifstream in(cfg_.output_dir / n, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    files[n] = sha256_hex(ss.str());
  }
  j["outputs"] = files;
  write_file("manifest.json", j.dump(2) + "\n");
}

}  // namespace erp::pipeline
