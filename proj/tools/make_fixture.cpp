// Writes the small synthetic data set used by the end-to-end tests:
// five years of daily prices, the matching monthly macro panel, a recession
// calendar and a pipeline config.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>

#include "erp/garch.hpp"
#include "erp/marketdata.hpp"

namespace {

std::string g(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  if (argc != 2) {
    std::cerr << "usage: make_fixture <output-dir>\n";
    return 2;
  }
  const std::filesystem::path dir = argv[1];
  std::filesystem::create_directories(dir);
  std::mt19937_64 rng(20240101);
  std::normal_distribution<double> z;

  using namespace std::chrono;
  erp::GarchParams gp;
  gp.mu = 3e-4;
  gp.omega = 2e-6;
  gp.alpha = 0.08;
  gp.beta = 0.90;

  std::vector<erp::Date> dates;
  for (sys_days d = sys_days{2015y / January / 2}; d <= sys_days{2019y / December / 31}; d += days{1}) {
    const weekday wd{d};
    if (wd != Saturday && wd != Sunday) dates.emplace_back(d);
  }
  const auto returns = erp::simulate_garch11(gp, dates.size(), 7);

  erp::DailySeries daily;
  double price = 2000.0;
  for (std::size_t i = 0; i < dates.size(); ++i) {
    if (i > 0) price *= std::exp(returns[i]);
    daily.dates.push_back(dates[i]);
    daily.close.push_back(std::round(price * 100.0) / 100.0);
    daily.volume.emplace_back(std::round(3e9 * std::exp(0.25 * z(rng))));
  }
  {
    std::ofstream out(dir / "daily.csv");
    erp::write_daily_prices(out, daily);
  }

  const erp::MonthlyMarket mm = erp::monthly_market(daily);
  std::ofstream macro(dir / "macro.csv");
  macro << "yyyymm,Index,D12,E12,bm,tbl,AAA,BAA,lty,ntis,Rfree,infl,ltr,corpr\n";
  double dy = 0.02, ey = 0.05, bm = 0.3, tbl = 0.015, credit = 0.01, term = 0.012, ntis = 0.01;
  for (std::size_t t = 0; t < mm.size(); ++t) {
    dy = 0.02 + 0.9 * (dy - 0.02) + 0.001 * z(rng);
    ey = 0.05 + 0.9 * (ey - 0.05) + 0.002 * z(rng);
    bm = 0.3 + 0.95 * (bm - 0.3) + 0.01 * z(rng);
    tbl = std::max(0.0005, tbl + 0.001 * z(rng));
    credit = std::max(0.002, credit + 0.0005 * z(rng));
    term = term + 0.001 * z(rng);
    ntis = 0.01 + 0.9 * (ntis - 0.01) + 0.003 * z(rng);
    const double index = mm.close[t];
    const double aaa = tbl + term + 0.01 + 0.001 * z(rng);
    const double ltr = 0.004 + 0.02 * z(rng);
    macro << mm.months[t].year * 100 + mm.months[t].month << "," << g(index) << "," << g(dy * index) << ","
          << g(ey * index) << "," << g(bm) << "," << g(tbl) << "," << g(aaa) << "," << g(aaa + credit) << ","
          << g(tbl + term) << "," << g(ntis) << "," << g(tbl / 12.0) << "," << g(0.002 + 0.002 * z(rng)) << ","
          << g(ltr) << "," << g(ltr + 0.005 * z(rng)) << "\n";
  }

  std::ofstream(dir / "recessions.csv") << "start,end\n2019-02,2019-06\n";
  std::ofstream(dir / "config.ini") << "# Synthetic five-year fixture\n"
                                       "[data]\n"
                                       "daily = daily.csv\n"
                                       "macro = macro.csv\n"
                                       "recessions = recessions.csv\n"
                                       "\n"
                                       "[oos]\n"
                                       "start = 2018-08\n"
                                       "min_window = 30\n"
                                       "\n"
                                       "[allocate]\n"
                                       "variance_window = 24\n"
                                       "\n"
                                       "[bootstrap]\n"
                                       "replications = 200\n"
                                       "seed = 7\n"
                                       "\n"
                                       "[output]\n"
                                       "dir = out\n";
  return 0;
}
