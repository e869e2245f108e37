#include <chrono>
#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "erp/evaluate.hpp"
#include "erp/garch.hpp"
#include "erp/hurst.hpp"
#include "erp/regress.hpp"

using namespace erp;

namespace {

std::vector<double> normals(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  std::vector<double> out(n);
  for (auto& v : out) v = z(rng);
  return out;
}

ReturnSeries daily(std::size_t n) {
  ReturnSeries r;
  r.values = generate_fgn(0.55, n, 1);
  Date d{std::chrono::year{1950}, std::chrono::January, std::chrono::day{1}};
  for (std::size_t i = 0; i < n; ++i) {
    r.dates.push_back(d);
    d = Date{std::chrono::sys_days{d} + std::chrono::days{1}};
  }
  return r;
}

void BM_LocalHurst(benchmark::State& state) {
  const auto r = daily(static_cast<std::size_t>(state.range(0)));
  const FdmaaConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(local_hurst(r, cfg, static_cast<unsigned>(state.range(1))));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LocalHurst)->Args({5000, 1})->Args({17500, 1})->Args({17500, 4})->Unit(benchmark::kMillisecond);

void BM_FitGarch(benchmark::State& state) {
  GarchParams p;
  p.omega = 0.05;
  p.alpha = 0.1;
  p.beta = 0.85;
  const auto r = simulate_garch11(p, static_cast<std::size_t>(state.range(0)), 3);
  for (auto _ : state) benchmark::DoNotOptimize(fit_garch11(r));
}
BENCHMARK(BM_FitGarch)->Arg(5000)->Arg(17500)->Unit(benchmark::kMillisecond);

void BM_RecursivePcForecast(benchmark::State& state) {
  const std::size_t n = 840;
  const auto cols = static_cast<Eigen::Index>(state.range(0));
  const auto flat = normals(n * static_cast<std::size_t>(cols), 4);
  Matrix x(static_cast<Eigen::Index>(n), cols);
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    for (Eigen::Index j = 0; j < cols; ++j) x(i, j) = flat[static_cast<std::size_t>(i * cols + j)];
  const auto y = normals(n, 5);
  std::vector<YearMonth> months;
  YearMonth m{1950, 12};
  for (std::size_t i = 0; i < n; ++i, m = m.next()) months.push_back(m);
  for (auto _ : state) benchmark::DoNotOptimize(recursive_pc_forecast(months, y, x, 180, 3, 60));
}
BENCHMARK(BM_RecursivePcForecast)->Arg(14)->Arg(28)->Unit(benchmark::kMillisecond);

void BM_WildBootstrap(benchmark::State& state) {
  const auto yv = normals(828, 6);
  const auto xv = normals(828, 7);
  const Vector y = Eigen::Map<const Vector>(yv.data(), 828);
  const Matrix x = Eigen::Map<const Vector>(xv.data(), 828);
  BootstrapOptions opt;
  opt.threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(wild_bootstrap_pvalue(y, x, 0, opt));
}
BENCHMARK(BM_WildBootstrap)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace
