#include "erp/hurst.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <random>
#include <thread>

#include <unsupported/Eigen/FFT>

#include "erp/error.hpp"

namespace erp {

void FdmaaConfig::validate() const {
  if (n_min < 2) throw ConfigError("hurst.n_min must be >= 2");
  if (n_max <= n_min) throw ConfigError("hurst.n_max must exceed hurst.n_min");
  if (window <= n_max) throw ConfigError("hurst.window must exceed hurst.n_max");
  if (phi < 3) throw ConfigError("hurst.phi must be >= 3");
  if (position != 0) throw ConfigError("only the backward moving average (position 0) is supported");
}

std::vector<double> cumulative_profile(std::span<const double> r) {
  std::vector<double> y(r.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    acc += r[i];
    y[i] = acc;
  }
  return y;
}

std::vector<double> backward_moving_average(std::span<const double> y, int n) {
  if (n < 1) throw SizeError("backward_moving_average: n must be >= 1");
  const auto un = static_cast<std::size_t>(n);
  if (un > y.size()) throw SizeError("backward_moving_average: n exceeds series length");
  // Prefix sums: prefix[d + 1] - prefix[d + 1 - n] is the window sum ending at d.
  std::vector<double> prefix(y.size() + 1, 0.0);
  for (std::size_t d = 0; d < y.size(); ++d) prefix[d + 1] = prefix[d] + y[d];
  std::vector<double> out(y.size() - un + 1);
  for (std::size_t d = un - 1; d < y.size(); ++d) out[d - (un - 1)] = (prefix[d + 1] - prefix[d + 1 - un]) / n;
  return out;
}

std::vector<double> detrended_residual(std::span<const double> y, int n) {
  auto eps = backward_moving_average(y, n);
  const auto offset = static_cast<std::size_t>(n - 1);
  for (std::size_t i = 0; i < eps.size(); ++i) eps[i] = y[i + offset] - eps[i];
  return eps;
}

std::size_t segment_count(std::size_t residual_length, int n, SegmentCountRule rule, std::size_t series_length) {
  const std::size_t big_n = series_length ? series_length : residual_length;
  const std::size_t divisor = rule == SegmentCountRule::kNMinusOne ? static_cast<std::size_t>(n - 1)
                                                                   : static_cast<std::size_t>(n);
  const std::size_t nominal = divisor ? big_n / divisor : residual_length;
  return std::min(nominal, residual_length / static_cast<std::size_t>(n));
}

double segment_rms(std::span<const double> eps, int n, SegmentCountRule rule, std::size_t series_length) {
  if (n < 1 || static_cast<std::size_t>(n) > eps.size())
    throw SizeError("segment_rms: segment size " + std::to_string(n) + " exceeds residual length " +
                    std::to_string(eps.size()));
  const std::size_t segments = segment_count(eps.size(), n, rule, series_length);
  double total = 0.0;
  for (std::size_t v = 0; v < segments; ++v) {
    double ss = 0.0;
    for (int i = 0; i < n; ++i) {
      const double e = eps[v * n + i];
      ss += e * e;
    }
    total += ss / n;
  }
  return std::sqrt(total / static_cast<double>(segments));
}

std::vector<int> scale_grid(const FdmaaConfig& cfg) {
  const int available = cfg.n_max - cfg.n_min + 1;
  const int count = std::min(cfg.phi, available);
  std::vector<int> grid(count);
  if (count == available) {
    for (int i = 0; i < count; ++i) grid[i] = cfg.n_min + i;
    return grid;
  }
  const double lo = std::log(static_cast<double>(cfg.n_min));
  const double hi = std::log(static_cast<double>(cfg.n_max));
  for (int i = 0; i < count; ++i) {
    const double t = lo + (hi - lo) * i / (count - 1);
    grid[i] = static_cast<int>(std::lround(std::exp(t)));
  }
  // Forward pass removes duplicates, backward pass pulls the tail under n_max.
  for (int i = 1; i < count; ++i) grid[i] = std::max(grid[i], grid[i - 1] + 1);
  grid[count - 1] = std::min(grid[count - 1], cfg.n_max);
  for (int i = count - 2; i >= 0; --i) grid[i] = std::min(grid[i], grid[i + 1] - 1);
  return grid;
}

HurstFit fit_hurst(std::span<const int> sizes, std::span<const double> fluctuation) {
  if (sizes.size() != fluctuation.size()) throw SizeError("fit_hurst: size/fluctuation length mismatch");
  std::vector<double> lx;
  std::vector<double> ly;
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (fluctuation[i] > 0.0 && std::isfinite(fluctuation[i]) && sizes[i] > 0) {
      lx.push_back(std::log(static_cast<double>(sizes[i])));
      ly.push_back(std::log(fluctuation[i]));
    }
  }
  if (lx.size() < 3) throw EstimationError("fit_hurst: fewer than 3 usable points");
  const double k = static_cast<double>(lx.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= k;
  my /= k;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (!(sxx > 0.0)) throw EstimationError("fit_hurst: degenerate scale grid");
  HurstFit fit;
  fit.h = sxy / sxx;
  fit.r2 = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 1.0;
  fit.points = static_cast<int>(lx.size());
  return fit;
}

std::vector<double> fluctuation_function(std::span<const double> returns, const FdmaaConfig& cfg) {
  const auto grid = scale_grid(cfg);
  const auto y = cumulative_profile(returns);
  std::vector<double> f(grid.size());
  for (std::size_t j = 0; j < grid.size(); ++j) {
    const auto eps = detrended_residual(y, grid[j]);
    f[j] = segment_rms(eps, grid[j], cfg.segment_rule, y.size());
  }
  return f;
}

HurstFit estimate_hurst(std::span<const double> returns, const FdmaaConfig& cfg) {
  const auto grid = scale_grid(cfg);
  const auto f = fluctuation_function(returns, cfg);
  return fit_hurst(grid, f);
}

HurstSeries local_hurst(const ReturnSeries& filtered, const FdmaaConfig& cfg, unsigned threads) {
  cfg.validate();
  const auto window = static_cast<std::size_t>(cfg.window);
  if (filtered.size() < window)
    throw InsufficientDataError("local_hurst: need at least " + std::to_string(window) + " returns, got " +
                                std::to_string(filtered.size()));
  const std::size_t count = filtered.size() - window + 1;
  HurstSeries out;
  out.dates.assign(filtered.dates.begin() + static_cast<std::ptrdiff_t>(window - 1), filtered.dates.end());
  out.h.assign(count, kMissing);
  out.r2.assign(count, kMissing);

  const std::span<const double> values(filtered.values);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t w = begin; w < end; ++w) {
      try {
        const HurstFit fit = estimate_hurst(values.subspan(w, window), cfg);
        out.h[w] = fit.h;
        out.r2[w] = fit.r2;
      } catch (const EstimationError&) {
        // leave the missing marker
      }
    }
  };

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, count));
  if (threads <= 1) {
    work(0, count);
    return out;
  }
  {
    std::vector<std::jthread> pool;
    const std::size_t chunk = (count + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t b = t * chunk;
      const std::size_t e = std::min(count, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  return out;
}

double fgn_autocovariance(double hurst, long k) {
  const double two_h = 2.0 * hurst;
  const double ak = std::abs(static_cast<double>(k));
  return 0.5 * (std::pow(ak + 1.0, two_h) - 2.0 * std::pow(ak, two_h) + std::pow(std::abs(ak - 1.0), two_h));
}

std::vector<double> generate_fgn(double hurst, std::size_t length, std::uint64_t seed) {
  if (!(hurst > 0.0 && hurst < 1.0)) throw ValidationError("generate_fgn: hurst must lie in (0, 1)");
  if (length == 0) return {};
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);

  // Circulant embedding of size m = 2^k >= 2 (length - 1); doubled when an
  // eigenvalue comes out negative.
  std::size_t m = 2;
  while (m < 2 * (length - 1)) m *= 2;
  Eigen::FFT<double> fft;
  for (int attempt = 0; attempt < 8; ++attempt, m *= 2) {
    const std::size_t half = m / 2;
    std::vector<std::complex<double>> row(m);
    for (std::size_t j = 0; j < m; ++j) {
      const long lag = static_cast<long>(j <= half ? j : m - j);
      row[j] = fgn_autocovariance(hurst, lag);
    }
    std::vector<std::complex<double>> eig;
    fft.fwd(eig, row);
    bool positive = true;
    for (auto& e : eig) {
      if (e.real() < -1e-10 * std::abs(eig[0].real())) {
        positive = false;
        break;
      }
    }
    if (!positive) continue;

    std::vector<std::complex<double>> w(m);
    const double md = static_cast<double>(m);
    for (std::size_t j = 0; j < m; ++j) {
      const double lam = std::max(eig[j].real(), 0.0);
      if (j == 0 || j == half) {
        w[j] = std::sqrt(lam / md) * normal(rng);
      } else if (j < half) {
        const double a = normal(rng);
        const double b = normal(rng);
        w[j] = std::sqrt(lam / (2.0 * md)) * std::complex<double>(a, b);
        w[m - j] = std::conj(w[j]);
      }
    }
    std::vector<std::complex<double>> x;
    fft.fwd(x, w);
    std::vector<double> out(length);
    for (std::size_t i = 0; i < length; ++i) out[i] = x[i].real();
    return out;
  }
  throw Error("generate_fgn: circulant embedding is not positive definite");
}

}  // namespace erp
