#pragma once

#include <cstdint>
#include <span>

namespace erp::stats {

double mean(std::span<const double> x);

/// Unbiased (n-1) sample variance. NaN when fewer than two values.
double sample_variance(std::span<const double> x);
double sample_stddev(std::span<const double> x);

/// First-order sample autocorrelation, sum of lagged cross-products over the
/// full-sample sum of squares.
double autocorrelation(std::span<const double> x, std::size_t lag = 1);

double normal_cdf(double z);

/// Upper-tail standard normal probability, P(Z >= z).
double normal_upper_tail(double z);

/// SplitMix64 finaliser. Used to derive independent stream seeds from one
/// master seed: derive_seed(master, stream) for stream = 0, 1, 2, ...
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream);

}  // namespace erp::stats
