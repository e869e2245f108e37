#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "erp/error.hpp"
#include "erp/marketdata.hpp"

namespace erp {

/// GARCH(1,1) with constant mean:
///   r_t = mu + e_t,  sigma2_t = omega + alpha * e_{t-1}^2 + beta * sigma2_{t-1}.
struct GarchParams {
  double mu = 0.0;
  double omega = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double loglik = 0.0;

  double persistence() const { return alpha + beta; }
  double unconditional_variance() const { return omega / (1.0 - alpha - beta); }
  /// omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1.
  bool valid() const;
};

/// Raised when the optimizer exhausts its budget. best() holds the best
/// parameters seen across all starts.
class GarchFitError : public Error {
 public:
  GarchFitError(const std::string& what, GarchParams best) : Error(what), best_(best) {}
  const GarchParams& best() const noexcept { return best_; }

 private:
  GarchParams best_;
};

struct GarchOptions {
  int max_iterations = 500;
  /// Convergence threshold on the gradient norm of the mean log-likelihood
  /// in the transformed parameters of the standardized series.
  double gradient_tolerance = 1e-6;
  /// When set, receives the log-likelihood after every accepted step of the
  /// winning start.
  std::vector<double>* loglik_trace = nullptr;
};

/// Gaussian log-likelihood, recursion seeded with the sample variance.
double garch_loglik(std::span<const double> returns, const GarchParams& params);

/// Gaussian quasi-MLE. Requires at least 250 observations. Multi-start BFGS
/// over a reparametrisation that keeps the feasible region.
GarchParams fit_garch11(std::span<const double> returns, const GarchOptions& options = {});
GarchParams fit_garch11(const ReturnSeries& returns, const GarchOptions& options = {});

/// Conditional variances with sigma2_1 = unconditional variance.
std::vector<double> garch_variances(std::span<const double> returns, const GarchParams& params);

/// Standardized residuals (r_t - mu) / sigma_t.
std::vector<double> filter_returns(std::span<const double> returns, const GarchParams& params);
ReturnSeries filter_returns(const ReturnSeries& returns, const GarchParams& params);

/// Gaussian GARCH(1,1) path, started from the unconditional variance after a
/// burn-in of 500 steps. Deterministic for a seed.
std::vector<double> simulate_garch11(const GarchParams& params, std::size_t length, std::uint64_t seed);

}  // namespace erp
