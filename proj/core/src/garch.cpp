#include "erp/garch.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

#include "erp/stats.hpp"

namespace erp {

namespace {

constexpr std::size_t kMinObservations = 250;

using Theta = Eigen::Vector4d;  // (mu, log omega, b, c) with alpha = e^b/D, beta = e^c/D

struct Natural {
  double mu, omega, alpha, beta;
};

Natural to_natural(const Theta& t) {
  const double eb = std::exp(t[2]);
  const double ec = std::exp(t[3]);
  const double d = 1.0 + eb + ec;
  return {t[0], std::exp(t[1]), eb / d, ec / d};
}

Theta from_natural(double mu, double omega, double alpha, double beta) {
  const double rest = 1.0 - alpha - beta;
  return Theta{mu, std::log(omega), std::log(alpha / rest), std::log(beta / rest)};
}

/// Mean log-likelihood over the series and its gradient with respect to theta.
/// Returns -inf when the recursion leaves the positive region.
double objective(std::span<const double> z, double seed_variance, const Theta& theta, Theta* grad) {
  const Natural p = to_natural(theta);
  const double n = static_cast<double>(z.size());
  constexpr double kLog2Pi = 1.8378770664093453;

  double s2 = seed_variance;
  std::array<double, 4> ds2{0.0, 0.0, 0.0, 0.0};  // d sigma2 / d(mu, omega, alpha, beta)
  std::array<double, 4> g{0.0, 0.0, 0.0, 0.0};
  double ll = 0.0;
  double prev_e = 0.0;
  for (std::size_t t = 0; t < z.size(); ++t) {
    if (t > 0) {
      const double prev_s2 = s2;
      s2 = p.omega + p.alpha * prev_e * prev_e + p.beta * prev_s2;
      if (grad) {
        ds2 = {-2.0 * p.alpha * prev_e + p.beta * ds2[0], 1.0 + p.beta * ds2[1],
               prev_e * prev_e + p.beta * ds2[2], prev_s2 + p.beta * ds2[3]};
      }
    }
    if (!(s2 > 0.0) || !std::isfinite(s2)) return -std::numeric_limits<double>::infinity();
    const double e = z[t] - p.mu;
    ll += -0.5 * (kLog2Pi + std::log(s2) + e * e / s2);
    if (grad) {
      const double w = -0.5 * (1.0 / s2 - e * e / (s2 * s2));
      for (int k = 0; k < 4; ++k) g[k] += w * ds2[k];
      g[0] += e / s2;
    }
    prev_e = e;
  }
  if (grad) {
    // Chain rule into theta.
    const double a = p.alpha;
    const double b = p.beta;
    (*grad)[0] = g[0] / n;
    (*grad)[1] = g[1] * p.omega / n;
    (*grad)[2] = (g[2] * a * (1.0 - a) - g[3] * a * b) / n;
    (*grad)[3] = (-g[2] * a * b + g[3] * b * (1.0 - b)) / n;
  }
  return ll / n;
}

struct StartResult {
  Theta theta = Theta::Zero();
  double value = -std::numeric_limits<double>::infinity();
  double grad_norm = std::numeric_limits<double>::infinity();
  bool converged = false;
  std::vector<double> trace;
};

StartResult bfgs_maximize(std::span<const double> z, double seed_variance, Theta x, const GarchOptions& opt) {
  StartResult res;
  Theta g;
  double f = objective(z, seed_variance, x, &g);
  res.trace.push_back(f);
  Eigen::Matrix4d h = Eigen::Matrix4d::Identity();  // inverse Hessian of -f

  for (int iter = 0; iter < opt.max_iterations; ++iter) {
    if (g.norm() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }
    Theta dir = h * g;  // ascent direction
    if (dir.dot(g) <= 0.0) {
      h.setIdentity();
      dir = g;
    }
    double step = 1.0;
    Theta x_new;
    Theta g_new;
    double f_new = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int k = 0; k < 60; ++k) {
      x_new = x + step * dir;
      f_new = objective(z, seed_variance, x_new, &g_new);
      if (std::isfinite(f_new) && f_new >= f + 1e-4 * step * dir.dot(g)) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) {
      if (h.isIdentity()) break;  // no progress along the gradient either
      h.setIdentity();
      continue;
    }
    const Theta s = x_new - x;
    const Theta y = g - g_new;  // gradient change of -f
    const double sy = s.dot(y);
    if (sy > 1e-14) {
      const double rho = 1.0 / sy;
      const Eigen::Matrix4d i = Eigen::Matrix4d::Identity();
      h = (i - rho * s * y.transpose()) * h * (i - rho * y * s.transpose()) + rho * s * s.transpose();
    }
    x = x_new;
    g = g_new;
    f = f_new;
    res.trace.push_back(f);
  }
  if (!res.converged && g.norm() < opt.gradient_tolerance) res.converged = true;
  res.theta = x;
  res.value = f;
  res.grad_norm = g.norm();
  return res;
}

}  // namespace

bool GarchParams::valid() const {
  return omega > 0.0 && alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0 && std::isfinite(mu);
}

double garch_loglik(std::span<const double> returns, const GarchParams& params) {
  constexpr double kLog2Pi = 1.8378770664093453;
  double s2 = stats::sample_variance(returns);
  double ll = 0.0;
  double prev_e = 0.0;
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (t > 0) s2 = params.omega + params.alpha * prev_e * prev_e + params.beta * s2;
    const double e = returns[t] - params.mu;
    ll += -0.5 * (kLog2Pi + std::log(s2) + e * e / s2);
    prev_e = e;
  }
  return ll;
}

GarchParams fit_garch11(std::span<const double> returns, const GarchOptions& options) {
  if (returns.size() < kMinObservations)
    throw InsufficientDataError("fit_garch11: need at least 250 returns, got " + std::to_string(returns.size()));
  const double m = stats::mean(returns);
  const double sd = stats::sample_stddev(returns);
  if (!(sd > 0.0) || !std::isfinite(sd)) throw EstimationError("fit_garch11: zero-variance input");

  std::vector<double> z(returns.size());
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = (returns[i] - m) / sd;
  const double seed_variance = stats::sample_variance(z);

  static constexpr std::array<std::array<double, 2>, 3> kStarts{{{0.05, 0.90}, {0.10, 0.80}, {0.20, 0.50}}};
  StartResult best;
  bool any_converged = false;
  for (const auto& [a0, b0] : kStarts) {
    StartResult r = bfgs_maximize(z, seed_variance, from_natural(0.0, 1.0 - a0 - b0, a0, b0), options);
    // Converged starts always win over non-converged ones.
    const bool better = (r.converged && !any_converged) ||
                        (r.converged == any_converged && r.value > best.value);
    if (better) {
      any_converged = any_converged || r.converged;
      best = std::move(r);
    }
  }

  const Natural nat = to_natural(best.theta);
  GarchParams out;
  out.mu = m + sd * nat.mu;
  out.omega = sd * sd * nat.omega;
  out.alpha = nat.alpha;
  out.beta = nat.beta;
  out.loglik = garch_loglik(returns, out);
  if (options.loglik_trace) *options.loglik_trace = best.trace;
  if (!any_converged) {
    throw GarchFitError("fit_garch11: no start converged within " + std::to_string(options.max_iterations) +
                            " iterations (gradient norm " + std::to_string(best.grad_norm) + ")",
                        out);
  }
  return out;
}

GarchParams fit_garch11(const ReturnSeries& returns, const GarchOptions& options) {
  return fit_garch11(std::span<const double>(returns.values), options);
}

std::vector<double> garch_variances(std::span<const double> returns, const GarchParams& params) {
  if (!params.valid()) throw ValidationError("garch_variances: invalid parameters");
  std::vector<double> s2(returns.size());
  double v = params.unconditional_variance();
  for (std::size_t t = 0; t < returns.size(); ++t) {
    if (t > 0) {
      const double e = returns[t - 1] - params.mu;
      v = params.omega + params.alpha * e * e + params.beta * v;
    }
    s2[t] = v;
  }
  return s2;
}

std::vector<double> filter_returns(std::span<const double> returns, const GarchParams& params) {
  const auto s2 = garch_variances(returns, params);
  std::vector<double> out(returns.size());
  for (std::size_t t = 0; t < returns.size(); ++t) out[t] = (returns[t] - params.mu) / std::sqrt(s2[t]);
  return out;
}

ReturnSeries filter_returns(const ReturnSeries& returns, const GarchParams& params) {
  return ReturnSeries{returns.dates, filter_returns(std::span<const double>(returns.values), params)};
}

std::vector<double> simulate_garch11(const GarchParams& params, std::size_t length, std::uint64_t seed) {
  if (!params.valid()) throw ValidationError("simulate_garch11: invalid parameters");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  constexpr std::size_t kBurnIn = 500;
  std::vector<double> out;
  out.reserve(length);
  double s2 = params.unconditional_variance();
  double e = 0.0;
  for (std::size_t t = 0; t < length + kBurnIn; ++t) {
    if (t > 0) s2 = params.omega + params.alpha * e * e + params.beta * s2;
    e = std::sqrt(s2) * normal(rng);
    if (t >= kBurnIn) out.push_back(params.mu + e);
  }
  return out;
}

}  // namespace erp
