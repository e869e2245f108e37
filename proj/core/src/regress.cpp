#include "erp/regress.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <thread>

#include "erp/error.hpp"
#include "erp/stats.hpp"

namespace erp {

namespace {

Matrix with_intercept(const Matrix& x) {
  Matrix d(x.rows(), x.cols() + 1);
  d.col(0).setOnes();
  d.rightCols(x.cols()) = x;
  return d;
}

std::string column_name(const std::vector<std::string>& names, Eigen::Index design_col) {
  if (design_col == 0) return "(intercept)";
  const auto i = static_cast<std::size_t>(design_col - 1);
  return i < names.size() ? names[i] : "x" + std::to_string(design_col);
}

// Exact fits leave rounding-level residuals.
bool residuals_vanish(const OlsFit& fit) {
  const double scale = (fit.fitted + fit.residuals).cwiseAbs().maxCoeff();
  return !(fit.residuals.cwiseAbs().maxCoeff() > 1e-12 * scale);
}

/// coef / se, with +-inf for an exact nonzero coefficient and NaN for 0/0.
double safe_t(double coef, double var) {
  if (var > 0.0) return coef / std::sqrt(var);
  if (coef > 0.0) return std::numeric_limits<double>::infinity();
  if (coef < 0.0) return -std::numeric_limits<double>::infinity();
  return std::numeric_limits<double>::quiet_NaN();
}

Matrix hac_meat(const Matrix& design, const Vector& u, int lag) {
  const Eigen::Index t_obs = design.rows();
  const Matrix xu = design.array().colwise() * u.array();  // rows x_t u_t
  Matrix s = xu.transpose() * xu;
  for (int l = 1; l <= lag; ++l) {
    const double w = 1.0 - static_cast<double>(l) / (lag + 1);
    const Matrix g = xu.bottomRows(t_obs - l).transpose() * xu.topRows(t_obs - l);
    s += w * (g + g.transpose());
  }
  return s;
}

}  // namespace

int newey_west_default_lag(std::size_t nobs) {
  return static_cast<int>(std::floor(4.0 * std::pow(static_cast<double>(nobs) / 100.0, 2.0 / 9.0)));
}

Matrix hac_covariance(const Matrix& design, const Vector& residuals, int lag) {
  if (lag < 0 || lag >= design.rows()) throw SizeError("hac_covariance: lag must lie in [0, T)");
  const Matrix bread = (design.transpose() * design).inverse();
  return bread * hac_meat(design, residuals, lag) * bread;
}

OlsFit ols_fit(const Vector& y, const Matrix& x, const std::vector<std::string>& names) {
  if (y.size() != x.rows()) throw SizeError("ols_fit: y and X row counts differ");
  if (y.size() <= x.cols() + 1)
    throw InsufficientDataError("ols_fit: need more observations than regressors + 1");
  if (!y.allFinite() || !x.allFinite()) throw EstimationError("ols_fit: non-finite input");

  OlsFit fit;
  fit.design = with_intercept(x);
  fit.nobs = static_cast<std::size_t>(y.size());
  Eigen::ColPivHouseholderQR<Matrix> qr(fit.design);
  qr.setThreshold(1e-10);
  if (qr.rank() < fit.design.cols()) {
    std::string which;
    const auto& perm = qr.colsPermutation().indices();
    for (Eigen::Index i = qr.rank(); i < fit.design.cols(); ++i) {
      if (!which.empty()) which += ", ";
      which += column_name(names, perm[i]);
    }
    throw EstimationError("ols_fit: rank-deficient design; collinear column(s): " + which);
  }
  fit.coefficients = qr.solve(y);
  fit.fitted = fit.design * fit.coefficients;
  fit.residuals = y - fit.fitted;

  const double n = static_cast<double>(y.size());
  const double k = static_cast<double>(x.cols());
  const double ssr = fit.residuals.squaredNorm();
  const double sst = (y.array() - y.mean()).square().sum();
  fit.r2 = sst > 0.0 ? 1.0 - ssr / sst : (ssr == 0.0 ? 1.0 : -std::numeric_limits<double>::infinity());
  fit.adjusted_r2 = 1.0 - (1.0 - fit.r2) * (n - 1.0) / (n - k - 1.0);

  fit.hac_lag = newey_west_default_lag(fit.nobs);
  fit.hac_tstats = Vector::Constant(fit.design.cols(), std::numeric_limits<double>::quiet_NaN());
  if (!residuals_vanish(fit)) {
    const Matrix cov = hac_covariance(fit.design, fit.residuals, fit.hac_lag);
    for (Eigen::Index i = 0; i < fit.design.cols(); ++i) fit.hac_tstats[i] = safe_t(fit.coefficients[i], cov(i, i));
  }
  return fit;
}

Vector hac_tstats(const OlsFit& fit, std::optional<int> lag) {
  const int l = lag.value_or(newey_west_default_lag(fit.nobs));
  if (l < 0 || static_cast<std::size_t>(l) >= fit.nobs) throw SizeError("hac_tstats: lag must lie in [0, T)");
  if (residuals_vanish(fit))
    throw EstimationError("hac_tstats: residuals are identically zero; t-statistics undefined");
  const Matrix cov = hac_covariance(fit.design, fit.residuals, l);
  Vector t(fit.coefficients.size());
  for (Eigen::Index i = 0; i < t.size(); ++i) t[i] = safe_t(fit.coefficients[i], cov(i, i));
  return t;
}

double wild_bootstrap_pvalue(const Vector& y, const Matrix& x, Eigen::Index column,
                             const BootstrapOptions& options) {
  if (options.replications < 100) throw ConfigError("wild bootstrap needs at least 100 replications");
  if (column < 0 || column >= x.cols()) throw SizeError("wild_bootstrap_pvalue: column out of range");
  const OlsFit fit = ols_fit(y, x);
  const Eigen::Index target = column + 1;
  const int lag = fit.hac_lag;
  const Matrix bread = (fit.design.transpose() * fit.design).inverse();
  const Matrix projector = bread * fit.design.transpose();

  auto statistic = [&](const Vector& beta, const Vector& resid) {
    if (options.statistic == BootstrapStatistic::kSlope) return beta[target];
    if (!(resid.cwiseAbs().maxCoeff() > 0.0)) return safe_t(beta[target], 0.0);
    const Matrix cov = bread * hac_meat(fit.design, resid, lag) * bread;
    return safe_t(beta[target], cov(target, target));
  };
  const double observed = statistic(fit.coefficients, fit.residuals);

  // Restricted fit drops the tested column.
  Vector restricted;
  if (x.cols() == 1) {
    restricted = Vector::Constant(y.size(), y.mean());
  } else {
    Matrix xr(x.rows(), x.cols() - 1);
    for (Eigen::Index c = 0, j = 0; c < x.cols(); ++c)
      if (c != column) xr.col(j++) = x.col(c);
    restricted = ols_fit(y, xr).fitted;
  }

  const int reps = options.replications;
  std::vector<char> exceed(static_cast<std::size_t>(reps), 0);
  auto work = [&](int begin, int end) {
    Vector ystar(y.size());
    for (int b = begin; b < end; ++b) {
      std::mt19937_64 rng(stats::derive_seed(options.seed, static_cast<std::uint64_t>(b)));
      std::uint64_t bits = 0;
      int left = 0;
      for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (left == 0) {
          bits = rng();
          left = 64;
        }
        const double w = (bits & 1U) ? 1.0 : -1.0;
        bits >>= 1;
        --left;
        ystar[i] = restricted[i] + fit.residuals[i] * w;
      }
      const Vector beta = projector * ystar;
      const Vector resid = ystar - fit.design * beta;
      exceed[static_cast<std::size_t>(b)] = statistic(beta, resid) >= observed ? 1 : 0;
    }
  };
  const unsigned threads = std::max(1u, std::min<unsigned>(options.threads, static_cast<unsigned>(reps)));
  if (threads == 1) {
    work(0, reps);
  } else {
    std::vector<std::jthread> pool;
    const int chunk = (reps + static_cast<int>(threads) - 1) / static_cast<int>(threads);
    for (unsigned t = 0; t < threads; ++t) {
      const int b = static_cast<int>(t) * chunk;
      const int e = std::min(reps, b + chunk);
      if (b < e) pool.emplace_back(work, b, e);
    }
  }
  const auto hits = std::count(exceed.begin(), exceed.end(), 1);
  return static_cast<double>(hits) / reps;
}

double wild_bootstrap_pvalue(const Vector& y, const Vector& x, const BootstrapOptions& options) {
  return wild_bootstrap_pvalue(y, Matrix(x), 0, options);
}

Matrix PcaModel::scores(const Matrix& x) const {
  if (x.cols() != means.size()) throw SizeError("PcaModel::scores: column count mismatch");
  const Matrix z = (x.rowwise() - means.transpose()).array().rowwise() / sds.transpose().array();
  return z * loadings;
}

PcaModel pca_extract(const Matrix& x, int k, const std::vector<std::string>& names) {
  const Eigen::Index p = x.cols();
  if (k < 1 || k > p) throw SizeError("pca_extract: need 1 <= K <= ncols");
  if (x.rows() <= p) throw SizeError("pca_extract: need more observations than columns");
  PcaModel m;
  m.k = k;
  m.means = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - m.means.transpose();
  m.sds = (centered.colwise().squaredNorm() / static_cast<double>(x.rows() - 1)).cwiseSqrt().transpose();
  for (Eigen::Index c = 0; c < p; ++c) {
    if (!(m.sds[c] > 1e-12 * std::max(1.0, std::abs(m.means[c])))) {
      const auto i = static_cast<std::size_t>(c);
      throw EstimationError("pca_extract: zero-variance column " +
                            (i < names.size() ? names[i] : std::to_string(c)));
    }
  }
  const Matrix z = centered.array().rowwise() / m.sds.transpose().array();
  const Matrix corr = (z.transpose() * z) / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Matrix> es(corr);
  if (es.info() != Eigen::Success) throw EstimationError("pca_extract: eigen decomposition failed");
  // Eigen returns ascending order.
  m.eigenvalues = es.eigenvalues().reverse();
  m.explained = m.eigenvalues / static_cast<double>(p);
  m.loadings.resize(p, k);
  for (int j = 0; j < k; ++j) {
    Vector v = es.eigenvectors().col(p - 1 - j);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    m.loadings.col(j) = v;
  }
  return m;
}

ComponentSelection select_components(const Vector& y, const Matrix& scores, int k_max) {
  if (k_max < 1) throw ConfigError("select_components: K_max must be >= 1");
  const int top = std::min<int>(k_max, static_cast<int>(scores.cols()));
  ComponentSelection best;
  for (int k = 1; k <= top; ++k) {
    OlsFit fit = ols_fit(y, scores.leftCols(k));
    best.adjusted_r2.push_back(fit.adjusted_r2);
    if (k == 1 || fit.adjusted_r2 > best.fit.adjusted_r2) {
      best.fit = std::move(fit);
      best.k = k;
    }
  }
  return best;
}

PcRegression pc_regression(const Vector& y, const Matrix& x, int k_max) {
  if (k_max < 1) throw ConfigError("pc_regression: K_max must be >= 1");
  const int top = std::min<int>(k_max, static_cast<int>(x.cols()));
  PcaModel pca = pca_extract(x, top);
  ComponentSelection sel = select_components(y, pca.scores(x), top);
  pca.k = sel.k;
  pca.loadings = pca.loadings.leftCols(sel.k).eval();
  return PcRegression{std::move(sel.fit), std::move(pca), std::move(sel.adjusted_r2)};
}

}  // namespace erp
