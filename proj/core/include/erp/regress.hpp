#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "erp/types.hpp"

namespace erp {

/// OLS fit of y on [1, X].
struct OlsFit {
  Vector coefficients;  ///< intercept first, then one slope per column of X
  Vector residuals;
  Vector fitted;
  double r2 = 0.0;
  double adjusted_r2 = 0.0;
  Vector hac_tstats;  ///< Newey-West t-statistics at the default lag; NaN when undefined
  int hac_lag = 0;
  std::size_t nobs = 0;
  Matrix design;  ///< [1, X]
};

/// Requires nobs > ncols + 1 and finite inputs. Throws EstimationError
/// naming the collinear columns when [1, X] is rank deficient.
OlsFit ols_fit(const Vector& y, const Matrix& x, const std::vector<std::string>& names = {});

/// floor(4 (T/100)^(2/9)).
int newey_west_default_lag(std::size_t nobs);

/// Bartlett-kernel HAC covariance of the coefficients. lag = 0 gives the
/// White (HC0) estimator. Throws SizeError when lag >= T.
Matrix hac_covariance(const Matrix& design, const Vector& residuals, int lag);

/// t-statistics from hac_covariance. Throws EstimationError when the
/// residuals are identically zero.
Vector hac_tstats(const OlsFit& fit, std::optional<int> lag = std::nullopt);

enum class BootstrapStatistic { kHacT, kSlope };

struct BootstrapOptions {
  int replications = 2000;
  std::uint64_t seed = 0;
  BootstrapStatistic statistic = BootstrapStatistic::kHacT;
  unsigned threads = 1;
};

/// One-sided (upper-tail) fixed-regressor wild bootstrap p-value for the
/// slope on column `column` of X under H0: slope = 0. Pseudo responses are
/// the restricted fit plus unrestricted residuals times Rademacher weights.
/// Each replication has its own seed derived from options.seed, so the
/// result does not depend on the thread count.
double wild_bootstrap_pvalue(const Vector& y, const Matrix& x, Eigen::Index column,
                             const BootstrapOptions& options);
double wild_bootstrap_pvalue(const Vector& y, const Vector& x, const BootstrapOptions& options);

/// Standardisation statistics plus the leading eigenvectors of the sample
/// correlation matrix.
struct PcaModel {
  Vector means;
  Vector sds;           ///< n-1 standard deviations
  Matrix loadings;      ///< p x k, orthonormal columns, largest |entry| positive
  Vector eigenvalues;   ///< all p, descending
  Vector explained;     ///< eigenvalues / p
  int k = 0;

  /// Standardises rows of X with the stored statistics and projects them.
  Matrix scores(const Matrix& x) const;
};

/// Throws EstimationError on a zero-variance column (named when names are
/// given) and SizeError unless k <= ncols < nobs.
PcaModel pca_extract(const Matrix& x, int k, const std::vector<std::string>& names = {});

struct ComponentSelection {
  OlsFit fit;
  int k = 0;
  std::vector<double> adjusted_r2;  ///< by k = 1..k_max
};

/// Regresses y on the first k score columns for k = 1..k_max and keeps the
/// highest adjusted R^2; ties go to the smaller k.
ComponentSelection select_components(const Vector& y, const Matrix& scores, int k_max);

struct PcRegression {
  OlsFit fit;
  PcaModel pca;  ///< pca.k is the selected K
  std::vector<double> adjusted_r2;
};

/// Principal-component regression of y on the components of X (rows aligned).
PcRegression pc_regression(const Vector& y, const Matrix& x, int k_max = 3);

}  // namespace erp
