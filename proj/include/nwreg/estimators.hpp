#ifndef NWREG_ESTIMATORS_HPP
#define NWREG_ESTIMATORS_HPP

#include "nwreg/dataset.hpp"

namespace nwreg {

enum class EstimatorKind { NormWeighted, LeastSquares };

/// Coefficients plus (optionally) the robust sandwich covariance.
struct FitResult {
    Vec beta;                 ///< length p+1, element 0 is the intercept
    Mat cov;                  ///< (p+1)x(p+1); empty until a cov_* call fills it
    Vec se;                   ///< sqrt of the cov diagonal
    Vec residuals;            ///< y - x * beta
    EstimatorKind estimator_kind = EstimatorKind::NormWeighted;
    Index clip_count = 0;     ///< observations excluded by the clipping weight

    bool has_cov() const { return cov.size() > 0; }
};

/**
 * Clipping weight for the covariance meat matrix.
 *
 * Observation j is kept iff max_i |x_{j,i+1}| / scale_i < d * n^exponent,
 * the max running over predictor coordinates only (the intercept column is
 * structurally exempt). `scale` holds the per-predictor mean absolute
 * centered deviation. d = infinity disables clipping.
 */
struct ClipPolicy {
    double d = 10.0;
    double exponent = 0.2;
    Vec scale;

    /// Threshold d * n^exponent.
    double threshold(Index n) const;

    /// Policy with scale filled from the design's centered predictor columns.
    static ClipPolicy for_design(const Design& des, double d = 10.0, double exponent = 0.2);
};

/// Scalar no-intercept sign estimator: sum(sign(x) * y) / sum(|x|),
/// with sign(0) = 0. Throws ZeroDenominatorError when all x are zero.
double scalar_sign_estimate(const Vec& x, const Vec& y);

/// Norm-weighted estimator: solves S_GX beta = S_GY. Covariance deferred.
FitResult fit_norm_weighted(const Design& des, const Vec& y);

/// Ordinary least squares on the same design. Covariance deferred.
FitResult fit_least_squares(const Design& des, const Vec& y);

struct CovResult {
    Mat cov;
    Index clip_count = 0;
};

/// Clipped sandwich for the norm-weighted fit:
/// (1/n) S_GX^-1 [ (1/n) sum w_j u_j^2 G_j G_j^T ] S_GX^-1.
CovResult cov_norm_weighted(const Design& des, const FitResult& fit, const ClipPolicy& clip);

/// Eicker-Huber-White sandwich for the least-squares fit (1/n throughout,
/// no degrees-of-freedom correction).
Mat cov_least_squares(const Design& des, const FitResult& fit);

/// Convenience: fit and attach the matching covariance.
FitResult fit_norm_weighted_full(const Design& des, const Vec& y, const ClipPolicy& clip);
FitResult fit_least_squares_full(const Design& des, const Vec& y);

/// Coefficients recovered through the weighted-centering identity,
/// with the weights and weighted means it uses.
struct UnpackResult {
    double beta0 = 0.0;
    Vec beta_1p;    ///< slopes, length p
    Vec weights;    ///< w_j, sums to one
    double y_tilde = 0.0;
    Vec z_tilde;    ///< weighted predictor means, length p
};

/// Solve the weighted-centering form: slopes from the weighted scatter of
/// the raw predictors, intercept from the weighted means. Must agree with
/// fit_norm_weighted; the equality is a library test.
UnpackResult unpack_weighted(const Design& des, const Vec& y);

/// Studentized statistic (beta_hat - beta_null) / se.
double pivot(double beta_hat, double beta_null, double se);

/// Closed-form conditional estimator variances for p = 1 with intercept and
/// known per-observation outcome variances. Infeasible-oracle quantities
/// used to validate the Monte Carlo machinery.
struct CondVariancesP1 {
    double nw_var_beta0 = 0.0;
    double nw_var_beta1 = 0.0;
    double ls_var_beta0 = 0.0;
    double ls_var_beta1 = 0.0;
};

CondVariancesP1 cond_variance_formulas_p1(const Design& des, const Vec& sigma2);

}  // namespace nwreg

#endif
