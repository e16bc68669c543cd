#ifndef NWREG_QUANTILE_HPP
#define NWREG_QUANTILE_HPP

#include "nwreg/dataset.hpp"

namespace nwreg {

/// Result of a norm-weighted quantile regression fit.
struct QuantileFit {
    double tau = 0.5;
    Vec beta;                 ///< length p+1
    Mat cov;                  ///< empty until cov_median fills it
    Vec se;
    Vec residuals;            ///< y - x * beta (original scale)
    double bandwidth = 0.0;   ///< h_n used by cov_median
    double objective = 0.0;   ///< attained sum of weighted check losses
    Index in_band_count = 0;  ///< residuals with |u_j| < bandwidth
    // solver diagnostics
    int iterations = 0;
    double duality_gap = 0.0;
    double subgradient_inf = 0.0;  ///< inf-norm of the minimal certified subgradient
};

/// Divide outcome and design rows by the row norms. The weighted check loss
/// on the original data equals the plain check loss on (y_star, x_star).
void preprocess(const Design& des, const Vec& y, Vec& y_star, Mat& x_star);

/// Check-loss value sum_j rho_tau(y_star_j - x_star_j . b).
double check_objective(const Mat& x_star, const Vec& y_star, double tau, const Vec& b);

/// Inf-norm of the minimal subgradient of the preprocessed check loss at b,
/// treating residuals with |u| <= zero_tol as free within their box.
double min_subgradient_inf(const Mat& x_star, const Vec& y_star, double tau, const Vec& b,
                           double zero_tol);

/**
 * Norm-weighted quantile regression: minimizes the row-norm-weighted check
 * loss via a Mehrotra predictor-corrector interior point method on the
 * preprocessed data, followed by a vertex polish.
 *
 * Throws SolverFailError if the duality gap has not closed within
 * `max_iter` iterations.
 */
QuantileFit fit_quantile(const Design& des, const Vec& y, double tau, int max_iter = 200);

/// Rectangular-kernel sandwich for the median (or tau) fit:
/// cov = (1/n) D1^-1 M1 D1^-1 with M1 = (1/n) sum G G^T and
/// D1 = (1/(n h)) sum G X^T over residuals inside the band.
/// Throws EmptyBandError when fewer than p+2 residuals fall inside.
Mat cov_median(const Design& des, const QuantileFit& qf, double h);

/// Variant reproducing the alternative printed sandwich: the kernel weight
/// moves onto the G G^T outer bread (with its 2/(n h) factor) and the plain
/// S_GX becomes the middle matrix. Exposed behind a CLI flag.
Mat cov_median_printed(const Design& des, const QuantileFit& qf, double h);

/// Data-driven bandwidth: 1.0 * mad(residuals)/0.6745 * n^(-1/5), floored so
/// that at least the 2(p+2) smallest |residuals| fall strictly inside the
/// band. Requires n >= 10.
double default_bandwidth(const Vec& residuals, Index p);

/// Fit plus bandwidth selection and covariance in one call.
QuantileFit fit_quantile_full(const Design& des, const Vec& y, double tau,
                              double bandwidth = 0.0, bool printed_variant = false);

}  // namespace nwreg

#endif
