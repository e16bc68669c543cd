#ifndef NWREG_DATASET_HPP
#define NWREG_DATASET_HPP

#include "nwreg/common.hpp"

namespace nwreg {

/// Raw (Z, Y) sample: outcome vector plus predictor matrix.
struct Dataset {
    Vec y;  ///< outcomes, length n
    Mat z;  ///< predictors, n x p

    Index n() const { return y.size(); }
    Index p() const { return z.cols(); }
};

/**
 * Centered design with intercept.
 *
 * Row j of `x` is (1, (z_j - psi_hat)^T); `g` holds the unit-norm instrument
 * rows x_j / ||x_j||_2. The intercept column keeps every row norm >= 1 and
 * every |g(j,i)| <= 1.
 */
struct Design {
    Vec psi_hat;   ///< column means of z, length p
    Mat x;         ///< n x (p+1)
    Vec row_norm;  ///< ||x_j||_2, length n
    Mat g;         ///< instrument rows, n x (p+1)

    Index n() const { return x.rows(); }
    Index p() const { return x.cols() - 1; }
};

/// Center the predictors at their sample means and attach the instruments.
/// Throws NonFiniteError on NaN/Inf input and DegenerateColumnError when a
/// centered column is identically zero.
Design build_design(const Dataset& ds);

/// Design over an explicit regressor matrix (no implicit intercept or
/// centering). Used for reduced no-intercept fits in tests and internally.
Design design_from_matrix(const Mat& x);

}  // namespace nwreg

#endif
