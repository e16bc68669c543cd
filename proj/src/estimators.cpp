#include "nwreg/estimators.hpp"

#include <Eigen/SVD>
#include <cmath>
#include <limits>

namespace nwreg {

namespace {

constexpr double kConditionGate = 1e12;

// Solve A b = rhs for symmetric PSD A, gating on the SVD condition estimate.
Vec gated_solve(const Mat& a, const Vec& rhs, const char* what) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond < kConditionGate)) {
        throw SingularGramError(std::string(what) + ": Gram matrix numerically singular", cond);
    }
    return svd.solve(rhs);
}

Mat gated_inverse(const Mat& a, const char* what) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smax = sv(0);
    const double smin = sv(sv.size() - 1);
    const double cond = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(cond < kConditionGate)) {
        throw SingularGramError(std::string(what) + ": Gram matrix numerically singular", cond);
    }
    return svd.solve(Mat::Identity(a.rows(), a.cols()));
}

Vec sqrt_diagonal(const Mat& cov) {
    Vec se(cov.rows());
    for (Index i = 0; i < cov.rows(); ++i) se[i] = std::sqrt(std::max(cov(i, i), 0.0));
    return se;
}

}  // namespace

double ClipPolicy::threshold(Index n) const {
    return d * std::pow(static_cast<double>(n), exponent);
}

ClipPolicy ClipPolicy::for_design(const Design& des, double d, double exponent) {
    ClipPolicy cp;
    cp.d = d;
    cp.exponent = exponent;
    cp.scale = des.x.rightCols(des.p()).cwiseAbs().colwise().mean();
    return cp;
}

double scalar_sign_estimate(const Vec& x, const Vec& y) {
    if (x.size() != y.size()) throw Error("scalar_sign_estimate: size mismatch");
    double num = 0.0;
    double den = 0.0;
    for (Index j = 0; j < x.size(); ++j) {
        num += (x[j] > 0.0 ? y[j] : (x[j] < 0.0 ? -y[j] : 0.0));
        den += std::abs(x[j]);
    }
    if (den == 0.0) throw ZeroDenominatorError("scalar_sign_estimate: all predictors are zero");
    return num / den;
}

FitResult fit_norm_weighted(const Design& des, const Vec& y) {
    const double n = static_cast<double>(des.n());
    const Mat s_gx = (des.g.transpose() * des.x) / n;
    const Vec s_gy = (des.g.transpose() * y) / n;
    FitResult fit;
    fit.estimator_kind = EstimatorKind::NormWeighted;
    fit.beta = gated_solve(s_gx, s_gy, "fit_norm_weighted");
    fit.residuals = y - des.x * fit.beta;
    return fit;
}

FitResult fit_least_squares(const Design& des, const Vec& y) {
    const double n = static_cast<double>(des.n());
    const Mat s_xx = (des.x.transpose() * des.x) / n;
    const Vec s_xy = (des.x.transpose() * y) / n;
    FitResult fit;
    fit.estimator_kind = EstimatorKind::LeastSquares;
    fit.beta = gated_solve(s_xx, s_xy, "fit_least_squares");
    fit.residuals = y - des.x * fit.beta;
    return fit;
}

CovResult cov_norm_weighted(const Design& des, const FitResult& fit, const ClipPolicy& clip) {
    const Index n = des.n();
    const Index p = des.p();
    if (clip.scale.size() != p) {
        throw Error("cov_norm_weighted: clip scale length does not match predictor count");
    }
    const double thr = clip.threshold(n);

    Vec w(n);
    Index clipped = 0;
    for (Index j = 0; j < n; ++j) {
        double ratio = 0.0;
        for (Index i = 0; i < p; ++i) {
            ratio = std::max(ratio, std::abs(des.x(j, i + 1)) / clip.scale[i]);
        }
        const bool keep = ratio < thr;
        w[j] = keep ? 1.0 : 0.0;
        if (!keep) ++clipped;
    }

    const double dn = static_cast<double>(n);
    const Vec c = w.array() * fit.residuals.array().square();
    const Mat meat = (des.g.transpose() * (des.g.array().colwise() * c.array()).matrix()) / dn;
    const Mat s_gx = (des.g.transpose() * des.x) / dn;
    const Mat bread = gated_inverse(s_gx, "cov_norm_weighted");

    CovResult out;
    out.cov = (bread * meat * bread) / dn;
    out.cov = 0.5 * (out.cov + out.cov.transpose()).eval();
    out.clip_count = clipped;
    return out;
}

Mat cov_least_squares(const Design& des, const FitResult& fit) {
    const double n = static_cast<double>(des.n());
    const Vec c = fit.residuals.array().square();
    const Mat meat = (des.x.transpose() * (des.x.array().colwise() * c.array()).matrix()) / n;
    const Mat s_xx = (des.x.transpose() * des.x) / n;
    const Mat bread = gated_inverse(s_xx, "cov_least_squares");
    Mat cov = (bread * meat * bread) / n;
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

FitResult fit_norm_weighted_full(const Design& des, const Vec& y, const ClipPolicy& clip) {
    FitResult fit = fit_norm_weighted(des, y);
    CovResult cr = cov_norm_weighted(des, fit, clip);
    fit.cov = std::move(cr.cov);
    fit.clip_count = cr.clip_count;
    fit.se = sqrt_diagonal(fit.cov);
    return fit;
}

FitResult fit_least_squares_full(const Design& des, const Vec& y) {
    FitResult fit = fit_least_squares(des, y);
    fit.cov = cov_least_squares(des, fit);
    fit.se = sqrt_diagonal(fit.cov);
    return fit;
}

UnpackResult unpack_weighted(const Design& des, const Vec& y) {
    const Index n = des.n();
    const Index p = des.p();

    UnpackResult out;
    out.weights = des.row_norm.array().inverse();
    out.weights /= out.weights.sum();

    out.y_tilde = out.weights.dot(y);
    // centered weighted predictor mean: z_tilde - z_bar
    const Vec ct = des.x.rightCols(p).transpose() * out.weights;
    out.z_tilde = des.psi_hat + ct;

    Mat scatter = Mat::Zero(p, p);
    Vec cross = Vec::Zero(p);
    for (Index j = 0; j < n; ++j) {
        const Vec dev = des.x.row(j).tail(p).transpose() - ct;
        scatter.noalias() += out.weights[j] * dev * dev.transpose();
        cross.noalias() += out.weights[j] * dev * (y[j] - out.y_tilde);
    }
    out.beta_1p = gated_solve(scatter, cross, "unpack_weighted");
    out.beta0 = out.y_tilde - ct.dot(out.beta_1p);
    return out;
}

double pivot(double beta_hat, double beta_null, double se) {
    if (!(se > 0.0)) throw ZeroSEError("pivot: standard error must be positive");
    return (beta_hat - beta_null) / se;
}

CondVariancesP1 cond_variance_formulas_p1(const Design& des, const Vec& sigma2) {
    if (des.p() != 1) throw Error("cond_variance_formulas_p1: requires p == 1");
    const Index n = des.n();
    if (sigma2.size() != n) throw Error("cond_variance_formulas_p1: sigma2 length mismatch");

    const Vec zc = des.x.col(1);        // z_j - z_bar
    const Vec rn = des.row_norm;        // sqrt(1 + (z_j - z_bar)^2)

    Vec w = rn.array().inverse();
    w /= w.sum();
    const double zt = w.dot(zc);        // Z_tilde - Z_bar

    CondVariancesP1 out;

    double num = 0.0, den = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double dev = zc[j] - zt;  // Z_j - Z_tilde
        num += dev * dev * sigma2[j] / (rn[j] * rn[j]);
        den += dev * dev / rn[j];
    }
    out.nw_var_beta1 = num / (den * den);

    double v0 = 0.0;
    for (Index j = 0; j < n; ++j) {
        const double dev = zc[j] - zt;
        const double wprime = (dev / rn[j]) / den;
        const double lambda = w[j] - zt * wprime;
        v0 += sigma2[j] * lambda * lambda;
    }
    out.nw_var_beta0 = v0;

    double num_ls = 0.0;
    const double den_ls = zc.squaredNorm();
    for (Index j = 0; j < n; ++j) num_ls += zc[j] * zc[j] * sigma2[j];
    out.ls_var_beta1 = num_ls / (den_ls * den_ls);
    out.ls_var_beta0 = sigma2.sum() / (static_cast<double>(n) * static_cast<double>(n));
    return out;
}

}  // namespace nwreg
