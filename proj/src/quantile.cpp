#include "nwreg/quantile.hpp"

#include <Eigen/Cholesky>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "nwreg/stats.hpp"

namespace nwreg {

void preprocess(const Design& des, const Vec& y, Vec& y_star, Mat& x_star) {
    y_star = y.array() / des.row_norm.array();
    x_star = des.g;
}

double check_objective(const Mat& x_star, const Vec& y_star, double tau, const Vec& b) {
    const Vec u = y_star - x_star * b;
    double obj = 0.0;
    for (Index j = 0; j < u.size(); ++j) {
        obj += u[j] * (tau - (u[j] < 0.0 ? 1.0 : 0.0));
    }
    return obj;
}

double min_subgradient_inf(const Mat& x_star, const Vec& y_star, double tau, const Vec& b,
                           double zero_tol) {
    const Index n = x_star.rows();
    const Index m = x_star.cols();
    const Vec u = y_star - x_star * b;

    // fixed part of the subgradient plus the loose indices
    Vec fixed = Vec::Zero(m);
    std::vector<Index> loose;
    for (Index j = 0; j < n; ++j) {
        if (std::abs(u[j]) <= zero_tol) {
            loose.push_back(j);
        } else {
            fixed -= x_star.row(j).transpose() * (tau - (u[j] < 0.0 ? 1.0 : 0.0));
        }
    }
    if (loose.empty()) return fixed.cwiseAbs().maxCoeff();

    // minimize ||fixed - sum_j x_j phi_j||_2 over phi_j in [tau-1, tau]
    // (coordinate descent on a small box-constrained quadratic)
    const Index k = static_cast<Index>(loose.size());
    Mat a(m, k);
    for (Index i = 0; i < k; ++i) a.col(i) = -x_star.row(loose[i]).transpose();
    Vec phi = Vec::Constant(k, tau - 0.5);
    Vec g = fixed + a * phi;
    for (int sweep = 0; sweep < 200; ++sweep) {
        double change = 0.0;
        for (Index i = 0; i < k; ++i) {
            const double aa = a.col(i).squaredNorm();
            if (aa == 0.0) continue;
            double step = phi[i] - a.col(i).dot(g) / aa;
            step = std::min(tau, std::max(tau - 1.0, step));
            const double delta = step - phi[i];
            if (delta != 0.0) {
                g += a.col(i) * delta;
                phi[i] = step;
                change = std::max(change, std::abs(delta));
            }
        }
        if (change < 1e-14) break;
    }
    return g.cwiseAbs().maxCoeff();
}

namespace {

// Mehrotra predictor-corrector for
//     min_b sum_j rho_tau(y_j - a_j . b)
// via the LP  min tau 1'u + (1-tau) 1'v  s.t.  A b + u - v = y, u,v >= 0,
// whose dual variable d lives in the box (tau-1 treated via w2) with
//     w1 = tau - d > 0,  w2 = (1 - tau) + d > 0,  A'd = 0.
struct IpmResult {
    Vec b;
    int iterations = 0;
    double gap = 0.0;
    bool converged = false;
};

IpmResult solve_checkloss_ipm(const Mat& a, const Vec& y, double tau, int max_iter) {
    const Index n = a.rows();
    const double dn = static_cast<double>(n);

    IpmResult out;

    // starting point: least squares b, residual split with a positive pad
    Eigen::LDLT<Mat> gram(a.transpose() * a);
    Vec b = gram.solve(a.transpose() * y);
    Vec r = y - a * b;
    const double pad = std::max(1.0, r.cwiseAbs().mean());
    Vec u = r.cwiseMax(0.0).array() + pad;
    Vec v = (-r).cwiseMax(0.0).array() + pad;
    Vec d = Vec::Zero(n);

    const double yscale = 1.0 + y.cwiseAbs().maxCoeff();
    const double tol = 1e-11;

    for (int it = 1; it <= max_iter; ++it) {
        const Vec w1 = Vec::Constant(n, tau) - d;
        const Vec w2 = Vec::Constant(n, 1.0 - tau) + d;
        const double gap = u.dot(w1) + v.dot(w2);
        const Vec rp = y - a * b - u + v;
        const Vec rd = -(a.transpose() * d);

        const double fprimal = tau * u.sum() + (1.0 - tau) * v.sum();
        out.b = b;
        out.iterations = it - 1;
        out.gap = gap;
        if (gap / (1.0 + std::abs(fprimal)) < tol &&
            rp.cwiseAbs().maxCoeff() < tol * yscale &&
            rd.cwiseAbs().maxCoeff() < tol * dn) {
            out.converged = true;
            return out;
        }

        const Vec theta_inv =
            (u.array() / w1.array() + v.array() / w2.array()).inverse().matrix();

        // normal equations matrix, factored once per iteration
        const Mat mmat = a.transpose() * (a.array().colwise() * theta_inv.array()).matrix();
        Eigen::LDLT<Mat> fac(mmat);
        if (fac.info() != Eigen::Success) {
            throw SingularGramError("fit_quantile: normal equations singular", 0.0);
        }

        auto solve_direction = [&](const Vec& r1, const Vec& r2, Vec& db, Vec& dd, Vec& du,
                                   Vec& dv) {
            const Vec rt = rp - (r1.array() / w1.array()).matrix() +
                           (r2.array() / w2.array()).matrix();
            db = fac.solve(a.transpose() * (theta_inv.array() * rt.array()).matrix() - rd);
            dd = (theta_inv.array() * (rt - a * db).array()).matrix();
            du = ((r1.array() + u.array() * dd.array()) / w1.array()).matrix();
            dv = ((r2.array() - v.array() * dd.array()) / w2.array()).matrix();
        };

        auto step_lengths = [&](const Vec& du, const Vec& dv, const Vec& dd, double& ap,
                                double& ad) {
            ap = 1.0;
            ad = 1.0;
            for (Index j = 0; j < n; ++j) {
                if (du[j] < 0.0) ap = std::min(ap, -u[j] / du[j]);
                if (dv[j] < 0.0) ap = std::min(ap, -v[j] / dv[j]);
                if (dd[j] > 0.0) ad = std::min(ad, w1[j] / dd[j]);
                if (dd[j] < 0.0) ad = std::min(ad, -w2[j] / dd[j]);
            }
        };

        // affine predictor
        Vec db, dd, du, dv;
        {
            const Vec r1 = (-u.array() * w1.array()).matrix();
            const Vec r2 = (-v.array() * w2.array()).matrix();
            solve_direction(r1, r2, db, dd, du, dv);
        }
        double ap, ad;
        step_lengths(du, dv, dd, ap, ad);
        const double gap_aff = (u + ap * du).dot(w1 - ad * dd) + (v + ap * dv).dot(w2 + ad * dd);
        const double sigma = std::pow(std::max(gap_aff, 0.0) / gap, 3.0);
        const double mu = sigma * gap / (2.0 * dn);

        // corrector
        {
            const Vec r1 =
                (mu - u.array() * w1.array() + du.array() * dd.array()).matrix();
            const Vec r2 =
                (mu - v.array() * w2.array() - dv.array() * dd.array()).matrix();
            solve_direction(r1, r2, db, dd, du, dv);
        }
        step_lengths(du, dv, dd, ap, ad);
        const double damp = 0.9995;
        ap = std::min(1.0, damp * ap);
        ad = std::min(1.0, damp * ad);

        b += ap * db;
        u += ap * du;
        v += ap * dv;
        d += ad * dd;
    }

    out.iterations = max_iter;
    return out;
}

}  // namespace

QuantileFit fit_quantile(const Design& des, const Vec& y, double tau, int max_iter) {
    if (!(tau > 0.0 && tau < 1.0)) throw Error("fit_quantile: tau must lie in (0,1)");
    const Index n = des.n();
    const Index m = des.x.cols();

    Vec y_star;
    Mat x_star;
    preprocess(des, y, y_star, x_star);

    IpmResult ipm = solve_checkloss_ipm(x_star, y_star, tau, max_iter);
    if (!ipm.converged) {
        throw SolverFailError("fit_quantile: interior point did not converge in " +
                                  std::to_string(max_iter) + " iterations (gap " +
                                  std::to_string(ipm.gap) + ")",
                              ipm.iterations, ipm.gap);
    }

    Vec beta = ipm.b;
    double obj = check_objective(x_star, y_star, tau, beta);

    // vertex polish: interpolate the m nearest-to-zero residuals exactly and
    // keep the vertex whenever it does not worsen the objective
    {
        Vec u = (y_star - x_star * beta).cwiseAbs();
        std::vector<Index> idx(n);
        std::iota(idx.begin(), idx.end(), Index{0});
        std::partial_sort(idx.begin(), idx.begin() + m, idx.end(),
                          [&](Index i, Index j) { return u[i] < u[j]; });
        Mat asub(m, m);
        Vec ysub(m);
        for (Index i = 0; i < m; ++i) {
            asub.row(i) = x_star.row(idx[i]);
            ysub[i] = y_star[idx[i]];
        }
        Eigen::FullPivLU<Mat> lu(asub);
        if (lu.isInvertible()) {
            const Vec cand = lu.solve(ysub);
            const double cobj = check_objective(x_star, y_star, tau, cand);
            if (cobj <= obj * (1.0 + 1e-12) + 1e-300) {
                beta = cand;
                obj = std::min(obj, cobj);
            }
        }
    }

    QuantileFit qf;
    qf.tau = tau;
    qf.beta = beta;
    qf.residuals = y - des.x * beta;
    qf.objective = check_objective(x_star, y_star, tau, beta);
    qf.iterations = ipm.iterations;
    qf.duality_gap = ipm.gap;
    const double ztol = 1e-9 * (1.0 + y_star.cwiseAbs().maxCoeff());
    qf.subgradient_inf = min_subgradient_inf(x_star, y_star, tau, beta, ztol);
    return qf;
}

namespace {

Mat gated_inverse_sym(const Mat& a, const char* what) {
    Eigen::JacobiSVD<Mat> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
    const auto& sv = svd.singularValues();
    const double smin = sv(sv.size() - 1);
    const double cond =
        smin > 0.0 ? sv(0) / smin : std::numeric_limits<double>::infinity();
    if (!(cond < 1e12)) {
        throw SingularGramError(std::string(what) + ": matrix numerically singular", cond);
    }
    return svd.solve(Mat::Identity(a.rows(), a.cols()));
}

}  // namespace

Mat cov_median(const Design& des, const QuantileFit& qf, double h) {
    if (!(h > 0.0)) throw Error("cov_median: bandwidth must be positive");
    if (qf.residuals.size() != des.n()) {
        throw Error("cov_median: fit residuals missing or mismatched");
    }
    const Index n = des.n();
    const Index p = des.p();
    const double dn = static_cast<double>(n);

    Index in_band = 0;
    Mat d1 = Mat::Zero(p + 1, p + 1);
    for (Index j = 0; j < n; ++j) {
        if (std::abs(qf.residuals[j]) < h) {
            ++in_band;
            d1.noalias() += des.g.row(j).transpose() * des.x.row(j);
        }
    }
    if (in_band < p + 2) {
        throw EmptyBandError("cov_median: only " + std::to_string(in_band) +
                             " residuals inside the band, need " + std::to_string(p + 2));
    }
    d1 /= dn * h;

    const Mat m1 = (des.g.transpose() * des.g) / dn;
    const Mat d1inv = gated_inverse_sym(d1, "cov_median");
    Mat cov = (d1inv * m1 * d1inv.transpose()) / dn;
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

Mat cov_median_printed(const Design& des, const QuantileFit& qf, double h) {
    if (!(h > 0.0)) throw Error("cov_median_printed: bandwidth must be positive");
    if (qf.residuals.size() != des.n()) {
        throw Error("cov_median_printed: fit residuals missing or mismatched");
    }
    const Index n = des.n();
    const Index p = des.p();
    const double dn = static_cast<double>(n);

    Index in_band = 0;
    Mat bread = Mat::Zero(p + 1, p + 1);
    for (Index j = 0; j < n; ++j) {
        if (std::abs(qf.residuals[j]) < h) {
            ++in_band;
            bread.noalias() += des.g.row(j).transpose() * des.g.row(j);
        }
    }
    if (in_band < p + 2) {
        throw EmptyBandError("cov_median_printed: only " + std::to_string(in_band) +
                             " residuals inside the band, need " + std::to_string(p + 2));
    }
    bread *= 2.0 / (dn * h);

    const Mat s_gx = (des.g.transpose() * des.x) / dn;
    const Mat binv = gated_inverse_sym(bread, "cov_median_printed");
    Mat cov = (binv * s_gx * binv.transpose()) / dn;
    cov = 0.5 * (cov + cov.transpose()).eval();
    return cov;
}

double default_bandwidth(const Vec& residuals, Index p) {
    const Index n = residuals.size();
    if (n < 10) throw Error("default_bandwidth: need at least 10 residuals");
    std::vector<double> res(residuals.data(), residuals.data() + n);
    const double scale = mad(res) / 0.6745;
    double h = scale * std::pow(static_cast<double>(n), -0.2);

    std::vector<double> abs_res(res.size());
    for (std::size_t i = 0; i < res.size(); ++i) abs_res[i] = std::abs(res[i]);
    std::sort(abs_res.begin(), abs_res.end());
    const std::size_t k = std::min<std::size_t>(2 * static_cast<std::size_t>(p + 2), abs_res.size());
    double floor_val = abs_res[k - 1] * (1.0 + 1e-9);
    if (floor_val <= 0.0) floor_val = 1e-300;
    return std::max(h, floor_val);
}

QuantileFit fit_quantile_full(const Design& des, const Vec& y, double tau, double bandwidth,
                              bool printed_variant) {
    QuantileFit qf = fit_quantile(des, y, tau);
    qf.bandwidth = bandwidth > 0.0 ? bandwidth : default_bandwidth(qf.residuals, des.p());
    qf.cov = printed_variant ? cov_median_printed(des, qf, qf.bandwidth)
                             : cov_median(des, qf, qf.bandwidth);
    qf.se.resize(qf.cov.rows());
    for (Index i = 0; i < qf.cov.rows(); ++i) qf.se[i] = std::sqrt(std::max(qf.cov(i, i), 0.0));
    qf.in_band_count = 0;
    for (Index j = 0; j < des.n(); ++j) {
        if (std::abs(qf.residuals[j]) < qf.bandwidth) ++qf.in_band_count;
    }
    return qf;
}

}  // namespace nwreg
