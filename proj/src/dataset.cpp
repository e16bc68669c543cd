#include "nwreg/dataset.hpp"

#include <cmath>

namespace nwreg {

Design build_design(const Dataset& ds) {
    const Index n = ds.n();
    const Index p = ds.p();
    if (ds.z.rows() != n) {
        throw Error("build_design: y and z row counts differ");
    }
    if (n < p + 2) {
        throw Error("build_design: need n >= p + 2");
    }
    if (!ds.y.allFinite() || !ds.z.allFinite()) {
        throw NonFiniteError("build_design: input contains NaN or Inf");
    }

    Design des;
    des.psi_hat = ds.z.colwise().mean();
    des.x.resize(n, p + 1);
    des.x.col(0).setOnes();
    des.x.rightCols(p) = ds.z.rowwise() - des.psi_hat.transpose();

    for (Index i = 0; i < p; ++i) {
        if ((des.x.col(i + 1).array() == 0.0).all()) {
            throw DegenerateColumnError("build_design: centered column " +
                                        std::to_string(i) + " is identically zero");
        }
    }

    des.row_norm = des.x.rowwise().norm();
    des.g = des.x.array().colwise() / des.row_norm.array();
    return des;
}

Design design_from_matrix(const Mat& x) {
    if (!x.allFinite()) {
        throw NonFiniteError("design_from_matrix: input contains NaN or Inf");
    }
    Design des;
    des.psi_hat = Vec::Zero(x.cols());
    des.x = x;
    des.row_norm = x.rowwise().norm();
    for (Index j = 0; j < x.rows(); ++j) {
        if (des.row_norm[j] == 0.0) {
            throw DegenerateColumnError("design_from_matrix: zero row " + std::to_string(j));
        }
    }
    des.g = des.x.array().colwise() / des.row_norm.array();
    return des;
}

}  // namespace nwreg
