#ifndef NWREG_STATS_HPP
#define NWREG_STATS_HPP

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "nwreg/common.hpp"

namespace nwreg {

/// Standard normal CDF, accurate to a few ulp (erfc based).
double normal_cdf(double x);

/// Standard normal quantile (Wichura AS 241, ~1e-15 absolute error).
double normal_quantile(double p);

/// Empirical quantile with linear interpolation between order statistics
/// (R type 7). `p` in [0,1]; data need not be sorted.
double quantile_linear(std::vector<double> data, double p);

/// Empirical quantile at plotting position (i-0.5)/n (Hazen convention);
/// maps p = (i-0.5)/n exactly onto the i-th order statistic.
double quantile_hazen(const std::vector<double>& sorted, double p);

/// Median of a vector (average of the two middle order statistics for even n).
double median(std::vector<double> data);

/// Median absolute deviation about the median (unscaled).
double mad(const std::vector<double>& data);

/// Format with `digits` significant digits, truncating toward zero rather
/// than rounding: 0.0779 at 2 digits prints "0.077".
std::string format_sig_trunc(double x, int digits);

/// Parallel loop over [0, n): runs fn(i) on up to `threads` workers.
/// Results must be written to per-index slots so output is order invariant.
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace nwreg

#endif
