#include "nwreg/stats.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <thread>

namespace nwreg {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Wichura (1988), algorithm AS 241, PPND16.
double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw Error("normal_quantile: p must lie in (0,1)");
    }
    const double q = p - 0.5;
    double r;
    if (std::abs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double val;
    if (r <= 5.0) {
        r -= 1.6;
        val = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                    2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                  3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
              (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                    1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                  6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        val = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                    1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                  2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
              (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                    1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                  1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -val : val;
}

double quantile_linear(std::vector<double> data, double p) {
    if (data.empty()) throw Error("quantile_linear: empty data");
    if (p < 0.0 || p > 1.0) throw Error("quantile_linear: p outside [0,1]");
    std::sort(data.begin(), data.end());
    const double h = (static_cast<double>(data.size()) - 1.0) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const auto hi = std::min(lo + 1, data.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return data[lo] + frac * (data[hi] - data[lo]);
}

double quantile_hazen(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) throw Error("quantile_hazen: empty data");
    const double n = static_cast<double>(sorted.size());
    const double h = n * p + 0.5;  // h = i maps onto the i-th order statistic
    if (h <= 1.0) return sorted.front();
    if (h >= n) return sorted.back();
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const double frac = h - static_cast<double>(lo);
    return sorted[lo - 1] + frac * (sorted[lo] - sorted[lo - 1]);
}

double median(std::vector<double> data) {
    if (data.empty()) throw Error("median: empty data");
    const std::size_t n = data.size();
    const std::size_t mid = n / 2;
    std::nth_element(data.begin(), data.begin() + mid, data.end());
    double m = data[mid];
    if (n % 2 == 0) {
        std::nth_element(data.begin(), data.begin() + mid - 1, data.begin() + mid);
        m = 0.5 * (m + data[mid - 1]);
    }
    return m;
}

double mad(const std::vector<double>& data) {
    const double m = median(std::vector<double>(data));
    std::vector<double> dev(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) dev[i] = std::abs(data[i] - m);
    return median(std::move(dev));
}

std::string format_sig_trunc(double x, int digits) {
    if (!std::isfinite(x)) return std::to_string(x);
    if (x == 0.0) return "0";
    const bool neg = x < 0.0;
    const double ax = std::abs(x);
    const int exp10 = static_cast<int>(std::floor(std::log10(ax)));
    const int decimals = digits - 1 - exp10;
    // nudge guards against representation error at truncation boundaries
    auto trunc_at = [](double v) { return std::floor(v + std::abs(v) * 1e-12); };
    double scaled;
    if (decimals >= 0) {
        scaled = trunc_at(ax * std::pow(10.0, decimals)) / std::pow(10.0, decimals);
    } else {
        scaled = trunc_at(ax / std::pow(10.0, -decimals)) * std::pow(10.0, -decimals);
    }
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.*f", decimals > 0 ? decimals : 0, neg ? -scaled : scaled);
    return std::string(buf);
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
    if (n == 0) return;
    unsigned hw = std::thread::hardware_concurrency();
    if (hw == 0) hw = 1;
    unsigned nthreads = threads == 0 ? hw : threads;
    nthreads = static_cast<unsigned>(std::min<std::size_t>(nthreads, n));
    if (nthreads <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nthreads);
    std::exception_ptr first_error;
    std::mutex err_mutex;
    for (unsigned t = 0; t < nthreads; ++t) {
        pool.emplace_back([&, t]() {
            try {
                for (std::size_t i = t; i < n; i += nthreads) fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mutex);
                if (!first_error) first_error = std::current_exception();
            }
        });
    }
    for (auto& th : pool) th.join();
    if (first_error) std::rethrow_exception(first_error);
}

}  // namespace nwreg
