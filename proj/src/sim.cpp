#include "nwreg/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "nwreg/estimators.hpp"
#include "nwreg/stats.hpp"

namespace nwreg::sim {

void SimConfig::validate() const {
    if (n < 3) throw Error("SimConfig: n too small");
    if (sigma_x <= 0.0) throw Error("SimConfig: sigma_x must be positive");
    if (sigma < 0.0) throw Error("SimConfig: sigma must be nonnegative");
    if (reps < 1) throw Error("SimConfig: reps must be positive");
    if (scale_mode == ScaleMode::VarianceScaled && !(nu > 2.0)) {
        throw ModeMismatchError("SimConfig: VarianceScaled needs nu > 2");
    }
    if (scale_mode == ScaleMode::AbsMeanScaled && !(nu > 1.0)) {
        throw ModeMismatchError("SimConfig: AbsMeanScaled needs nu > 1");
    }
}

Vec sample_t(double nu, Index count, Rng& rng) {
    if (!(nu > 0.0)) throw Error("sample_t: nu must be positive");
    Vec out(count);
    for (Index i = 0; i < count; ++i) out[i] = rng.student_t(nu);
    return out;
}

double abs_mean_t(double nu) {
    if (!(nu > 1.0)) throw Error("abs_mean_t: needs nu > 1");
    // 2 sqrt(nu) Gamma((nu+1)/2) / (sqrt(pi) (nu-1) Gamma(nu/2))
    const double lg = std::lgamma(0.5 * (nu + 1.0)) - std::lgamma(0.5 * nu);
    return 2.0 * std::sqrt(nu) * std::exp(lg) / (std::sqrt(M_PI) * (nu - 1.0));
}

Dataset draw_dataset(const SimConfig& cfg, Rng& rng) {
    cfg.validate();
    const Index n = cfg.n;
    double scale;
    if (cfg.scale_mode == ScaleMode::VarianceScaled) {
        scale = cfg.sigma_x * std::sqrt((cfg.nu - 2.0) / cfg.nu);
    } else {
        scale = cfg.sigma_x / abs_mean_t(cfg.nu);
    }
    Dataset ds;
    ds.z.resize(n, 1);
    ds.y.resize(n);
    for (Index j = 0; j < n; ++j) {
        const double x = cfg.psi + scale * rng.student_t(cfg.nu);
        ds.z(j, 0) = x;
        ds.y[j] = cfg.beta0 + cfg.beta1 * (x - cfg.psi) + cfg.sigma * rng.normal();
    }
    return ds;
}

SimSummary run_replications(const SimConfig& cfg, const RunOptions& opts) {
    cfg.validate();
    if (cfg.reps < 100) throw Error("run_replications: reps must be at least 100");

    const Index reps = cfg.reps;
    std::vector<double> tnw(reps), tls(reps);
    std::vector<char> ok(reps, 0);

    parallel_for(static_cast<std::size_t>(reps), opts.threads, [&](std::size_t r) {
        Rng rng(cfg.seed, static_cast<std::uint64_t>(r));
        try {
            const Dataset ds = draw_dataset(cfg, rng);
            const Design des = build_design(ds);
            const ClipPolicy clip = ClipPolicy::for_design(des, opts.clip_d, opts.clip_exponent);
            const FitResult nw = fit_norm_weighted_full(des, ds.y, clip);
            const FitResult ls = fit_least_squares_full(des, ds.y);
            tnw[r] = pivot(nw.beta[1], cfg.beta1, nw.se[1]);
            tls[r] = pivot(ls.beta[1], cfg.beta1, ls.se[1]);
            ok[r] = 1;
        } catch (const Error&) {
            ok[r] = 0;
        }
    });

    SimSummary out;
    out.t_nw.reserve(reps);
    out.t_ls.reserve(reps);
    for (Index r = 0; r < reps; ++r) {
        if (ok[r]) {
            out.t_nw.push_back(tnw[r]);
            out.t_ls.push_back(tls[r]);
        } else {
            ++out.skipped;
        }
    }

    for (std::size_t k = 0; k < kNominalSizes.size(); ++k) {
        const double crit = normal_quantile(1.0 - 0.5 * kNominalSizes[k]);
        for (double t : out.t_nw) {
            if (std::abs(t) > crit) ++out.reject_nw[k];
        }
        for (double t : out.t_ls) {
            if (std::abs(t) > crit) ++out.reject_ls[k];
        }
    }
    out.cvm_nw = cvm_statistic(out.t_nw);
    out.cvm_ls = cvm_statistic(out.t_ls);
    return out;
}

double cvm_statistic(const std::vector<double>& sample) {
    if (sample.empty()) throw Error("cvm_statistic: empty sample");
    std::vector<double> x = sample;
    std::sort(x.begin(), x.end());
    const std::size_t m = x.size();
    double w2 = 1.0 / (12.0 * static_cast<double>(m));
    for (std::size_t i = 0; i < m; ++i) {
        if (!std::isfinite(x[i])) throw Error("cvm_statistic: non-finite sample value");
        const double target = (2.0 * static_cast<double>(i) + 1.0) / (2.0 * static_cast<double>(m));
        const double diff = normal_cdf(x[i]) - target;
        w2 += diff * diff;
    }
    return w2;
}

std::vector<double> cvm_null_quantiles(Index m, Index trials, const std::vector<double>& probs,
                                       std::uint64_t seed, unsigned threads) {
    if (trials < 1000) throw Error("cvm_null_quantiles: need at least 1000 trials");
    std::vector<double> stats(trials);
    parallel_for(static_cast<std::size_t>(trials), threads, [&](std::size_t t) {
        Rng rng(seed, static_cast<std::uint64_t>(t) + 0x9E3779B9ULL);
        std::vector<double> x(m);
        for (Index i = 0; i < m; ++i) x[i] = rng.normal();
        stats[t] = cvm_statistic(x);
    });
    std::vector<double> out;
    out.reserve(probs.size());
    for (double p : probs) out.push_back(quantile_linear(stats, p));
    return out;
}

std::vector<QqPoint> qq_export(const std::vector<double>& sample, Index grid) {
    if (grid < 1) throw Error("qq_export: grid must be positive");
    if (static_cast<Index>(sample.size()) < grid) {
        throw Error("qq_export: sample smaller than grid");
    }
    std::vector<double> sorted = sample;
    std::sort(sorted.begin(), sorted.end());
    std::vector<QqPoint> out;
    out.reserve(grid);
    for (Index i = 1; i <= grid; ++i) {
        const double p = (static_cast<double>(i) - 0.5) / static_cast<double>(grid);
        out.push_back({normal_quantile(p), quantile_hazen(sorted, p)});
    }
    return out;
}

}  // namespace nwreg::sim
