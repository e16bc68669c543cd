#ifndef NWREG_SIM_HPP
#define NWREG_SIM_HPP

#include <array>
#include <cstdint>
#include <vector>

#include "nwreg/dataset.hpp"
#include "nwreg/rng.hpp"

namespace nwreg::sim {

/// How the t-distributed predictor is scaled.
enum class ScaleMode {
    VarianceScaled,  ///< sd(X) = sigma_x exactly; needs nu > 2
    AbsMeanScaled,   ///< E|X - psi| = sigma_x; works for any nu > 1
};

/// One Monte Carlo design: predictor law, outcome law, replication count.
struct SimConfig {
    Index n = 100;
    double nu = 2.4;
    double sigma_x = 3.24;
    double psi = 0.21;
    double beta0 = 0.0;
    double beta1 = 1.0;
    double sigma = 2.0;
    ScaleMode scale_mode = ScaleMode::VarianceScaled;
    Index reps = 50000;
    std::uint64_t seed = 0;

    void validate() const;
};

/// Covariance/threading knobs for the replication runner.
struct RunOptions {
    double clip_d = 10.0;
    double clip_exponent = 0.2;
    unsigned threads = 0;  ///< 0 = all cores
};

/// Per-replication pivot draws with normality scores and rejection counts.
struct SimSummary {
    std::vector<double> t_nw;  ///< pivot draws, one per successful replication
    std::vector<double> t_ls;
    double cvm_nw = 0.0;
    double cvm_ls = 0.0;
    /// two-sided rejection counts at nominal sizes {0.10, 0.05, 0.01}
    std::array<Index, 3> reject_nw{{0, 0, 0}};
    std::array<Index, 3> reject_ls{{0, 0, 0}};
    Index skipped = 0;  ///< replications dropped on numerical failure
};

inline constexpr std::array<double, 3> kNominalSizes{{0.10, 0.05, 0.01}};

/// i.i.d. Student-t draws.
Vec sample_t(double nu, Index count, Rng& rng);

/// E|V| for V ~ t_nu in closed form; finite for nu > 1.
double abs_mean_t(double nu);

/// Draw one (z, y) sample from the configured design.
Dataset draw_dataset(const SimConfig& cfg, Rng& rng);

/// Run all replications: per replication draw data from a (seed, rep)
/// substream, fit both estimators with their robust covariances, and form
/// the slope pivots against the true beta1. Output is invariant to thread
/// count and execution order.
SimSummary run_replications(const SimConfig& cfg, const RunOptions& opts = {});

/// Cramer-von Mises distance between the sample and N(0,1).
double cvm_statistic(const std::vector<double>& sample);

/// Empirical quantiles of the statistic under the N(0,1) null, over
/// `trials` independent samples of size m.
std::vector<double> cvm_null_quantiles(Index m, Index trials, const std::vector<double>& probs,
                                       std::uint64_t seed, unsigned threads = 0);

/// Plot-ready QQ pairs at probabilities (i - 0.5)/grid.
struct QqPoint {
    double theoretical;
    double empirical;
};
std::vector<QqPoint> qq_export(const std::vector<double>& sample, Index grid);

}  // namespace nwreg::sim

#endif
