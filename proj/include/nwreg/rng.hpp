#ifndef NWREG_RNG_HPP
#define NWREG_RNG_HPP

#include <cstdint>

namespace nwreg {

/**
 * Deterministic random stream built on xoshiro256++ with splitmix64 seeding.
 *
 * Streams are splittable by counter: `Rng(seed, k)` yields a stream that is
 * a pure function of (seed, k), so replication k draws the same variates no
 * matter which thread runs it or in which order replications execute.
 *
 * All samplers are implemented here rather than via <random> distributions
 * so sequences are identical across standard-library versions.
 */
class Rng {
public:
    explicit Rng(std::uint64_t seed, std::uint64_t stream = 0);

    /// Next raw 64-bit value.
    std::uint64_t next_u64();

    /// Uniform on (0,1) (never returns 0 or 1).
    double uniform();

    /// Uniform on (lo, hi).
    double uniform(double lo, double hi);

    /// Standard normal via Marsaglia polar method.
    double normal();

    /// Student-t with nu > 0 degrees of freedom (Bailey's polar method).
    double student_t(double nu);

    /// Laplace(0, scale) via inverse CDF.
    double laplace(double scale);

private:
    std::uint64_t state_[4];
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace nwreg

#endif
