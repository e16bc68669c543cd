#include "nwreg/rng.hpp"

#include <cmath>

namespace nwreg {

namespace {

inline std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

inline std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::uint64_t stream) {
    // mix (seed, stream) so distinct streams decorrelate even for small seeds
    std::uint64_t s = seed;
    std::uint64_t a = splitmix64(s);
    s ^= stream * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL;
    state_[0] = a;
    state_[1] = splitmix64(s);
    state_[2] = splitmix64(s);
    state_[3] = splitmix64(s);
    if ((state_[0] | state_[1] | state_[2] | state_[3]) == 0) state_[0] = 1;
}

std::uint64_t Rng::next_u64() {
    const std::uint64_t result = rotl(state_[0] + state_[3], 23) + state_[0];
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
}

double Rng::uniform() {
    // 53-bit mantissa; add half an ulp so the result is strictly inside (0,1)
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double Rng::normal() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u, v, s;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double f = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * f;
    has_spare_ = true;
    return u * f;
}

double Rng::student_t(double nu) {
    // Bailey (1994): polar analogue of Box-Muller for the t distribution.
    double u, v, w;
    do {
        u = 2.0 * uniform() - 1.0;
        v = 2.0 * uniform() - 1.0;
        w = u * u + v * v;
    } while (w >= 1.0 || w == 0.0);
    // nu*(w^(-2/nu) - 1) computed via expm1 to stay accurate for large nu
    const double r = nu * std::expm1(-2.0 / nu * std::log(w));
    return u * std::sqrt(r / w);
}

double Rng::laplace(double scale) {
    const double u = uniform() - 0.5;
    return -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
}

}  // namespace nwreg
