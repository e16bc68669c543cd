#include <doctest.h>

#include <cmath>
#include <vector>

#include "nwreg/rng.hpp"
#include "nwreg/sim.hpp"

using namespace nwreg;

TEST_CASE("streams are reproducible and distinct") {
    Rng a(42, 7), b(42, 7), c(42, 8);
    bool all_equal = true;
    bool any_equal_cross = false;
    for (int i = 0; i < 1000; ++i) {
        const auto va = a.next_u64();
        const auto vb = b.next_u64();
        const auto vc = c.next_u64();
        all_equal = all_equal && (va == vb);
        any_equal_cross = any_equal_cross || (va == vc);
    }
    CHECK(all_equal);
    CHECK_FALSE(any_equal_cross);
}

TEST_CASE("normal sampler moments") {
    Rng rng(123);
    const int n = 1000000;
    double s = 0, s2 = 0;
    for (int i = 0; i < n; ++i) {
        const double x = rng.normal();
        s += x;
        s2 += x * x;
    }
    const double mean = s / n;
    const double var = s2 / n - mean * mean;
    CHECK(std::abs(mean) < 0.005);
    CHECK(var == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("student t sampler variance") {
    // near-normal limit
    {
        Rng rng(5);
        const int n = 1000000;
        double s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = rng.student_t(1e6);
            s2 += x * x;
        }
        CHECK(s2 / n == doctest::Approx(1.0).epsilon(0.01));
    }
    // nu = 3: variance nu/(nu-2) = 3
    {
        Rng rng(6);
        const int n = 1000000;
        double s2 = 0;
        for (int i = 0; i < n; ++i) {
            const double x = rng.student_t(3.0);
            s2 += x * x;
        }
        CHECK(s2 / n == doctest::Approx(3.0).epsilon(0.05));
    }
}

TEST_CASE("fixed seed gives byte-identical t streams") {
    Vec a, b;
    {
        Rng rng(99, 3);
        a = sim::sample_t(2.4, 1000, rng);
    }
    {
        Rng rng(99, 3);
        b = sim::sample_t(2.4, 1000, rng);
    }
    for (Index i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("laplace sampler moments") {
    Rng rng(7);
    const int n = 500000;
    double s = 0, s2 = 0, sabs = 0;
    const double scale = 3.24;
    for (int i = 0; i < n; ++i) {
        const double x = rng.laplace(scale);
        s += x;
        s2 += x * x;
        sabs += std::abs(x);
    }
    CHECK(std::abs(s / n) < 0.02);
    CHECK(s2 / n == doctest::Approx(2.0 * scale * scale).epsilon(0.02));
    CHECK(sabs / n == doctest::Approx(scale).epsilon(0.01));
}
