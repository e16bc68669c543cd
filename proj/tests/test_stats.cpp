#include <doctest.h>

#include <atomic>
#include <cmath>
#include <vector>

#include "nwreg/stats.hpp"

using namespace nwreg;

TEST_CASE("normal cdf matches reference values") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(1.0) == doctest::Approx(0.8413447460685429).epsilon(1e-13));
    CHECK(normal_cdf(-1.0) == doctest::Approx(0.15865525393145705).epsilon(1e-13));
    CHECK(normal_cdf(1.959963984540054) == doctest::Approx(0.975).epsilon(1e-13));
    CHECK(normal_cdf(-8.0) == doctest::Approx(6.22096057427178e-16).epsilon(1e-10));
}

TEST_CASE("normal quantile inverts the cdf") {
    CHECK(normal_quantile(0.975) == doctest::Approx(1.959963984540054).epsilon(1e-13));
    CHECK(normal_quantile(0.95) == doctest::Approx(1.6448536269514722).epsilon(1e-13));
    CHECK(normal_quantile(0.5) == 0.0);
    // upper-tail p saturates toward 1 in doubles, so round-trip there only up
    // to 5; the lower tail keeps full precision much further out
    for (double x = -6.0; x <= 5.0; x += 0.37) {
        CHECK(normal_quantile(normal_cdf(x)) == doctest::Approx(x).epsilon(1e-11));
    }
    CHECK(normal_quantile(normal_cdf(-8.0)) == doctest::Approx(-8.0).epsilon(1e-9));
    CHECK_THROWS_AS(normal_quantile(0.0), Error);
    CHECK_THROWS_AS(normal_quantile(1.0), Error);
}

TEST_CASE("empirical quantiles") {
    std::vector<double> v{3.0, 1.0, 2.0, 4.0};
    CHECK(quantile_linear(v, 0.0) == 1.0);
    CHECK(quantile_linear(v, 1.0) == 4.0);
    CHECK(quantile_linear(v, 0.5) == doctest::Approx(2.5));

    // hazen positions map (i-0.5)/n exactly onto order statistics
    std::vector<double> sorted{10.0, 20.0, 30.0, 40.0, 50.0};
    for (std::size_t i = 1; i <= sorted.size(); ++i) {
        const double p = (static_cast<double>(i) - 0.5) / 5.0;
        CHECK(quantile_hazen(sorted, p) == sorted[i - 1]);
    }

    CHECK(median({5.0, 1.0, 3.0}) == 3.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == doctest::Approx(2.5));
    CHECK(mad({1.0, 1.0, 2.0, 2.0, 4.0, 6.0, 9.0}) == doctest::Approx(1.0));
}

TEST_CASE("significant-digit truncation display") {
    CHECK(format_sig_trunc(0.194 / 2.49, 2) == "0.077");
    CHECK(format_sig_trunc(0.194, 3) == "0.194");
    CHECK(format_sig_trunc(2.49, 3) == "2.49");
    CHECK(format_sig_trunc(-0.0779, 2) == "-0.077");
    CHECK(format_sig_trunc(123.456, 2) == "120");
    CHECK(format_sig_trunc(0.0, 2) == "0");
}

TEST_CASE("parallel_for covers every index once, any thread count") {
    const std::size_t n = 10007;
    for (unsigned threads : {1u, 2u, 5u}) {
        std::vector<std::atomic<int>> hits(n);
        parallel_for(n, threads, [&](std::size_t i) { hits[i]++; });
        for (std::size_t i = 0; i < n; ++i) CHECK(hits[i].load() == 1);
    }
}
