#include "doctest.h"

#include "voltnet/rng.hpp"
#include "voltnet/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <vector>

using namespace voltnet;

TEST_CASE("ols recovers an exact line") {
    std::vector<double> x, y;
    for (int i = 0; i < 12; ++i) {
        x.push_back(0.5 * i);
        y.push_back(2.0 * x.back() + 1.0);
    }
    LinFit f = ols_fit(x, y);
    CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(f.se_slope) <= 1e-10);
    CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.n == 12);
}

TEST_CASE("ols standard error against the textbook formula") {
    // fixed small data set, hand-computed with sigma^2 = SSR/(n-2)
    std::vector<double> x = {0, 1, 2, 3, 4};
    std::vector<double> y = {0.1, 0.9, 2.2, 2.8, 4.1};
    LinFit f = ols_fit(x, y);
    double xbar = 2.0;
    double sxx = 0.0;
    for (double xi : x) sxx += (xi - xbar) * (xi - xbar);
    double ssr = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        double resid = y[i] - (f.intercept + f.slope * x[i]);
        ssr += resid * resid;
    }
    double se = std::sqrt(ssr / (x.size() - 2) / sxx);
    CHECK(f.se_slope == doctest::Approx(se).epsilon(1e-12));
    CHECK(f.slope == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("ols rejects degenerate input") {
    CHECK_THROWS_AS(ols_fit({1.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(ols_fit({1.0, 2.0}, {2.0}), std::invalid_argument);
    CHECK_THROWS_AS(ols_fit({3.0, 3.0, 3.0}, {1.0, 2.0, 3.0}), std::invalid_argument);
}

TEST_CASE("ks statistic on a hand-checked sample") {
    // against U(0,1): F(x) = x. sorted sample {0.1, 0.4, 0.7}:
    // D+ = max(i/n - F(x_i)) = 1 - 0.7, D- = max(F(x_i) - (i-1)/n) = 0.1
    auto unif = [](double x) { return x; };
    double d = ks_statistic({0.7, 0.1, 0.4}, unif);
    CHECK(d == doctest::Approx(0.3).epsilon(1e-12));

    // perfect grid sample has D = 1/(2n)
    std::vector<double> grid;
    const int n = 50;
    for (int i = 0; i < n; ++i) grid.push_back((i + 0.5) / n);
    CHECK(ks_statistic(grid, unif) == doctest::Approx(0.5 / n).epsilon(1e-12));
}

TEST_CASE("ks p-value calibration") {
    // exact uniform draws should not be rejected; a shifted CDF should be
    Rng rng(99u);
    std::vector<double> xs;
    for (int i = 0; i < 4000; ++i) xs.push_back(rng.next_double());
    double d_ok = ks_statistic(xs, [](double x) { return x; });
    CHECK(ks_pvalue(d_ok, xs.size()) > 0.01);
    double d_bad = ks_statistic(xs, [](double x) { return x * x; });
    CHECK(ks_pvalue(d_bad, xs.size()) < 1e-6);

    // asymptotic anchor: K(1.36) ~ 0.049 at large n
    CHECK(ks_pvalue(1.36 / std::sqrt(1e6), 1000000) == doctest::Approx(0.049).epsilon(0.05));
}

TEST_CASE("chi-square upper tail anchors") {
    CHECK(chi_square_pvalue(5.991, 2) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(chi_square_pvalue(16.919, 9) == doctest::Approx(0.05).epsilon(1e-3));
    CHECK(chi_square_pvalue(0.0, 3) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("normal cdf anchors") {
    CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(normal_cdf(1.959963985) == doctest::Approx(0.975).epsilon(1e-8));
    CHECK(normal_cdf(-1.959963985) == doctest::Approx(0.025).epsilon(1e-6));
}

TEST_CASE("quantile interpolation and medians") {
    std::vector<double> xs = {4.0, 1.0, 3.0, 2.0};
    CHECK(quantile(xs, 0.0) == 1.0);
    CHECK(quantile(xs, 1.0) == 4.0);
    CHECK(quantile(xs, 0.5) == doctest::Approx(2.5).epsilon(1e-14));  // type-7 midpoint
    CHECK(lower_median(xs) == 2.0);
    CHECK(lower_median({5.0}) == 5.0);
    CHECK(lower_median({-1.0, 0.0, 2.0}) == 0.0);
}

TEST_CASE("pairwise sum is merge-order invariant and accurate") {
    Rng rng(7u);
    std::vector<double> xs;
    for (int i = 0; i < 100000; ++i) xs.push_back(rng.normal() * std::exp(6.0 * rng.next_double()));
    double p = pairwise_sum(xs);

    // long double reference
    long double acc = 0.0L;
    for (double v : xs) acc += v;
    CHECK(p == doctest::Approx(static_cast<double>(acc)).epsilon(1e-11));

    // deterministic: same vector, same result; permuted vector is allowed to
    // differ in the last bits but the reduction itself must be reproducible
    CHECK(pairwise_sum(xs) == p);

    CHECK(pairwise_sum({}) == 0.0);
    CHECK(pairwise_sum({3.25}) == 3.25);
}
