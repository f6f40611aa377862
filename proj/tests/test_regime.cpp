#include "doctest.h"

#include "voltnet/regime.hpp"
#include "voltnet/stats.hpp"

#include <cmath>
#include <vector>

using namespace voltnet;

TEST_CASE("two-state generator structure and stationary law") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.08, 0.008);
    gen.validate();
    CHECK(gen.q.rowwise().sum().cwiseAbs().maxCoeff() <= 1e-12);
    CHECK(gen.q(0, 1) == 0.08);
    CHECK(gen.q(1, 0) == 0.008);

    StationaryDist st = stationary_dist(gen);
    CHECK(st.pi(1) == doctest::Approx(0.08 / 0.088).epsilon(1e-12));  // pi_U = 10/11
    CHECK(st.pi(0) == doctest::Approx(0.09091).epsilon(1e-4));
    CHECK((st.pi.transpose() * gen.q).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK(st.pi.sum() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("symmetric and cyclic chains have the obvious stationary laws") {
    GeneratorMatrix sym = GeneratorMatrix::two_state(0.3, 0.3);
    CHECK(stationary_dist(sym).pi(0) == doctest::Approx(0.5).epsilon(1e-12));

    // 3-state cycle with equal rates: doubly stochastic, uniform pi
    GeneratorMatrix cyc;
    cyc.q = Eigen::MatrixXd::Zero(3, 3);
    cyc.q(0, 1) = cyc.q(1, 2) = cyc.q(2, 0) = 0.7;
    cyc.q.diagonal() = -cyc.q.rowwise().sum();
    cyc.labels = {"a", "b", "c"};
    cyc.validate();
    Eigen::VectorXd pi = stationary_dist(cyc).pi;
    for (int z = 0; z < 3; ++z) CHECK(pi(z) == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("generator validation rejects malformed input") {
    GeneratorMatrix bad;
    bad.q = Eigen::MatrixXd::Zero(2, 2);
    bad.q(0, 1) = -0.1;  // negative off-diagonal
    bad.q(0, 0) = 0.1;
    bad.labels = {"s", "u"};
    CHECK_THROWS(bad.validate());

    GeneratorMatrix reducible;
    reducible.q = Eigen::MatrixXd::Zero(2, 2);  // no transitions at all
    reducible.labels = {"s", "u"};
    CHECK_THROWS(reducible.validate());

    CHECK_THROWS_AS(GeneratorMatrix::two_state(-0.1, 0.2), std::invalid_argument);

    GeneratorMatrix ok = GeneratorMatrix::two_state(0.1, 0.2);
    Rng rng(1u);
    CHECK_THROWS_AS(sample_path(ok, 2, 10.0, rng), std::invalid_argument);  // bad init
    CHECK_THROWS_AS(sample_path(ok, 0, 0.0, rng), std::invalid_argument);   // empty horizon
}

TEST_CASE("sampled paths are structurally valid and deterministic") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.3, 0.2);
    Rng rng(42u);
    RegimePath p = sample_path(gen, 0, 500.0, rng);
    CHECK(p.T == 500.0);
    CHECK(p.states.size() == p.jump_times.size() + 1);
    for (std::size_t i = 0; i < p.jump_times.size(); ++i) {
        CHECK(p.jump_times[i] > 0.0);
        CHECK(p.jump_times[i] < p.T);
        if (i) CHECK(p.jump_times[i] > p.jump_times[i - 1]);
        CHECK(p.states[i] != p.states[i + 1]);  // consecutive states differ
    }

    Rng rng2(42u);
    RegimePath q = sample_path(gen, 0, 500.0, rng2);
    CHECK(q.jump_times == p.jump_times);
    CHECK(q.states == p.states);

    Rng rng3(43u);
    RegimePath r = sample_path(gen, 0, 500.0, rng3);
    CHECK(r.jump_times != p.jump_times);
}

TEST_CASE("state_at is right-continuous and matches a linear scan") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.5, 0.4);
    Rng rng(7u);
    RegimePath p = sample_path(gen, 1, 200.0, rng);
    REQUIRE(p.jump_count() > 3);

    auto linear_scan = [&](double t) {
        int z = p.states[0];
        for (std::size_t i = 0; i < p.jump_times.size(); ++i)
            if (t >= p.jump_times[i]) z = p.states[i + 1];
        return z;
    };
    for (int i = 0; i <= 2000; ++i) {
        double t = 200.0 * i / 2000.0;
        CHECK(state_at(p, t) == linear_scan(t));
    }
    // exactly at a jump: post-jump state
    double tj = p.jump_times[1];
    CHECK(state_at(p, tj) == p.states[2]);
    CHECK(state_at(p, 0.0) == p.initial_state());
    CHECK_THROWS_AS(state_at(p, -1e-9), std::domain_error);
    CHECK_THROWS_AS(state_at(p, 200.0 + 1e-9), std::domain_error);
}

TEST_CASE("occupation fractions partition the horizon") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.08, 0.008);
    Rng rng(11u);
    RegimePath p = sample_path_stationary(gen, 1e5, rng);
    Eigen::VectorXd frac = occupation_fractions(p, 2);
    CHECK(frac.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(frac(1) - 10.0 / 11.0) <= 0.01);  // ergodic average

    // single-interval path: indicator
    Rng rng2(1u);
    RegimePath one = sample_path(gen, 1, 0.5, rng2);
    if (one.jump_count() == 0) {
        Eigen::VectorXd f1 = occupation_fractions(one, 2);
        CHECK(f1(1) == 1.0);
        CHECK(f1(0) == 0.0);
    }
}

TEST_CASE("sojourn statistics match the exponential law") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.08, 0.008);
    Rng rng(2024u);
    // collect U-sojourns across many paths
    std::vector<double> taus;
    for (int rep = 0; rep < 40; ++rep) {
        RegimePath p = sample_path(gen, 1, 2e4, rng);
        SojournList s = sojourn_samples(p, 1);
        taus.insert(taus.end(), s.complete.begin(), s.complete.end());
    }
    REQUIRE(taus.size() > 400);
    // mean within 3 standard errors of 1/q_US
    double mean = 0.0;
    for (double t : taus) mean += t;
    mean /= taus.size();
    double se = (1.0 / 0.008) / std::sqrt(static_cast<double>(taus.size()));
    CHECK(std::abs(mean - 125.0) <= 3.0 * se);

    // KS against Exp(0.008) at the 1% level
    double d = ks_statistic(taus, [](double t) { return 1.0 - std::exp(-0.008 * t); });
    CHECK(ks_pvalue(d, taus.size()) > 0.01);
}

TEST_CASE("sojourn bookkeeping") {
    RegimePath p;
    p.T = 10.0;
    p.jump_times = {2.0, 5.0, 6.0};
    p.states = {0, 1, 0, 1};
    SojournList in_u = sojourn_samples(p, 1);
    REQUIRE(in_u.complete.size() == 1);
    CHECK(in_u.complete[0] == doctest::Approx(3.0));
    CHECK(in_u.has_censored);
    CHECK(in_u.censored == doctest::Approx(4.0));

    SojournList in_s = sojourn_samples(p, 0);
    REQUIRE(in_s.complete.size() == 2);
    CHECK(in_s.complete[0] == doctest::Approx(2.0));
    CHECK(in_s.complete[1] == doctest::Approx(1.0));
    CHECK_FALSE(in_s.has_censored);

    // never visited
    SojournList in_2 = sojourn_samples(p, 2);
    CHECK(in_2.complete.empty());
    CHECK_FALSE(in_2.has_censored);

    // complete sojourns + censored tail partition the horizon
    double total = in_u.censored;
    for (double t : in_u.complete) total += t;
    for (double t : in_s.complete) total += t;
    CHECK(total == doctest::Approx(10.0).epsilon(1e-12));
}

TEST_CASE("stationary start matches pi across draws") {
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.08, 0.008);
    Rng rng(5u);
    int in_u = 0;
    const int n = 4000;
    for (int i = 0; i < n; ++i)
        in_u += sample_path_stationary(gen, 1.0, rng).initial_state() == 1 ? 1 : 0;
    double frac = static_cast<double>(in_u) / n;
    double p = 10.0 / 11.0;
    double se = std::sqrt(p * (1 - p) / n);
    CHECK(std::abs(frac - p) <= 4.0 * se);
}

TEST_CASE("absorbing generators are rejected up front") {
    // state 1 has zero exit rate, so the chain is reducible and unusable
    GeneratorMatrix gen;
    gen.q = Eigen::MatrixXd::Zero(2, 2);
    gen.q(0, 1) = 1.0;
    gen.q(0, 0) = -1.0;
    gen.labels = {"s", "u"};
    CHECK_THROWS_AS(gen.validate(), std::runtime_error);
    Rng rng(3u);
    CHECK_THROWS(sample_path(gen, 0, 50.0, rng));
    CHECK_THROWS(stationary_dist(gen));
}
