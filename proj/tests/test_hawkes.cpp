#include "doctest.h"

#include "voltnet/hawkes.hpp"

#include <cmath>
#include <vector>

using namespace voltnet;

namespace {

SOEKernel expk(double r, double w) {
    return fit_soe(KernelSpec::explicit_sum({r}, {w}), 2, 0.01, 1000.0, 1e-6);
}

// one node, one regime: lambda = mu + a (g * dN)
HawkesConfig scalar_cfg(double mu, double a, double r, double w) {
    HawkesConfig cfg;
    cfg.n = 1;
    cfg.mu = {Eigen::VectorXd::Constant(1, mu)};
    cfg.A = {Eigen::MatrixXd::Constant(1, 1, a)};
    cfg.soe = {expk(r, w)};
    return cfg;
}

RegimePath frozen_path(double T) {
    RegimePath p;
    p.T = T;
    p.states = {0};
    return p;
}

} // namespace

TEST_CASE("hawkes configuration validation") {
    HawkesConfig cfg = scalar_cfg(1.0, 0.5, 1.0, 1.0);
    cfg.T = 10.0;
    CHECK_NOTHROW(cfg.validate());

    HawkesConfig neg = cfg;
    neg.mu[0](0) = -0.1;
    CHECK_THROWS_AS(neg.validate(), std::invalid_argument);

    HawkesConfig nega = cfg;
    nega.A[0](0, 0) = -0.2;
    CHECK_THROWS_AS(nega.validate(), std::invalid_argument);

    HawkesConfig mismatch = cfg;
    mismatch.mu.push_back(mismatch.mu[0]);
    CHECK_THROWS_AS(mismatch.validate(), std::invalid_argument);

    HawkesConfig dim = cfg;
    dim.mu[0] = Eigen::VectorXd::Zero(2);
    CHECK_THROWS_AS(dim.validate(), std::invalid_argument);

    HawkesConfig badt = cfg;
    badt.dt = 0.0;
    CHECK_THROWS_AS(badt.validate(), std::invalid_argument);
}

TEST_CASE("branching radius closed forms") {
    HawkesConfig cfg = scalar_cfg(1.0, 0.4, 2.0, 1.0);  // mass 0.5
    Eigen::VectorXd br = cfg.branching_radius();
    REQUIRE(br.size() == 1);
    CHECK(br(0) == doctest::Approx(0.2).epsilon(1e-12));

    HawkesConfig two;
    two.n = 2;
    Eigen::MatrixXd a(2, 2);
    a << 0.2, 0.1, 0.1, 0.2;  // eigenvalues 0.3 and 0.1
    two.mu = {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(2)};
    two.A = {a, 2.0 * a};
    two.soe = {expk(2.0, 1.0), expk(2.0, 1.0)};
    Eigen::VectorXd br2 = two.branching_radius();
    CHECK(br2(0) == doctest::Approx(0.15).epsilon(1e-12));
    CHECK(br2(1) == doctest::Approx(0.30).epsilon(1e-12));
}

TEST_CASE("no excitation reduces to a Poisson process") {
    HawkesConfig cfg = scalar_cfg(1.0, 0.0, 1.0, 1.0);
    cfg.T = 100.0;
    cfg.N = 1000;
    EventLog log = simulate_hawkes(cfg, frozen_path(100.0), 31u, 4);
    CHECK_FALSE(log.truncated);

    double mean = static_cast<double>(log.total_events()) / cfg.N;
    CHECK(std::abs(mean - 100.0) <= 3.0);  // se is about 0.32

    // inter-event gaps of the first replicas against Exp(1): chi-square
    // over 20 equiprobable bins
    std::vector<double> gaps;
    for (int k = 0; k < 20; ++k) {
        const auto& ts = log.times[k][0];
        for (std::size_t i = 1; i < ts.size(); ++i) gaps.push_back(ts[i] - ts[i - 1]);
    }
    REQUIRE(gaps.size() > 1500);
    const int bins = 20;
    std::vector<double> counts(bins, 0.0);
    for (double g : gaps) {
        double u = 1.0 - std::exp(-g);
        int b = std::min(static_cast<int>(u * bins), bins - 1);
        counts[b] += 1.0;
    }
    double expect = static_cast<double>(gaps.size()) / bins;
    double stat = 0.0;
    for (double c : counts) stat += (c - expect) * (c - expect) / expect;
    CHECK(chi_square_pvalue(stat, bins - 1) > 0.01);
}

TEST_CASE("event logs replay bit-identically under the seed") {
    HawkesConfig cfg = scalar_cfg(0.8, 0.6, 1.5, 0.9);
    cfg.T = 50.0;
    cfg.N = 8;
    RegimePath path = frozen_path(50.0);
    EventLog a = simulate_hawkes(cfg, path, 77u, 1);
    EventLog b = simulate_hawkes(cfg, path, 77u, 4);
    REQUIRE(a.times.size() == b.times.size());
    for (std::size_t k = 0; k < a.times.size(); ++k) CHECK(a.times[k] == b.times[k]);

    EventLog c = simulate_hawkes(cfg, path, 78u, 1);
    CHECK(a.times[0] != c.times[0]);

    HawkesConfig capped = cfg;
    capped.max_events_per_replica = 5;
    EventLog d = simulate_hawkes(capped, path, 77u, 1);
    CHECK(d.truncated);
    CHECK(d.total_events() <= 5l * cfg.N);
}

TEST_CASE("macro recursion: fixed point and the excitation-free identity") {
    // mu = 1, a w / r = 0.5: the stationary intensity is mu/(1 - 0.5) = 2
    HawkesConfig cfg = scalar_cfg(1.0, 1.0, 1.0, 0.5);
    cfg.T = 50.0;
    cfg.dt = 0.01;
    MacroSolution sol = solve_macro_volterra(cfg, frozen_path(50.0));
    CHECK_FALSE(sol.truncated);
    CHECK(sol.lambda(0, 0) == 1.0);  // empty history at the origin
    CHECK(sol.lambda(sol.lambda.rows() - 1, 0) == doctest::Approx(2.0).epsilon(0.01));
    // monotone approach from below for a positive kernel
    CHECK(sol.lambda(sol.lambda.rows() - 1, 0) > sol.lambda(sol.lambda.rows() / 2, 0));

    HawkesConfig off = scalar_cfg(0.7, 0.0, 1.0, 1.0);
    off.T = 10.0;
    off.dt = 0.1;
    MacroSolution flat = solve_macro_volterra(off, frozen_path(10.0));
    for (Eigen::Index g = 0; g < flat.lambda.rows(); ++g) CHECK(flat.lambda(g, 0) == 0.7);

    // supercritical blow-up trips the guard instead of overflowing
    HawkesConfig hot = scalar_cfg(1.0, 40.0, 1.0, 1.0);
    hot.T = 200.0;
    hot.dt = 0.05;
    MacroSolution boom = solve_macro_volterra(hot, frozen_path(200.0));
    CHECK(boom.truncated);
    CHECK(boom.lambda.rows() < 4001);
}

TEST_CASE("reconstructed intensity matches closed forms") {
    HawkesConfig cfg;
    cfg.n = 2;
    cfg.T = 8.0;
    cfg.dt = 0.1;
    Eigen::VectorXd mu0(2), mu1(2);
    mu0 << 0.3, 0.7;
    mu1 << 1.1, 0.2;
    Eigen::MatrixXd a(2, 2);
    a << 0.4, 0.2, 0.1, 0.3;
    cfg.mu = {mu0, mu1};
    cfg.A = {a, a};
    cfg.soe = {expk(1.2, 0.8), expk(1.2, 0.8)};
    cfg.N = 1;

    RegimePath path;
    path.T = 8.0;
    path.jump_times = {3.73};
    path.states = {0, 1};

    // empty log: the mean intensity is the active baseline
    EventLog quiet;
    quiet.n_nodes = 2;
    quiet.n_replicas = 1;
    quiet.T = 8.0;
    quiet.times.assign(1, std::vector<std::vector<double>>(2));
    Eigen::MatrixXd lam = empirical_mean_intensity(quiet, cfg, path);
    std::vector<double> grid = intensity_grid(cfg);
    REQUIRE(lam.rows() == static_cast<Eigen::Index>(grid.size()));
    for (std::size_t g = 0; g < grid.size(); ++g) {
        int z = state_at(path, grid[g]);
        CHECK((lam.row(g).transpose() - cfg.mu[z]).cwiseAbs().maxCoeff() <= 1e-14);
    }

    // one event at node 1: lambda_i(t) = mu_i + A_{i1} w e^{-r (t-s)}
    const double s = 2.037;
    EventLog one = quiet;
    one.times[0][1] = {s};
    Eigen::MatrixXd lam1 = empirical_mean_intensity(one, cfg, path);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        int z = state_at(path, grid[g]);
        Eigen::VectorXd expect = cfg.mu[z];
        if (grid[g] > s)
            expect += a.col(1) * (0.8 * std::exp(-1.2 * (grid[g] - s)));
        CHECK((lam1.row(g).transpose() - expect).cwiseAbs().maxCoeff() <= 1e-12);
    }

    CHECK_THROWS_AS(empirical_mean_intensity(one, cfg, path, 5), std::invalid_argument);
}

TEST_CASE("micro-macro distance") {
    HawkesConfig cfg = scalar_cfg(1.0, 1.0, 1.0, 0.5);
    cfg.T = 5.0;
    cfg.dt = 0.1;
    MacroSolution sol = solve_macro_volterra(cfg, frozen_path(5.0));
    CHECK(micro_macro_error(sol.lambda, sol) == 0.0);

    Eigen::MatrixXd bumped = sol.lambda;
    bumped(20, 0) += 0.3;
    double expect = 0.3 / (1.0 + std::abs(sol.lambda(20, 0)));
    CHECK(micro_macro_error(bumped, sol) == doctest::Approx(expect).epsilon(1e-12));

    Eigen::MatrixXd wrong(3, 1);
    wrong.setZero();
    CHECK_THROWS_AS(micro_macro_error(wrong, sol), std::invalid_argument);
}

TEST_CASE("replica averaging tightens the law of large numbers") {
    HawkesConfig cfg = scalar_cfg(0.5, 0.7, 1.0, 0.6);  // branching 0.42
    cfg.T = 30.0;
    cfg.dt = 0.05;
    cfg.N = 100;
    RegimePath path = frozen_path(30.0);
    EventLog log = simulate_hawkes(cfg, path, 2024u, 4);
    MacroSolution macro = solve_macro_volterra(cfg, path);

    double err10 = micro_macro_error(empirical_mean_intensity(log, cfg, path, 10, 4), macro);
    double err100 = micro_macro_error(empirical_mean_intensity(log, cfg, path, 100, 4), macro);
    CHECK(err100 < err10);
}

TEST_CASE("compensator increments: two-event closed form") {
    HawkesConfig cfg = scalar_cfg(0.4, 0.9, 1.3, 0.7);
    cfg.T = 10.0;
    EventLog log;
    log.n_nodes = 1;
    log.n_replicas = 1;
    log.T = 10.0;
    const double t1 = 2.5, t2 = 6.1;
    log.times = {{{t1, t2}}};

    auto inc = time_rescaling_increments(log, cfg, frozen_path(10.0), 0);
    REQUIRE(inc.size() == 2);
    CHECK(inc[0] == doctest::Approx(0.4 * t1).epsilon(1e-12));
    double mem = 0.9 * 0.7 * (1.0 - std::exp(-1.3 * (t2 - t1))) / 1.3;
    CHECK(inc[1] == doctest::Approx(0.4 * (t2 - t1) + mem).epsilon(1e-12));

    CHECK_THROWS_AS(time_rescaling_increments(log, cfg, frozen_path(10.0), 1),
                    std::invalid_argument);
}

TEST_CASE("time rescaling turns a subcritical stream into unit exponentials") {
    HawkesConfig cfg = scalar_cfg(1.0, 1.0, 1.0, 0.5);  // stationary rate 2
    cfg.T = 600.0;
    cfg.N = 4;
    RegimePath path = frozen_path(600.0);
    EventLog log = simulate_hawkes(cfg, path, 4096u, 4);

    double rate = static_cast<double>(log.total_events()) / (cfg.N * cfg.T);
    CHECK(std::abs(rate - 2.0) <= 0.2);

    std::vector<double> incs;
    for (int k = 0; k < cfg.N; ++k) {
        auto i = time_rescaling_increments(log, cfg, path, k);
        incs.insert(incs.end(), i.begin(), i.end());
    }
    REQUIRE(incs.size() > 3000);
    double d = ks_statistic(incs, [](double x) { return 1.0 - std::exp(-x); });
    CHECK(ks_pvalue(d, incs.size()) > 0.01);
}

TEST_CASE("convergence study enforces its preconditions and contracts") {
    HawkesConfig cfg = scalar_cfg(0.5, 0.6, 1.0, 0.5);
    cfg.T = 20.0;
    cfg.dt = 0.05;
    GeneratorMatrix gen = GeneratorMatrix::two_state(0.2, 0.1);
    // two-regime config to match the generator
    cfg.mu.push_back(Eigen::VectorXd::Constant(1, 0.8));
    cfg.A.push_back(Eigen::MatrixXd::Constant(1, 1, 0.9));
    cfg.soe.push_back(expk(2.0, 1.0));

    CHECK_THROWS_AS(convergence_study(cfg, gen, {1, 1}, 1, 1u, 1), std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(cfg, gen, {5, 10, 20}, 1, 1u, 1), std::invalid_argument);
    CHECK_THROWS_AS(convergence_study(cfg, gen, {5, 10, 20, 40}, 0, 1u, 1), std::invalid_argument);

    ConvergenceStudy st = convergence_study(cfg, gen, {5, 10, 20, 40}, 2, 11u, 4);
    REQUIRE(st.err.size() == 2);
    REQUIRE(st.err[0].size() == 4);
    REQUIRE(st.mean_err.size() == 4);
    for (double e : st.mean_err) CHECK(e > 0.0);
    CHECK(st.mean_err.back() < st.mean_err.front());  // averaging helps
    CHECK(st.annealed_fit.slope < 0.0);
    CHECK(st.quenched_fit.slope < 0.0);
    CHECK(st.annealed_fit.n == 4);
}
