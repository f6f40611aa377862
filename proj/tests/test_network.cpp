#include "doctest.h"

#include "voltnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

using namespace voltnet;

namespace {

std::vector<int> degrees(const Graph& g) {
    std::vector<int> d(g.n, 0);
    for (auto [a, b] : g.edges) { ++d[a]; ++d[b]; }
    return d;
}

Eigen::MatrixXd laplacian_dense(const Graph& g) {
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.n, g.n);
    for (auto [a, b] : g.edges) {
        lap(a, a) += 1.0;
        lap(b, b) += 1.0;
        lap(a, b) -= 1.0;
        lap(b, a) -= 1.0;
    }
    return lap;
}

} // namespace

TEST_CASE("graph families have the expected shape") {
    Rng rng(1u);
    GraphParams params;

    Graph ring = build_graph(GraphKind::ring, 6, params, rng);
    CHECK(ring.edges.size() == 6);
    for (int d : degrees(ring)) CHECK(d == 2);

    Graph star = build_graph(GraphKind::star, 40, params, rng);
    CHECK(star.edges.size() == 39);
    auto sd = degrees(star);
    CHECK(sd[0] == 39);
    for (int i = 1; i < 40; ++i) CHECK(sd[i] == 1);

    CHECK_THROWS_AS(build_graph(GraphKind::ring, 2, params, rng), std::invalid_argument);
}

TEST_CASE("random families reproduce under the seed and land near the expected density") {
    GraphParams params;
    params.p = 0.15;
    Rng a(99u), b(99u), c(100u);
    Graph ga = build_graph(GraphKind::erdos_renyi, 40, params, a);
    Graph gb = build_graph(GraphKind::erdos_renyi, 40, params, b);
    CHECK(ga.edges == gb.edges);
    Graph gc = build_graph(GraphKind::erdos_renyi, 40, params, c);
    CHECK(ga.edges != gc.edges);

    // edge count within 4 sigma of Binomial(C(40,2), 0.15)
    double pairs = 40.0 * 39.0 / 2.0;
    double mean = pairs * 0.15;
    double sd = std::sqrt(pairs * 0.15 * 0.85);
    CHECK(std::abs(static_cast<double>(ga.edges.size()) - mean) <= 4.0 * sd);

    params.k = 4;
    params.p_rewire = 0.1;
    Rng d(7u);
    Graph sw = build_graph(GraphKind::small_world, 30, params, d);
    CHECK(sw.edges.size() == 60);  // rewiring preserves the edge count

    GraphParams bad = params;
    bad.k = 3;  // odd base degree is not a ring lattice
    Rng e(7u);
    CHECK_THROWS_AS(build_graph(GraphKind::small_world, 30, bad, e), std::invalid_argument);
}

TEST_CASE("ring and star Laplacian spectra match the closed forms") {
    Rng rng(1u);
    GraphParams params;

    Graph ring = build_graph(GraphKind::ring, 8, params, rng);
    LaplacianSpectrum rs = laplacian_spectrum(ring);
    // circulant: eigenvalues 2 - 2 cos(2 pi k / n), k = 0..n-1, sorted
    std::vector<double> expect;
    for (int k = 0; k < 8; ++k) expect.push_back(2.0 - 2.0 * std::cos(2.0 * std::numbers::pi * k / 8.0));
    std::sort(expect.begin(), expect.end());
    for (int i = 0; i < 8; ++i) CHECK(rs.eigenvalues(i) == doctest::Approx(expect[i]).epsilon(1e-10));

    Graph star = build_graph(GraphKind::star, 10, params, rng);
    LaplacianSpectrum ss = laplacian_spectrum(star);
    // star on n nodes: {0, 1 (n-2 fold), n}
    CHECK(ss.eigenvalues(0) == doctest::Approx(0.0).epsilon(1e-12));
    for (int i = 1; i <= 8; ++i) CHECK(ss.eigenvalues(i) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(ss.eigenvalues(9) == doctest::Approx(10.0).epsilon(1e-10));
}

TEST_CASE("spectrum is a faithful orthonormal eigendecomposition") {
    GraphParams params;
    Rng rng(5u);
    Graph g = build_graph(GraphKind::erdos_renyi, 25, params, rng);
    LaplacianSpectrum sp = laplacian_spectrum(g);
    Eigen::MatrixXd lap = laplacian_dense(g);

    // ascending, null mode first with the constant eigenvector
    CHECK(sp.eigenvalues(0) == 0.0);
    for (int i = 1; i < sp.n; ++i) CHECK(sp.eigenvalues(i) >= sp.eigenvalues(i - 1));
    Eigen::VectorXd ones = Eigen::VectorXd::Constant(25, 1.0 / std::sqrt(25.0));
    CHECK((sp.eigenvectors.col(0) - ones).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd vtv = sp.eigenvectors.transpose() * sp.eigenvectors;
    CHECK((vtv - Eigen::MatrixXd::Identity(25, 25)).cwiseAbs().maxCoeff() <= 1e-10);
    Eigen::MatrixXd recon =
        sp.eigenvectors * sp.eigenvalues.asDiagonal() * sp.eigenvectors.transpose();
    CHECK((recon - lap).cwiseAbs().maxCoeff() <= 1e-9);

    Graph torn = g;
    torn.edges.clear();
    CHECK_THROWS_AS(laplacian_spectrum(torn), std::invalid_argument);
}

TEST_CASE("excitation norm is pinned by the memory-gain budget") {
    GraphParams params;
    Rng rng(2u);
    Graph g = build_graph(GraphKind::ring, 20, params, rng);
    LaplacianSpectrum sp = laplacian_spectrum(g);

    Eigen::MatrixXd ac = build_excitation(sp, 1.5, 1.444, ExcitationMode::commuting, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(ac);
    double norm = es.eigenvalues().cwiseAbs().maxCoeff();
    CHECK(norm == doctest::Approx(1.5 / 1.444).epsilon(1e-10));  // 1.0388

    // commuting mode commutes with L by construction
    Eigen::MatrixXd lap = laplacian_dense(g);
    CHECK((ac * lap - lap * ac).cwiseAbs().maxCoeff() <= 1e-10);

    Eigen::MatrixXd an = build_excitation(sp, 1.5, 1.444, ExcitationMode::noncommuting, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> esn(an);
    CHECK(esn.eigenvalues().cwiseAbs().maxCoeff() == doctest::Approx(1.5 / 1.444).epsilon(1e-10));
    double comm = (an * lap - lap * an).norm();
    CHECK(comm > 0.01 * an.norm() * lap.norm());

    CHECK_THROWS_AS(
        build_excitation(sp, 1.5, std::numeric_limits<double>::infinity(), ExcitationMode::commuting, rng),
        std::invalid_argument);
    CHECK_THROWS_AS(build_excitation(sp, 0.0, 1.0, ExcitationMode::commuting, rng),
                    std::invalid_argument);
}

TEST_CASE("inverse participation ratio endpoints") {
    Eigen::VectorXd uniform = Eigen::VectorXd::Constant(25, 3.7);
    CHECK(ipr(uniform) == doctest::Approx(1.0 / 25.0).epsilon(1e-12));

    Eigen::VectorXd basis = Eigen::VectorXd::Zero(25);
    basis(7) = -0.002;  // scale and sign free
    CHECK(ipr(basis) == doctest::Approx(1.0).epsilon(1e-12));

    Eigen::VectorXd two = Eigen::VectorXd::Zero(25);
    two(3) = 1.0;
    two(11) = -1.0;
    CHECK(ipr(two) == doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(ipr(Eigen::VectorXd::Zero(4)), std::domain_error);
}

TEST_CASE("band projection splits spectral energy") {
    GraphParams params;
    Rng rng(3u);
    Graph g = build_graph(GraphKind::ring, 12, params, rng);
    LaplacianSpectrum sp = laplacian_spectrum(g);

    // a pure eigenvector lands in exactly its own band
    Eigen::VectorXd mode = sp.eigenvectors.col(10);
    Eigen::VectorXd bands = band_projection(sp, 40.0 * mode, 4);
    CHECK(bands(3) == doctest::Approx(1.0).epsilon(1e-10));
    CHECK(bands.head(3).cwiseAbs().maxCoeff() <= 1e-12);

    // Parseval for an arbitrary vector
    Eigen::VectorXd v(12);
    for (int i = 0; i < 12; ++i) v(i) = std::sin(0.7 * i) + 0.2 * i;
    Eigen::VectorXd b3 = band_projection(sp, v, 3);
    CHECK(b3.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(b3.minCoeff() >= 0.0);

    // the constant vector is the null mode: all energy in the first band
    Eigen::VectorXd flat = Eigen::VectorXd::Constant(12, 1.0);
    Eigen::VectorXd b5 = band_projection(sp, flat, 5);
    CHECK(b5(0) == doctest::Approx(1.0).epsilon(1e-12));

    CHECK_THROWS_AS(band_projection(sp, Eigen::VectorXd::Zero(12), 4), std::domain_error);
    CHECK_THROWS_AS(band_projection(sp, Eigen::VectorXd::Ones(5), 4), std::invalid_argument);
    CHECK_THROWS_AS(band_projection(sp, v, 0), std::invalid_argument);
    CHECK_THROWS_AS(band_projection(sp, v, 13), std::invalid_argument);
}

TEST_CASE("dissipation block solve matches the scalar resolvent and dissipates") {
    GraphParams params;
    Rng rng(8u);
    Graph g = build_graph(GraphKind::erdos_renyi, 15, params, rng);
    LaplacianSpectrum sp = laplacian_spectrum(g);

    // kappa = 0: solve is (1 + dt beta)^{-1} independent of the graph
    Dissipation scalar = build_dissipation(2.5, 0.0, sp);
    Eigen::VectorXd b = Eigen::VectorXd::Random(15);
    Eigen::VectorXd x = scalar.solve_block(b, 0.05);
    CHECK((x - b / (1.0 + 0.05 * 2.5)).cwiseAbs().maxCoeff() <= 1e-12);

    Dissipation full = build_dissipation(1.5, 0.3, sp);
    Eigen::MatrixXd lap = laplacian_dense(g);
    for (int trial = 0; trial < 100; ++trial) {
        Eigen::VectorXd u = Eigen::VectorXd::Random(15);
        // quadratic form is bounded by pure decay: <u, B u> <= -beta |u|^2
        double quad = u.dot(full.apply_block(u));
        CHECK(quad <= -1.5 * u.squaredNorm() + 1e-10);
        // resolvent residual
        Eigen::VectorXd sol = full.solve_block(u, 0.05);
        Eigen::VectorXd resid = sol - 0.05 * full.apply_block(sol) - u;
        CHECK(resid.cwiseAbs().maxCoeff() <= 1e-10);
        // apply_block agrees with the dense operator
        Eigen::VectorXd dense = -(1.5 * u + 0.3 * lap * u);
        CHECK((full.apply_block(u) - dense).cwiseAbs().maxCoeff() <= 1e-9);
    }

    CHECK_THROWS_AS(build_dissipation(0.0, 0.1, sp), std::invalid_argument);
    CHECK_THROWS_AS(build_dissipation(1.0, -0.1, sp), std::invalid_argument);
    CHECK_THROWS_AS(full.solve_block(Eigen::VectorXd::Ones(3), 0.05), std::invalid_argument);
}
