#include "voltnet/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <stdexcept>

namespace voltnet {

namespace {

bool is_connected(int n, const std::vector<std::pair<int, int>>& edges) {
    std::vector<std::vector<int>> adj(n);
    for (auto [a, b] : edges) { adj[a].push_back(b); adj[b].push_back(a); }
    std::vector<char> seen(n, 0);
    std::vector<int> stack{0};
    seen[0] = 1;
    int count = 1;
    while (!stack.empty()) {
        int v = stack.back();
        stack.pop_back();
        for (int w : adj[v])
            if (!seen[w]) { seen[w] = 1; ++count; stack.push_back(w); }
    }
    return count == n;
}

std::vector<std::pair<int, int>> ring_edges(int n) {
    std::vector<std::pair<int, int>> e;
    for (int i = 0; i < n; ++i) e.emplace_back(std::min(i, (i + 1) % n), std::max(i, (i + 1) % n));
    std::sort(e.begin(), e.end());
    return e;
}

} // namespace

Graph build_graph(GraphKind kind, int n, const GraphParams& params, Rng& rng) {
    if (n < 3) throw std::invalid_argument("build_graph: n must be >= 3");
    Graph g;
    g.n = n;
    g.kind = kind;

    switch (kind) {
    case GraphKind::ring:
        g.edges = ring_edges(n);
        return g;
    case GraphKind::star:
        for (int i = 1; i < n; ++i) g.edges.emplace_back(0, i);
        return g;
    case GraphKind::erdos_renyi: {
        if (!(params.p > 0.0 && params.p <= 1.0))
            throw std::invalid_argument("build_graph: ER probability must lie in (0,1]");
        for (int attempt = 0; attempt < 100; ++attempt) {
            g.edges.clear();
            for (int i = 0; i < n; ++i)
                for (int j = i + 1; j < n; ++j)
                    if (rng.next_double() < params.p) g.edges.emplace_back(i, j);
            if (is_connected(n, g.edges)) return g;
        }
        throw std::runtime_error("build_graph: ER graph not connected after 100 attempts");
    }
    case GraphKind::small_world: {
        if (params.k < 2 || params.k % 2 != 0 || params.k >= n)
            throw std::invalid_argument("build_graph: small-world k must be even, 2 <= k < n");
        if (params.p_rewire < 0.0 || params.p_rewire > 1.0)
            throw std::invalid_argument("build_graph: p_rewire must lie in [0,1]");
        for (int attempt = 0; attempt < 100; ++attempt) {
            // Watts-Strogatz: ring lattice, rewire the far endpoint of each
            // lattice edge with probability p_rewire
            std::set<std::pair<int, int>> es;
            for (int i = 0; i < n; ++i)
                for (int j = 1; j <= params.k / 2; ++j) {
                    int t = (i + j) % n;
                    es.insert({std::min(i, t), std::max(i, t)});
                }
            std::vector<std::pair<int, int>> base(es.begin(), es.end());
            for (auto [a, b] : base) {
                if (rng.next_double() >= params.p_rewire) continue;
                // replace (a,b) by (a,c) for a uniform non-self, non-duplicate c
                int c = -1;
                for (int tries = 0; tries < 50; ++tries) {
                    int cand = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n)));
                    if (cand == a) continue;
                    if (es.count({std::min(a, cand), std::max(a, cand)})) continue;
                    c = cand;
                    break;
                }
                if (c < 0) continue;  // saturated neighborhood, keep the edge
                es.erase({a, b});
                es.insert({std::min(a, c), std::max(a, c)});
            }
            g.edges.assign(es.begin(), es.end());
            if (is_connected(n, g.edges)) return g;
        }
        throw std::runtime_error("build_graph: small-world graph not connected after 100 attempts");
    }
    }
    throw std::logic_error("build_graph: unknown kind");
}

LaplacianSpectrum laplacian_spectrum(const Graph& g) {
    if (!is_connected(g.n, g.edges)) throw std::invalid_argument("laplacian_spectrum: graph not connected");
    Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(g.n, g.n);
    for (auto [a, b] : g.edges) {
        lap(a, a) += 1.0;
        lap(b, b) += 1.0;
        lap(a, b) -= 1.0;
        lap(b, a) -= 1.0;
    }
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(lap);
    if (es.info() != Eigen::Success) throw std::runtime_error("laplacian_spectrum: eigensolver failed");

    LaplacianSpectrum sp;
    sp.n = g.n;
    sp.eigenvalues = es.eigenvalues();
    sp.eigenvectors = es.eigenvectors();
    sp.eigenvalues(0) = std::max(sp.eigenvalues(0), 0.0);  // clamp the null mode's roundoff
    // deterministic sign: first entry of magnitude > 1e-8 made positive
    for (int c = 0; c < sp.n; ++c) {
        for (int r = 0; r < sp.n; ++r) {
            if (std::abs(sp.eigenvectors(r, c)) > 1e-8) {
                if (sp.eigenvectors(r, c) < 0.0) sp.eigenvectors.col(c) *= -1.0;
                break;
            }
        }
    }
    return sp;
}

Eigen::MatrixXd build_excitation(const LaplacianSpectrum& spectrum, double rho_target,
                                 double G, ExcitationMode mode, Rng& rng) {
    if (!(rho_target > 0.0)) throw std::invalid_argument("build_excitation: rho_target must be > 0");
    if (!(G > 0.0) || !std::isfinite(G))
        throw std::invalid_argument("build_excitation: kernel mass must be finite and positive "
                                    "(pass the window-truncated mass for theta = 0)");
    const int n = spectrum.n;
    Eigen::VectorXd d(n);
    for (int i = 0; i < n; ++i) d(i) = 0.5 + static_cast<double>(i) / n;  // ramp toward the top band
    const double c = rho_target / (G * d.maxCoeff());

    if (mode == ExcitationMode::commuting)
        return spectrum.eigenvectors * (c * d).asDiagonal() * spectrum.eigenvectors.transpose();

    // seeded random orthogonal basis via QR of a Gaussian matrix,
    // sign-fixed so the factorization is unique
    Eigen::MatrixXd gauss(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) gauss(i, j) = rng.normal();
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(gauss);
    Eigen::MatrixXd qmat = qr.householderQ();
    Eigen::MatrixXd rmat = qr.matrixQR().triangularView<Eigen::Upper>();
    for (int j = 0; j < n; ++j)
        if (rmat(j, j) < 0.0) qmat.col(j) *= -1.0;
    return qmat * (c * d).asDiagonal() * qmat.transpose();
}

Eigen::VectorXd Dissipation::solve_block(const Eigen::VectorXd& b, double dt) const {
    if (b.size() != spectrum.n) throw std::invalid_argument("Dissipation::solve_block: dimension mismatch");
    Eigen::VectorXd coeffs = spectrum.eigenvectors.transpose() * b;
    for (int i = 0; i < spectrum.n; ++i)
        coeffs(i) /= 1.0 + dt * (beta + kappa * spectrum.eigenvalues(i));
    return spectrum.eigenvectors * coeffs;
}

Eigen::VectorXd Dissipation::apply_block(const Eigen::VectorXd& x) const {
    Eigen::VectorXd coeffs = spectrum.eigenvectors.transpose() * x;
    for (int i = 0; i < spectrum.n; ++i)
        coeffs(i) *= -(beta + kappa * spectrum.eigenvalues(i));
    return spectrum.eigenvectors * coeffs;
}

Dissipation build_dissipation(double beta, double kappa, const LaplacianSpectrum& spectrum) {
    if (!(beta > 0.0)) throw std::invalid_argument("build_dissipation: beta must be > 0");
    if (kappa < 0.0) throw std::invalid_argument("build_dissipation: kappa must be >= 0");
    return Dissipation{beta, kappa, spectrum};
}

double ipr(const Eigen::VectorXd& v) {
    double nrm = v.norm();
    if (!(nrm > 0.0)) throw std::domain_error("ipr: zero vector");
    Eigen::VectorXd u = v / nrm;
    return u.array().pow(4).sum();
}

Eigen::VectorXd band_projection(const LaplacianSpectrum& spectrum, const Eigen::VectorXd& v,
                                int n_bands) {
    if (n_bands < 1) throw std::invalid_argument("band_projection: n_bands must be >= 1");
    if (v.size() != spectrum.n) throw std::invalid_argument("band_projection: dimension mismatch");
    double nrm = v.norm();
    if (!(nrm > 0.0)) throw std::domain_error("band_projection: zero vector");
    Eigen::VectorXd coeffs = spectrum.eigenvectors.transpose() * (v / nrm);
    Eigen::VectorXd bands = Eigen::VectorXd::Zero(n_bands);
    int per = spectrum.n / n_bands;
    if (per == 0) throw std::invalid_argument("band_projection: more bands than modes");
    for (int i = 0; i < spectrum.n; ++i) {
        int b = std::min(i / per, n_bands - 1);  // remainder joins the last band
        bands(b) += coeffs(i) * coeffs(i);
    }
    return bands;
}

} // namespace voltnet
