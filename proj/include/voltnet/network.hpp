#pragma once

#include <Eigen/Dense>
#include <utility>
#include <vector>

#include "voltnet/rng.hpp"

namespace voltnet {

enum class GraphKind { ring, star, erdos_renyi, small_world };

struct GraphParams {
    double p = 0.15;        // Erdos-Renyi edge probability
    int k = 4;              // small-world base degree (even)
    double p_rewire = 0.1;  // small-world rewiring probability
};

struct Graph {
    int n = 0;
    GraphKind kind = GraphKind::ring;
    std::vector<std::pair<int, int>> edges;  // undirected, i < j, unit weight
};

// connected graph of the requested family; ER / small-world regenerate
// until connected (at most 100 attempts)
Graph build_graph(GraphKind kind, int n, const GraphParams& params, Rng& rng);

struct LaplacianSpectrum {
    int n = 0;
    Eigen::VectorXd eigenvalues;   // ascending, first = 0
    Eigen::MatrixXd eigenvectors;  // orthonormal columns, sign-fixed
};

// full symmetric eigendecomposition of L = D - A with a deterministic
// sign convention (first nonzero entry of each eigenvector positive)
LaplacianSpectrum laplacian_spectrum(const Graph& g);

enum class ExcitationMode { commuting, noncommuting };

// Excitation operator with prescribed memory gain: |A| * G = rho_target.
// commuting: A = V diag(c d_i) V^T in the Laplacian eigenbasis, with the
// ramp profile d_i = 0.5 + i/n; noncommuting: A = c R diag(d) R^T for a
// seeded random orthogonal R.
Eigen::MatrixXd build_excitation(const LaplacianSpectrum& spectrum, double rho_target,
                                 double G, ExcitationMode mode, Rng& rng);

// Dissipation block B_half = -(beta I + kappa L); the doubled-space
// operator is blockdiag(B_half, B_half). Solves (I - dt B_half) x = b
// through the Laplacian eigenbasis.
struct Dissipation {
    double beta = 0.0;
    double kappa = 0.0;
    LaplacianSpectrum spectrum;

    // (I - dt B_half)^{-1} b for one n-dimensional block
    Eigen::VectorXd solve_block(const Eigen::VectorXd& b, double dt) const;

    // B_half * x (for residual checks)
    Eigen::VectorXd apply_block(const Eigen::VectorXd& x) const;
};

Dissipation build_dissipation(double beta, double kappa, const LaplacianSpectrum& spectrum);

// inverse participation ratio of v/|v|: sum of fourth powers, in [1/n, 1]
double ipr(const Eigen::VectorXd& v);

// energy fractions of v across n_bands contiguous equal-count eigenvalue
// bands (remainder joins the last band); sums to 1
Eigen::VectorXd band_projection(const LaplacianSpectrum& spectrum, const Eigen::VectorXd& v,
                                int n_bands);

} // namespace voltnet
