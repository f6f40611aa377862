#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "voltnet/kernels.hpp"
#include "voltnet/regime.hpp"
#include "voltnet/stats.hpp"

namespace voltnet {

// Regime-modulated multivariate Hawkes family: N replicas share one
// environment path; intensity of node i under regime z is
// lambda_i(t) = mu_{z,i} + sum_j A_{z,ij} (event-bank convolution)_j.
struct HawkesConfig {
    int n = 1;
    std::vector<Eigen::VectorXd> mu;   // per regime, entrywise >= 0
    std::vector<Eigen::MatrixXd> A;    // per regime, entrywise >= 0
    std::vector<SOEKernel> soe;        // per regime
    int N = 1;                          // replica count
    double T = 100.0;
    double dt = 0.05;                   // intensity-sampling grid
    long max_events_per_replica = 10'000'000;

    int regimes() const { return static_cast<int>(mu.size()); }
    void validate() const;
    // spectral radius of A_z * mass(soe_z), per regime (criticality bookkeeping)
    Eigen::VectorXd branching_radius() const;
};

struct EventLog {
    int n_nodes = 0;
    int n_replicas = 0;
    double T = 0.0;
    // times[k][j]: sorted event times of node j in replica k
    std::vector<std::vector<std::vector<double>>> times;
    bool truncated = false;

    long total_events() const;
};

// Exact Ogata thinning: within one regime interval the total intensity
// is nonincreasing between events, so the interval-start value dominates;
// regime jumps are mandatory breakpoints. Replica k uses the substream
// seed substream_seed(master_seed, k).
EventLog simulate_hawkes(const HawkesConfig& cfg, const RegimePath& path,
                         std::uint64_t master_seed, int threads);

// grid times 0, dt, ..., T used by the reconstruction and the macro solver
std::vector<double> intensity_grid(const HawkesConfig& cfg);

// Per-replica intensities reconstructed from event banks at grid times
// (left limits: events at exactly t_n excluded), averaged over replicas
// 0..N_use-1 in fixed index order. N_use = 0 means all replicas.
Eigen::MatrixXd empirical_mean_intensity(const EventLog& log, const HawkesConfig& cfg,
                                         const RegimePath& path, int N_use = 0, int threads = 1);

struct MacroSolution {
    std::vector<double> t;
    Eigen::MatrixXd lambda;      // (grid points) x n, entrywise >= 0
    std::vector<int> regime;
    bool truncated = false;
};

// Explicit causal recursion of the random-coefficient Volterra limit:
// lambda_n = mu_{z_n} + A_{z_n} (bank convolution of lambda_0..lambda_{n-1})
MacroSolution solve_macro_volterra(const HawkesConfig& cfg, const RegimePath& path);

// Err^rel = max_n |lbar(t_n) - lambda(t_n)| / (1 + |lambda(t_n)|)
double micro_macro_error(const Eigen::MatrixXd& lambda_bar, const MacroSolution& macro);

// Exp(1) compensator increments of the pooled process of one replica
// (time-rescaling test input); exact between events via bank integrals
std::vector<double> time_rescaling_increments(const EventLog& log, const HawkesConfig& cfg,
                                              const RegimePath& path, int replica);

enum class ConvergenceMode { annealed, quenched };

struct ConvergenceStudy {
    std::vector<long> N;
    std::vector<std::vector<double>> err;  // [env][N index]
    std::vector<double> mean_err;          // across environments, per N
    LinFit annealed_fit;                   // log mean_err on log N
    LinFit quenched_fit;                   // log err[0] on log N (fixed environment)
};

// Nested-replica convergence study: per environment, the N-replica
// average reuses the first N of the largest batch (matched seeds).
ConvergenceStudy convergence_study(const HawkesConfig& cfg, const GeneratorMatrix& gen,
                                   const std::vector<long>& N_list, int n_env,
                                   std::uint64_t master_seed, int threads);

} // namespace voltnet
