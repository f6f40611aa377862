#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "voltnet/rng.hpp"

namespace voltnet {

// Conservative generator of a finite-state CTMC: off-diagonals >= 0,
// rows sum to zero, irreducible.
struct GeneratorMatrix {
    Eigen::MatrixXd q;
    std::vector<std::string> labels;

    int size() const { return static_cast<int>(q.rows()); }
    void validate() const;  // throws std::invalid_argument / std::runtime_error

    // the paper's two-regime chain: state 0 = S (stable), 1 = U (unstable);
    // q_su is the S->U rate and q_us the U->S rate
    static GeneratorMatrix two_state(double q_su, double q_us);
};

struct StationaryDist {
    Eigen::VectorXd pi;
};

// unique solution of pi^T Q = 0, sum pi = 1 (dense solve)
StationaryDist stationary_dist(const GeneratorMatrix& gen);

// Piecewise-constant environment path on [0, T]. states[i] holds on
// [t_i, t_{i+1}) with t_0 = 0 and t_i = jump_times[i-1]; evaluation is
// right-continuous. Jump times keep full floating precision.
struct RegimePath {
    double T = 0.0;
    std::vector<double> jump_times;  // strictly increasing, inside (0, T)
    std::vector<int> states;         // size jump_times.size() + 1
    bool absorbed = false;           // hit a zero-exit-rate state

    int initial_state() const { return states.front(); }
    int jump_count() const { return static_cast<int>(jump_times.size()); }
};

// exact simulation: exponential holding times by inverse CDF, next state
// from the normalized off-diagonal row
RegimePath sample_path(const GeneratorMatrix& gen, int init, double T, Rng& rng);

// initial state drawn from the stationary distribution
RegimePath sample_path_stationary(const GeneratorMatrix& gen, double T, Rng& rng);

// right-continuous evaluation, O(log jumps); throws outside [0, T]
int state_at(const RegimePath& path, double t);

// Lebesgue time fraction per state; sums to 1
Eigen::VectorXd occupation_fractions(const RegimePath& path, int n_states);

struct SojournList {
    std::vector<double> complete;  // maximal uninterrupted visits
    double censored = 0.0;         // final interval cut off by the horizon
    bool has_censored = false;
};

// all maximal intervals spent in state z
SojournList sojourn_samples(const RegimePath& path, int z);

} // namespace voltnet
