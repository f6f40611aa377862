#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "voltnet/kernels.hpp"
#include "voltnet/network.hpp"
#include "voltnet/regime.hpp"

namespace voltnet {

// Coupled state U = (x, lambda) in the doubled space R^{2n}. The memory
// channel is driven by y = x + lambda; the active regime's excitation
// A_z closes the loop through the lambda block.
struct SystemConfig {
    double dt = 0.05;
    double T = 120.0;
    Eigen::VectorXd u0;                // dimension 2n
    Dissipation dissipation;           // blockdiag(-(beta I + kappa L), same)
    std::vector<Eigen::MatrixXd> A;    // per-regime excitation, n x n
    std::vector<Eigen::VectorXd> F;    // per-regime forcing, dimension 2n
    std::vector<SOEKernel> soe;        // per-regime kernel surrogate
    bool forcing = false;
    bool track_lyapunov = false;
    double eta = 1.0;
    int snapshot_stride = 0;           // 0 disables full-state snapshots
    double overflow_norm = 1e12;

    int n() const { return dissipation.spectrum.n; }
    int regimes() const { return static_cast<int>(A.size()); }
    void validate() const;
};

struct Trajectory {
    std::vector<double> t;
    std::vector<double> norm;        // |U(t_n)|
    std::vector<int> regime;         // active regime at each grid time
    std::vector<double> lyapunov;    // V(t_n) when tracking was enabled
    Eigen::VectorXd peak_state;      // U at the earliest argmax of the norm
    Eigen::VectorXd final_state;     // last finite state
    long peak_index = 0;
    bool overflowed = false;         // truncated when the norm left [0, overflow_norm]
    std::vector<long> snapshot_steps;
    std::vector<Eigen::VectorXd> snapshots;
};

// Semi-implicit scheme (I - dt B) U_{n+1} = U_n + dt C_{z_n}[U_0..U_n]:
// dissipation implicit through the Laplacian eigenbasis, memory explicit
// through per-regime banks (all banks advance each step with y_n; the
// active regime's bank supplies the convolution). Left-endpoint rule.
Trajectory integrate(const SystemConfig& sys, const RegimePath& path);

// Lyapunov series accessor; throws std::logic_error when tracking was off
const std::vector<double>& lyapunov_series(const Trajectory& traj);

struct FrozenRate {
    int regime = 0;
    double gamma = 0.0;
    std::string method;   // "simulate_fit" | "characteristic_root"
    double r2 = 0.0;      // fit quality (simulate_fit only)
    bool underflow = false;
};

// growth rate with the regime frozen at z: least-squares slope of
// log |U| over the final half of [0, T_fit]
FrozenRate frozen_growth_rate_sim(const SystemConfig& sys, int z, double T_fit);

// Unique real root s* > -min r_l of s + beta + kappa_mu = a * sum w_l/(s+r_l)
// (left side increasing, right side decreasing). Returns the bracket floor
// -min r_l when the equation has no root above it.
double frozen_growth_rate_root(double a, double beta, double kappa_mu, const SOEKernel& soe);

// max over Laplacian modes of the per-mode characteristic root; gains[i]
// is the modal excitation gain and mu[i] the Laplacian eigenvalue
double frozen_growth_rate_modes(const Eigen::VectorXd& gains, double beta, double kappa,
                                const Eigen::VectorXd& mu, const SOEKernel& soe);

// spectral norm (largest singular value)
double operator_norm(const Eigen::MatrixXd& a);

// rho = |A| G; throws when G is the infinite sentinel
double memory_gain(double a_norm, double G);

// rho_bar = sum_z pi_z rho_z
double averaged_gain(const Eigen::VectorXd& pi, const Eigen::VectorXd& rho);

struct GronwallReport {
    bool pass = true;
    long first_violation = -1;
    std::vector<double> margin;  // bound / running max, per grid point
};

// pathwise a priori bound: sup_{s<=t}|U(s)| <= slack (|U0| + t M_F)
// exp(int_0^t rho_{Z(s)} ds), occupation integral exact from jump times
GronwallReport gronwall_check(const Trajectory& traj, const RegimePath& path,
                              const Eigen::VectorXd& rho, double M_F, double slack);

} // namespace voltnet
