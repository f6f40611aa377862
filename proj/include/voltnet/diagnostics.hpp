#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "voltnet/network.hpp"
#include "voltnet/regime.hpp"
#include "voltnet/stats.hpp"
#include "voltnet/volterra.hpp"

namespace voltnet {

// Per-path quenched diagnostics: peak amplification B, peak time,
// finite-horizon growth proxy, burst direction and its localization.
struct BurstRecord {
    long path_id = 0;
    std::uint64_t seed = 0;
    double B = 1.0;
    double t_star = 0.0;
    double gamma_T = 0.0;
    Eigen::VectorXd z_star;           // unit peak state, doubled space
    double ipr = 0.0;                 // node-basis localization of z_star
    Eigen::VectorXd band_fractions;   // Laplacian band energies, both channels
    bool censored = false;            // overflow-truncated trajectory
    bool degenerate = false;          // trajectory decayed to exact zero
};

// B = max_n |U(t_n)|/|U0|, earliest argmax; gamma_T from the final
// (last finite) state. Localization diagnostics use the full doubled
// vector: the x channel carries no memory feedback and has decayed by
// typical peak times, so the burst profile lives in the lambda channel.
BurstRecord burst_stats(const Trajectory& traj, const LaplacianSpectrum& spectrum, int n_bands);

struct CcdfPoint {
    double value = 0.0;
    double survival = 0.0;  // P(X > value), one point per distinct value
    bool censored = false;  // lower bound only; excluded from fits
};

std::vector<CcdfPoint> empirical_ccdf(const std::vector<double>& samples,
                                      const std::vector<char>& censored = {});

struct TailFit {
    double exponent = 0.0;
    std::string method;        // "ccdf_regression" | "hill"
    double se = 0.0;
    double r2 = 0.0;           // regression only
    int window_points = 0;     // regression: points in the fit window
    int k = 0;                 // hill: order statistics used
    std::size_t n_samples = 0;
};

// OLS of log survival on log value between the sample quantiles
TailFit tail_exponent_regression(const std::vector<CcdfPoint>& ccdf, double q_lo = 0.75,
                                 double q_hi = 0.995);

// exponent = k / sum_{i<=k} log(X_{(n-i+1)} / X_{(n-k)}); se = exponent/sqrt(k)
TailFit hill_estimator(const std::vector<double>& samples, int k);

// q_US / gamma_U (throws for gamma_U <= 0)
double theoretical_tail_exponent(double q_us, double gamma_u);

// E[B^p] = q_US / (q_US - p gamma_U) when p gamma_U < q_US, else +inf
double burst_moment(double p, double q_us, double gamma_u);

// the sojourn-multiplier law B = exp(gamma_u tau), tau ~ Exp(q_us)
std::vector<double> sample_burst_law(double q_us, double gamma_u, std::size_t n, Rng& rng);

struct GrowthSummary {
    double median = 0.0;  // lower-median convention
    std::vector<double> quantile_levels;
    std::vector<double> quantiles;
    double fraction_positive = 0.0;
    std::size_t n = 0;
};

GrowthSummary growth_summary(const std::vector<BurstRecord>& records,
                             std::vector<double> levels = {0.1, 0.25, 0.5, 0.75, 0.9});

struct PhaseCell {
    double q_su = 0.0, q_us = 0.0;
    double p_burst = 0.0;        // fraction of paths with B > B_rel
    double med_gamma_t = 0.0;
    double frac_gamma_pos = 0.0;
    bool annealed = false;       // mean terminal norm <= theta_ann |U0|
    double rho_bar = 0.0;
    double censor_frac = 0.0;
    int n_paths = 0;
};

struct PhaseGridSpec {
    std::vector<double> q_su_values;
    std::vector<double> q_us_values;
    Eigen::VectorXd rho;          // per-regime memory gains (for rho_bar)
    int n_paths = 80;
    double b_rel = 10.0;
    double theta_ann = 5.0;
    int n_bands = 4;
};

// Switching-rate sweep: per cell, n_paths independent substreams with
// stationary initial regime; deterministic for fixed master seed and any
// thread count.
std::vector<PhaseCell> phase_diagram(const SystemConfig& base, const PhaseGridSpec& grid,
                                     std::uint64_t master_seed, int threads);

} // namespace voltnet
