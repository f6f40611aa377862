#include "voltnet/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

#include "voltnet/parallel.hpp"

namespace voltnet {

BurstRecord burst_stats(const Trajectory& traj, const LaplacianSpectrum& spectrum, int n_bands) {
    const double u0 = traj.norm.front();
    if (!(u0 > 0.0)) throw std::invalid_argument("burst_stats: |U0| must be > 0");

    BurstRecord rec;
    rec.censored = traj.overflowed;

    double peak = traj.norm[traj.peak_index];
    rec.B = peak / u0;
    rec.t_star = traj.t[traj.peak_index];

    double final_norm = traj.norm.back();
    double final_t = traj.t.back();
    if (final_norm > 0.0 && final_t > 0.0) {
        rec.gamma_T = std::log(final_norm / u0) / final_t;
    } else if (final_t > 0.0) {
        rec.gamma_T = -std::numeric_limits<double>::infinity();
        rec.degenerate = true;
    }

    rec.z_star = traj.peak_state / traj.peak_state.norm();
    rec.ipr = ipr(rec.z_star);
    const int n = spectrum.n;
    Eigen::VectorXd x_channel = rec.z_star.head(n);
    Eigen::VectorXd l_channel = rec.z_star.tail(n);
    // Laplacian modes act channelwise; weight each channel's band profile
    // by its share of the peak energy so the fractions stay Parseval-tight
    const double wx = x_channel.squaredNorm();
    const double wl = l_channel.squaredNorm();
    Eigen::VectorXd bands = Eigen::VectorXd::Zero(n_bands);
    if (wx > 0.0) bands += wx * band_projection(spectrum, x_channel, n_bands);
    if (wl > 0.0) bands += wl * band_projection(spectrum, l_channel, n_bands);
    rec.band_fractions = bands / (wx + wl);
    return rec;
}

std::vector<CcdfPoint> empirical_ccdf(const std::vector<double>& samples,
                                      const std::vector<char>& censored) {
    if (samples.empty()) throw std::invalid_argument("empirical_ccdf: empty sample");
    if (!censored.empty() && censored.size() != samples.size())
        throw std::invalid_argument("empirical_ccdf: censor flag size mismatch");

    std::vector<std::pair<double, char>> pts(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i)
        pts[i] = {samples[i], censored.empty() ? char(0) : censored[i]};
    std::sort(pts.begin(), pts.end());

    const double n = static_cast<double>(pts.size());
    std::vector<CcdfPoint> out;
    std::size_t i = 0;
    while (i < pts.size()) {
        std::size_t j = i;
        bool any_censored = false;
        while (j < pts.size() && pts[j].first == pts[i].first) {
            any_censored = any_censored || pts[j].second;
            ++j;
        }
        // survival at a distinct value v is (# samples > v)/n
        out.push_back({pts[i].first, static_cast<double>(pts.size() - j) / n, any_censored});
        i = j;
    }
    return out;
}

TailFit tail_exponent_regression(const std::vector<CcdfPoint>& ccdf, double q_lo, double q_hi) {
    if (!(q_lo >= 0.0 && q_lo < q_hi && q_hi <= 1.0))
        throw std::invalid_argument("tail_exponent_regression: bad quantile window");
    std::vector<double> lx, ly;
    for (const auto& p : ccdf) {
        if (p.censored || p.survival <= 0.0 || p.value <= 0.0) continue;
        double rank_frac = 1.0 - p.survival;  // P(X <= value)
        if (rank_frac < q_lo || rank_frac > q_hi) continue;
        lx.push_back(std::log(p.value));
        ly.push_back(std::log(p.survival));
    }
    if (lx.size() < 30)
        throw std::runtime_error("tail_exponent_regression: fewer than 30 uncensored points in window");
    LinFit fit = ols_fit(lx, ly);
    TailFit out;
    out.method = "ccdf_regression";
    out.exponent = -fit.slope;
    out.se = fit.se_slope;
    out.r2 = fit.r2;
    out.window_points = fit.n;
    if (!(out.exponent > 0.0))
        throw std::runtime_error("tail_exponent_regression: nonpositive exponent estimate");
    return out;
}

TailFit hill_estimator(const std::vector<double>& samples, int k) {
    const std::size_t n = samples.size();
    if (k < 20) throw std::invalid_argument("hill_estimator: k must be >= 20");
    if (static_cast<std::size_t>(k) >= n) throw std::invalid_argument("hill_estimator: k must be < n");
    std::vector<double> s = samples;
    for (double v : s)
        if (!(v > 0.0)) throw std::domain_error("hill_estimator: samples must be positive");
    std::sort(s.begin(), s.end());
    const double x_nk = s[n - 1 - k];  // X_(n-k) in 1-indexed order statistics
    double acc = 0.0;
    for (int i = 1; i <= k; ++i) acc += std::log(s[n - i] / x_nk);
    if (!(acc > 0.0)) throw std::runtime_error("hill_estimator: degenerate upper order statistics");
    TailFit out;
    out.method = "hill";
    out.exponent = k / acc;
    out.se = out.exponent / std::sqrt(static_cast<double>(k));
    out.k = k;
    out.n_samples = n;
    return out;
}

double theoretical_tail_exponent(double q_us, double gamma_u) {
    if (!(gamma_u > 0.0)) throw std::domain_error("theoretical_tail_exponent: gamma_U must be > 0");
    if (!(q_us > 0.0)) throw std::domain_error("theoretical_tail_exponent: q_US must be > 0");
    return q_us / gamma_u;
}

double burst_moment(double p, double q_us, double gamma_u) {
    if (!(gamma_u > 0.0)) throw std::domain_error("burst_moment: gamma_U must be > 0");
    if (!(q_us > 0.0)) throw std::domain_error("burst_moment: q_US must be > 0");
    if (p * gamma_u >= q_us) return std::numeric_limits<double>::infinity();
    return q_us / (q_us - p * gamma_u);
}

std::vector<double> sample_burst_law(double q_us, double gamma_u, std::size_t n, Rng& rng) {
    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(gamma_u * rng.exponential(q_us));
    return out;
}

GrowthSummary growth_summary(const std::vector<BurstRecord>& records, std::vector<double> levels) {
    if (records.empty()) throw std::invalid_argument("growth_summary: no records");
    std::vector<double> gammas;
    gammas.reserve(records.size());
    std::size_t positive = 0;
    for (const auto& r : records) {
        // censored records contribute their last-finite lower bound
        gammas.push_back(r.gamma_T);
        if (r.gamma_T > 0.0) ++positive;
    }
    GrowthSummary s;
    s.n = records.size();
    s.median = lower_median(gammas);
    s.quantile_levels = std::move(levels);
    for (double q : s.quantile_levels) s.quantiles.push_back(quantile(gammas, q));
    s.fraction_positive = static_cast<double>(positive) / records.size();
    return s;
}

std::vector<PhaseCell> phase_diagram(const SystemConfig& base, const PhaseGridSpec& grid,
                                     std::uint64_t master_seed, int threads) {
    if (grid.q_su_values.empty() || grid.q_us_values.empty())
        throw std::invalid_argument("phase_diagram: empty rate grid");
    if (grid.n_paths < 30) throw std::invalid_argument("phase_diagram: need at least 30 paths per cell");
    base.validate();
    if (grid.rho.size() != base.regimes())
        throw std::invalid_argument("phase_diagram: rho must list one gain per regime");

    const long n_cells = static_cast<long>(grid.q_su_values.size() * grid.q_us_values.size());
    const double u0_norm = base.u0.norm();
    std::vector<PhaseCell> cells(n_cells);

    for (long c = 0; c < n_cells; ++c) {
        const double q_su = grid.q_su_values[c / grid.q_us_values.size()];
        const double q_us = grid.q_us_values[c % grid.q_us_values.size()];
        GeneratorMatrix gen = GeneratorMatrix::two_state(q_su, q_us);
        StationaryDist pi = stationary_dist(gen);

        std::vector<BurstRecord> recs(grid.n_paths);
        std::vector<double> finals(grid.n_paths);
        parallel_for_indexed(grid.n_paths, threads, [&](long p) {
            Rng rng(substream_seed(master_seed, static_cast<std::uint64_t>(c) * grid.n_paths + p));
            RegimePath path = sample_path_stationary(gen, base.T, rng);
            Trajectory traj = integrate(base, path);
            recs[p] = burst_stats(traj, base.dissipation.spectrum, grid.n_bands);
            recs[p].path_id = p;
            finals[p] = traj.norm.back();
        });

        PhaseCell& cell = cells[c];
        cell.q_su = q_su;
        cell.q_us = q_us;
        cell.n_paths = grid.n_paths;
        long bursts = 0, censored = 0, positive = 0;
        std::vector<double> gammas(grid.n_paths);
        for (int p = 0; p < grid.n_paths; ++p) {
            // right-censored peaks still count as exceedances
            if (recs[p].B > grid.b_rel || recs[p].censored) ++bursts;
            if (recs[p].censored) ++censored;
            if (recs[p].gamma_T > 0.0) ++positive;
            gammas[p] = recs[p].gamma_T;
        }
        cell.p_burst = static_cast<double>(bursts) / grid.n_paths;
        cell.censor_frac = static_cast<double>(censored) / grid.n_paths;
        cell.frac_gamma_pos = static_cast<double>(positive) / grid.n_paths;
        cell.med_gamma_t = lower_median(gammas);
        cell.annealed = pairwise_sum(finals) / grid.n_paths <= grid.theta_ann * u0_norm;
        cell.rho_bar = averaged_gain(pi.pi, grid.rho);
    }
    return cells;
}

} // namespace voltnet
