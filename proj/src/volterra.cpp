#include "voltnet/volterra.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "voltnet/stats.hpp"

namespace voltnet {

void SystemConfig::validate() const {
    if (!(dt > 0.0) || !(T > 0.0)) throw std::invalid_argument("SystemConfig: dt and T must be > 0");
    double steps = T / dt;
    if (std::abs(steps - std::llround(steps)) > 1e-6)
        throw std::invalid_argument("SystemConfig: T must be an integral number of steps");
    const int nn = n();
    if (u0.size() != 2 * nn) throw std::invalid_argument("SystemConfig: u0 must live in the doubled space");
    if (A.empty() || A.size() != soe.size())
        throw std::invalid_argument("SystemConfig: per-regime operator/kernel counts differ");
    if (forcing && F.size() != A.size())
        throw std::invalid_argument("SystemConfig: forcing enabled but F not supplied per regime");
    for (const auto& a : A)
        if (a.rows() != nn || a.cols() != nn) throw std::invalid_argument("SystemConfig: A dimension mismatch");
    for (const auto& f : F)
        if (f.size() != 2 * nn) throw std::invalid_argument("SystemConfig: F dimension mismatch");
}

Trajectory integrate(const SystemConfig& sys, const RegimePath& path) {
    sys.validate();
    if (path.T < sys.T - 1e-9) throw std::invalid_argument("integrate: path horizon shorter than T");
    const int nn = sys.n();
    const int m = sys.regimes();
    const long n_steps = std::llround(sys.T / sys.dt);

    std::vector<MemoryBank> conv_banks;
    std::vector<MemoryBank> lyap_banks;
    conv_banks.reserve(m);
    for (int z = 0; z < m; ++z) conv_banks.emplace_back(sys.soe[z], nn);
    if (sys.track_lyapunov)
        for (int z = 0; z < m; ++z) lyap_banks.emplace_back(sys.soe[z], 2 * nn);

    Trajectory traj;
    traj.t.reserve(n_steps + 1);
    traj.norm.reserve(n_steps + 1);
    traj.regime.reserve(n_steps + 1);

    Eigen::VectorXd u = sys.u0;
    double nrm = u.norm();
    traj.t.push_back(0.0);
    traj.norm.push_back(nrm);
    traj.regime.push_back(state_at(path, 0.0));
    if (sys.track_lyapunov) traj.lyapunov.push_back(nrm * nrm);
    traj.peak_state = u;
    traj.peak_index = 0;
    double peak_norm = nrm;

    Eigen::VectorXd rhs(2 * nn), y(nn), u_next(2 * nn);
    for (long step = 0; step < n_steps; ++step) {
        const double tn = step * sys.dt;
        const int z = state_at(path, tn);

        rhs = u;
        rhs.tail(nn) += sys.dt * (sys.A[z] * conv_banks[z].value());
        if (sys.forcing) rhs += sys.dt * sys.F[z];
        u_next.head(nn) = sys.dissipation.solve_block(rhs.head(nn), sys.dt);
        u_next.tail(nn) = sys.dissipation.solve_block(rhs.tail(nn), sys.dt);

        // left-endpoint rule: banks absorb the state at t_n, not t_{n+1}
        y = u.head(nn) + u.tail(nn);
        for (int r = 0; r < m; ++r) conv_banks[r].advance(y, sys.dt);
        if (sys.track_lyapunov)
            for (int r = 0; r < m; ++r) lyap_banks[r].advance(u, sys.dt);

        u = u_next;
        nrm = u.norm();
        if (!std::isfinite(nrm) || nrm > sys.overflow_norm) {
            traj.overflowed = true;  // truncate; the recorded history stays finite
            break;
        }

        const double tn1 = (step + 1) * sys.dt;
        traj.t.push_back(tn1);
        traj.norm.push_back(nrm);
        const int z1 = state_at(path, std::min(tn1, path.T));
        traj.regime.push_back(z1);
        if (sys.track_lyapunov)
            traj.lyapunov.push_back(nrm * nrm + sys.eta * lyap_banks[z1].weighted_sq_norm());
        if (nrm > peak_norm) {
            peak_norm = nrm;
            traj.peak_state = u;
            traj.peak_index = step + 1;
        }
        if (sys.snapshot_stride > 0 && (step + 1) % sys.snapshot_stride == 0) {
            traj.snapshot_steps.push_back(step + 1);
            traj.snapshots.push_back(u);
        }
        traj.final_state = u;
    }
    if (traj.final_state.size() == 0) traj.final_state = sys.u0;
    return traj;
}

const std::vector<double>& lyapunov_series(const Trajectory& traj) {
    if (traj.lyapunov.empty())
        throw std::logic_error("lyapunov_series: tracking was not enabled during integrate");
    return traj.lyapunov;
}

FrozenRate frozen_growth_rate_sim(const SystemConfig& sys, int z, double T_fit) {
    if (z < 0 || z >= sys.regimes()) throw std::invalid_argument("frozen_growth_rate_sim: bad regime");
    RegimePath frozen;
    frozen.T = T_fit;
    frozen.states = {z};
    SystemConfig local = sys;
    local.T = T_fit;
    Trajectory traj = integrate(local, frozen);

    FrozenRate out;
    out.regime = z;
    out.method = "simulate_fit";

    std::vector<double> ts, logs;
    std::size_t start = traj.t.size() / 2;  // final half only: drop the transient
    for (std::size_t i = start; i < traj.t.size(); ++i) {
        if (traj.norm[i] <= 0.0) { out.underflow = true; continue; }
        ts.push_back(traj.t[i]);
        logs.push_back(std::log(traj.norm[i]));
    }
    if (ts.size() < 3) {
        out.gamma = -std::numeric_limits<double>::infinity();
        out.underflow = true;
        return out;
    }
    LinFit fit = ols_fit(ts, logs);
    out.gamma = fit.slope;
    out.r2 = fit.r2;
    return out;
}

double frozen_growth_rate_root(double a, double beta, double kappa_mu, const SOEKernel& soe) {
    if (!(a > 0.0)) throw std::invalid_argument("frozen_growth_rate_root: a must be > 0");
    const double r_min = soe.nodes.front();
    auto f = [&](double s) {
        double ghat = 0.0;
        for (std::size_t l = 0; l < soe.nodes.size(); ++l)
            ghat += soe.weights[l] / (s + soe.nodes[l]);
        return s + beta + kappa_mu - a * ghat;
    };
    double lo = -r_min + 1e-12 * std::max(1.0, r_min);
    if (f(lo) > 0.0) return -r_min;  // root lies below the Laplace abscissa: bracket floor
    double hi = std::max(1.0, a * soe.mass());
    while (f(hi) < 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        double mid = 0.5 * (lo + hi);
        if (f(mid) < 0.0) lo = mid; else hi = mid;
        if (hi - lo < 1e-15 * std::max(1.0, std::abs(hi))) break;
    }
    return 0.5 * (lo + hi);
}

double frozen_growth_rate_modes(const Eigen::VectorXd& gains, double beta, double kappa,
                                const Eigen::VectorXd& mu, const SOEKernel& soe) {
    if (gains.size() != mu.size()) throw std::invalid_argument("frozen_growth_rate_modes: size mismatch");
    double best = -std::numeric_limits<double>::infinity();
    for (int i = 0; i < gains.size(); ++i) {
        if (!(gains(i) > 0.0)) continue;
        best = std::max(best, frozen_growth_rate_root(gains(i), beta, kappa * mu(i), soe));
    }
    return best;
}

double operator_norm(const Eigen::MatrixXd& a) {
    Eigen::BDCSVD<Eigen::MatrixXd> svd(a);
    return svd.singularValues()(0);
}

double memory_gain(double a_norm, double G) {
    if (!std::isfinite(G))
        throw std::invalid_argument("memory_gain: infinite kernel mass (use window_mass for theta = 0)");
    if (!(G > 0.0)) throw std::invalid_argument("memory_gain: mass must be > 0");
    return a_norm * G;
}

double averaged_gain(const Eigen::VectorXd& pi, const Eigen::VectorXd& rho) {
    if (pi.size() != rho.size()) throw std::invalid_argument("averaged_gain: size mismatch");
    return pi.dot(rho);
}

GronwallReport gronwall_check(const Trajectory& traj, const RegimePath& path,
                              const Eigen::VectorXd& rho, double M_F, double slack) {
    GronwallReport report;
    report.margin.reserve(traj.t.size());
    const double u0 = traj.norm.front();

    // exact occupation integral of rho_{Z(s)} via a pointer walk over jumps
    std::size_t jump = 0;
    double integral = 0.0;
    double seg_start = 0.0;
    int seg_state = path.states.front();
    double run_max = 0.0;
    for (std::size_t i = 0; i < traj.t.size(); ++i) {
        const double tn = traj.t[i];
        while (jump < path.jump_times.size() && path.jump_times[jump] <= tn) {
            integral += rho(seg_state) * (path.jump_times[jump] - seg_start);
            seg_start = path.jump_times[jump];
            seg_state = path.states[jump + 1];
            ++jump;
        }
        double occ = integral + rho(seg_state) * (tn - seg_start);
        double bound = slack * (u0 + tn * M_F) * std::exp(occ);
        run_max = std::max(run_max, traj.norm[i]);
        report.margin.push_back(bound > 0.0 ? bound / std::max(run_max, 1e-300) : 0.0);
        if (run_max > bound && report.first_violation < 0) {
            report.pass = false;
            report.first_violation = static_cast<long>(i);
        }
    }
    return report;
}

} // namespace voltnet
