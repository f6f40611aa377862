#include "voltnet/hawkes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "voltnet/parallel.hpp"
#include "voltnet/rng.hpp"

namespace voltnet {

void HawkesConfig::validate() const {
    if (n < 1) throw std::invalid_argument("HawkesConfig: n must be >= 1");
    if (N < 1) throw std::invalid_argument("HawkesConfig: N must be >= 1");
    if (!(T > 0.0) || !(dt > 0.0)) throw std::invalid_argument("HawkesConfig: T and dt must be > 0");
    if (mu.empty() || mu.size() != A.size() || mu.size() != soe.size())
        throw std::invalid_argument("HawkesConfig: per-regime mu/A/soe counts differ");
    for (const auto& m : mu) {
        if (m.size() != n) throw std::invalid_argument("HawkesConfig: mu dimension mismatch");
        if ((m.array() < 0.0).any()) throw std::invalid_argument("HawkesConfig: mu must be >= 0");
    }
    for (const auto& a : A) {
        if (a.rows() != n || a.cols() != n) throw std::invalid_argument("HawkesConfig: A dimension mismatch");
        if ((a.array() < 0.0).any())
            throw std::invalid_argument("HawkesConfig: A must be entrywise nonnegative");
    }
}

Eigen::VectorXd HawkesConfig::branching_radius() const {
    Eigen::VectorXd out(regimes());
    for (int z = 0; z < regimes(); ++z) {
        Eigen::EigenSolver<Eigen::MatrixXd> es(A[z] * soe[z].mass());
        out(z) = es.eigenvalues().cwiseAbs().maxCoeff();
    }
    return out;
}

long EventLog::total_events() const {
    long c = 0;
    for (const auto& rep : times)
        for (const auto& node : rep) c += static_cast<long>(node.size());
    return c;
}

namespace {

// lazily synced per-regime event banks: each bank decays with its own
// rates from its own last-sync time
struct LazyBanks {
    std::vector<MemoryBank> bank;
    std::vector<double> synced_at;

    LazyBanks(const HawkesConfig& cfg) {
        for (int z = 0; z < cfg.regimes(); ++z) {
            bank.emplace_back(cfg.soe[z], cfg.n);
            synced_at.push_back(0.0);
        }
    }
    void sync(int z, double t) {
        if (t > synced_at[z]) {
            bank[z].decay(t - synced_at[z]);
            synced_at[z] = t;
        }
    }
    void add_event_all(int node, double t) {
        for (std::size_t z = 0; z < bank.size(); ++z) {
            sync(static_cast<int>(z), t);
            bank[z].add_event(node, 1.0);
        }
    }
};

struct Segment {
    double a, b;
    int z;
};

std::vector<Segment> segments_up_to(const RegimePath& path, double T) {
    std::vector<Segment> segs;
    double prev = 0.0;
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        double end = (i < path.jump_times.size()) ? path.jump_times[i] : path.T;
        end = std::min(end, T);
        if (end > prev) segs.push_back({prev, end, path.states[i]});
        prev = end;
        if (prev >= T) break;
    }
    return segs;
}

void simulate_one_replica(const HawkesConfig& cfg, const RegimePath& path, Rng& rng,
                          std::vector<std::vector<double>>& node_times, bool& truncated) {
    LazyBanks banks(cfg);
    long n_events = 0;

    for (const Segment& seg : segments_up_to(path, cfg.T)) {
        double t = seg.a;
        banks.sync(seg.z, t);
        Eigen::VectorXd lam = cfg.mu[seg.z] + cfg.A[seg.z] * banks.bank[seg.z].value();
        double bound = lam.sum();
        while (t < seg.b) {
            if (!(bound > 0.0)) break;  // silent segment: no events possible
            double cand = t + rng.exponential(bound);
            if (cand >= seg.b) break;
            banks.sync(seg.z, cand);
            Eigen::VectorXd lam_c = cfg.mu[seg.z] + cfg.A[seg.z] * banks.bank[seg.z].value();
            double total_c = lam_c.sum();
            if (rng.next_double() * bound <= total_c) {
                // accepted: pick the node from the intensity profile
                double u = rng.next_double() * total_c;
                int node = cfg.n - 1;
                double acc = 0.0;
                for (int j = 0; j < cfg.n; ++j) {
                    acc += lam_c(j);
                    if (u < acc) { node = j; break; }
                }
                node_times[node].push_back(cand);
                banks.add_event_all(node, cand);
                if (++n_events >= cfg.max_events_per_replica) { truncated = true; return; }
                t = cand;
                lam = cfg.mu[seg.z] + cfg.A[seg.z] * banks.bank[seg.z].value();
                bound = lam.sum();
            } else {
                t = cand;
                bound = total_c;  // still a valid (tighter) dominating value
            }
        }
    }
}

} // namespace

EventLog simulate_hawkes(const HawkesConfig& cfg, const RegimePath& path,
                         std::uint64_t master_seed, int threads) {
    cfg.validate();
    if (path.T < cfg.T - 1e-9) throw std::invalid_argument("simulate_hawkes: path horizon too short");

    EventLog log;
    log.n_nodes = cfg.n;
    log.n_replicas = cfg.N;
    log.T = cfg.T;
    log.times.assign(cfg.N, std::vector<std::vector<double>>(cfg.n));
    std::vector<char> truncated(cfg.N, 0);

    parallel_for_indexed(cfg.N, threads, [&](long k) {
        Rng rng(substream_seed(master_seed, static_cast<std::uint64_t>(k)));
        bool trunc = false;
        simulate_one_replica(cfg, path, rng, log.times[k], trunc);
        truncated[k] = trunc ? 1 : 0;
    });
    log.truncated = std::any_of(truncated.begin(), truncated.end(), [](char c) { return c != 0; });
    return log;
}

std::vector<double> intensity_grid(const HawkesConfig& cfg) {
    long steps = std::llround(cfg.T / cfg.dt);
    std::vector<double> grid(steps + 1);
    for (long i = 0; i <= steps; ++i) grid[i] = i * cfg.dt;
    return grid;
}

namespace {

// one replica's intensity at every grid point (left limits at events)
Eigen::MatrixXd replica_intensity(const HawkesConfig& cfg, const RegimePath& path,
                                  const std::vector<std::vector<double>>& node_times,
                                  const std::vector<double>& grid) {
    // merge the per-node streams into one time-ordered list
    std::vector<std::pair<double, int>> events;
    for (int j = 0; j < cfg.n; ++j)
        for (double t : node_times[j]) events.emplace_back(t, j);
    std::sort(events.begin(), events.end());

    Eigen::MatrixXd out(grid.size(), cfg.n);
    LazyBanks banks(cfg);
    std::size_t e = 0;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double tg = grid[g];
        while (e < events.size() && events[e].first < tg) {
            banks.add_event_all(events[e].second, events[e].first);
            ++e;
        }
        int z = state_at(path, std::min(tg, path.T));
        banks.sync(z, tg);
        out.row(g) = (cfg.mu[z] + cfg.A[z] * banks.bank[z].value()).transpose();
    }
    return out;
}

} // namespace

Eigen::MatrixXd empirical_mean_intensity(const EventLog& log, const HawkesConfig& cfg,
                                         const RegimePath& path, int N_use, int threads) {
    if (N_use <= 0) N_use = log.n_replicas;
    if (N_use > log.n_replicas) throw std::invalid_argument("empirical_mean_intensity: N_use too large");
    std::vector<double> grid = intensity_grid(cfg);

    std::vector<Eigen::MatrixXd> per_replica(N_use);
    parallel_for_indexed(N_use, threads, [&](long k) {
        per_replica[k] = replica_intensity(cfg, path, log.times[k], grid);
    });
    // fixed index order: independent of thread completion order
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(grid.size(), cfg.n);
    for (int k = 0; k < N_use; ++k) acc += per_replica[k];
    return acc / static_cast<double>(N_use);
}

MacroSolution solve_macro_volterra(const HawkesConfig& cfg, const RegimePath& path) {
    cfg.validate();
    if (path.T < cfg.T - 1e-9) throw std::invalid_argument("solve_macro_volterra: path horizon too short");
    std::vector<double> grid = intensity_grid(cfg);

    MacroSolution sol;
    sol.t = grid;
    sol.lambda.resize(grid.size(), cfg.n);

    std::vector<MemoryBank> banks;
    for (int z = 0; z < cfg.regimes(); ++z) banks.emplace_back(cfg.soe[z], cfg.n);

    constexpr double kGuard = 1e12;
    for (std::size_t g = 0; g < grid.size(); ++g) {
        int z = state_at(path, std::min(grid[g], path.T));
        sol.regime.push_back(z);
        Eigen::VectorXd lam = cfg.mu[z] + cfg.A[z] * banks[z].value();
        sol.lambda.row(g) = lam.transpose();
        if (!lam.allFinite() || lam.norm() > kGuard) {
            sol.truncated = true;
            sol.lambda.conservativeResize(g + 1, Eigen::NoChange);
            sol.t.resize(g + 1);
            break;
        }
        if (g + 1 < grid.size())
            for (auto& b : banks) b.advance(lam, cfg.dt);  // left-endpoint rule
    }
    return sol;
}

double micro_macro_error(const Eigen::MatrixXd& lambda_bar, const MacroSolution& macro) {
    if (lambda_bar.rows() != macro.lambda.rows() || lambda_bar.cols() != macro.lambda.cols())
        throw std::invalid_argument("micro_macro_error: grid mismatch");
    double worst = 0.0;
    for (Eigen::Index g = 0; g < macro.lambda.rows(); ++g) {
        double num = (lambda_bar.row(g) - macro.lambda.row(g)).norm();
        double den = 1.0 + macro.lambda.row(g).norm();
        worst = std::max(worst, num / den);
    }
    return worst;
}

std::vector<double> time_rescaling_increments(const EventLog& log, const HawkesConfig& cfg,
                                              const RegimePath& path, int replica) {
    if (replica < 0 || replica >= log.n_replicas)
        throw std::invalid_argument("time_rescaling_increments: bad replica index");
    std::vector<std::pair<double, int>> events;
    for (int j = 0; j < cfg.n; ++j)
        for (double t : log.times[replica][j]) events.emplace_back(t, j);
    std::sort(events.begin(), events.end());

    // pooled compensator Lambda(t) = int_0^t sum_i lambda_i; increments
    // between consecutive events are Exp(1) under the true model
    LazyBanks banks(cfg);
    std::vector<Segment> segs = segments_up_to(path, cfg.T);
    std::vector<double> increments;
    increments.reserve(events.size());

    double acc = 0.0;
    std::size_t e = 0;
    for (const Segment& seg : segs) {
        double t = seg.a;
        while (t < seg.b) {
            double next_event = (e < events.size()) ? events[e].first : std::numeric_limits<double>::infinity();
            double stop = std::min(seg.b, next_event);
            banks.sync(seg.z, t);
            double delta = stop - t;
            if (delta > 0.0) {
                double base = cfg.mu[seg.z].sum() * delta;
                double mem = (cfg.A[seg.z] * banks.bank[seg.z].integral_value(delta)).sum();
                acc += base + mem;
            }
            if (next_event <= seg.b && e < events.size() && next_event == stop) {
                increments.push_back(acc);
                acc = 0.0;
                banks.add_event_all(events[e].second, next_event);
                ++e;
            }
            t = stop;
            if (t >= seg.b) break;
        }
    }
    return increments;
}

ConvergenceStudy convergence_study(const HawkesConfig& cfg, const GeneratorMatrix& gen,
                                   const std::vector<long>& N_list, int n_env,
                                   std::uint64_t master_seed, int threads) {
    if (N_list.size() < 4) throw std::invalid_argument("convergence_study: need at least 4 N values");
    for (std::size_t i = 1; i < N_list.size(); ++i)
        if (N_list[i] <= N_list[i - 1])
            throw std::invalid_argument("convergence_study: N_list must increase");
    if (n_env < 1) throw std::invalid_argument("convergence_study: n_env must be >= 1");

    const long max_n = N_list.back();
    ConvergenceStudy st;
    st.N = N_list;
    st.err.assign(n_env, std::vector<double>(N_list.size(), 0.0));

    for (int env = 0; env < n_env; ++env) {
        // environment substream disjoint from the replica index range
        Rng env_rng(substream_seed(master_seed, 0xE0000000ULL + static_cast<std::uint64_t>(env)));
        RegimePath path = sample_path_stationary(gen, cfg.T, env_rng);
        MacroSolution macro = solve_macro_volterra(cfg, path);

        HawkesConfig big = cfg;
        big.N = static_cast<int>(max_n);
        std::uint64_t replica_master =
            substream_seed(master_seed, (static_cast<std::uint64_t>(env) + 1) << 32);
        EventLog log = simulate_hawkes(big, path, replica_master, threads);

        std::vector<double> grid = intensity_grid(cfg);
        std::vector<Eigen::MatrixXd> per_replica(max_n);
        parallel_for_indexed(max_n, threads, [&](long k) {
            per_replica[k] = replica_intensity(cfg, path, log.times[k], grid);
        });

        // nested prefixes in fixed index order: lbar_N reuses the first N
        Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(grid.size(), cfg.n);
        std::size_t which = 0;
        for (long k = 0; k < max_n && which < N_list.size(); ++k) {
            acc += per_replica[k];
            if (k + 1 == N_list[which]) {
                Eigen::MatrixXd mean = acc / static_cast<double>(k + 1);
                st.err[env][which] = micro_macro_error(mean, macro);
                ++which;
            }
        }
    }

    st.mean_err.assign(N_list.size(), 0.0);
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        std::vector<double> col(n_env);
        for (int env = 0; env < n_env; ++env) col[env] = st.err[env][i];
        st.mean_err[i] = pairwise_sum(col) / n_env;
    }

    std::vector<double> lx, ly_ann, ly_que;
    for (std::size_t i = 0; i < N_list.size(); ++i) {
        lx.push_back(std::log(static_cast<double>(N_list[i])));
        ly_ann.push_back(std::log(st.mean_err[i]));
        ly_que.push_back(std::log(st.err[0][i]));
    }
    st.annealed_fit = ols_fit(lx, ly_ann);
    st.quenched_fit = ols_fit(lx, ly_que);
    return st;
}

} // namespace voltnet
