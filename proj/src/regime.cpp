#include "voltnet/regime.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace voltnet {

void GeneratorMatrix::validate() const {
    const int m = size();
    if (m < 2 || q.cols() != m) throw std::invalid_argument("GeneratorMatrix: need a square matrix, m >= 2");
    for (int i = 0; i < m; ++i) {
        double row = 0.0;
        for (int j = 0; j < m; ++j) {
            if (i != j && q(i, j) < 0.0)
                throw std::invalid_argument("GeneratorMatrix: negative off-diagonal rate");
            row += q(i, j);
        }
        if (std::abs(row) > 1e-12)
            throw std::invalid_argument("GeneratorMatrix: row does not sum to zero");
    }
    // irreducibility: reachability closure over the off-diagonal support
    std::vector<std::vector<int>> reach(m, std::vector<int>(m, 0));
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j) reach[i][j] = (i == j || q(i, j) > 0.0) ? 1 : 0;
    for (int k = 0; k < m; ++k)
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < m; ++j)
                if (reach[i][k] && reach[k][j]) reach[i][j] = 1;
    for (int i = 0; i < m; ++i)
        for (int j = 0; j < m; ++j)
            if (!reach[i][j]) throw std::runtime_error("GeneratorMatrix: chain is reducible");
}

GeneratorMatrix GeneratorMatrix::two_state(double q_su, double q_us) {
    GeneratorMatrix g;
    g.q.resize(2, 2);
    g.q << -q_su, q_su, q_us, -q_us;
    g.labels = {"S", "U"};
    g.validate();
    return g;
}

StationaryDist stationary_dist(const GeneratorMatrix& gen) {
    gen.validate();
    const int m = gen.size();
    // solve Q^T pi = 0 with the last equation replaced by normalization
    Eigen::MatrixXd a = gen.q.transpose();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(m);
    a.row(m - 1).setOnes();
    b(m - 1) = 1.0;
    Eigen::VectorXd pi = a.fullPivLu().solve(b);
    for (int i = 0; i < m; ++i)
        if (!(pi(i) > 0.0)) throw std::runtime_error("stationary_dist: non-positive mass (reducible chain?)");
    double resid = (pi.transpose() * gen.q).cwiseAbs().maxCoeff();
    if (resid > 1e-10) throw std::runtime_error("stationary_dist: residual above 1e-10");
    StationaryDist d;
    d.pi = pi;
    return d;
}

RegimePath sample_path(const GeneratorMatrix& gen, int init, double T, Rng& rng) {
    gen.validate();
    if (!(T > 0.0)) throw std::invalid_argument("sample_path: T must be > 0");
    const int m = gen.size();
    if (init < 0 || init >= m) throw std::invalid_argument("sample_path: bad initial state");

    RegimePath path;
    path.T = T;
    path.states.push_back(init);
    double t = 0.0;
    int z = init;
    while (true) {
        double exit = -gen.q(z, z);
        if (exit <= 0.0) {  // absorbing: one infinite interval, truncated at T
            path.absorbed = true;
            break;
        }
        double hold = rng.exponential(exit);
        if (t + hold >= T) break;
        t += hold;
        // next state from the normalized off-diagonal row (CDF walk)
        double u = rng.next_double() * exit;
        double acc = 0.0;
        int nxt = -1;
        for (int j = 0; j < m; ++j) {
            if (j == z) continue;
            acc += gen.q(z, j);
            if (u < acc) { nxt = j; break; }
        }
        if (nxt < 0) {  // guard against roundoff at the top of the CDF
            for (int j = m - 1; j >= 0; --j)
                if (j != z && gen.q(z, j) > 0.0) { nxt = j; break; }
        }
        path.jump_times.push_back(t);
        path.states.push_back(nxt);
        z = nxt;
    }
    return path;
}

RegimePath sample_path_stationary(const GeneratorMatrix& gen, double T, Rng& rng) {
    StationaryDist d = stationary_dist(gen);
    double u = rng.next_double();
    int init = gen.size() - 1;
    double acc = 0.0;
    for (int i = 0; i < gen.size(); ++i) {
        acc += d.pi(i);
        if (u < acc) { init = i; break; }
    }
    return sample_path(gen, init, T, rng);
}

int state_at(const RegimePath& path, double t) {
    if (t < 0.0 || t > path.T) throw std::domain_error("state_at: t outside [0, T]");
    // first jump strictly after t; the interval before it owns t
    auto it = std::upper_bound(path.jump_times.begin(), path.jump_times.end(), t);
    return path.states[static_cast<std::size_t>(it - path.jump_times.begin())];
}

Eigen::VectorXd occupation_fractions(const RegimePath& path, int n_states) {
    Eigen::VectorXd occ = Eigen::VectorXd::Zero(n_states);
    double prev = 0.0;
    for (std::size_t i = 0; i < path.jump_times.size(); ++i) {
        occ(path.states[i]) += path.jump_times[i] - prev;
        prev = path.jump_times[i];
    }
    occ(path.states.back()) += path.T - prev;
    return occ / path.T;
}

SojournList sojourn_samples(const RegimePath& path, int z) {
    SojournList out;
    double prev = 0.0;
    for (std::size_t i = 0; i < path.states.size(); ++i) {
        double end = (i < path.jump_times.size()) ? path.jump_times[i] : path.T;
        if (path.states[i] == z) {
            if (i < path.jump_times.size()) {
                out.complete.push_back(end - prev);
            } else {  // horizon-censored final visit
                out.censored = end - prev;
                out.has_censored = true;
            }
        }
        prev = end;
    }
    return out;
}

} // namespace voltnet
