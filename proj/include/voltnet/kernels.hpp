#pragma once

#include <Eigen/Dense>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace voltnet {

inline constexpr double kInfiniteMass = std::numeric_limits<double>::infinity();

enum class KernelFamily { tempered_fractional, explicit_soe };

// Completely monotone memory kernel. tempered_fractional is
// g(t) = t^{-alpha} e^{-theta t} / Gamma(1-alpha); explicit_soe carries
// its own nodes/weights.
struct KernelSpec {
    KernelFamily family = KernelFamily::tempered_fractional;
    double alpha = 0.5;   // fractional order, in (0,1)
    double theta = 0.0;   // tempering rate >= 0; 0 means infinite total mass
    std::vector<double> nodes;    // explicit_soe only
    std::vector<double> weights;  // explicit_soe only

    static KernelSpec tempered(double alpha, double theta);
    static KernelSpec explicit_sum(std::vector<double> nodes, std::vector<double> weights);
    void validate() const;  // throws std::invalid_argument
};

// total mass G = integral of g over (0, inf); infinity sentinel when theta = 0
double kernel_mass(const KernelSpec& spec);

// windowed mass: integral of g over (0, T]; finite for every spec
double window_mass(const KernelSpec& spec, double T);

// pointwise kernel value; throws std::domain_error for t <= 0
double eval_kernel(const KernelSpec& spec, double t);

struct CertifiedWindow {
    double t_min = 0.0;
    double t_max = 0.0;
    double rel_err = 0.0;  // achieved max relative error on the log grid
};

// Positive exponential sum surrogate g(t) ~ sum_l w_l exp(-r_l t).
struct SOEKernel {
    std::vector<double> nodes;    // decay rates, strictly increasing, > 0
    std::vector<double> weights;  // > 0
    CertifiedWindow window;

    int size() const { return static_cast<int>(nodes.size()); }
    double eval(double t) const;
    double mass() const;  // sum w_l / r_l
    void validate() const;
};

struct FitError : std::runtime_error {
    double achieved;
    FitError(const std::string& msg, double achieved_err)
        : std::runtime_error(msg), achieved(achieved_err) {}
};

// Discretizes the Bernstein density of the kernel into K positive
// exponential terms and certifies the max relative error over a
// 200-point logarithmic grid in [t_min, t_max]. Throws FitError with the
// achieved error when the tolerance cannot be met at this K.
SOEKernel fit_soe(const KernelSpec& spec, int K, double t_min, double t_max, double tol);

// O(K) streaming convolution state. Column l holds s^{(l)}; the bank
// value sum_l w_l s^{(l)} reproduces the left-endpoint causal Riemann
// sum of the SOE surrogate against the driven signal.
class MemoryBank {
public:
    MemoryBank(const SOEKernel& soe, int dim);

    // s^{(l)} <- exp(-r_l dt) (s^{(l)} + dt y); one grid step
    void advance(const Eigen::VectorXd& y, double dt);

    // impulse accumulation (Hawkes events): s^{(l)}[node] += magnitude
    void add_event(int node, double magnitude);

    // pure decay over elapsed time: s^{(l)} *= exp(-r_l elapsed)
    void decay(double elapsed);

    // sum_l w_l s^{(l)}
    Eigen::VectorXd value() const;

    // integral of the freely decaying bank value over the next `delta`
    // of time: sum_l w_l s^{(l)} (1 - e^{-r_l delta}) / r_l  (exact
    // compensator increments between events)
    Eigen::VectorXd integral_value(double delta) const;

    // sum_l w_l r_l |s^{(l)}|^2 (Lyapunov memory term)
    double weighted_sq_norm() const;

    void reset();

    const SOEKernel& kernel() const { return soe_; }
    int dim() const { return static_cast<int>(state_.rows()); }
    long step() const { return step_; }
    const Eigen::MatrixXd& raw() const { return state_; }

private:
    SOEKernel soe_;
    Eigen::MatrixXd state_;  // dim x K
    long step_ = 0;
};

} // namespace voltnet
