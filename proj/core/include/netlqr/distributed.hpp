#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "netlqr/lqr.hpp"
#include "netlqr/system.hpp"

namespace netlqr {

// Relative action-value function of agent i as a quadratic form over the
// stacked vector z = (x, eps), obtained by substituting u = -K x + sigma0*eps
// into the (x,u) form built from the local value matrix P^i:
//   q(z) = z^T M z + c0,
// then zeroing every block of M whose row or column agent lies outside
// N_i^kappa (out-of-range coordinates are point-evaluated at zero).
struct TruncatedQ {
    int agent = 0;
    int kappa = 0;
    Eigen::MatrixXd M;  // (d_x + d_u) x (d_x + d_u)
    double c0 = 0.0;

    double evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& eps) const;
    // Converts through eps = (u + K x)/sigma0 before evaluating.
    double evaluate_xu(const NetworkedSystem& sys, const BlockMatrix& K,
                       const Eigen::VectorXd& x, const Eigen::VectorXd& u) const;
};

TruncatedQ truncated_q(const NetworkedSystem& sys, const BlockMatrix& K, int agent, int kappa);

// Localized gradient estimate, evaluated in closed form via the Gaussian
// fourth-moment identity. Only the eps-x cross block of each contributing
// truncated form survives the expectation:
//   h_i = -(2/n) [sum_{j in N_i^kappa} trunc_j(B^T P^j L - R_j K) * Xi]_i,
// with columns restricted to N_i^r. At kappa >= diameter this equals the
// i-th block row of the M^r projection of the exact gradient.
Eigen::MatrixXd approx_gradient(const NetworkedSystem& sys, const BlockMatrix& K, int agent,
                                int kappa, int r);

// All block rows at once, sharing one set of Lyapunov solves.
BlockMatrix approx_gradient_full(const NetworkedSystem& sys, const BlockMatrix& K, int kappa,
                                 int r);
BlockMatrix approx_gradient_full(const NetworkedSystem& sys, const SolutionCache& cache,
                                 const BlockMatrix& K, int kappa, int r);

// Constants of the step-size rule whose closed forms live outside the main
// analysis; they enter T3/T5 as supplied (or as fitted by the caller).
struct GuardParams {
    double rho = 0.5;      // spatial decay rate of the gradient approximation
    double c_prime = 1.0;  // decay prefactor
    double zeta = 1.0;     // Lipschitz-term weight in the smoothness constant
    double f1_1 = 1.0, f1_2 = 1.0, f1_3 = 1.0;  // cubic descent-bound coefficients
    std::optional<double> c_star;    // optimal cost; computed if absent
    std::optional<double> cost_k0;   // C(K(0)) for the smoothness constant; defaults to C(K)
    std::optional<std::vector<double>> score_bounds;  // per-agent L_i override
};

struct StepSizeBounds {
    double t1 = 0;  // covariance perturbation control
    double t2 = 0;  // convergence-rate control
    double t3 = 0;  // stability of the approximately-updated gain
    double t4 = 0;  // stability of the exactly-updated gain (1/smoothness)
    double t5 = 0;  // positive root of the cubic descent bound
    double cap = 1.0;
    double min_bound = 0;
    bool kappa_sufficient = true;  // varpi0 > 0
    double varpi0 = 0, varpi1 = 0, varpi2 = 0;
    double smoothness = 0;
};

// Five-term step-size rule. Degenerate denominators (vanishing projected
// gradient or decay factor) yield +inf for the affected term; varpi0 <= 0
// marks the communication range as insufficient and removes T5.
StepSizeBounds step_size_guard(const NetworkedSystem& sys, const BlockMatrix& K, int kappa,
                               int r, const GuardParams& params = {});

enum class GuardMode { fixed_eta, theorem_guard };

struct DescentConfig {
    double eta = 1e-3;
    int kappa = 1;
    int r = 1;
    int steps = 4000;
    GuardMode guard_mode = GuardMode::fixed_eta;
    std::uint64_t seed = 0;
    GuardParams guard;
    bool fit_decay_constants = true;  // refit (c_prime, rho) at K(0) under theorem_guard
    std::optional<BlockMatrix> k0;    // defaults to the zero controller
};

struct DescentRecord {
    int step = 0;
    double cost = 0;  // noise-free evaluation, comparable against the optimum
    double rel_error_vs_opt = 0;
    double proj_grad_norm = 0;
    double approx_err_norm = 0;
    double spectral_radius = 0;
    double eta_used = 0;
    double guard_min_term = 0;
    StepSizeBounds guard;  // all five terms, kept out of the CSV
};

struct DescentTrace {
    std::vector<DescentRecord> records;
    GuardParams guard_used;            // constants the guard actually ran with
    std::vector<double> score_bounds;  // per-agent L_i at the initial gain

    // Columns: step, cost, rel_error_vs_opt, proj_grad_norm, approx_err_norm,
    // spectral_radius, eta_used, guard_min_term. Byte-deterministic.
    void write_csv(std::ostream& os) const;
};

struct DescentResult {
    Controller K;
    DescentTrace trace;
    double final_cost = 0;  // noise-free evaluation
    double rel_error_vs_opt = 0;
    double opt_cost = 0;    // noise-free cost of the Riccati gain
};

// Gradient descent over gains restricted to M^r: K_i(t) = K_i(t-1) - eta*h_i.
// Under theorem_guard the step size is re-clamped every iteration; a step is
// skipped entirely when kappa is insufficient or the estimate stops being a
// descent direction. Throws StabilityError with the offending step index if
// an iterate leaves the stabilizing set.
DescentResult run_descent(const NetworkedSystem& sys, const DescentConfig& config);

// Envelope fit of max_i ||h_i(kappa) - [grad]_i||/L_i against kappa at a
// fixed gain, giving empirical (c_prime, rho) for the guard.
struct DecayFit {
    double c_prime = 1.0;
    double rho = 0.5;
    bool valid = false;
};
DecayFit fit_decay_constants(const NetworkedSystem& sys, const BlockMatrix& K, int r);

// Score-function Monte-Carlo estimate of the same block row: samples the
// stationary distribution, replays each contributing agent's action value
// from a zero-padded initial condition, subtracts the empirical average
// cost, and averages q * (-(1/sigma0) eps_i x_{N_i^r}^T) over rollouts.
Eigen::MatrixXd mc_gradient(const NetworkedSystem& sys, const BlockMatrix& K, int agent,
                            int kappa, int r, int n_rollouts, int horizon, std::uint64_t seed);

}  // namespace netlqr
