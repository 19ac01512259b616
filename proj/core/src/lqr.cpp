#include "netlqr/lqr.hpp"

#include <cmath>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

Eigen::MatrixXd closed_loop(const NetworkedSystem& sys, const BlockMatrix& K) {
    return sys.A.data - sys.B.data * K.data;
}

}  // namespace

bool is_stabilizing(const NetworkedSystem& sys, const BlockMatrix& K) {
    return spectral_radius(closed_loop(sys, K)) < 1.0 - kStabilityMargin;
}

void require_stabilizing(const NetworkedSystem& sys, const BlockMatrix& K, int step) {
    const double rho = spectral_radius(closed_loop(sys, K));
    if (!(rho < 1.0 - kStabilityMargin))
        throw StabilityError("controller is not stabilizing: spectral radius " +
                                 std::to_string(rho),
                             step);
}

Eigen::MatrixXd solve_lyapunov_P(const NetworkedSystem& sys, const BlockMatrix& K,
                                 LyapunovMethod method) {
    require_stabilizing(sys, K);
    const Eigen::MatrixXd w = sys.Q.data + K.data.transpose() * sys.R.data * K.data;
    return solve_lyapunov(closed_loop(sys, K), w, method);
}

Eigen::MatrixXd solve_lyapunov_Xi(const NetworkedSystem& sys, const BlockMatrix& K,
                                  LyapunovMethod method) {
    require_stabilizing(sys, K);
    // Xi = Psi + L Xi L^T solved as the transposed-pair equation
    return solve_lyapunov(closed_loop(sys, K).transpose(), sys.Psi(), method);
}

Eigen::MatrixXd local_P(const NetworkedSystem& sys, const BlockMatrix& K, int agent) {
    if (agent < 0 || agent >= sys.n()) throw ParameterError("agent index out of range");
    require_stabilizing(sys, K);
    const Eigen::MatrixXd w =
        sys.local_Q[agent] + K.data.transpose() * sys.local_R[agent] * K.data;
    return solve_lyapunov(closed_loop(sys, K), w);
}

double cost(const NetworkedSystem& sys, const BlockMatrix& K) {
    return cost(sys, K, sys.sigma0);
}

double cost(const NetworkedSystem& sys, const BlockMatrix& K, double sigma0) {
    const Eigen::MatrixXd P = solve_lyapunov_P(sys, K);
    const Eigen::MatrixXd psi =
        sys.Phi + sigma0 * sigma0 * (sys.B.data * sys.B.data.transpose());
    return (P * psi).trace() + sigma0 * sigma0 * sys.R.data.trace();
}

std::vector<double> local_costs(const NetworkedSystem& sys, const BlockMatrix& K) {
    require_stabilizing(sys, K);
    const Eigen::MatrixXd psi = sys.Psi();
    const double s2 = sys.sigma0 * sys.sigma0;
    LyapunovBatch batch(closed_loop(sys, K));
    std::vector<double> out(sys.n());
    for (int i = 0; i < sys.n(); ++i) {
        const Eigen::MatrixXd w =
            sys.local_Q[i] + K.data.transpose() * sys.local_R[i] * K.data;
        const Eigen::MatrixXd pi = batch.solve(w);
        out[i] = (pi * psi).trace() + s2 * sys.local_R[i].trace();
    }
    return out;
}

BlockMatrix exact_gradient(const NetworkedSystem& sys, const BlockMatrix& K) {
    require_stabilizing(sys, K);
    const Eigen::MatrixXd L = closed_loop(sys, K);
    LyapunovBatch batch(L);
    const Eigen::MatrixXd P =
        batch.solve(sys.Q.data + K.data.transpose() * sys.R.data * K.data);
    const Eigen::MatrixXd Xi = batch.solve(sys.Psi(), true);
    const Eigen::MatrixXd g =
        2.0 * ((sys.R.data + sys.B.data.transpose() * P * sys.B.data) * K.data -
               sys.B.data.transpose() * P * sys.A.data) *
        Xi;
    return BlockMatrix(sys.ux, g);
}

RiccatiResult riccati_optimal(const NetworkedSystem& sys, int max_iterations) {
    const Eigen::MatrixXd& A = sys.A.data;
    const Eigen::MatrixXd& B = sys.B.data;
    const Eigen::MatrixXd& Q = sys.Q.data;
    const Eigen::MatrixXd& R = sys.R.data;
    Eigen::MatrixXd P = Q;
    int it = 0;
    for (; it < max_iterations; ++it) {
        const Eigen::MatrixXd BtP = B.transpose() * P;
        const Eigen::MatrixXd Pn =
            Q + A.transpose() * P * A -
            A.transpose() * P * B * (R + BtP * B).ldlt().solve(BtP * A);
        const double delta = (Pn - P).norm();
        P = Pn;
        if (delta <= 1e-12 * P.norm()) break;
    }
    if (it >= max_iterations)
        throw NumericalError("Riccati iteration did not converge");
    RiccatiResult res;
    res.P = ((P + P.transpose()) / 2.0).eval();
    const Eigen::MatrixXd BtP = B.transpose() * res.P;
    res.K = BlockMatrix(sys.ux, (sys.R.data + BtP * B).ldlt().solve(BtP * A));
    res.iterations = it + 1;
    return res;
}

SolutionCache SolutionCache::compute(const NetworkedSystem& sys, const BlockMatrix& K,
                                     bool with_local) {
    require_stabilizing(sys, K);
    SolutionCache out;
    const Eigen::MatrixXd L = closed_loop(sys, K);
    LyapunovBatch batch(L);
    out.P = batch.solve(sys.Q.data + K.data.transpose() * sys.R.data * K.data);
    out.Xi = batch.solve(sys.Psi(), true);
    out.cost = (out.P * sys.Psi()).trace() + sys.sigma0 * sys.sigma0 * sys.R.data.trace();
    const Eigen::MatrixXd g =
        2.0 * ((sys.R.data + sys.B.data.transpose() * out.P * sys.B.data) * K.data -
               sys.B.data.transpose() * out.P * sys.A.data) *
        out.Xi;
    out.grad = BlockMatrix(sys.ux, g);
    if (with_local) {
        out.local_P.resize(sys.n());
        for (int i = 0; i < sys.n(); ++i) {
            const Eigen::MatrixXd w =
                sys.local_Q[i] + K.data.transpose() * sys.local_R[i] * K.data;
            out.local_P[i] = batch.solve(w);
        }
    }
    return out;
}

}  // namespace netlqr
