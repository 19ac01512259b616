#pragma once

#include <Eigen/Dense>
#include <vector>

#include "netlqr/lyapunov.hpp"
#include "netlqr/system.hpp"

namespace netlqr {

bool is_stabilizing(const NetworkedSystem& sys, const BlockMatrix& K);
void require_stabilizing(const NetworkedSystem& sys, const BlockMatrix& K, int step = -1);

// Value matrix: P = Q + K^T R K + (A-BK)^T P (A-BK).
Eigen::MatrixXd solve_lyapunov_P(const NetworkedSystem& sys, const BlockMatrix& K,
                                 LyapunovMethod method = LyapunovMethod::automatic);
// Stationary state covariance: Xi = Psi + (A-BK) Xi (A-BK)^T.
Eigen::MatrixXd solve_lyapunov_Xi(const NetworkedSystem& sys, const BlockMatrix& K,
                                  LyapunovMethod method = LyapunovMethod::automatic);

// Per-agent value matrix with cost Q_i + K^T R_i K; (1/n) sum_i P^i = P.
Eigen::MatrixXd local_P(const NetworkedSystem& sys, const BlockMatrix& K, int agent);

// Average stationary cost tr(P Psi) + sigma0^2 tr(R). The sigma0 override
// evaluates the same controller under a different exploration level (P does
// not depend on sigma0; Psi and the tr(R) term do).
double cost(const NetworkedSystem& sys, const BlockMatrix& K);
double cost(const NetworkedSystem& sys, const BlockMatrix& K, double sigma0);
std::vector<double> local_costs(const NetworkedSystem& sys, const BlockMatrix& K);

// grad C(K) = 2[(R + B^T P B) K - B^T P A] Xi.
BlockMatrix exact_gradient(const NetworkedSystem& sys, const BlockMatrix& K);

struct RiccatiResult {
    BlockMatrix K;     // optimal unstructured gain
    Eigen::MatrixXd P;
    int iterations = 0;
};

// Fixed-point Riccati iteration to ||dP||_F <= 1e-12 ||P||_F.
RiccatiResult riccati_optimal(const NetworkedSystem& sys, int max_iterations = 100000);

// Everything the per-step analysis needs, solved off one squaring schedule.
struct SolutionCache {
    Eigen::MatrixXd P;
    Eigen::MatrixXd Xi;
    std::vector<Eigen::MatrixXd> local_P;  // empty unless requested
    double cost = 0.0;
    BlockMatrix grad;

    static SolutionCache compute(const NetworkedSystem& sys, const BlockMatrix& K,
                                 bool with_local = true);
};

}  // namespace netlqr
