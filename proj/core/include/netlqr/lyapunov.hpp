#pragma once

#include <Eigen/Dense>
#include <vector>

namespace netlqr {

double spectral_radius(const Eigen::MatrixXd& m);

// Margin used everywhere a controller must be strictly stabilizing.
inline constexpr double kStabilityMargin = 1e-9;

enum class LyapunovMethod { automatic, fixed_point, direct_kron };

// Discrete Lyapunov equation X = W + M^T X M, rho(M) < 1. The automatic
// method takes the vectorized direct solve up to d_x = 64 and the squaring
// iteration beyond. Both verify the residual to 1e-11 * ||X||_F.
Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w,
                               LyapunovMethod method = LyapunovMethod::automatic);

inline constexpr double kLyapunovResidualTol = 1e-11;

// Solves X_k = W_k + M^T X_k M for many right-hand sides, plus optionally
// X = W + M X M^T (the covariance orientation), sharing the repeated-squaring
// powers of M across all of them.
class LyapunovBatch {
public:
    explicit LyapunovBatch(const Eigen::MatrixXd& m);

    // transpose_pair = false: X = W + M^T X M; true: X = W + M X M^T.
    Eigen::MatrixXd solve(const Eigen::MatrixXd& w, bool transpose_pair = false) const;
    void solve_many(const std::vector<const Eigen::MatrixXd*>& ws,
                    std::vector<Eigen::MatrixXd>& out, bool transpose_pair = false) const;

private:
    std::vector<Eigen::MatrixXd> powers_;  // M^(2^k) until negligible
};

}  // namespace netlqr
