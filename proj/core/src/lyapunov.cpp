#include "netlqr/lyapunov.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

constexpr int kMaxDoublings = 96;
constexpr double kPowerCutoff = 1e-4;   // squared twice ~ 1e-16 tail
constexpr double kDivergenceGuard = 1e150;

void check_residual(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w,
                    const Eigen::MatrixXd& x) {
    const double res = (x - w - m.transpose() * x * m).norm();
    if (!(res <= kLyapunovResidualTol * std::max(1.0, x.norm())))
        throw NumericalError("Lyapunov residual " + std::to_string(res) + " out of tolerance");
}

Eigen::MatrixXd solve_fixed_point(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w) {
    Eigen::MatrixXd x = w;
    Eigen::MatrixXd mk = m;
    for (int k = 0; k < kMaxDoublings; ++k) {
        x += mk.transpose() * x * mk;
        if (mk.norm() <= kPowerCutoff) break;
        mk = (mk * mk).eval();
        if (!(mk.norm() < kDivergenceGuard))
            throw NumericalError("Lyapunov iteration diverged; matrix is not stable");
    }
    return x;
}

Eigen::MatrixXd solve_direct(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w) {
    const int d = static_cast<int>(m.rows());
    // vec(X) - (M^T (x) M^T) vec(X) = vec(W), column-major vec
    Eigen::MatrixXd op = Eigen::MatrixXd::Identity(d * d, d * d);
    const Eigen::MatrixXd mt = m.transpose();
    for (int bc = 0; bc < d; ++bc)
        for (int br = 0; br < d; ++br)
            if (mt(br, bc) != 0.0) op.block(br * d, bc * d, d, d) -= mt(br, bc) * mt;
    Eigen::VectorXd rhs(Eigen::Map<const Eigen::VectorXd>(w.data(), d * d));
    Eigen::VectorXd v = op.partialPivLu().solve(rhs);
    return Eigen::Map<const Eigen::MatrixXd>(v.data(), d, d);
}

}  // namespace

double spectral_radius(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ParameterError("spectral radius needs a square matrix");
    if (m.rows() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Eigen::MatrixXd solve_lyapunov(const Eigen::MatrixXd& m, const Eigen::MatrixXd& w,
                               LyapunovMethod method) {
    if (m.rows() != m.cols() || w.rows() != w.cols() || m.rows() != w.rows())
        throw ParameterError("Lyapunov solve needs square matrices of equal size");
    if (method == LyapunovMethod::automatic)
        method = m.rows() <= 64 ? LyapunovMethod::direct_kron : LyapunovMethod::fixed_point;

    Eigen::MatrixXd x = method == LyapunovMethod::direct_kron ? solve_direct(m, w)
                                                              : solve_fixed_point(m, w);
    if (!x.allFinite()) throw NumericalError("Lyapunov solution is not finite");
    if ((w - w.transpose()).norm() <= 1e-12 * std::max(1.0, w.norm()))
        x = ((x + x.transpose()) / 2.0).eval();
    check_residual(m, w, x);
    return x;
}

LyapunovBatch::LyapunovBatch(const Eigen::MatrixXd& m) {
    if (m.rows() != m.cols()) throw ParameterError("Lyapunov batch needs a square matrix");
    powers_.push_back(m);
    for (int k = 0; k < kMaxDoublings && powers_.back().norm() > kPowerCutoff; ++k) {
        powers_.push_back(powers_.back() * powers_.back());
        if (!(powers_.back().norm() < kDivergenceGuard))
            throw NumericalError("Lyapunov iteration diverged; matrix is not stable");
    }
}

Eigen::MatrixXd LyapunovBatch::solve(const Eigen::MatrixXd& w, bool transpose_pair) const {
    Eigen::MatrixXd x = w;
    for (const auto& mk : powers_) {
        if (transpose_pair)
            x += mk * x * mk.transpose();
        else
            x += mk.transpose() * x * mk;
    }
    if (!x.allFinite()) throw NumericalError("Lyapunov solution is not finite");
    return x;
}

void LyapunovBatch::solve_many(const std::vector<const Eigen::MatrixXd*>& ws,
                               std::vector<Eigen::MatrixXd>& out, bool transpose_pair) const {
    out.resize(ws.size());
    for (size_t i = 0; i < ws.size(); ++i) out[i] = solve(*ws[i], transpose_pair);
}

}  // namespace netlqr
