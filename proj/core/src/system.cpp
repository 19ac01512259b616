#include "netlqr/system.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "netlqr/errors.hpp"
#include "netlqr/lyapunov.hpp"

namespace netlqr {

Eigen::MatrixXd NetworkedSystem::Psi() const {
    return Phi + sigma0 * sigma0 * (B.data * B.data.transpose());
}

Controller zero_controller(const NetworkedSystem& sys, int r) {
    if (r < 0) throw ParameterError("controller radius must be >= 0");
    Controller c;
    c.K = BlockMatrix::zero(sys.ux);
    c.r = r;
    return c;
}

namespace {

void require_symmetric_psd(const Eigen::MatrixXd& m, const std::string& name) {
    if ((m - m.transpose()).norm() > 1e-10 * std::max(1.0, m.norm()))
        throw ParameterError(name + " must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw ParameterError(name + " must be positive semidefinite");
}

}  // namespace

void validate_system(const NetworkedSystem& sys) {
    if (!sys.topology || !sys.hood) throw ParameterError("system needs a topology");
    const int n = sys.n();
    if (!sys.A.is_in_class(2, 0.0)) throw ParameterError("A must lie in M^2");
    if (!sys.Q.is_in_class(2, 0.0)) throw ParameterError("Q must lie in M^2");
    if (!sys.B.is_in_class(0, 0.0)) throw ParameterError("B must be block diagonal");
    if (!sys.R.is_in_class(0, 0.0)) throw ParameterError("R must be block diagonal");
    require_symmetric_psd(sys.Q.data, "Q");
    require_symmetric_psd(sys.R.data, "R");
    require_symmetric_psd(sys.Phi, "Phi");
    if (sys.sigma0 < 0) throw ParameterError("sigma0 must be >= 0");
    if (static_cast<int>(sys.local_Q.size()) != n || static_cast<int>(sys.local_R.size()) != n)
        throw ParameterError("per-agent cost matrices must cover every agent");

    Eigen::MatrixXd sum_q = Eigen::MatrixXd::Zero(sys.d_x(), sys.d_x());
    Eigen::MatrixXd sum_r = Eigen::MatrixXd::Zero(sys.d_u(), sys.d_u());
    for (int i = 0; i < n; ++i) {
        require_symmetric_psd(sys.local_Q[i], "Q_i");
        require_symmetric_psd(sys.local_R[i], "R_i");
        sum_q += sys.local_Q[i];
        sum_r += sys.local_R[i];
        BlockMatrix qi(sys.xx, sys.local_Q[i]);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if ((sys.hood->dist(i, a) > 1 || sys.hood->dist(i, b) > 1) &&
                    qi.block(a, b).cwiseAbs().maxCoeff() > 0.0)
                    throw ParameterError("Q_i must be supported on the 1-hop blocks of agent i");
        BlockMatrix ri(sys.uu, sys.local_R[i]);
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b)
                if ((a != i || b != i) && ri.block(a, b).cwiseAbs().maxCoeff() > 0.0)
                    throw ParameterError("R_i must be supported on block (i,i)");
    }
    if ((sum_q / n - sys.Q.data).norm() > 1e-10 * std::max(1.0, sys.Q.data.norm()))
        throw ParameterError("Q must equal the average of the Q_i");
    if ((sum_r / n - sys.R.data).norm() > 1e-10 * std::max(1.0, sys.R.data.norm()))
        throw ParameterError("R must equal the average of the R_i");
}

NetworkedSystem build_paper_system(const Topology& topo, const PaperSystemOptions& opt) {
    if (opt.psi_scale <= 0) throw ParameterError("psi_scale must be > 0");
    if (opt.sigma0 < 0) throw ParameterError("sigma0 must be >= 0");

    NetworkedSystem sys;
    sys.topology = std::make_shared<Topology>(topo);
    sys.hood = std::make_shared<NeighborhoodIndex>(topo);
    const int n = topo.n;
    std::vector<int> ones(n, 1);
    sys.xx = BlockLayout(ones, ones, sys.hood);
    sys.ux = sys.xx;
    sys.uu = sys.xx;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n, n);
    for (auto [i, j] : topo.edges) a(i, j) = a(j, i) = 1.0;
    if (opt.a_diag) a += Eigen::MatrixXd::Identity(n, n);
    while (spectral_radius(a) >= 1.0) a *= 0.9;
    sys.A = BlockMatrix(sys.xx, a, 1);

    sys.B = BlockMatrix::identity(sys.ux.transposed());
    sys.Q = BlockMatrix::identity(sys.xx);
    sys.R = BlockMatrix::identity(sys.uu);
    sys.local_Q.reserve(n);
    sys.local_R.reserve(n);
    for (int i = 0; i < n; ++i) {
        Eigen::MatrixXd e = Eigen::MatrixXd::Zero(n, n);
        e(i, i) = n;
        sys.local_Q.push_back(e);
        sys.local_R.push_back(e);
    }
    sys.Phi = opt.psi_scale * Eigen::MatrixXd::Identity(n, n);
    sys.sigma0 = opt.sigma0;
    validate_system(sys);
    return sys;
}

}  // namespace netlqr
