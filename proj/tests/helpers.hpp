#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "netlqr/lqr.hpp"
#include "netlqr/system.hpp"
#include "netlqr/topology.hpp"

namespace testutil {

// Single-agent system with scalar dynamics x' = a x + b u, cost q x^2 + r u^2,
// process noise variance phi. Everything about it is hand-checkable.
inline netlqr::NetworkedSystem scalar_system(double a = 0.5, double b = 1.0, double q = 1.0,
                                             double r = 1.0, double phi = 1.0,
                                             double sigma0 = 0.0) {
    using namespace netlqr;
    NetworkedSystem sys;
    sys.topology = std::make_shared<Topology>(make_line(1));
    sys.hood = std::make_shared<NeighborhoodIndex>(*sys.topology);
    std::vector<int> one{1};
    sys.xx = BlockLayout(one, one, sys.hood);
    sys.ux = sys.xx;
    sys.uu = sys.xx;
    Eigen::MatrixXd m(1, 1);
    m << a;
    sys.A = BlockMatrix(sys.xx, m, 0);
    m << b;
    sys.B = BlockMatrix(sys.ux.transposed(), m, 0);
    m << q;
    sys.Q = BlockMatrix(sys.xx, m, 0);
    m << r;
    sys.R = BlockMatrix(sys.uu, m, 0);
    m << q;
    sys.local_Q = {m};
    m << r;
    sys.local_R = {m};
    sys.Phi = Eigen::MatrixXd::Constant(1, 1, phi);
    sys.sigma0 = sigma0;
    validate_system(sys);
    return sys;
}

inline netlqr::BlockMatrix gain_from(const netlqr::NetworkedSystem& sys,
                                     const Eigen::MatrixXd& values) {
    return netlqr::BlockMatrix(sys.ux, values);
}

// Dense random gain shrunk until A - BK is strictly stable.
inline netlqr::BlockMatrix random_stabilizing_gain(const netlqr::NetworkedSystem& sys,
                                                   std::mt19937_64& rng, double scale = 0.3) {
    std::uniform_real_distribution<double> u(-scale, scale);
    Eigen::MatrixXd k(sys.d_u(), sys.d_x());
    for (Eigen::Index i = 0; i < k.rows(); ++i)
        for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = u(rng);
    netlqr::BlockMatrix gain(sys.ux, k);
    while (!netlqr::is_stabilizing(sys, gain)) gain.data *= 0.5;
    return gain;
}

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    const auto m = static_cast<double>(x.size());
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= m;
    my /= m;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    LineFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    fit.r2 = syy > 0 ? (sxy * sxy) / (sxx * syy) : 1.0;
    return fit;
}

}  // namespace testutil
