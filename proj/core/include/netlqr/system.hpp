#pragma once

#include <Eigen/Dense>
#include <memory>
#include <vector>

#include "netlqr/block_matrix.hpp"
#include "netlqr/topology.hpp"

namespace netlqr {

// x(t+1) = A x(t) + B u(t) + w(t), w ~ N(0, Phi), with agent-block structure:
// A and Q live in M^2, B and R are block diagonal. The averaged cost matrices
// decompose as Q = (1/n) sum Q_i with Q_i supported on the 1-hop blocks of
// agent i, and R = (1/n) sum R_i with R_i on block (i,i). Policies are
// u = -K x + sigma0 * eps with per-agent Gaussian exploration noise.
struct NetworkedSystem {
    std::shared_ptr<const Topology> topology;
    std::shared_ptr<const NeighborhoodIndex> hood;
    BlockLayout xx, ux, uu;  // layouts for d_x x d_x, d_u x d_x, d_u x d_u

    BlockMatrix A, B, Q, R;
    std::vector<Eigen::MatrixXd> local_Q;  // zero-padded, full d_x x d_x
    std::vector<Eigen::MatrixXd> local_R;  // zero-padded, full d_u x d_u
    Eigen::MatrixXd Phi;
    double sigma0 = 0.0;

    int n() const { return topology->n; }
    int d_x() const { return xx.rows(); }
    int d_u() const { return uu.rows(); }
    // Closed-loop noise covariance Phi + sigma0^2 B B^T.
    Eigen::MatrixXd Psi() const;
};

// Controller with r-hop support: K in M^r.
struct Controller {
    BlockMatrix K;
    int r = 0;
};

Controller zero_controller(const NetworkedSystem& sys, int r);

// Checks block supports, symmetry, PSD-ness and the per-agent decompositions.
void validate_system(const NetworkedSystem& sys);

struct PaperSystemOptions {
    double sigma0 = 0.1;
    double psi_scale = 0.5;  // Phi = psi_scale * I
    bool a_diag = false;     // add the diagonal to the adjacency pattern of A
};

// Scalar-per-agent benchmark system: A is the adjacency pattern scaled by 0.9
// until it is stable, B = Q = R = I, Q_i = n E_ii, R_i = n E_ii.
NetworkedSystem build_paper_system(const Topology& topo, const PaperSystemOptions& opt = {});

}  // namespace netlqr
