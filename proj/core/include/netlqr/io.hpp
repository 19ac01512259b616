#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <string>

#include "netlqr/system.hpp"

namespace netlqr {

// Dense text format: a "rows cols" header line, then one whitespace-delimited
// row per line, full double precision.
void write_matrix(std::ostream& os, const Eigen::MatrixXd& m);
Eigen::MatrixXd read_matrix(std::istream& is);
void save_matrix(const std::string& path, const Eigen::MatrixXd& m);
Eigen::MatrixXd load_matrix(const std::string& path);

// System fixture directory:
//   edges.txt            edge list ("n=<count>" header, one "i j" per line)
//   layout.txt           graph kind line plus per-agent "i d_x_i d_u_i"
//   A.txt B.txt Q.txt R.txt Phi.txt   dense matrices
//   local_Q.txt local_R.txt          stacked per-agent matrices
//   scalars.txt          "sigma0=..." and "psi_scale=..." lines
// A fixture without the per-agent files is accepted when Q is block diagonal
// (each agent then takes n times its own diagonal block).
void save_system(const std::string& dir, const NetworkedSystem& sys);
NetworkedSystem load_system(const std::string& dir);

// Controller file: "r <range>" header, then the gain in matrix format.
void save_controller(const std::string& path, const Controller& controller);
Controller load_controller(const std::string& path, const NetworkedSystem& sys);

}  // namespace netlqr
