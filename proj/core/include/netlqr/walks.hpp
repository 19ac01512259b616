#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <vector>

#include "netlqr/topology.hpp"

namespace netlqr {

using WalkCount = boost::multiprecision::cpp_int;

// Exact walk counts in the r-hop expansion of a graph: counts(i,j,t) is the
// number of walks of length t from i to j, i.e. an entry of the t-th power of
// the expanded adjacency matrix. Powers are accumulated in 64-bit integers and
// promoted to arbitrary precision once an entry could exceed 2^62.
class WalkTable {
public:
    WalkTable(const Topology& topo, int r, int t_max);

    int n() const { return n_; }
    int r() const { return r_; }
    int t_max() const { return t_max_; }
    const WalkCount& count(int i, int j, int t) const;
    // Largest count over all (i,j) with dist(i,j) == kappa in the base graph.
    WalkCount max_count_at_distance(const NeighborhoodIndex& hood, int t, int kappa) const;

private:
    int n_;
    int r_;
    int t_max_;
    std::vector<std::vector<WalkCount>> counts_;  // counts_[t] row-major n*n
};

WalkTable count_walks(const Topology& topo, int r, int t_max);

// Product-form bound C * D^t * rho^kappa. The cycle's published table entry
// carries two decay rates: the rho column prints e^{-1/2} while the bound line
// uses e^{-kappa}; rho_bound is what the bound evaluates with and rho_column is
// kept for reporting.
struct Table1Constants {
    double C = 0.0;
    double D = 0.0;
    double rho_bound = 0.0;
    double rho_column = 0.0;
};

// n is required for cycle (C = e/(2n)), f for tree.
Table1Constants table1_constants(GraphKind kind, int n = 0, int f = 0);
double table1_bound(GraphKind kind, int t, int kappa, int n = 0, int f = 0);

// Constants for graphs without a published row: least-squares fit of
// log(count) ~ log C + t log D + kappa log rho over positive counts, with C
// inflated afterwards so the bound holds exhaustively on the tested range.
Table1Constants fit_walk_constants(const WalkTable& table, const NeighborhoodIndex& hood,
                                   int t_max);

}  // namespace netlqr
