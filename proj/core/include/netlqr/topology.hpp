#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <memory>
#include <string>
#include <utility>
#include <vector>

namespace netlqr {

enum class GraphKind { line, cycle, tree, grid4, custom };

std::string to_string(GraphKind kind);
GraphKind graph_kind_from_string(const std::string& name);

// Undirected simple graph over agents 0..n-1.
struct Topology {
    int n = 0;
    std::vector<std::pair<int, int>> edges;  // normalized i < j, sorted, unique
    GraphKind kind = GraphKind::custom;
    int branching = 0;  // tree only
    int side = 0;       // grid4 only

    bool has_edge(int i, int j) const;
};

Topology make_line(int n);
Topology make_cycle(int n);
// Full f-ary tree with `depth` levels including the root: n = (f^depth - 1)/(f - 1).
Topology make_tree(int f, int depth);
Topology make_grid4(int side);
Topology make_custom(int n, std::vector<std::pair<int, int>> edges);

// All-pairs hop distances; construction rejects disconnected graphs.
class NeighborhoodIndex {
public:
    explicit NeighborhoodIndex(const Topology& topo);

    int n() const { return n_; }
    int dist(int i, int j) const { return dist_(i, j); }
    int diameter() const { return diameter_; }
    int eccentricity(int i) const;
    // Agents within k hops of i, ascending.
    std::vector<int> hop_set(int i, int k) const;
    const Eigen::MatrixXi& dist_matrix() const { return dist_; }

private:
    int n_;
    int diameter_;
    Eigen::MatrixXi dist_;
};

// Graph with an edge wherever 1 <= dist(i,j) <= r; kind becomes custom.
Topology expand_graph(const Topology& topo, int r);
Topology expand_graph(const Topology& topo, const NeighborhoodIndex& hood, int r);

// Edge-list text format: header "n=<count>", then one "i j" pair per line.
void write_edge_list(std::ostream& os, const Topology& topo);
Topology read_edge_list(std::istream& is);
void save_edge_list(const std::string& path, const Topology& topo);
Topology load_edge_list(const std::string& path);

}  // namespace netlqr
