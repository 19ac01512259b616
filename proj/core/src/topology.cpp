#include "netlqr/topology.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include "netlqr/errors.hpp"

namespace netlqr {

std::string to_string(GraphKind kind) {
    switch (kind) {
        case GraphKind::line: return "line";
        case GraphKind::cycle: return "cycle";
        case GraphKind::tree: return "tree";
        case GraphKind::grid4: return "grid4";
        case GraphKind::custom: return "custom";
    }
    return "custom";
}

GraphKind graph_kind_from_string(const std::string& name) {
    if (name == "line") return GraphKind::line;
    if (name == "cycle") return GraphKind::cycle;
    if (name == "tree") return GraphKind::tree;
    if (name == "grid4") return GraphKind::grid4;
    if (name == "custom") return GraphKind::custom;
    throw ParameterError("unknown graph kind: " + name);
}

namespace {

void normalize_edges(int n, std::vector<std::pair<int, int>>& edges) {
    for (auto& [i, j] : edges) {
        if (i < 0 || j < 0 || i >= n || j >= n)
            throw TopologyError("edge endpoint out of range");
        if (i == j) throw TopologyError("self-loops are not allowed");
        if (i > j) std::swap(i, j);
    }
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
}

}  // namespace

bool Topology::has_edge(int i, int j) const {
    if (i > j) std::swap(i, j);
    return std::binary_search(edges.begin(), edges.end(), std::make_pair(i, j));
}

Topology make_line(int n) {
    if (n < 1) throw TopologyError("line needs n >= 1");
    Topology t;
    t.n = n;
    t.kind = GraphKind::line;
    for (int i = 0; i + 1 < n; ++i) t.edges.emplace_back(i, i + 1);
    return t;
}

Topology make_cycle(int n) {
    if (n < 3) throw TopologyError("cycle needs n >= 3");
    Topology t = make_line(n);
    t.kind = GraphKind::cycle;
    t.edges.emplace_back(0, n - 1);
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

Topology make_tree(int f, int depth) {
    if (f < 2) throw TopologyError("tree needs branching factor >= 2");
    if (depth < 1) throw TopologyError("tree needs depth >= 1");
    long long n = 0, layer = 1;
    for (int d = 0; d < depth; ++d) {
        n += layer;
        layer *= f;
        if (n > 1'000'000) throw TopologyError("tree too large");
    }
    Topology t;
    t.n = static_cast<int>(n);
    t.kind = GraphKind::tree;
    t.branching = f;
    for (int i = 0; i < t.n; ++i) {
        for (int c = 0; c < f; ++c) {
            long long child = static_cast<long long>(i) * f + 1 + c;
            if (child < n) t.edges.emplace_back(i, static_cast<int>(child));
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

Topology make_grid4(int side) {
    if (side < 1) throw TopologyError("grid4 needs side >= 1");
    Topology t;
    t.n = side * side;
    t.kind = GraphKind::grid4;
    t.side = side;
    auto id = [side](int r, int c) { return r * side + c; };
    for (int r = 0; r < side; ++r) {
        for (int c = 0; c < side; ++c) {
            if (r + 1 < side) t.edges.emplace_back(id(r, c), id(r + 1, c));
            if (c + 1 < side) t.edges.emplace_back(id(r, c), id(r, c + 1));
        }
    }
    std::sort(t.edges.begin(), t.edges.end());
    return t;
}

Topology make_custom(int n, std::vector<std::pair<int, int>> edges) {
    if (n < 1) throw TopologyError("graph needs n >= 1");
    Topology t;
    t.n = n;
    t.kind = GraphKind::custom;
    normalize_edges(n, edges);
    t.edges = std::move(edges);
    return t;
}

NeighborhoodIndex::NeighborhoodIndex(const Topology& topo) : n_(topo.n) {
    std::vector<std::vector<int>> adj(n_);
    for (auto [i, j] : topo.edges) {
        adj[i].push_back(j);
        adj[j].push_back(i);
    }
    dist_.setConstant(n_, n_, -1);
    std::deque<int> queue;
    for (int s = 0; s < n_; ++s) {
        dist_(s, s) = 0;
        queue.assign(1, s);
        while (!queue.empty()) {
            int u = queue.front();
            queue.pop_front();
            for (int v : adj[u]) {
                if (dist_(s, v) < 0) {
                    dist_(s, v) = dist_(s, u) + 1;
                    queue.push_back(v);
                }
            }
        }
    }
    if ((dist_.array() < 0).any())
        throw TopologyError("graph is disconnected");
    diameter_ = dist_.maxCoeff();
}

int NeighborhoodIndex::eccentricity(int i) const {
    return dist_.row(i).maxCoeff();
}

std::vector<int> NeighborhoodIndex::hop_set(int i, int k) const {
    std::vector<int> out;
    for (int j = 0; j < n_; ++j)
        if (dist_(i, j) <= k) out.push_back(j);
    return out;
}

Topology expand_graph(const Topology& topo, const NeighborhoodIndex& hood, int r) {
    if (r < 1) throw ParameterError("expand_graph needs r >= 1");
    Topology t;
    t.n = topo.n;
    t.kind = GraphKind::custom;
    for (int i = 0; i < topo.n; ++i)
        for (int j = i + 1; j < topo.n; ++j)
            if (hood.dist(i, j) <= r) t.edges.emplace_back(i, j);
    return t;
}

Topology expand_graph(const Topology& topo, int r) {
    return expand_graph(topo, NeighborhoodIndex(topo), r);
}

void write_edge_list(std::ostream& os, const Topology& topo) {
    os << "n=" << topo.n << "\n";
    for (auto [i, j] : topo.edges) os << i << " " << j << "\n";
}

Topology read_edge_list(std::istream& is) {
    std::string header;
    if (!std::getline(is, header)) throw ParameterError("empty edge-list file");
    if (header.rfind("n=", 0) != 0) throw ParameterError("edge list must start with n=<count>");
    int n = 0;
    try {
        n = std::stoi(header.substr(2));
    } catch (const std::exception&) {
        throw ParameterError("bad agent count in edge-list header");
    }
    std::vector<std::pair<int, int>> edges;
    std::string lines;
    while (std::getline(is, lines)) {
        if (lines.empty()) continue;
        std::istringstream ls(lines);
        int i, j;
        if (!(ls >> i >> j)) throw ParameterError("bad edge line: " + lines);
        edges.emplace_back(i, j);
    }
    return make_custom(n, std::move(edges));
}

void save_edge_list(const std::string& path, const Topology& topo) {
    std::ofstream os(path);
    if (!os) throw ParameterError("cannot open for write: " + path);
    write_edge_list(os, topo);
}

Topology load_edge_list(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw ParameterError("cannot open: " + path);
    return read_edge_list(is);
}

}  // namespace netlqr
