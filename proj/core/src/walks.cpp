#include "netlqr/walks.hpp"

#include <cmath>
#include <cstdint>
#include <limits>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

constexpr std::uint64_t kPromoteLimit = std::uint64_t{1} << 62;

std::vector<std::uint64_t> adjacency_u64(const Topology& topo, const NeighborhoodIndex& hood, int r) {
    const int n = topo.n;
    std::vector<std::uint64_t> a(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (i != j && hood.dist(i, j) <= r) a[static_cast<size_t>(i) * n + j] = 1;
    return a;
}

// C = A * B over uint64; returns false if an entry could pass 2^62.
bool mul_u64(int n, const std::vector<std::uint64_t>& a, const std::vector<std::uint64_t>& b,
             std::vector<std::uint64_t>& c) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            std::uint64_t acc = 0;
            for (int k = 0; k < n; ++k) {
                std::uint64_t av = a[static_cast<size_t>(i) * n + k];
                if (!av) continue;
                std::uint64_t bv = b[static_cast<size_t>(k) * n + j];
                if (!bv) continue;
                std::uint64_t prod;
                if (__builtin_mul_overflow(av, bv, &prod)) return false;
                if (__builtin_add_overflow(acc, prod, &acc)) return false;
                if (acc >= kPromoteLimit) return false;
            }
            c[static_cast<size_t>(i) * n + j] = acc;
        }
    }
    return true;
}

void mul_big(int n, const std::vector<WalkCount>& a, const std::vector<WalkCount>& b,
             std::vector<WalkCount>& c) {
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            WalkCount acc = 0;
            for (int k = 0; k < n; ++k) {
                const WalkCount& av = a[static_cast<size_t>(i) * n + k];
                if (av.is_zero()) continue;
                const WalkCount& bv = b[static_cast<size_t>(k) * n + j];
                if (bv.is_zero()) continue;
                acc += av * bv;
            }
            c[static_cast<size_t>(i) * n + j] = acc;
        }
    }
}

std::vector<WalkCount> widen(const std::vector<std::uint64_t>& a) {
    std::vector<WalkCount> out(a.size());
    for (size_t i = 0; i < a.size(); ++i) out[i] = a[i];
    return out;
}

}  // namespace

WalkTable::WalkTable(const Topology& topo, int r, int t_max) : n_(topo.n), r_(r), t_max_(t_max) {
    if (r < 1) throw ParameterError("walk counting needs r >= 1");
    if (t_max < 0) throw ParameterError("walk counting needs t_max >= 0");
    NeighborhoodIndex hood(topo);
    const int n = n_;
    auto adj = adjacency_u64(topo, hood, r);

    counts_.resize(t_max + 1);
    std::vector<std::uint64_t> cur(static_cast<size_t>(n) * n, 0);
    for (int i = 0; i < n; ++i) cur[static_cast<size_t>(i) * n + i] = 1;
    counts_[0] = widen(cur);

    bool big = false;
    std::vector<WalkCount> cur_big;
    std::vector<WalkCount> adj_big;
    std::vector<std::uint64_t> scratch(static_cast<size_t>(n) * n);
    std::vector<WalkCount> scratch_big;
    for (int t = 1; t <= t_max; ++t) {
        if (!big) {
            if (mul_u64(n, cur, adj, scratch)) {
                cur.swap(scratch);
                counts_[t] = widen(cur);
                continue;
            }
            big = true;
            cur_big = widen(cur);
            adj_big = widen(adj);
            scratch_big.assign(static_cast<size_t>(n) * n, WalkCount(0));
        }
        mul_big(n, cur_big, adj_big, scratch_big);
        cur_big.swap(scratch_big);
        counts_[t] = cur_big;
    }
}

const WalkCount& WalkTable::count(int i, int j, int t) const {
    if (t < 0 || t > t_max_ || i < 0 || j < 0 || i >= n_ || j >= n_)
        throw ParameterError("walk count query out of range");
    return counts_[t][static_cast<size_t>(i) * n_ + j];
}

WalkCount WalkTable::max_count_at_distance(const NeighborhoodIndex& hood, int t, int kappa) const {
    WalkCount best = -1;
    for (int i = 0; i < n_; ++i)
        for (int j = 0; j < n_; ++j)
            if (hood.dist(i, j) == kappa) best = std::max(best, count(i, j, t));
    if (best < 0) throw ParameterError("no agent pair at requested distance");
    return best;
}

WalkTable count_walks(const Topology& topo, int r, int t_max) {
    return WalkTable(topo, r, t_max);
}

Table1Constants table1_constants(GraphKind kind, int n, int f) {
    const double e = std::exp(1.0);
    Table1Constants c;
    switch (kind) {
        case GraphKind::line:
            c.C = e;
            c.D = std::pow(1.5 * e, 1.5);
            c.rho_bound = c.rho_column = std::exp(-0.5);
            return c;
        case GraphKind::cycle:
            if (n < 1) throw ParameterError("cycle bound needs n");
            c.C = e / (2.0 * n);
            c.D = 1.5 * e * e;
            c.rho_bound = std::exp(-1.0);
            c.rho_column = std::exp(-0.5);
            return c;
        case GraphKind::tree:
            if (f < 2) throw ParameterError("tree bound needs branching factor");
            c.C = 1.0;
            c.D = 2.0 * e * e * std::sqrt(static_cast<double>(f));
            c.rho_bound = c.rho_column = std::exp(-1.0) / std::sqrt(static_cast<double>(f));
            return c;
        case GraphKind::grid4:
            c.C = e / 2.0;
            c.D = 2.5 * e * e;
            c.rho_bound = c.rho_column = std::exp(-1.0);
            return c;
        case GraphKind::custom:
            throw ParameterError("no published decay constants for custom graphs");
    }
    throw ParameterError("unreachable graph kind");
}

double table1_bound(GraphKind kind, int t, int kappa, int n, int f) {
    Table1Constants c = table1_constants(kind, n, f);
    return c.C * std::pow(c.D, t) * std::pow(c.rho_bound, kappa);
}

Table1Constants fit_walk_constants(const WalkTable& table, const NeighborhoodIndex& hood,
                                   int t_max) {
    std::vector<Eigen::Vector3d> rows;
    std::vector<double> rhs;
    const int n = table.n();
    for (int t = 0; t <= t_max; ++t) {
        for (int kappa = 0; kappa <= hood.diameter(); ++kappa) {
            const WalkCount cnt = table.max_count_at_distance(hood, t, kappa);
            if (cnt > 0) {
                rows.push_back({1.0, static_cast<double>(t), static_cast<double>(kappa)});
                rhs.push_back(std::log(cnt.convert_to<double>()));
            }
        }
    }
    Table1Constants out;
    out.C = 1.0;
    out.D = 1.0;
    out.rho_bound = out.rho_column = 1.0;
    if (rows.size() >= 3) {
        Eigen::MatrixXd a(rows.size(), 3);
        Eigen::VectorXd b(rows.size());
        for (size_t p = 0; p < rows.size(); ++p) {
            a.row(static_cast<Eigen::Index>(p)) = rows[p].transpose();
            b(static_cast<Eigen::Index>(p)) = rhs[p];
        }
        const Eigen::Vector3d coef = (a.transpose() * a).ldlt().solve(a.transpose() * b);
        out.C = std::exp(coef(0));
        out.D = std::max(std::exp(coef(1)), 1.0);
        out.rho_bound = out.rho_column = std::min(std::exp(coef(2)), 1.0);
    }
    // Inflate C so the bound is valid, not merely a fit.
    double worst = 0.0;
    for (int t = 0; t <= t_max; ++t) {
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                const double cnt = table.count(i, j, t).convert_to<double>();
                if (cnt <= 0) continue;
                const double shape =
                    std::pow(out.D, t) * std::pow(out.rho_bound, hood.dist(i, j));
                worst = std::max(worst, cnt / shape);
            }
        }
    }
    if (worst > out.C) out.C = worst;
    return out;
}

}  // namespace netlqr
