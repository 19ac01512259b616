#pragma once

#include <Eigen/Dense>
#include <memory>
#include <optional>
#include <vector>

#include "netlqr/topology.hpp"

namespace netlqr {

// Agent-wise partition of matrix rows and columns, tied to the graph that
// defines block distances.
class BlockLayout {
public:
    BlockLayout() = default;
    BlockLayout(std::vector<int> row_dims, std::vector<int> col_dims,
                std::shared_ptr<const NeighborhoodIndex> hood);

    int n_agents() const { return static_cast<int>(row_dims_.size()); }
    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int row_dim(int i) const { return row_dims_[i]; }
    int col_dim(int j) const { return col_dims_[j]; }
    int row_offset(int i) const { return row_off_[i]; }
    int col_offset(int j) const { return col_off_[j]; }
    const std::vector<int>& row_dims() const { return row_dims_; }
    const std::vector<int>& col_dims() const { return col_dims_; }
    int dist(int i, int j) const { return hood_->dist(i, j); }
    const NeighborhoodIndex& hood() const { return *hood_; }
    std::shared_ptr<const NeighborhoodIndex> hood_ptr() const { return hood_; }

    BlockLayout transposed() const;
    bool same_partition(const BlockLayout& other) const;

private:
    std::vector<int> row_dims_, col_dims_;
    std::vector<int> row_off_, col_off_;
    int rows_ = 0, cols_ = 0;
    std::shared_ptr<const NeighborhoodIndex> hood_;
};

// Dense matrix with an agent-block structure. sparsity_class is the smallest
// known k with all blocks at distance > k equal to zero (M^k membership).
struct BlockMatrix {
    BlockLayout layout;
    Eigen::MatrixXd data;
    std::optional<int> sparsity_class;

    BlockMatrix() = default;
    BlockMatrix(BlockLayout lay, Eigen::MatrixXd values,
                std::optional<int> sparsity = std::nullopt);

    static BlockMatrix zero(const BlockLayout& lay);
    static BlockMatrix identity(const BlockLayout& lay);

    Eigen::Block<Eigen::MatrixXd> block(int i, int j);
    Eigen::Block<const Eigen::MatrixXd> block(int i, int j) const;

    // Largest block norm at distance > k; exact membership means 0.
    double class_violation(int k) const;
    bool is_in_class(int k, double tol = 0.0) const;
};

// Zero every block at distance > r and tighten the sparsity tag.
BlockMatrix project_Mr(const BlockMatrix& x, int r);

// Product with composed layout; sparsity classes add (capped at the diameter).
BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b);

struct BlockNorms {
    Eigen::MatrixXd norms;  // spectral norm per block
    double max_norm = 0.0;  // the overline operator
};
BlockNorms block_norms(const BlockMatrix& x);

// Exponential-decay envelope ||[X]_ij|| <= c * gamma^dist(i,j).
struct SedFit {
    double c = 0.0;
    double gamma = 0.0;      // clamped to (0,1)
    double gamma_raw = 0.0;  // regression slope before clamping
    // log(c * gamma^dist) - log(block norm); +inf where the block is zero.
    Eigen::MatrixXd log_slack;
};

// With gamma supplied, c is the tightest valid constant. Without it, gamma
// comes from least squares on log block norm vs distance (zero blocks
// excluded), then c is recomputed so the envelope holds by construction.
SedFit fit_sed(const BlockMatrix& x, std::optional<double> gamma = std::nullopt);

}  // namespace netlqr
