#include "netlqr/block_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

std::vector<int> offsets_of(const std::vector<int>& dims) {
    std::vector<int> off(dims.size() + 1, 0);
    for (size_t i = 0; i < dims.size(); ++i) {
        if (dims[i] < 1) throw ParameterError("block dimensions must be positive");
        off[i + 1] = off[i] + dims[i];
    }
    return off;
}

double spectral_norm_block(const Eigen::Ref<const Eigen::MatrixXd>& b) {
    if (b.rows() == 1 && b.cols() == 1) return std::abs(b(0, 0));
    if (b.rows() == 1 || b.cols() == 1) return b.norm();
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(b);
    return svd.singularValues()(0);
}

}  // namespace

BlockLayout::BlockLayout(std::vector<int> row_dims, std::vector<int> col_dims,
                         std::shared_ptr<const NeighborhoodIndex> hood)
    : row_dims_(std::move(row_dims)), col_dims_(std::move(col_dims)), hood_(std::move(hood)) {
    if (!hood_) throw ParameterError("layout needs a neighborhood index");
    if (static_cast<int>(row_dims_.size()) != hood_->n() ||
        static_cast<int>(col_dims_.size()) != hood_->n())
        throw ParameterError("layout dims must cover every agent");
    auto ro = offsets_of(row_dims_);
    auto co = offsets_of(col_dims_);
    rows_ = ro.back();
    cols_ = co.back();
    row_off_ = std::move(ro);
    col_off_ = std::move(co);
}

BlockLayout BlockLayout::transposed() const {
    return BlockLayout(col_dims_, row_dims_, hood_);
}

bool BlockLayout::same_partition(const BlockLayout& other) const {
    return row_dims_ == other.row_dims_ && col_dims_ == other.col_dims_ && hood_ == other.hood_;
}

BlockMatrix::BlockMatrix(BlockLayout lay, Eigen::MatrixXd values, std::optional<int> sparsity)
    : layout(std::move(lay)), data(std::move(values)), sparsity_class(sparsity) {
    if (data.rows() != layout.rows() || data.cols() != layout.cols())
        throw ParameterError("matrix shape does not match layout");
}

BlockMatrix BlockMatrix::zero(const BlockLayout& lay) {
    return BlockMatrix(lay, Eigen::MatrixXd::Zero(lay.rows(), lay.cols()), 0);
}

BlockMatrix BlockMatrix::identity(const BlockLayout& lay) {
    if (lay.rows() != lay.cols()) throw ParameterError("identity needs a square layout");
    return BlockMatrix(lay, Eigen::MatrixXd::Identity(lay.rows(), lay.cols()), 0);
}

Eigen::Block<Eigen::MatrixXd> BlockMatrix::block(int i, int j) {
    return data.block(layout.row_offset(i), layout.col_offset(j), layout.row_dim(i),
                      layout.col_dim(j));
}

Eigen::Block<const Eigen::MatrixXd> BlockMatrix::block(int i, int j) const {
    return data.block(layout.row_offset(i), layout.col_offset(j), layout.row_dim(i),
                      layout.col_dim(j));
}

double BlockMatrix::class_violation(int k) const {
    const int n = layout.n_agents();
    double worst = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (layout.dist(i, j) > k)
                worst = std::max(worst, block(i, j).cwiseAbs().maxCoeff());
    return worst;
}

bool BlockMatrix::is_in_class(int k, double tol) const {
    return class_violation(k) <= tol;
}

BlockMatrix project_Mr(const BlockMatrix& x, int r) {
    if (r < 0) throw ParameterError("projection radius must be >= 0");
    BlockMatrix out = x;
    const int n = x.layout.n_agents();
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            if (x.layout.dist(i, j) > r) out.block(i, j).setZero();
    out.sparsity_class = x.sparsity_class ? std::min(*x.sparsity_class, r) : r;
    return out;
}

BlockMatrix multiply(const BlockMatrix& a, const BlockMatrix& b) {
    if (a.layout.col_dims() != b.layout.row_dims() || a.layout.hood_ptr() != b.layout.hood_ptr())
        throw ParameterError("incompatible layouts in block product");
    BlockLayout lay(a.layout.row_dims(), b.layout.col_dims(), a.layout.hood_ptr());
    std::optional<int> cls;
    if (a.sparsity_class && b.sparsity_class)
        cls = std::min(*a.sparsity_class + *b.sparsity_class, lay.hood().diameter());
    return BlockMatrix(lay, a.data * b.data, cls);
}

BlockNorms block_norms(const BlockMatrix& x) {
    const int n = x.layout.n_agents();
    BlockNorms out;
    out.norms.resize(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            out.norms(i, j) = spectral_norm_block(x.block(i, j));
    out.max_norm = out.norms.maxCoeff();
    return out;
}

SedFit fit_sed(const BlockMatrix& x, std::optional<double> gamma) {
    const int n = x.layout.n_agents();
    BlockNorms bn = block_norms(x);
    if (bn.max_norm <= 0.0)
        throw DegenerateInputError("all-zero matrix has no decay envelope");
    if (gamma && (*gamma <= 0.0 || *gamma >= 1.0))
        throw ParameterError("decay rate must lie in (0,1)");

    SedFit fit;
    if (gamma) {
        fit.gamma = fit.gamma_raw = *gamma;
    } else {
        // log ||block|| = log c + dist * log gamma over nonzero blocks
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        long m = 0;
        int dmin = std::numeric_limits<int>::max(), dmax = -1;
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
                if (bn.norms(i, j) <= 0.0) continue;
                const int d = x.layout.dist(i, j);
                dmin = std::min(dmin, d);
                dmax = std::max(dmax, d);
                const double lx = d, ly = std::log(bn.norms(i, j));
                sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
                ++m;
            }
        }
        if (dmax == dmin) {
            // no spread in distance: any rate is consistent
            fit.gamma_raw = 0.5;
        } else {
            fit.gamma_raw = std::exp((m * sxy - sx * sy) / (m * sxx - sx * sx));
        }
        fit.gamma = std::clamp(fit.gamma_raw, 1e-12, 1.0 - 1e-12);
    }

    double c = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            c = std::max(c, bn.norms(i, j) / std::pow(fit.gamma, x.layout.dist(i, j)));
    fit.c = c;

    fit.log_slack.resize(n, n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (bn.norms(i, j) <= 0.0) {
                fit.log_slack(i, j) = std::numeric_limits<double>::infinity();
            } else {
                fit.log_slack(i, j) = std::log(fit.c) +
                                      x.layout.dist(i, j) * std::log(fit.gamma) -
                                      std::log(bn.norms(i, j));
            }
        }
    }
    return fit;
}

}  // namespace netlqr
