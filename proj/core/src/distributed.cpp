#include "netlqr/distributed.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <random>

#include "netlqr/errors.hpp"
#include "netlqr/lyapunov.hpp"

namespace netlqr {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double spectral_norm(const Eigen::MatrixXd& m) {
    if (m.size() == 0) return 0.0;
    Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
    return svd.singularValues()(0);
}

double smallest_eig(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

double largest_eig(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m, Eigen::EigenvaluesOnly);
    return es.eigenvalues().maxCoeff();
}

void check_agent(const NetworkedSystem& sys, int agent) {
    if (agent < 0 || agent >= sys.n()) throw ParameterError("agent index out of range");
}

void check_kappa(int kappa) {
    if (kappa < 0) throw ParameterError("communication range kappa must be >= 0");
}

void check_r(int r) {
    if (r < 1) throw ParameterError("control range r must be >= 1");
}

// Sum over `contributors` of the eps-x cross factor of each truncated form,
// with the common sigma0 scale dropped (it cancels against the score):
//   G_j = B^T P^j (A - BK) - R_j K, rows and columns zeroed outside N_j^kappa.
Eigen::MatrixXd masked_cross_sum(const NetworkedSystem& sys, const BlockMatrix& K,
                                 const std::vector<Eigen::MatrixXd>& local_P,
                                 const Eigen::MatrixXd& closed_loop, int kappa,
                                 const std::vector<int>& contributors) {
    const NeighborhoodIndex& hood = *sys.hood;
    Eigen::MatrixXd bt = sys.B.data.transpose();
    Eigen::MatrixXd sum = Eigen::MatrixXd::Zero(sys.d_u(), sys.d_x());
    for (int j : contributors) {
        for (int i : hood.hop_set(j, kappa)) {
            const int ro = sys.ux.row_offset(i);
            const int rd = sys.ux.row_dim(i);
            Eigen::MatrixXd row = bt.middleRows(ro, rd) * local_P[j] * closed_loop;
            row.noalias() -= sys.local_R[j].middleRows(ro, rd) * K.data;
            for (int a = 0; a < sys.n(); ++a) {
                if (hood.dist(j, a) > kappa)
                    row.middleCols(sys.xx.col_offset(a), sys.xx.col_dim(a)).setZero();
            }
            sum.middleRows(ro, rd) += row;
        }
    }
    return sum;
}

std::vector<int> all_agents(int n) {
    std::vector<int> v(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = i;
    return v;
}

// Default per-agent score-norm bound sqrt(d_u^i * tr([Xi]_{N_i^r})) / sigma0.
std::vector<double> analytic_score_bounds(const NetworkedSystem& sys, const Eigen::MatrixXd& xi,
                                          int r) {
    if (sys.sigma0 <= 0.0)
        throw ParameterError("score bounds need sigma0 > 0 or an explicit override");
    std::vector<double> bounds(static_cast<size_t>(sys.n()));
    for (int i = 0; i < sys.n(); ++i) {
        double tr = 0.0;
        for (int a : sys.hood->hop_set(i, r)) {
            const int off = sys.xx.row_offset(a);
            tr += xi.block(off, off, sys.xx.row_dim(a), sys.xx.row_dim(a)).trace();
        }
        bounds[static_cast<size_t>(i)] =
            std::sqrt(static_cast<double>(sys.ux.row_dim(i)) * tr) / sys.sigma0;
    }
    return bounds;
}

double safe_ratio(double num, double den) { return den > 0.0 ? num / den : kInf; }

// System-level constants the guard reuses across descent steps.
struct GuardConstants {
    double q_min = 0, q_max = 0, r_min = 0, r_max = 0, mu = 0;
    double norm_a = 0, norm_b = 0;
    double sqrt_d = 0;
};

GuardConstants guard_constants(const NetworkedSystem& sys) {
    GuardConstants c;
    c.q_min = smallest_eig(sys.Q.data);
    c.q_max = largest_eig(sys.Q.data);
    c.r_min = smallest_eig(sys.R.data);
    c.r_max = largest_eig(sys.R.data);
    c.mu = smallest_eig(sys.Psi());
    c.norm_a = spectral_norm(sys.A.data);
    c.norm_b = spectral_norm(sys.B.data);
    c.sqrt_d = std::sqrt(static_cast<double>(std::max(sys.d_x(), sys.d_u())));
    return c;
}

StepSizeBounds eval_guard(const NetworkedSystem& sys, const BlockMatrix& K,
                          const SolutionCache& cache, const GuardConstants& gc, int kappa, int r,
                          const GuardParams& params, const std::vector<double>& score_bounds) {
    StepSizeBounds out;
    const double cost_k = cache.cost;
    const double c_star = params.c_star.value_or(0.0);
    const double cost0 = params.cost_k0.value_or(cost_k);

    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    const double norm_cl = spectral_norm(closed_loop);
    const Eigen::MatrixXd rbpb = sys.R.data + sys.B.data.transpose() * cache.P * sys.B.data;
    const double norm_rbpb = spectral_norm(rbpb);
    const double norm_bpa = spectral_norm(Eigen::MatrixXd(
        sys.B.data.transpose() * cache.P * sys.A.data));

    const BlockMatrix gproj = project_Mr(cache.grad, r);
    const double grad_norm = spectral_norm(gproj.data);

    out.t1 = safe_ratio(0.0625 * std::pow(gc.q_min * gc.mu / cost_k, 2.0),
                        gc.norm_b * grad_norm * (1.0 + norm_cl));
    out.t2 = safe_ratio(gc.q_min, 32.0 * cost_k * norm_rbpb);

    const double excess = std::max(cost_k - c_star, 0.0);
    const double sq = std::sqrt(norm_rbpb * excess / gc.mu);
    const double upsilon = gc.norm_a + gc.sqrt_d * gc.norm_b * (sq + norm_bpa) / gc.r_min +
                           gc.norm_b * (cost_k / gc.q_min) * sq;

    double sum_l = 0.0;
    for (double b : score_bounds) sum_l += b;
    const double decay = std::pow(params.rho, kappa + 1);
    out.t3 = safe_ratio(gc.q_min * gc.mu, 4.0 * cost_k * gc.norm_b * (upsilon + 1.0) *
                                              params.c_prime * gc.sqrt_d * sum_l * decay);

    const double lbar = (2.0 * gc.r_max + 2.0 * gc.norm_b * gc.norm_b * cost0 / gc.mu +
                         4.0 * std::sqrt(2.0) * params.zeta * gc.norm_b * cost0 / gc.mu) *
                        cost0 / gc.q_max;
    out.smoothness = lbar;
    out.t4 = safe_ratio(1.0, lbar);

    out.varpi2 = -params.f1_3 * std::pow(params.rho, 3.0 * (kappa + 1));
    out.varpi1 = -params.f1_2 * std::pow(params.rho, 2.0 * (kappa + 1)) + 0.5 * lbar * grad_norm;
    out.varpi0 = grad_norm - params.f1_1 * decay;
    out.kappa_sufficient = out.varpi0 > 0.0;
    if (!out.kappa_sufficient) {
        out.t5 = 0.0;
    } else if (out.varpi2 == 0.0) {
        out.t5 = kInf;
    } else {
        const double disc = out.varpi1 * out.varpi1 - 4.0 * out.varpi2 * out.varpi0;
        out.t5 = (-out.varpi1 - std::sqrt(disc)) / (2.0 * out.varpi2);
    }

    out.cap = 1.0;
    out.min_bound = std::min({out.t1, out.t2, out.t3, out.t4, out.cap});
    if (out.kappa_sufficient) out.min_bound = std::min(out.min_bound, out.t5);
    return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t sub_seed(std::uint64_t seed, std::uint64_t stream) {
    return splitmix64(seed + 0x9e3779b97f4a7c15ULL * (stream + 1));
}

Eigen::MatrixXd symmetric_sqrt(const Eigen::MatrixXd& m) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success) throw NumericalError("covariance factorization failed");
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal();
}

}  // namespace

double TruncatedQ::evaluate(const Eigen::VectorXd& x, const Eigen::VectorXd& eps) const {
    if (x.size() + eps.size() != M.rows()) throw ParameterError("evaluation point size mismatch");
    Eigen::VectorXd z(M.rows());
    z << x, eps;
    return z.dot(M * z) + c0;
}

double TruncatedQ::evaluate_xu(const NetworkedSystem& sys, const BlockMatrix& K,
                               const Eigen::VectorXd& x, const Eigen::VectorXd& u) const {
    if (sys.sigma0 <= 0.0)
        throw ParameterError("inverting the policy map for (x,u) evaluation needs sigma0 > 0");
    Eigen::VectorXd eps = (u + K.data * x) / sys.sigma0;
    return evaluate(x, eps);
}

TruncatedQ truncated_q(const NetworkedSystem& sys, const BlockMatrix& K, int agent, int kappa) {
    check_agent(sys, agent);
    check_kappa(kappa);
    require_stabilizing(sys, K);

    const double s0 = sys.sigma0;
    const int dx = sys.d_x();
    const int du = sys.d_u();
    const Eigen::MatrixXd pi = local_P(sys, K, agent);
    const Eigen::MatrixXd xi = solve_lyapunov_Xi(sys, K);
    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    const Eigen::MatrixXd& qi = sys.local_Q[static_cast<size_t>(agent)];
    const Eigen::MatrixXd& ri = sys.local_R[static_cast<size_t>(agent)];
    const Eigen::MatrixXd pib = pi * sys.B.data;

    TruncatedQ out;
    out.agent = agent;
    out.kappa = kappa;
    out.M.setZero(dx + du, dx + du);
    out.M.topLeftCorner(dx, dx) =
        qi + K.data.transpose() * ri * K.data + closed_loop.transpose() * pi * closed_loop;
    out.M.topRightCorner(dx, du) =
        s0 * (closed_loop.transpose() * pib - K.data.transpose() * ri);
    out.M.bottomLeftCorner(du, dx) = out.M.topRightCorner(dx, du).transpose();
    out.M.bottomRightCorner(du, du) = s0 * s0 * (ri + sys.B.data.transpose() * pib);
    out.c0 = -(pi * xi).trace() -
             s0 * s0 * (ri.trace() + (sys.B.data.transpose() * pib).trace());

    for (int a = 0; a < sys.n(); ++a) {
        if (sys.hood->dist(agent, a) <= kappa) continue;
        const int xo = sys.xx.row_offset(a);
        const int xd = sys.xx.row_dim(a);
        const int uo = dx + sys.ux.row_offset(a);
        const int ud = sys.ux.row_dim(a);
        out.M.middleRows(xo, xd).setZero();
        out.M.middleCols(xo, xd).setZero();
        out.M.middleRows(uo, ud).setZero();
        out.M.middleCols(uo, ud).setZero();
    }
    return out;
}

Eigen::MatrixXd approx_gradient(const NetworkedSystem& sys, const BlockMatrix& K, int agent,
                                int kappa, int r) {
    check_agent(sys, agent);
    check_kappa(kappa);
    check_r(r);
    if (sys.sigma0 <= 0.0)
        throw ParameterError("gradient approximation needs sigma0 > 0 (score undefined)");
    require_stabilizing(sys, K);

    SolutionCache cache = SolutionCache::compute(sys, K, true);
    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    const Eigen::MatrixXd cross = masked_cross_sum(sys, K, cache.local_P, closed_loop, kappa,
                                                   sys.hood->hop_set(agent, kappa));
    const int ro = sys.ux.row_offset(agent);
    const int rd = sys.ux.row_dim(agent);
    Eigen::MatrixXd row =
        (-2.0 / sys.n()) * (cross.middleRows(ro, rd) * cache.Xi);
    for (int a = 0; a < sys.n(); ++a) {
        if (sys.hood->dist(agent, a) > r)
            row.middleCols(sys.xx.col_offset(a), sys.xx.col_dim(a)).setZero();
    }
    return row;
}

BlockMatrix approx_gradient_full(const NetworkedSystem& sys, const SolutionCache& cache,
                                 const BlockMatrix& K, int kappa, int r) {
    check_kappa(kappa);
    check_r(r);
    if (sys.sigma0 <= 0.0)
        throw ParameterError("gradient approximation needs sigma0 > 0 (score undefined)");
    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    const Eigen::MatrixXd cross = masked_cross_sum(sys, K, cache.local_P, closed_loop, kappa,
                                                   all_agents(sys.n()));
    BlockMatrix h(sys.ux, (-2.0 / sys.n()) * (cross * cache.Xi));
    return project_Mr(h, r);
}

BlockMatrix approx_gradient_full(const NetworkedSystem& sys, const BlockMatrix& K, int kappa,
                                 int r) {
    require_stabilizing(sys, K);
    SolutionCache cache = SolutionCache::compute(sys, K, true);
    return approx_gradient_full(sys, cache, K, kappa, r);
}

StepSizeBounds step_size_guard(const NetworkedSystem& sys, const BlockMatrix& K, int kappa,
                               int r, const GuardParams& params) {
    check_kappa(kappa);
    check_r(r);
    require_stabilizing(sys, K);

    SolutionCache cache = SolutionCache::compute(sys, K, false);
    GuardParams filled = params;
    if (!filled.c_star) {
        RiccatiResult opt = riccati_optimal(sys);
        filled.c_star = cost(sys, opt.K);
    }
    std::vector<double> bounds =
        filled.score_bounds ? *filled.score_bounds : analytic_score_bounds(sys, cache.Xi, r);
    return eval_guard(sys, K, cache, guard_constants(sys), kappa, r, filled, bounds);
}

DecayFit fit_decay_constants(const NetworkedSystem& sys, const BlockMatrix& K, int r) {
    DecayFit fit;
    if (sys.sigma0 <= 0.0) return fit;
    const int diam = sys.hood->diameter();
    if (diam < 3) return fit;
    require_stabilizing(sys, K);

    SolutionCache cache = SolutionCache::compute(sys, K, true);
    const BlockMatrix gproj = project_Mr(cache.grad, r);
    const std::vector<double> score = analytic_score_bounds(sys, cache.Xi, r);

    std::vector<double> ks, logs;
    for (int kappa = 1; kappa < diam; ++kappa) {
        BlockMatrix h = approx_gradient_full(sys, cache, K, kappa, r);
        double worst = 0.0;
        for (int i = 0; i < sys.n(); ++i) {
            const double err = (h.data - gproj.data)
                                   .middleRows(sys.ux.row_offset(i), sys.ux.row_dim(i))
                                   .norm();
            worst = std::max(worst, err / std::max(score[static_cast<size_t>(i)], 1e-300));
        }
        if (worst > 1e-15) {
            ks.push_back(static_cast<double>(kappa + 1));
            logs.push_back(std::log(worst));
        }
    }
    if (ks.size() < 2) return fit;

    double mx = 0, my = 0;
    for (size_t p = 0; p < ks.size(); ++p) {
        mx += ks[p];
        my += logs[p];
    }
    mx /= static_cast<double>(ks.size());
    my /= static_cast<double>(ks.size());
    double sxx = 0, sxy = 0;
    for (size_t p = 0; p < ks.size(); ++p) {
        sxx += (ks[p] - mx) * (ks[p] - mx);
        sxy += (ks[p] - mx) * (logs[p] - my);
    }
    if (sxx <= 0) return fit;
    const double slope = sxy / sxx;
    double rho = std::exp(slope);
    if (!(rho > 0.0) || rho >= 1.0) return fit;
    rho = std::max(rho, 1e-6);

    double c_prime = 0.0;
    for (size_t p = 0; p < ks.size(); ++p)
        c_prime = std::max(c_prime, std::exp(logs[p]) / std::pow(rho, ks[p]));
    fit.c_prime = c_prime;
    fit.rho = rho;
    fit.valid = true;
    return fit;
}

void DescentTrace::write_csv(std::ostream& os) const {
    os << "step,cost,rel_error_vs_opt,proj_grad_norm,approx_err_norm,spectral_radius,"
          "eta_used,guard_min_term\n";
    char buf[512];
    for (const DescentRecord& rec : records) {
        std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      rec.step, rec.cost, rec.rel_error_vs_opt, rec.proj_grad_norm,
                      rec.approx_err_norm, rec.spectral_radius, rec.eta_used,
                      rec.guard_min_term);
        os << buf;
    }
}

DescentResult run_descent(const NetworkedSystem& sys, const DescentConfig& config) {
    if (config.eta < 0.0) throw ParameterError("step size eta must be >= 0");
    if (config.steps < 1) throw ParameterError("iteration count must be >= 1");
    const int diam_cap = std::max(1, sys.hood->diameter());
    if (config.kappa < 1 || config.kappa > diam_cap)
        throw ParameterError("kappa must lie in [1, diameter]");
    if (config.r < 1 || config.r > diam_cap)
        throw ParameterError("r must lie in [1, diameter]");

    BlockMatrix K = config.k0 ? *config.k0 : zero_controller(sys, config.r).K;
    if (!K.layout.same_partition(sys.ux))
        throw ParameterError("initial gain has the wrong block layout");
    if (!K.is_in_class(config.r)) throw ParameterError("initial gain is not supported on M^r");
    K.sparsity_class = config.r;

    RiccatiResult opt = riccati_optimal(sys);
    const double opt_cost0 = (opt.P * sys.Phi).trace();

    GuardParams guard = config.guard;
    if (!guard.c_star) guard.c_star = cost(sys, opt.K);
    if (config.guard_mode == GuardMode::theorem_guard && config.fit_decay_constants) {
        DecayFit fit = fit_decay_constants(sys, K, config.r);
        if (fit.valid) {
            guard.c_prime = fit.c_prime;
            guard.rho = fit.rho;
        }
    }
    if (!guard.cost_k0) guard.cost_k0 = cost(sys, K);

    const GuardConstants gc = guard_constants(sys);

    DescentResult result;
    result.opt_cost = opt_cost0;
    result.trace.guard_used = guard;
    result.trace.records.reserve(static_cast<size_t>(config.steps) + 1);

    for (int t = 0; t <= config.steps; ++t) {
        const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
        const double sr = spectral_radius(closed_loop);
        if (sr >= 1.0 - kStabilityMargin)
            throw StabilityError("descent iterate left the stabilizing set", t);

        SolutionCache cache = SolutionCache::compute(sys, K, true);
        const std::vector<double> score =
            guard.score_bounds ? *guard.score_bounds : analytic_score_bounds(sys, cache.Xi,
                                                                             config.r);
        if (t == 0) result.trace.score_bounds = score;

        const BlockMatrix gproj = project_Mr(cache.grad, config.r);
        const BlockMatrix h = approx_gradient_full(sys, cache, K, config.kappa, config.r);
        const StepSizeBounds bounds =
            eval_guard(sys, K, cache, gc, config.kappa, config.r, guard, score);

        double eta_t = 0.0;
        if (t < config.steps) {
            if (config.guard_mode == GuardMode::fixed_eta) {
                eta_t = config.eta;
            } else {
                const double inner = gproj.data.cwiseProduct(h.data).sum();
                const double h2 = h.data.squaredNorm();
                if (bounds.kappa_sufficient && inner > 0.0 && h2 > 0.0) {
                    eta_t = std::min(config.eta, bounds.min_bound);
                    if (bounds.smoothness > 0.0)
                        eta_t = std::min(eta_t, inner / (bounds.smoothness * h2));
                }
            }
        }

        DescentRecord rec;
        rec.step = t;
        rec.cost = (cache.P * sys.Phi).trace();
        rec.rel_error_vs_opt = (rec.cost - opt_cost0) / opt_cost0;
        rec.proj_grad_norm = gproj.data.norm();
        rec.approx_err_norm = (h.data - gproj.data).norm();
        rec.spectral_radius = sr;
        rec.eta_used = eta_t;
        rec.guard_min_term = bounds.min_bound;
        rec.guard = bounds;
        result.trace.records.push_back(rec);

        if (t == config.steps) {
            result.final_cost = rec.cost;
            result.rel_error_vs_opt = rec.rel_error_vs_opt;
            break;
        }
        K.data.noalias() -= eta_t * h.data;
    }

    result.K = Controller{K, config.r};
    return result;
}

Eigen::MatrixXd mc_gradient(const NetworkedSystem& sys, const BlockMatrix& K, int agent,
                            int kappa, int r, int n_rollouts, int horizon, std::uint64_t seed) {
    if (n_rollouts < 1) throw ParameterError("n_rollouts must be >= 1");
    if (horizon < 1) throw ParameterError("horizon must be >= 1");
    if (sys.sigma0 <= 0.0) throw ParameterError("Monte-Carlo estimation needs sigma0 > 0");
    check_agent(sys, agent);
    check_kappa(kappa);
    check_r(r);
    require_stabilizing(sys, K);

    const int dx = sys.d_x();
    const int du = sys.d_u();
    const double s0 = sys.sigma0;
    const Eigen::MatrixXd xi = solve_lyapunov_Xi(sys, K);
    const Eigen::MatrixXd xi_half = symmetric_sqrt(xi);
    const Eigen::MatrixXd phi_half = symmetric_sqrt(sys.Phi);
    const std::vector<int> contributors = sys.hood->hop_set(agent, kappa);

    const auto stage_cost = [&](int j, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
        return x.dot(sys.local_Q[static_cast<size_t>(j)] * x) +
               u.dot(sys.local_R[static_cast<size_t>(j)] * u);
    };

    // Empirical per-agent average cost from one long stationary rollout.
    std::vector<double> avg_cost(contributors.size(), 0.0);
    const int master_steps = std::max(10000, horizon * 50);
    {
        std::mt19937_64 rng(sub_seed(seed, 0));
        std::normal_distribution<double> normal;
        Eigen::VectorXd z(dx);
        for (int v = 0; v < dx; ++v) z(v) = normal(rng);
        Eigen::VectorXd x = xi_half * z;
        Eigen::VectorXd eps(du), w(dx);
        for (int t = 0; t < master_steps; ++t) {
            for (int v = 0; v < du; ++v) eps(v) = normal(rng);
            Eigen::VectorXd u = -K.data * x + s0 * eps;
            for (size_t c = 0; c < contributors.size(); ++c)
                avg_cost[c] += stage_cost(contributors[c], x, u);
            for (int v = 0; v < dx; ++v) w(v) = normal(rng);
            x = sys.A.data * x + sys.B.data * u + phi_half * w;
        }
        for (double& v : avg_cost) v /= master_steps;
    }

    const int uo = sys.ux.row_offset(agent);
    const int ud = sys.ux.row_dim(agent);
    Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(ud, dx);
    Eigen::MatrixXd noise_w(dx, horizon);
    Eigen::MatrixXd noise_e(du, horizon);
    Eigen::VectorXd x0(dx), eps0(du), z(dx);

    for (int k = 0; k < n_rollouts; ++k) {
        std::mt19937_64 rng(sub_seed(seed, static_cast<std::uint64_t>(k) + 1));
        std::normal_distribution<double> normal;
        for (int v = 0; v < dx; ++v) z(v) = normal(rng);
        x0 = xi_half * z;
        for (int v = 0; v < du; ++v) eps0(v) = normal(rng);
        const Eigen::VectorXd u0 = -K.data * x0 + s0 * eps0;
        // Noise shared across the per-agent replays (common random numbers).
        for (int t = 0; t < horizon; ++t) {
            for (int v = 0; v < dx; ++v) noise_w(v, t) = normal(rng);
            for (int v = 0; v < du; ++v) noise_e(v, t) = normal(rng);
        }

        double q_total = 0.0;
        for (size_t c = 0; c < contributors.size(); ++c) {
            const int j = contributors[c];
            Eigen::VectorXd xm = Eigen::VectorXd::Zero(dx);
            Eigen::VectorXd um = Eigen::VectorXd::Zero(du);
            for (int a : sys.hood->hop_set(j, kappa)) {
                xm.segment(sys.xx.row_offset(a), sys.xx.row_dim(a)) =
                    x0.segment(sys.xx.row_offset(a), sys.xx.row_dim(a));
                um.segment(sys.ux.row_offset(a), sys.ux.row_dim(a)) =
                    u0.segment(sys.ux.row_offset(a), sys.ux.row_dim(a));
            }
            double q = stage_cost(j, xm, um);
            Eigen::VectorXd x = sys.A.data * xm + sys.B.data * um + phi_half * noise_w.col(0);
            for (int t = 1; t < horizon; ++t) {
                const Eigen::VectorXd u = -K.data * x + s0 * noise_e.col(t);
                q += stage_cost(j, x, u);
                x = sys.A.data * x + sys.B.data * u + phi_half * noise_w.col(t);
            }
            q_total += q - horizon * avg_cost[c];
        }

        Eigen::VectorXd xr = x0;
        for (int a = 0; a < sys.n(); ++a) {
            if (sys.hood->dist(agent, a) > r)
                xr.segment(sys.xx.row_offset(a), sys.xx.row_dim(a)).setZero();
        }
        acc.noalias() += q_total * (-1.0 / s0) * eps0.segment(uo, ud) * xr.transpose();
    }
    return acc / (static_cast<double>(n_rollouts) * sys.n());
}

}  // namespace netlqr
