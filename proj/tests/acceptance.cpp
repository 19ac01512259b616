// Acceptance gate: each criterion prints exactly one [PASS]/[FAIL] line and
// the process exits 0 only if every executed criterion passed.

#include <Eigen/Dense>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <filesystem>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "netlqr/decay.hpp"
#include "netlqr/distributed.hpp"
#include "netlqr/errors.hpp"
#include "netlqr/experiment.hpp"
#include "netlqr/io.hpp"
#include "netlqr/lqr.hpp"
#include "netlqr/topology.hpp"
#include "netlqr/walks.hpp"

#include "helpers.hpp"

using namespace netlqr;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string num(double v) {
    std::ostringstream ss;
    ss.precision(3);
    ss << v;
    return ss.str();
}

// In-class random stabilizing gain: dense noise projected to M^r, shrunk
// until the closed loop is stable (K -> 0 works because A is stable).
BlockMatrix random_gain_in_class(const NetworkedSystem& sys, std::mt19937_64& rng, int r) {
    std::uniform_real_distribution<double> u(-0.3, 0.3);
    Eigen::MatrixXd k(sys.d_u(), sys.d_x());
    for (Eigen::Index i = 0; i < k.rows(); ++i)
        for (Eigen::Index j = 0; j < k.cols(); ++j) k(i, j) = u(rng);
    BlockMatrix gain = project_Mr(BlockMatrix(sys.ux, k), r);
    while (!is_stabilizing(sys, gain)) gain.data *= 0.5;
    return gain;
}

double max_block_row_gap(const NetworkedSystem& sys, const Eigen::MatrixXd& a,
                         const Eigen::MatrixXd& b) {
    double worst = 0.0;
    for (int i = 0; i < sys.n(); ++i) {
        const int off = sys.ux.row_offset(i), d = sys.ux.row_dim(i);
        worst = std::max(worst, (a.middleRows(off, d) - b.middleRows(off, d)).norm());
    }
    return worst;
}

Outcome criterion1() {
    Outcome out;
    const NetworkedSystem sys = build_paper_system(make_line(5));
    std::mt19937_64 rng(101);
    const double delta = 1e-5;
    double worst = 0.0;
    for (int trial = 0; trial < 30; ++trial) {
        const BlockMatrix k = testutil::random_stabilizing_gain(sys, rng);
        const BlockMatrix g = exact_gradient(sys, k);
        Eigen::MatrixXd fd(sys.d_u(), sys.d_x());
        for (int i = 0; i < sys.d_u(); ++i) {
            for (int j = 0; j < sys.d_x(); ++j) {
                BlockMatrix up = k, down = k;
                up.data(i, j) += delta;
                down.data(i, j) -= delta;
                fd(i, j) = (cost(sys, up) - cost(sys, down)) / (2.0 * delta);
            }
        }
        worst = std::max(worst, (fd - g.data).norm() / g.data.norm());
    }
    out.pass = worst <= 1e-5;
    out.detail = "worst relative gap " + num(worst) + " over 30 gains (tol 1e-5)";
    return out;
}

Outcome criterion2() {
    Outcome out;
    double worst_pair = 0.0;
    std::mt19937_64 rng(202);
    for (int n : {5, 12, 20, 30}) {
        const NetworkedSystem sys = build_paper_system(make_line(n));
        const BlockMatrix k = testutil::random_stabilizing_gain(sys, rng);
        const Eigen::MatrixXd p_fix = solve_lyapunov_P(sys, k, LyapunovMethod::fixed_point);
        const Eigen::MatrixXd p_dir = solve_lyapunov_P(sys, k, LyapunovMethod::direct_kron);
        worst_pair = std::max(worst_pair, (p_fix - p_dir).norm() / p_dir.norm());
    }

    const NetworkedSystem line20 = build_paper_system(make_line(20));
    const RiccatiResult opt = riccati_optimal(line20);
    const double grad_at_opt = exact_gradient(line20, opt.K).data.norm();

    DescentConfig cfg;
    cfg.eta = 1e-3;
    cfg.steps = 4000;
    cfg.kappa = 19;
    cfg.r = 19;
    const DescentResult res = run_descent(line20, cfg);

    out.pass = worst_pair <= 1e-9 && grad_at_opt <= 1e-8 && res.rel_error_vs_opt <= 1e-3;
    out.detail = "route gap " + num(worst_pair) + " (tol 1e-9), |grad(K*)| " +
                 num(grad_at_opt) + " (tol 1e-8), descent rel error " +
                 num(res.rel_error_vs_opt) + " (tol 1e-3)";
    return out;
}

Outcome criterion3() {
    Outcome out;
    std::mt19937_64 rng(303);
    double worst = 0.0;
    const std::vector<Topology> topos = {make_line(12), make_cycle(12), make_tree(2, 3),
                                         make_grid4(3)};
    for (const Topology& topo : topos) {
        const NetworkedSystem sys = build_paper_system(topo);
        const int diam = sys.hood->diameter();
        for (int r : {1, 2}) {
            const BlockMatrix k = random_gain_in_class(sys, rng, r);
            const BlockMatrix gp = project_Mr(exact_gradient(sys, k), r);
            const BlockMatrix h = approx_gradient_full(sys, k, diam, r);
            worst = std::max(worst,
                             (h.data - gp.data).norm() / std::max(1.0, gp.data.norm()));
        }
    }
    out.pass = worst <= 1e-8;
    out.detail = "worst full-range gap " + num(worst) +
                 " over 4 topologies x 2 ranges (tol 1e-8)";
    return out;
}

Outcome criterion4() {
    Outcome out;
    const NetworkedSystem sys = build_paper_system(make_line(20));
    const int diam = sys.hood->diameter();
    const BlockMatrix k0 = zero_controller(sys, diam).K;
    const BlockMatrix g = exact_gradient(sys, k0);
    std::vector<double> ks, logs;
    for (int kappa = 1; kappa <= 6; ++kappa) {
        const BlockMatrix h = approx_gradient_full(sys, k0, kappa, diam);
        const double err = max_block_row_gap(sys, h.data, g.data);
        if (err > 1e-15) {
            ks.push_back(kappa);
            logs.push_back(std::log(err));
        }
    }
    if (ks.size() < 3) {
        out.pass = false;
        out.detail = "too few nonzero error points (" + std::to_string(ks.size()) + ")";
        return out;
    }
    const testutil::LineFit fit = testutil::fit_line(ks, logs);
    out.pass = fit.slope < 0.0 && fit.r2 >= 0.9;
    out.detail = "log-error slope " + num(fit.slope) + " (need < 0), R^2 " + num(fit.r2) +
                 " (need >= 0.9) over kappa 1..6";
    return out;
}

struct SweepCheck {
    bool ok = false;
    std::string text;
};

SweepCheck check_sweep(const ExperimentResult& res, const std::vector<int>& values) {
    SweepCheck c;
    std::vector<double> rels;
    for (const SweepOutcome& o : res.outcomes) {
        if (o.status != "ok") {
            c.text = "value " + std::to_string(o.sweep_value) + " destabilized";
            return c;
        }
        rels.push_back(o.rel_error);
    }
    bool monotone = true;
    for (std::size_t i = 1; i < rels.size(); ++i)
        if (rels[i] > rels[i - 1] * 1.05) monotone = false;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < values.size() && values[i] <= 5; ++i) {
        xs.push_back(values[i]);
        ys.push_back(std::log(rels[i]));
    }
    const testutil::LineFit fit = testutil::fit_line(xs, ys);
    const double at_diam = rels.back();
    c.ok = monotone && fit.slope < 0.0 && fit.r2 >= 0.9 && at_diam <= 1e-3;
    c.text = std::string(monotone ? "monotone" : "NOT monotone") + ", R^2 " + num(fit.r2) +
             ", rel at diameter " + num(at_diam);
    return c;
}

Outcome criterion5() {
    Outcome out;
    const std::vector<int> values = {1, 2, 3, 4, 5, 19};
    ExperimentSpec spec;
    spec.topology = make_line(20);
    spec.system.a_diag = true;
    spec.base.eta = 1e-3;
    spec.base.steps = 4000;
    spec.out_dir = "acceptance_out/c5_r";
    spec.sweep = SweepParam::r;
    spec.sweep_values = values;
    const SweepCheck r_check = check_sweep(run_experiment(spec), values);

    spec.sweep = SweepParam::kappa;
    spec.out_dir = "acceptance_out/c5_kappa";
    const SweepCheck k_check = check_sweep(run_experiment(spec), values);

    out.pass = r_check.ok && k_check.ok;
    out.detail = "r sweep: " + r_check.text + "; kappa sweep: " + k_check.text;
    return out;
}

Outcome criterion6() {
    Outcome out;
    const std::vector<std::pair<std::string, Topology>> topos = {
        {"line", make_line(20)},
        {"cycle", make_cycle(20)},
        {"tree", make_tree(2, 5)},
        {"grid", make_grid4(5)},
    };
    bool all_ok = true;
    std::string text;
    for (const auto& [name, topo] : topos) {
        const NetworkedSystem sys = build_paper_system(topo);
        DescentConfig cfg;
        cfg.eta = 1e-3;
        cfg.steps = 4000;
        cfg.kappa = 4;
        cfg.r = 4;
        cfg.guard_mode = GuardMode::theorem_guard;
        std::string verdict;
        try {
            const DescentResult res = run_descent(sys, cfg);
            double max_sr = 0.0;
            bool monotone = true;
            int moved = 0;
            for (std::size_t t = 0; t < res.trace.records.size(); ++t) {
                const DescentRecord& rec = res.trace.records[t];
                max_sr = std::max(max_sr, rec.spectral_radius);
                if (t > 0 && rec.cost > res.trace.records[t - 1].cost +
                                            1e-12 * std::max(1.0, res.trace.records[t - 1].cost))
                    monotone = false;
                if (rec.eta_used > 0.0) ++moved;
            }
            const bool ok = max_sr < 1.0 && monotone;
            all_ok = all_ok && ok;
            verdict = name + (ok ? " ok" : " VIOLATED") + " (max radius " + num(max_sr) +
                      ", " + std::to_string(moved) + " active steps)";
        } catch (const StabilityError& e) {
            all_ok = false;
            verdict = name + " destabilized at step " + std::to_string(e.step());
        }
        text += (text.empty() ? "" : "; ") + verdict;
    }
    out.pass = all_ok;
    out.detail = text;
    return out;
}

Outcome criterion7() {
    Outcome out;
    const std::vector<std::pair<std::string, Topology>> topos = {
        {"line", make_line(99)},
        {"cycle", make_cycle(99)},
        {"tree", make_tree(2, 7)},
        {"grid", make_grid4(11)},
    };
    bool all_ok = true;
    std::string text;
    for (const auto& [name, topo] : topos) {
        const NeighborhoodIndex hood(topo);
        const WalkTable table(topo, 1, 12);
        long violations = 0;
        std::string example;
        for (int t = 0; t <= 12 && example.empty(); ++t) {
            for (int i = 0; i < topo.n && example.empty(); ++i) {
                for (int j = 0; j < topo.n; ++j) {
                    const double count = table.count(i, j, t).convert_to<double>();
                    const double bound =
                        table1_bound(topo.kind, t, hood.dist(i, j), topo.n, topo.branching);
                    if (count > bound) {
                        ++violations;
                        example = "count(" + std::to_string(i) + "," + std::to_string(j) +
                                  ",t=" + std::to_string(t) + ")=" + num(count) +
                                  " > bound " + num(bound);
                        break;
                    }
                }
            }
        }
        write_walk_slices("acceptance_out/walks_" + name, topo, 12);
        if (violations > 0) {
            all_ok = false;
            text += (text.empty() ? "" : "; ") + name + " violates: " + example;
        } else {
            text += (text.empty() ? "" : "; ") + name + " ok";
        }
    }
    out.pass = all_ok;
    out.detail = text + "; slices written to acceptance_out/walks_*";
    return out;
}

Outcome criterion8() {
    Outcome out;
    std::mt19937_64 rng(808);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> gamma_draw(0.6, 0.9);
    std::uniform_real_distribution<double> scale_draw(0.2, 1.0);
    const double slack = 1.0 + 1e-12;
    double worst_ratio = 0.0;
    bool exact_zeros_ok = true;

    for (int inst = 0; inst < 100; ++inst) {
        const int n = 2 + static_cast<int>(rng() % 11);
        std::vector<std::pair<int, int>> edges;
        for (int v = 1; v < n; ++v) edges.emplace_back(static_cast<int>(rng() % v), v);
        for (int extra = 0; extra < 2; ++extra) {
            const int a = static_cast<int>(rng() % n), b = static_cast<int>(rng() % n);
            if (a != b) edges.emplace_back(std::min(a, b), std::max(a, b));
        }
        const Topology topo = make_custom(n, edges);
        const auto hood = std::make_shared<NeighborhoodIndex>(topo);
        std::vector<int> dims(n);
        for (int& d : dims) d = 1 + static_cast<int>(rng() % 3);
        const BlockLayout lay(dims, dims, hood);
        const double gamma = gamma_draw(rng);

        const auto random_sed = [&]() {
            Eigen::MatrixXd m(lay.rows(), lay.cols());
            for (Eigen::Index i = 0; i < m.rows(); ++i)
                for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
            BlockMatrix x(lay, std::move(m));
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    x.block(i, j) *= std::pow(gamma, hood->dist(i, j)) * scale_draw(rng);
            return x;
        };
        const BlockMatrix x = random_sed();
        const BlockMatrix y = random_sed();
        const double cx = fit_sed(x, gamma).c;
        const double cy = fit_sed(y, gamma).c;

        const BlockMatrix sum(lay, x.data + y.data);
        worst_ratio = std::max(worst_ratio, fit_sed(sum, gamma).c / (cx + cy));
        worst_ratio = std::max(worst_ratio, fit_sed(multiply(x, y), gamma).c / (n * cx * cy));

        const int diam = hood->diameter();
        const int kappa = static_cast<int>(rng() % (std::min(diam, 2) + 1));
        const BlockMatrix yk = project_Mr(y, kappa);
        const double ybar = block_norms(yk).max_norm;
        if (ybar > 0.0) {
            const double e_gk = std::exp(gamma * kappa);
            worst_ratio = std::max(worst_ratio,
                                   fit_sed(multiply(x, yk), gamma).c / (n * cx * ybar * e_gk));
            const BlockMatrix mixed_sum(lay, x.data + yk.data);
            worst_ratio = std::max(worst_ratio,
                                   fit_sed(mixed_sum, gamma).c / (cx + ybar * e_gk));
        }

        const int kx = static_cast<int>(rng() % (diam + 1));
        const int ky = static_cast<int>(rng() % (diam + 1));
        const BlockMatrix prod = multiply(project_Mr(x, kx), project_Mr(y, ky));
        if (!prod.is_in_class(std::min(kx + ky, diam), 0.0)) exact_zeros_ok = false;
    }

    out.pass = worst_ratio <= slack && exact_zeros_ok;
    out.detail = "worst envelope ratio " + num(worst_ratio) + " (must be <= 1+1e-12), " +
                 std::string(exact_zeros_ok ? "composed supports exactly zero"
                                            : "SUPPORT LEAK in composition");
    return out;
}

Outcome criterion9() {
    Outcome out;
    struct Case {
        std::string name;
        NetworkedSystem sys;
        int agent;
    };
    std::vector<Case> cases;
    cases.push_back({"scalar", testutil::scalar_system(0.5, 1.0, 1.0, 1.0, 1.0, 0.5), 0});
    cases.push_back({"line5", build_paper_system(make_line(5)), 2});

    const int reps = 10, rollouts = 1000, horizon = 200;
    bool all_ok = true;
    std::string text;
    for (const Case& c : cases) {
        const int diam = std::max(1, c.sys.hood->diameter());
        const BlockMatrix k0 = zero_controller(c.sys, diam).K;
        const Eigen::MatrixXd analytic = approx_gradient(c.sys, k0, c.agent, diam, diam);

        std::vector<Eigen::MatrixXd> means;
        for (int rep = 0; rep < reps; ++rep)
            means.push_back(mc_gradient(c.sys, k0, c.agent, diam, diam, rollouts, horizon,
                                        9000 + rep));
        Eigen::MatrixXd mean = Eigen::MatrixXd::Zero(analytic.rows(), analytic.cols());
        for (const Eigen::MatrixXd& m : means) mean += m;
        mean /= reps;
        Eigen::MatrixXd var = Eigen::MatrixXd::Zero(analytic.rows(), analytic.cols());
        for (const Eigen::MatrixXd& m : means) var += (m - mean).cwiseAbs2();
        var /= (reps - 1);
        const Eigen::MatrixXd se = (var / reps).cwiseSqrt();

        double worst_z = 0.0;
        for (Eigen::Index i = 0; i < mean.rows(); ++i)
            for (Eigen::Index j = 0; j < mean.cols(); ++j)
                if (se(i, j) > 0.0)
                    worst_z = std::max(worst_z,
                                       std::abs(mean(i, j) - analytic(i, j)) / se(i, j));

        const Eigen::MatrixXd once =
            mc_gradient(c.sys, k0, c.agent, diam, diam, 200, horizon, 4242);
        const Eigen::MatrixXd again =
            mc_gradient(c.sys, k0, c.agent, diam, diam, 200, horizon, 4242);
        const bool deterministic = (once - again).cwiseAbs().maxCoeff() == 0.0;

        const bool ok = worst_z <= 3.0 && deterministic;
        all_ok = all_ok && ok;
        text += (text.empty() ? "" : "; ") + c.name + " worst z " + num(worst_z) +
                (deterministic ? ", seed-stable" : ", NOT deterministic");
    }
    out.pass = all_ok;
    out.detail = text + " (10x1000 rollouts, 3 SE gate)";
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    int only = 0;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
            only = std::atoi(argv[++i]);
        } else {
            std::cerr << "usage: acceptance [--criterion N]\n";
            return 2;
        }
    }

    const std::vector<std::pair<std::function<Outcome()>, double>> criteria = {
        {criterion1, 10.0}, {criterion2, 60.0}, {criterion3, 30.0},
        {criterion4, 60.0}, {criterion5, 600.0}, {criterion6, 600.0},
        {criterion7, 60.0}, {criterion8, 10.0}, {criterion9, 60.0},
    };

    std::filesystem::create_directories("acceptance_out");
    bool all_pass = true;
    for (std::size_t idx = 0; idx < criteria.size(); ++idx) {
        const int number = static_cast<int>(idx) + 1;
        if (only != 0 && number != only) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome out;
        try {
            out = criteria[idx].first();
        } catch (const std::exception& e) {
            out.pass = false;
            out.detail = std::string("exception: ") + e.what();
        }
        const double elapsed =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const double limit = criteria[idx].second;
        if (elapsed > limit) {
            out.pass = false;
            out.detail += " [exceeded " + num(limit) + "s limit]";
        }
        std::cout << (out.pass ? "[PASS]" : "[FAIL]") << " criterion " << number << ": "
                  << out.detail << " (" << num(elapsed) << "s/" << num(limit) << "s)"
                  << std::endl;
        all_pass = all_pass && out.pass;
    }
    return all_pass ? 0 : 1;
}
