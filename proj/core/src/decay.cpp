#include "netlqr/decay.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "netlqr/errors.hpp"
#include "netlqr/lqr.hpp"

namespace netlqr {

namespace {

constexpr double kRatioDenominatorCutoff = 1e-13;
constexpr size_t kMaxStoredViolations = 16;

std::string csv_num(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

Lemma4Section lemma4_ratio_test(const NetworkedSystem& sys, const BlockMatrix& K, int t_max,
                                double rho_target) {
    if (t_max < 1) throw ParameterError("t_max must be >= 1");
    require_stabilizing(sys, K);

    const NeighborhoodIndex& hood = *sys.hood;
    const int n = sys.n();
    const int diam = hood.diameter();
    Lemma4Section out;
    out.t_max = t_max;
    out.rho_target = rho_target;
    out.worst_by_kappa.assign(static_cast<size_t>(std::max(diam, 1)), 0.0);

    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    Eigen::MatrixXd power = closed_loop;
    for (int t = 1; t <= t_max; ++t) {
        const BlockNorms norms = block_norms(BlockMatrix(sys.xx, power));
        for (int j = 0; j < n; ++j) {
            for (int kappa = 0; kappa < diam; ++kappa) {
                double den = std::numeric_limits<double>::infinity();
                double num = -1.0;
                for (int i = 0; i < n; ++i) {
                    const int d = hood.dist(i, j);
                    if (d == kappa && norms.norms(i, j) >= kRatioDenominatorCutoff)
                        den = std::min(den, norms.norms(i, j));
                    else if (d == kappa + 1)
                        num = std::max(num, norms.norms(i, j));
                }
                if (!std::isfinite(den) || num < 0.0) continue;
                const double ratio = num / den;
                ++out.tested;
                out.worst_by_kappa[static_cast<size_t>(kappa)] =
                    std::max(out.worst_by_kappa[static_cast<size_t>(kappa)], ratio);
                out.worst_ratio = std::max(out.worst_ratio, ratio);
            }
        }
        if (t < t_max) power = power * closed_loop;
    }
    out.pass = out.worst_ratio <= rho_target;
    return out;
}

Lemma5Section lemma5_check(const NetworkedSystem& sys, const BlockMatrix& K, GraphKind kind,
                           int t_max, int r) {
    if (t_max < 0) throw ParameterError("t_max must be >= 0");
    if (r < 1) throw ParameterError("expansion range r must be >= 1");
    require_stabilizing(sys, K);

    const Topology& topo = *sys.topology;
    const NeighborhoodIndex& hood = *sys.hood;
    const WalkTable table(topo, r, t_max);

    Lemma5Section out;
    out.t_max = t_max;
    out.r = r;
    if (kind == GraphKind::custom) {
        out.constants = fit_walk_constants(table, hood, t_max);
        out.constants_fitted = true;
    } else {
        out.constants = table1_constants(kind, topo.n, std::max(topo.branching, 2));
    }

    out.counts_ok = true;
    out.min_margin_by_t.assign(static_cast<size_t>(t_max) + 1,
                               std::numeric_limits<double>::infinity());
    for (int t = 0; t <= t_max; ++t) {
        for (int i = 0; i < topo.n; ++i) {
            for (int j = 0; j < topo.n; ++j) {
                const double cnt = table.count(i, j, t).convert_to<double>();
                if (cnt <= 0.0) continue;
                const double bound = out.constants.C * std::pow(out.constants.D, t) *
                                     std::pow(out.constants.rho_bound, hood.dist(i, j));
                out.min_margin_by_t[static_cast<size_t>(t)] =
                    std::min(out.min_margin_by_t[static_cast<size_t>(t)], bound / cnt);
                if (cnt > bound) {
                    out.counts_ok = false;
                    ++out.total_violations;
                    if (out.violations.size() < kMaxStoredViolations)
                        out.violations.push_back({t, i, j, cnt, bound});
                }
            }
        }
    }

    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    out.closed_loop_norm = block_norms(BlockMatrix(sys.xx, closed_loop)).max_norm;
    out.product = out.closed_loop_norm * out.constants.D;
    out.product_ok = out.product <= 1.0;
    return out;
}

SedPowerSection sed_of_powers(const NetworkedSystem& sys, const BlockMatrix& K, int t_max) {
    if (t_max < 0) throw ParameterError("t_max must be >= 0");
    require_stabilizing(sys, K);

    SedPowerSection out;
    const Eigen::MatrixXd closed_loop = sys.A.data - sys.B.data * K.data;
    Eigen::MatrixXd power = Eigen::MatrixXd::Identity(sys.d_x(), sys.d_x());
    for (int t = 0; t <= t_max; ++t) {
        BlockMatrix wrapped(sys.xx, power);
        try {
            out.power_fits.push_back(fit_sed(wrapped));
            out.vacuous.push_back(false);
        } catch (const DegenerateInputError&) {
            out.power_fits.push_back(SedFit{});
            out.vacuous.push_back(true);
        }
        if (t < t_max) power = power * closed_loop;
    }

    const BlockMatrix grad = exact_gradient(sys, K);
    out.gradient_fit = fit_sed(grad);
    out.gradient_gamma_raw = out.gradient_fit.gamma_raw;
    out.gradient_decays = out.gradient_gamma_raw < 1.0;
    return out;
}

DecayCertificate certify_decay(const NetworkedSystem& sys, const BlockMatrix& K, GraphKind kind,
                               int t_max, double rho_target) {
    DecayCertificate cert;
    cert.lemma4 = lemma4_ratio_test(sys, K, t_max, rho_target);
    cert.lemma5 = lemma5_check(sys, K, kind, t_max);
    cert.sed = sed_of_powers(sys, K, t_max);
    return cert;
}

void write_certificate_report(std::ostream& os, const DecayCertificate& cert) {
    os << "decay certificate\n";
    os << "=================\n\n";

    os << "power-ratio test (t <= " << cert.lemma4.t_max << ")\n";
    os << "  worst ratio: " << csv_num(cert.lemma4.worst_ratio) << " over "
       << cert.lemma4.tested << " tested ratios\n";
    os << "  target rate: " << csv_num(cert.lemma4.rho_target) << " -> "
       << (cert.lemma4.pass ? "pass" : "fail") << "\n";
    for (size_t k = 0; k < cert.lemma4.worst_by_kappa.size(); ++k)
        os << "    ring " << k << " -> " << k + 1 << ": "
           << csv_num(cert.lemma4.worst_by_kappa[k]) << "\n";

    const Table1Constants& c = cert.lemma5.constants;
    os << "\nwalk-count bound (t <= " << cert.lemma5.t_max << ", expansion r = "
       << cert.lemma5.r << ")\n";
    os << "  constants" << (cert.lemma5.constants_fitted ? " (fitted)" : "") << ": C = "
       << csv_num(c.C) << ", D = " << csv_num(c.D) << ", rho = " << csv_num(c.rho_bound)
       << "\n";
    os << "  all counts within bound: " << (cert.lemma5.counts_ok ? "yes" : "no") << " ("
       << cert.lemma5.total_violations << " violations)\n";
    for (const WalkViolation& v : cert.lemma5.violations)
        os << "    t=" << v.t << " (" << v.i << "," << v.j << "): count " << csv_num(v.count)
           << " > bound " << csv_num(v.bound) << "\n";
    os << "  max block norm of A-BK: " << csv_num(cert.lemma5.closed_loop_norm) << "\n";
    os << "  product with D: " << csv_num(cert.lemma5.product) << " -> "
       << (cert.lemma5.product_ok ? "<= 1, pass" : "> 1, fail") << "\n";

    os << "\nenvelope fits of closed-loop powers\n";
    for (size_t t = 0; t < cert.sed.power_fits.size(); ++t) {
        if (cert.sed.vacuous[t]) {
            os << "  t=" << t << ": zero power, vacuous\n";
        } else {
            os << "  t=" << t << ": c = " << csv_num(cert.sed.power_fits[t].c)
               << ", gamma = " << csv_num(cert.sed.power_fits[t].gamma) << "\n";
        }
    }
    os << "  gradient: c = " << csv_num(cert.sed.gradient_fit.c)
       << ", gamma (unclamped) = " << csv_num(cert.sed.gradient_gamma_raw) << " -> "
       << (cert.sed.gradient_decays ? "decays" : "no decay") << "\n";
}

void write_certificate_margins_csv(std::ostream& os, const DecayCertificate& cert) {
    os << "section,t,kappa,value,threshold,ok\n";
    for (size_t k = 0; k < cert.lemma4.worst_by_kappa.size(); ++k) {
        os << "ratio,," << k << "," << csv_num(cert.lemma4.worst_by_kappa[k]) << ","
           << csv_num(cert.lemma4.rho_target) << ","
           << (cert.lemma4.worst_by_kappa[k] <= cert.lemma4.rho_target ? 1 : 0) << "\n";
    }
    for (size_t t = 0; t < cert.lemma5.min_margin_by_t.size(); ++t) {
        const double m = cert.lemma5.min_margin_by_t[t];
        if (!std::isfinite(m)) continue;
        os << "walk_margin," << t << ",," << csv_num(m) << "," << csv_num(1.0) << ","
           << (m >= 1.0 ? 1 : 0) << "\n";
    }
    os << "product,,," << csv_num(cert.lemma5.product) << "," << csv_num(1.0) << ","
       << (cert.lemma5.product_ok ? 1 : 0) << "\n";
    for (size_t t = 0; t < cert.sed.power_fits.size(); ++t) {
        if (cert.sed.vacuous[t]) continue;
        os << "power_gamma," << t << ",," << csv_num(cert.sed.power_fits[t].gamma) << ","
           << csv_num(1.0) << "," << (cert.sed.power_fits[t].gamma < 1.0 ? 1 : 0) << "\n";
    }
    os << "gradient_gamma,,," << csv_num(cert.sed.gradient_gamma_raw) << "," << csv_num(1.0)
       << "," << (cert.sed.gradient_decays ? 1 : 0) << "\n";
}

}  // namespace netlqr
