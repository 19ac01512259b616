#include "netlqr/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "netlqr/errors.hpp"
#include "netlqr/io.hpp"
#include "netlqr/lqr.hpp"

namespace netlqr {

namespace {

namespace fs = std::filesystem;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream os(path);
    if (!os.is_open()) throw ParameterError("cannot open " + path + " for writing");
    return os;
}

}  // namespace

std::string to_string(SweepParam param) {
    switch (param) {
        case SweepParam::none: return "none";
        case SweepParam::kappa: return "kappa";
        case SweepParam::r: return "r";
    }
    throw ParameterError("unreachable sweep parameter");
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
    if (spec.out_dir.empty()) throw ParameterError("experiment needs an output directory");
    const NetworkedSystem sys = build_paper_system(spec.topology, spec.system);
    const int diam = std::max(1, sys.hood->diameter());

    std::vector<int> values;
    if (spec.sweep == SweepParam::none) {
        values = {0};
    } else {
        if (spec.sweep_values.empty()) throw ParameterError("sweep needs at least one value");
        for (int v : spec.sweep_values)
            if (v < 1 || v > diam)
                throw ParameterError("sweep value " + std::to_string(v) +
                                     " outside [1, diameter=" + std::to_string(diam) + "]");
        values = spec.sweep_values;
    }

    fs::create_directories(spec.out_dir);
    const fs::path base(spec.out_dir);

    ExperimentResult out;
    {
        const RiccatiResult opt = riccati_optimal(sys);
        out.opt_cost = (opt.P * sys.Phi).trace();
    }

    for (std::size_t idx = 0; idx < values.size(); ++idx) {
        DescentConfig cfg = spec.base;
        cfg.seed = spec.base.seed + idx;
        std::string tag;
        switch (spec.sweep) {
            case SweepParam::none:
                break;
            case SweepParam::kappa:
                cfg.kappa = values[idx];
                cfg.r = diam;
                tag = "_kappa" + std::to_string(values[idx]);
                break;
            case SweepParam::r:
                cfg.r = values[idx];
                cfg.kappa = diam;
                tag = "_r" + std::to_string(values[idx]);
                break;
        }

        SweepOutcome oc;
        oc.sweep_value = values[idx];
        oc.kappa = cfg.kappa;
        oc.r = cfg.r;
        oc.trace_path = (base / ("trace" + tag + ".csv")).string();
        oc.gain_path = (base / ("K_final" + tag + ".txt")).string();

        const auto t0 = std::chrono::steady_clock::now();
        try {
            const DescentResult res = run_descent(sys, cfg);
            oc.status = "ok";
            oc.final_cost = res.final_cost;
            oc.rel_error = res.rel_error_vs_opt;
            auto trace = open_out(oc.trace_path);
            res.trace.write_csv(trace);
            save_controller(oc.gain_path, res.K);
        } catch (const StabilityError& e) {
            oc.status = "destabilized";
            oc.failure_step = e.step();
            oc.final_cost = std::numeric_limits<double>::quiet_NaN();
            oc.rel_error = std::numeric_limits<double>::quiet_NaN();
            auto trace = open_out(oc.trace_path);
            DescentTrace{}.write_csv(trace);
        }
        oc.wall_time_s =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        out.outcomes.push_back(std::move(oc));
    }

    out.summary_path = (base / "summary.csv").string();
    auto os = open_out(out.summary_path);
    os << "sweep_value,final_cost,rel_error,wall_time_s,status,failure_step\n";
    for (const SweepOutcome& oc : out.outcomes)
        os << oc.sweep_value << ',' << fmt(oc.final_cost) << ',' << fmt(oc.rel_error) << ','
           << fmt(oc.wall_time_s) << ',' << oc.status << ',' << oc.failure_step << '\n';
    return out;
}

WalkSliceFiles write_walk_slices(const std::string& dir, const Topology& topo, int t_max) {
    if (t_max < 0) throw ParameterError("t_max must be >= 0");
    fs::create_directories(dir);
    const fs::path base(dir);
    const NeighborhoodIndex hood(topo);
    const int diam = hood.diameter();
    const WalkTable table(topo, 1, t_max);

    WalkSliceFiles out;
    if (topo.kind == GraphKind::custom) {
        out.constants = fit_walk_constants(table, hood, t_max);
        out.constants_fitted = true;
    } else {
        out.constants = table1_constants(topo.kind, topo.n, std::max(topo.branching, 2));
    }
    const auto bound_at = [&out](int t, int kappa) {
        return out.constants.C * std::pow(out.constants.D, t) *
               std::pow(out.constants.rho_bound, kappa);
    };
    const auto count_str = [](const WalkCount& c) {
        std::ostringstream ss;
        ss << c;
        return ss.str();
    };

    out.fixed_t_path = (base / "walks_fixed_t.csv").string();
    {
        auto os = open_out(out.fixed_t_path);
        os << "kappa,count,bound,margin\n";
        for (int kappa = 0; kappa <= diam; ++kappa) {
            const WalkCount cnt = table.max_count_at_distance(hood, t_max, kappa);
            const double bound = bound_at(t_max, kappa);
            const double margin = cnt > 0 ? bound / cnt.convert_to<double>()
                                          : std::numeric_limits<double>::infinity();
            os << kappa << ',' << count_str(cnt) << ',' << fmt(bound) << ',' << fmt(margin)
               << '\n';
        }
    }

    const int kappa_fixed = std::min(diam, t_max);
    out.fixed_kappa_path = (base / "walks_fixed_kappa.csv").string();
    {
        auto os = open_out(out.fixed_kappa_path);
        os << "t,count,bound,margin\n";
        for (int t = 0; t <= t_max; ++t) {
            const WalkCount cnt = table.max_count_at_distance(hood, t, kappa_fixed);
            const double bound = bound_at(t, kappa_fixed);
            const double margin = cnt > 0 ? bound / cnt.convert_to<double>()
                                          : std::numeric_limits<double>::infinity();
            os << t << ',' << count_str(cnt) << ',' << fmt(bound) << ',' << fmt(margin) << '\n';
        }
    }
    return out;
}

}  // namespace netlqr
