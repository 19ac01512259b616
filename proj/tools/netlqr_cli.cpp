#include <CLI11.hpp>

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "netlqr/decay.hpp"
#include "netlqr/errors.hpp"
#include "netlqr/experiment.hpp"
#include "netlqr/io.hpp"
#include "netlqr/lqr.hpp"

namespace {

using namespace netlqr;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct CommonFlags {
    std::string topology = "line";
    int n = 20;
    int depth = 5;
    int side = 5;
    int branching = 2;
    bool full_scale = false;
    bool a_diag = false;
    int kappa = -1;  // -1: use the graph diameter
    int r = -1;
    double eta = 1e-3;
    int steps = 4000;
    double sigma0 = 0.1;
    double psi_scale = 0.5;
    std::uint64_t seed = 0;
    std::string out = "out";
    std::string sweep;
    bool guard = false;
    int t_max = 20;
    double rho_target = 1.0;
};

void add_common_flags(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--topology", f.topology,
                    "line|cycle|tree|grid4|custom:<edgefile>")
        ->capture_default_str();
    cmd->add_option("--n", f.n, "agent count for line/cycle")->capture_default_str();
    cmd->add_option("--depth", f.depth, "levels for tree")->capture_default_str();
    cmd->add_option("--side", f.side, "side length for grid4")->capture_default_str();
    cmd->add_option("--branching", f.branching, "branching factor for tree")
        ->capture_default_str();
    cmd->add_flag("--full-scale", f.full_scale,
                  "large benchmark sizes (line/cycle 99, tree depth 7, grid 11x11; walks uses 21x21)");
    cmd->add_flag("--a-diag", f.a_diag, "include self-loops in the dynamics pattern");
    cmd->add_option("--kappa", f.kappa, "communication radius (-1: diameter)")
        ->capture_default_str();
    cmd->add_option("--r", f.r, "gain support radius (-1: diameter)")->capture_default_str();
    cmd->add_option("--eta", f.eta, "step size")->capture_default_str();
    cmd->add_option("--steps", f.steps, "descent iterations")->capture_default_str();
    cmd->add_option("--sigma0", f.sigma0, "exploration noise level")->capture_default_str();
    cmd->add_option("--psi-scale", f.psi_scale, "process noise covariance scale")
        ->capture_default_str();
    cmd->add_option("--seed", f.seed, "RNG seed")->capture_default_str();
    cmd->add_option("--out", f.out, "output directory")->capture_default_str();
    cmd->add_option("--sweep", f.sweep, "kappa=<v1,v2,...> or r=<v1,v2,...>");
    cmd->add_flag("--guard", f.guard, "use the theorem step-size guard instead of fixed eta");
    cmd->add_option("--t-max", f.t_max, "horizon for walk counts and certificates")
        ->capture_default_str();
    cmd->add_option("--rho-target", f.rho_target, "pass threshold for the power-ratio test")
        ->capture_default_str();
}

Topology build_topology(const CommonFlags& f, bool walks_verb) {
    const std::string custom_prefix = "custom:";
    if (f.topology.rfind(custom_prefix, 0) == 0)
        return load_edge_list(f.topology.substr(custom_prefix.size()));
    const GraphKind kind = graph_kind_from_string(f.topology);
    switch (kind) {
        case GraphKind::line: return make_line(f.full_scale ? 99 : f.n);
        case GraphKind::cycle: return make_cycle(f.full_scale ? 99 : f.n);
        case GraphKind::tree: return make_tree(f.branching, f.full_scale ? 7 : f.depth);
        case GraphKind::grid4: return make_grid4(f.full_scale ? (walks_verb ? 21 : 11) : f.side);
        case GraphKind::custom:
            throw ParameterError("custom topology needs an edge file: custom:<edgefile>");
    }
    throw ParameterError("unreachable graph kind");
}

std::pair<SweepParam, std::vector<int>> parse_sweep(const std::string& arg) {
    if (arg.empty()) return {SweepParam::none, {}};
    const auto eq = arg.find('=');
    if (eq == std::string::npos)
        throw ParameterError("--sweep expects <param>=<v1,v2,...>, got '" + arg + "'");
    const std::string name = arg.substr(0, eq);
    SweepParam param;
    if (name == "kappa") param = SweepParam::kappa;
    else if (name == "r") param = SweepParam::r;
    else throw ParameterError("--sweep parameter must be kappa or r, got '" + name + "'");
    std::vector<int> values;
    std::stringstream ss(arg.substr(eq + 1));
    std::string item;
    while (std::getline(ss, item, ',')) {
        try {
            std::size_t pos = 0;
            values.push_back(std::stoi(item, &pos));
            if (pos != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ParameterError("--sweep value '" + item + "' is not an integer");
        }
    }
    if (values.empty()) throw ParameterError("--sweep needs at least one value");
    return {param, values};
}

int resolved_radius(int flag_value, int diameter) {
    return flag_value < 0 ? std::max(1, diameter) : flag_value;
}

int cmd_run(const CommonFlags& f) {
    ExperimentSpec spec;
    spec.topology = build_topology(f, false);
    spec.system.sigma0 = f.sigma0;
    spec.system.psi_scale = f.psi_scale;
    spec.system.a_diag = f.a_diag;
    const auto [sweep_param, sweep_values] = parse_sweep(f.sweep);
    spec.sweep = sweep_param;
    spec.sweep_values = sweep_values;
    const NeighborhoodIndex hood(spec.topology);
    spec.base.eta = f.eta;
    spec.base.steps = f.steps;
    spec.base.kappa = resolved_radius(f.kappa, hood.diameter());
    spec.base.r = resolved_radius(f.r, hood.diameter());
    spec.base.guard_mode = f.guard ? GuardMode::theorem_guard : GuardMode::fixed_eta;
    spec.base.seed = f.seed;
    spec.out_dir = f.out;

    const ExperimentResult result = run_experiment(spec);
    std::cout << "optimal cost " << fmt(result.opt_cost) << "\n";
    bool any_ok = false;
    for (const SweepOutcome& oc : result.outcomes) {
        std::cout << to_string(spec.sweep) << "=" << oc.sweep_value << " kappa=" << oc.kappa
                  << " r=" << oc.r << " status=" << oc.status;
        if (oc.status == "ok") {
            any_ok = true;
            std::cout << " final_cost=" << fmt(oc.final_cost)
                      << " rel_error=" << fmt(oc.rel_error);
        } else {
            std::cout << " failure_step=" << oc.failure_step;
        }
        std::cout << "\n";
    }
    std::cout << "wrote " << result.summary_path << "\n";
    if (!any_ok) throw StabilityError("every sweep value destabilized",
                                      result.outcomes.empty() ? -1 : result.outcomes.front().failure_step);
    return 0;
}

int cmd_walks(const CommonFlags& f) {
    const Topology topo = build_topology(f, true);
    const WalkSliceFiles files = write_walk_slices(f.out, topo, f.t_max);
    std::cout << "constants" << (files.constants_fitted ? " (fitted)" : "") << ": C="
              << fmt(files.constants.C) << " D=" << fmt(files.constants.D)
              << " rho=" << fmt(files.constants.rho_bound) << "\n";
    std::cout << "wrote " << files.fixed_t_path << "\n";
    std::cout << "wrote " << files.fixed_kappa_path << "\n";
    return 0;
}

int cmd_certify(const CommonFlags& f) {
    const Topology topo = build_topology(f, false);
    PaperSystemOptions opt;
    opt.sigma0 = f.sigma0;
    opt.psi_scale = f.psi_scale;
    opt.a_diag = f.a_diag;
    const NetworkedSystem sys = build_paper_system(topo, opt);
    const int r = f.r < 0 ? 1 : f.r;

    namespace fs = std::filesystem;
    fs::create_directories(f.out);

    const auto emit = [&](const BlockMatrix& gain, const std::string& tag) {
        const DecayCertificate cert = certify_decay(sys, gain, topo.kind, f.t_max, f.rho_target);
        const std::string report_path = (fs::path(f.out) / ("certificate_" + tag + ".txt")).string();
        const std::string csv_path = (fs::path(f.out) / ("margins_" + tag + ".csv")).string();
        std::ofstream report(report_path);
        if (!report.is_open()) throw ParameterError("cannot open " + report_path);
        write_certificate_report(report, cert);
        std::ofstream csv(csv_path);
        if (!csv.is_open()) throw ParameterError("cannot open " + csv_path);
        write_certificate_margins_csv(csv, cert);
        std::cout << "wrote " << report_path << "\n";
        std::cout << "wrote " << csv_path << "\n";
    };

    emit(zero_controller(sys, r).K, "k0");
    const fs::path gain_path = fs::path(f.out) / "K_final.txt";
    if (fs::exists(gain_path)) {
        const Controller trained = load_controller(gain_path.string(), sys);
        emit(trained.K, "kt");
    }
    return 0;
}

int cmd_fixture(const CommonFlags& f) {
    const Topology topo = build_topology(f, false);
    PaperSystemOptions opt;
    opt.sigma0 = f.sigma0;
    opt.psi_scale = f.psi_scale;
    opt.a_diag = f.a_diag;
    const NetworkedSystem sys = build_paper_system(topo, opt);
    save_system(f.out, sys);
    std::cout << "wrote fixture to " << f.out << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"distributed policy gradient for networked LQR"};
    app.require_subcommand(1);

    CommonFlags flags;
    CLI::App* run = app.add_subcommand("run", "descent experiment with optional kappa/r sweep");
    CLI::App* walks = app.add_subcommand("walks", "walk-count slices against their bound");
    CLI::App* certify = app.add_subcommand("certify", "exponential-decay certificate");
    CLI::App* fixture = app.add_subcommand("fixture", "emit the default system fixture");
    for (CLI::App* cmd : {run, walks, certify, fixture}) add_common_flags(cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (run->parsed()) return cmd_run(flags);
        if (walks->parsed()) return cmd_walks(flags);
        if (certify->parsed()) return cmd_certify(flags);
        return cmd_fixture(flags);
    } catch (const StabilityError& e) {
        std::cerr << "stability failure: " << e.what() << "\n";
        return 3;
    } catch (const ParameterError& e) {
        std::cerr << "parameter error: " << e.what() << "\n";
        return 2;
    } catch (const NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    }
}
