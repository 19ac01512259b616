#pragma once

#include <string>
#include <vector>

#include "netlqr/distributed.hpp"
#include "netlqr/system.hpp"
#include "netlqr/walks.hpp"

namespace netlqr {

enum class SweepParam { none, kappa, r };

std::string to_string(SweepParam param);

// One descent run per sweep value over a default benchmark system. While sweeping
// kappa the gain range r is pinned to the diameter and vice versa, so each
// sweep isolates one truncation radius.
struct ExperimentSpec {
    Topology topology;
    PaperSystemOptions system;
    SweepParam sweep = SweepParam::none;
    std::vector<int> sweep_values;  // ignored when sweep == none
    DescentConfig base;             // kappa/r fields used only when sweep == none
    std::string out_dir;
};

struct SweepOutcome {
    int sweep_value = 0;
    int kappa = 0;
    int r = 0;
    std::string status;  // "ok" or "destabilized"
    int failure_step = -1;
    double final_cost = 0.0;
    double rel_error = 0.0;
    double wall_time_s = 0.0;
    std::string trace_path;
    std::string gain_path;
};

struct ExperimentResult {
    std::vector<SweepOutcome> outcomes;
    double opt_cost = 0.0;
    std::string summary_path;
};

// Runs every sweep value (sub-seed = seed + index), writing one trace CSV and
// final gain per value plus summary.csv. A destabilized run is recorded with
// its failure step and the remaining values still execute. All emitted bytes
// except the wall_time_s column are determined by (spec, seed).
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Walk-count slices with their bound: fixed t = t_max varying distance
// (slice_kappa.csv) and fixed distance min(t_max, diameter) varying t
// (slice_t.csv). Counts are exact integers; bounds come from the published
// constants or, for custom graphs, from fit_walk_constants.
struct WalkSliceFiles {
    std::string fixed_t_path;
    std::string fixed_kappa_path;
    Table1Constants constants;
    bool constants_fitted = false;
};

WalkSliceFiles write_walk_slices(const std::string& dir, const Topology& topo, int t_max);

}  // namespace netlqr
