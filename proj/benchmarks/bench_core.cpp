#include <benchmark/benchmark.h>

#include "netlqr/distributed.hpp"
#include "netlqr/lqr.hpp"
#include "netlqr/lyapunov.hpp"
#include "netlqr/system.hpp"
#include "netlqr/topology.hpp"
#include "netlqr/walks.hpp"

using namespace netlqr;

namespace {

NetworkedSystem line_system(int n) { return build_paper_system(make_line(n)); }

void bm_lyapunov_fixed_point(benchmark::State& state) {
    const NetworkedSystem sys = line_system(static_cast<int>(state.range(0)));
    const BlockMatrix k0 = zero_controller(sys, 1).K;
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_lyapunov_P(sys, k0, LyapunovMethod::fixed_point));
}
BENCHMARK(bm_lyapunov_fixed_point)->Arg(10)->Arg(20)->Arg(40);

void bm_lyapunov_direct_kron(benchmark::State& state) {
    const NetworkedSystem sys = line_system(static_cast<int>(state.range(0)));
    const BlockMatrix k0 = zero_controller(sys, 1).K;
    for (auto _ : state)
        benchmark::DoNotOptimize(solve_lyapunov_P(sys, k0, LyapunovMethod::direct_kron));
}
BENCHMARK(bm_lyapunov_direct_kron)->Arg(10)->Arg(20)->Arg(40);

void bm_walk_table(benchmark::State& state) {
    const Topology topo = make_line(static_cast<int>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(WalkTable(topo, 1, 12));
}
BENCHMARK(bm_walk_table)->Arg(20)->Arg(99);

void bm_approx_gradient_full(benchmark::State& state) {
    const NetworkedSystem sys = line_system(20);
    const BlockMatrix k0 = zero_controller(sys, 2).K;
    const int kappa = static_cast<int>(state.range(0));
    for (auto _ : state)
        benchmark::DoNotOptimize(approx_gradient_full(sys, k0, kappa, 2));
}
BENCHMARK(bm_approx_gradient_full)->Arg(1)->Arg(5)->Arg(19);

void bm_descent_step(benchmark::State& state) {
    const NetworkedSystem sys = line_system(static_cast<int>(state.range(0)));
    DescentConfig cfg;
    cfg.eta = 1e-3;
    cfg.steps = 1;
    cfg.kappa = 2;
    cfg.r = 2;
    for (auto _ : state) benchmark::DoNotOptimize(run_descent(sys, cfg));
}
BENCHMARK(bm_descent_step)->Arg(10)->Arg(20);

}  // namespace

BENCHMARK_MAIN();
