#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "netlqr/errors.hpp"
#include "netlqr/lqr.hpp"
#include "netlqr/system.hpp"

#include "helpers.hpp"

using namespace netlqr;
using testutil::scalar_system;

TEST_CASE("scalar system closed forms at K = 0") {
    const NetworkedSystem sys = scalar_system();  // a=0.5 b=1 q=r=1 phi=1 sigma0=0
    const BlockMatrix k0 = zero_controller(sys, 1).K;

    CHECK(is_stabilizing(sys, k0));
    const Eigen::MatrixXd p = solve_lyapunov_P(sys, k0);
    CHECK(p(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    const Eigen::MatrixXd xi = solve_lyapunov_Xi(sys, k0);
    CHECK(xi(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    CHECK(cost(sys, k0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    const BlockMatrix g = exact_gradient(sys, k0);
    CHECK(g.data(0, 0) == doctest::Approx(-16.0 / 9.0).epsilon(1e-14));
}

TEST_CASE("scalar Riccati solution") {
    const NetworkedSystem sys = scalar_system();
    const RiccatiResult opt = riccati_optimal(sys);
    // p^2 - p/4 - 1 = 0 and K* = a p / (r + p)
    CHECK(opt.P(0, 0) == doctest::Approx(1.1327822185373186).epsilon(1e-12));
    CHECK(opt.K.data(0, 0) == doctest::Approx(0.2655644370746374).epsilon(1e-12));
    const BlockMatrix g = exact_gradient(sys, opt.K);
    CHECK(std::abs(g.data(0, 0)) <= 1e-10);
    CHECK(cost(sys, opt.K) <= cost(sys, zero_controller(sys, 1).K));
}

TEST_CASE("exploration noise enters cost through Psi and tr(R)") {
    const NetworkedSystem noisy = scalar_system(0.5, 1.0, 1.0, 1.0, 1.0, 0.2);
    const BlockMatrix k0 = zero_controller(noisy, 1).K;
    // Psi = 1 + 0.04, P unchanged, cost = P*Psi + sigma0^2 * r
    const double expected = (4.0 / 3.0) * 1.04 + 0.04;
    CHECK(cost(noisy, k0) == doctest::Approx(expected).epsilon(1e-14));
    // Override form evaluates the same gain under a different noise level.
    CHECK(cost(noisy, k0, 0.0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
}

TEST_CASE("per-agent value matrices average to the global one") {
    const NetworkedSystem sys = build_paper_system(make_line(5));
    std::mt19937_64 rng(17);
    const BlockMatrix k = testutil::random_stabilizing_gain(sys, rng);
    const Eigen::MatrixXd p = solve_lyapunov_P(sys, k);
    Eigen::MatrixXd avg = Eigen::MatrixXd::Zero(5, 5);
    for (int i = 0; i < 5; ++i) avg += local_P(sys, k, i);
    avg /= 5.0;
    CHECK((avg - p).norm() <= 1e-10 * std::max(1.0, p.norm()));

    const std::vector<double> locals = local_costs(sys, k);
    double mean = 0.0;
    for (double c : locals) mean += c;
    mean /= 5.0;
    CHECK(mean == doctest::Approx(cost(sys, k)).epsilon(1e-12));
}

TEST_CASE("exact gradient matches finite differences") {
    const NetworkedSystem sys = build_paper_system(make_line(4));
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 3; ++trial) {
        const BlockMatrix k = testutil::random_stabilizing_gain(sys, rng);
        const BlockMatrix g = exact_gradient(sys, k);
        const double delta = 1e-6;
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                BlockMatrix up = k, dn = k;
                up.data(i, j) += delta;
                dn.data(i, j) -= delta;
                const double fd = (cost(sys, up) - cost(sys, dn)) / (2.0 * delta);
                CHECK(g.data(i, j) == doctest::Approx(fd).epsilon(1e-6));
            }
        }
    }
}

TEST_CASE("destabilizing gains are rejected with the step index") {
    const NetworkedSystem sys = scalar_system();
    BlockMatrix bad = zero_controller(sys, 1).K;
    bad.data(0, 0) = -3.0;  // a - b k = 3.5
    CHECK_FALSE(is_stabilizing(sys, bad));
    CHECK_THROWS_AS(require_stabilizing(sys, bad), StabilityError);
    try {
        require_stabilizing(sys, bad, 42);
        FAIL("expected StabilityError");
    } catch (const StabilityError& e) {
        CHECK(e.step() == 42);
    }
    CHECK_THROWS_AS(cost(sys, bad), StabilityError);
    CHECK_THROWS_AS(exact_gradient(sys, bad), StabilityError);
}

TEST_CASE("solution cache agrees with the piecewise solvers") {
    const NetworkedSystem sys = build_paper_system(make_line(6));
    std::mt19937_64 rng(29);
    const BlockMatrix k = testutil::random_stabilizing_gain(sys, rng);
    const SolutionCache cache = SolutionCache::compute(sys, k, true);
    CHECK(cache.P.isApprox(solve_lyapunov_P(sys, k), 1e-10));
    CHECK(cache.Xi.isApprox(solve_lyapunov_Xi(sys, k), 1e-10));
    CHECK(cache.cost == doctest::Approx(cost(sys, k)).epsilon(1e-12));
    CHECK(cache.grad.data.isApprox(exact_gradient(sys, k).data, 1e-9));
    REQUIRE(cache.local_P.size() == 6);
    for (int i = 0; i < 6; ++i) CHECK(cache.local_P[i].isApprox(local_P(sys, k, i), 1e-9));
}

TEST_CASE("benchmark system construction and validation") {
    const NetworkedSystem sys = build_paper_system(make_cycle(6));
    CHECK(sys.n() == 6);
    CHECK(sys.d_x() == 6);
    CHECK(spectral_radius(sys.A.data) < 1.0);
    CHECK(sys.A.is_in_class(1));
    CHECK(sys.Q.data.isApprox(Eigen::MatrixXd::Identity(6, 6)));
    CHECK(sys.Psi().isApprox(0.5 * Eigen::MatrixXd::Identity(6, 6) +
                             0.01 * Eigen::MatrixXd::Identity(6, 6)));

    NetworkedSystem broken = sys;
    broken.local_Q[0](0, 1) = 0.3;  // asymmetric per-agent cost
    CHECK_THROWS_AS(validate_system(broken), ParameterError);

    PaperSystemOptions opt;
    opt.sigma0 = -0.1;
    CHECK_THROWS_AS(build_paper_system(make_line(3), opt), ParameterError);
}

TEST_CASE("system validation rejects structural violations") {
    NetworkedSystem sys = build_paper_system(make_line(5));

    NetworkedSystem off_support = sys;
    off_support.A.data(0, 4) = 0.1;  // distance 4 > 2
    off_support.A.sparsity_class.reset();
    CHECK_THROWS_AS(validate_system(off_support), ParameterError);

    NetworkedSystem bad_b = sys;
    bad_b.B.data(0, 1) = 0.1;
    bad_b.B.sparsity_class.reset();
    CHECK_THROWS_AS(validate_system(bad_b), ParameterError);

    NetworkedSystem indefinite = sys;
    indefinite.Q.data(0, 0) = -2.0;
    for (auto& q : indefinite.local_Q) q(0, 0) = -10.0;
    CHECK_THROWS_AS(validate_system(indefinite), ParameterError);
}
