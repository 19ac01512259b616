#include <doctest.h>

#include <Eigen/Dense>
#include <random>

#include "netlqr/errors.hpp"
#include "netlqr/lyapunov.hpp"

using namespace netlqr;

namespace {

Eigen::MatrixXd random_stable(int n, std::mt19937_64& rng, double radius = 0.9) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = u(rng);
    m *= radius / spectral_radius(m);
    return m;
}

Eigen::MatrixXd random_psd(int n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Eigen::MatrixXd m(n, n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) m(i, j) = u(rng);
    return m * m.transpose();
}

}  // namespace

TEST_CASE("spectral radius of a diagonalizable matrix") {
    Eigen::MatrixXd m(2, 2);
    m << 0.0, -0.8, 0.8, 0.0;  // eigenvalues +-0.8i
    CHECK(spectral_radius(m) == doctest::Approx(0.8).epsilon(1e-12));
    CHECK(spectral_radius(Eigen::MatrixXd::Zero(3, 3)) == 0.0);
}

TEST_CASE("scalar Lyapunov fixed point") {
    Eigen::MatrixXd m = Eigen::MatrixXd::Constant(1, 1, 0.5);
    Eigen::MatrixXd w = Eigen::MatrixXd::Constant(1, 1, 1.0);
    // x = 1 + 0.25 x -> x = 4/3
    for (auto method : {LyapunovMethod::fixed_point, LyapunovMethod::direct_kron}) {
        const Eigen::MatrixXd x = solve_lyapunov(m, w, method);
        CHECK(x(0, 0) == doctest::Approx(4.0 / 3.0).epsilon(1e-14));
    }
}

TEST_CASE("both solver routes agree to 1e-9") {
    std::mt19937_64 rng(5);
    for (int n : {2, 7, 15, 30}) {
        const Eigen::MatrixXd m = random_stable(n, rng);
        const Eigen::MatrixXd w = random_psd(n, rng);
        const Eigen::MatrixXd x_fp = solve_lyapunov(m, w, LyapunovMethod::fixed_point);
        const Eigen::MatrixXd x_kr = solve_lyapunov(m, w, LyapunovMethod::direct_kron);
        CHECK((x_fp - x_kr).norm() <= 1e-9 * std::max(1.0, x_fp.norm()));
        // residual of the fixed point
        CHECK((x_fp - w - m.transpose() * x_fp * m).norm() <= 1e-10 * std::max(1.0, x_fp.norm()));
    }
}

TEST_CASE("non-contractive dynamics break the solver") {
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
    const Eigen::MatrixXd w = Eigen::MatrixXd::Identity(2, 2);
    // x = w + x has no solution; both routes must refuse rather than return junk.
    CHECK_THROWS_AS(solve_lyapunov(m, w, LyapunovMethod::direct_kron), NumericalError);
    CHECK_THROWS_AS(solve_lyapunov(1.5 * m, w, LyapunovMethod::fixed_point), NumericalError);
}

TEST_CASE("batch solves match single solves in both orientations") {
    std::mt19937_64 rng(9);
    const Eigen::MatrixXd m = random_stable(8, rng);
    const LyapunovBatch batch(m);
    std::vector<Eigen::MatrixXd> ws;
    for (int k = 0; k < 4; ++k) ws.push_back(random_psd(8, rng));

    for (const Eigen::MatrixXd& w : ws) {
        const Eigen::MatrixXd x = batch.solve(w, false);
        CHECK((x - w - m.transpose() * x * m).norm() <= 1e-9 * std::max(1.0, x.norm()));
        const Eigen::MatrixXd y = batch.solve(w, true);
        CHECK((y - w - m * y * m.transpose()).norm() <= 1e-9 * std::max(1.0, y.norm()));
    }

    std::vector<const Eigen::MatrixXd*> ptrs;
    for (const auto& w : ws) ptrs.push_back(&w);
    std::vector<Eigen::MatrixXd> out;
    batch.solve_many(ptrs, out, false);
    REQUIRE(out.size() == ws.size());
    for (std::size_t k = 0; k < ws.size(); ++k)
        CHECK(out[k].isApprox(batch.solve(ws[k], false), 1e-12));
}
