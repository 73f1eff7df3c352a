#include <geocorr/errors.hpp>
#include <geocorr/helmholtz.hpp>

#include <doctest.h>

#include "oracles/closed_forms.hpp"
#include "oracles/spectral_s2.hpp"

#include <cmath>
#include <numbers>

using namespace geocorr;
namespace orc = geocorr::oracle;

namespace {
constexpr double pi = std::numbers::pi;
const std::vector<double> kSweep{0.16, 0.08, 0.04, 0.02};
}  // namespace

TEST_CASE("S^2 kernel against the zonal Legendre series") {
    const SphereSpec s2(2);
    for (double eps : {0.1, 0.3}) {
        const RadialKernel k = solve_kernel(s2, eps);
        for (double r : {0.5, 1.0, 2.0}) {
            CAPTURE(eps);
            CAPTURE(r);
            const double ref = orc::spectral_kernel_s2(eps, r);
            CHECK(std::abs(k(r) / ref - 1.0) < 1e-5);
        }
    }
}

TEST_CASE("S^3 kernel against the explicit solution") {
    const SphereSpec s3(3);
    for (double eps : {0.05, 0.2, 0.7})
        for (double r : {1e-3, 0.1, 1.0, 2.0, 3.0}) {
            CAPTURE(eps);
            CAPTURE(r);
            CHECK(std::abs(solve_kernel(s3, eps)(r) / orc::kernel_s3(eps, r) - 1.0) < 1e-9);
        }
}

TEST_CASE("unit mass, positivity and the first eigenfunction") {
    for (int n : {2, 3, 5}) {
        for (double eps : {0.5, 0.16, 0.02}) {
            CAPTURE(n);
            CAPTURE(eps);
            const RadialKernel k = solve_kernel(SphereSpec(n), eps);
            CHECK(std::abs(kernel_moment(k, 0) - 1.0) < 1e-8);
            for (double v : k.values()) CHECK(v >= 0.0);
            // cos(d(x, .)) has eigenvalue -n, so (1 - eps^2 Laplacian)^{-1} scales it by 1/(1 + n eps^2).
            const double lam = 1.0 / (1.0 + n * eps * eps);
            CHECK(std::abs(k.integrate([](double r) { return std::cos(r); }) / lam - 1.0) < 1e-6);
            CHECK(k.normalization_residual() < 1e-10);
        }
    }
}

TEST_CASE("kernel solves the screened equation away from the origin") {
    const RadialKernel k = solve_kernel(SphereSpec(2), 0.3);
    for (double r : {0.5, 1.0, 2.0, 2.8}) {
        const double lap = radial_laplacian(2, [&](double t) { return k(t); }, r);
        CHECK(std::abs(k(r) - 0.09 * lap) < 1e-5 * k(r));
        const double h = 1e-5;
        CHECK(k.derivative(r) == doctest::Approx((k(r + h) - k(r - h)) / (2 * h)).epsilon(1e-6));
    }
}

TEST_CASE("gamma_eps tends to one monotonically with bounded second moments") {
    const GammaEpsSweep s = gamma_eps_sweep(SphereSpec(2), kSweep);
    REQUIRE(s.rows.size() == kSweep.size());
    CHECK(s.monotone);
    CHECK(std::abs(s.extrapolated - 1.0) < 0.01);
    for (std::size_t i = 0; i < s.rows.size(); ++i) {
        CHECK(s.rows[i].M2_scaled < 10.0);
        CHECK(s.rows[i].gamma_eps > 1.0);
        if (i > 0) CHECK(std::abs(s.rows[i].gamma_eps - 1.0) < std::abs(s.rows[i - 1].gamma_eps - 1.0));
    }
    CHECK_THROWS_AS(gamma_eps_sweep(SphereSpec(2), std::vector<double>{0.04, 0.08}), DomainError);
}

TEST_CASE("integrated kernel identities") {
    for (int n : {2, 3}) {
        for (double eps : kSweep) {
            CAPTURE(n);
            CAPTURE(eps);
            const RadialKernel k = solve_kernel(SphereSpec(n), eps);
            const IntegratedKernel phi = integrated_kernel(k);
            const KernelMoments m = kernel_moments(k);
            CHECK(std::abs(phi.phi_at_zero * eps - 1.0) < 1e-6);
            CHECK(std::abs(phi.phi_at_pi) < 1e-10);
            CHECK(std::abs(phi.L1_norm * sphere_volume_ratio(n) * m.gamma_eps - 1.0) < 1e-6);
            // Non-increasing up to the roundoff of C0(pi) - C0(r).
            for (std::size_t i = 1; i < phi.phi.size(); ++i) CHECK(phi.phi[i] <= phi.phi[i - 1] + 1e-12);
            // Phi = sigma_{n-1}/eps int_r^pi K sin^{n-1}: compare at one point by direct quadrature.
            const double r0 = 0.37 * eps;
            const double direct = sphere_surface_volume(n - 1) / eps *
                                  orc::simpson([&](double t) { return k(t) * std::pow(std::sin(t), n - 1); }, r0,
                                               pi - 1e-9, 200000);
            CHECK(k.integrated(r0) == doctest::Approx(direct).epsilon(1e-7));
        }
    }
}

TEST_CASE("first moment outside a small ball is almost all of it") {
    const RadialKernel k = solve_kernel(SphereSpec(2), 0.04);
    CHECK(kernel_moment_outside(k, 0.0) == doctest::Approx(kernel_moment(k, 1)).epsilon(1e-12));
    CHECK(kernel_moment_outside(k, 1e-4) > 0.999 * kernel_moment(k, 1));
}

TEST_CASE("solver preconditions") {
    CHECK_THROWS_AS(solve_kernel(SphereSpec(2), 0.0), DomainError);
    CHECK_THROWS_AS(solve_kernel(SphereSpec(2), -1.0), DomainError);
    CHECK_THROWS_AS(solve_kernel(SphereSpec(2, 2.0), 0.1), DomainError);
    CHECK_THROWS_AS(solve_kernel(SphereSpec(2), 1e-4), SolverError);
    CHECK_THROWS_AS(kernel_moment(solve_kernel(SphereSpec(2), 0.1), 3), DomainError);
}
