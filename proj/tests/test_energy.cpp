#include <geocorr/autocorr.hpp>
#include <geocorr/energy.hpp>
#include <geocorr/errors.hpp>
#include <geocorr/helmholtz.hpp>
#include <geocorr/region.hpp>

#include <doctest.h>

#include "oracles/closed_forms.hpp"

#include <cmath>
#include <numbers>

using namespace geocorr;
namespace orc = geocorr::oracle;

namespace {
constexpr double pi = std::numbers::pi;

AutocorrCurve oracle_cap_curve(double a, int grid) {
    AutocorrCurve c;
    c.n = 2;
    c.total_volume = 4 * pi;
    for (int k = 0; k < grid; ++k) {
        const double r = pi * k / (grid - 1);
        c.r_grid.push_back(r);
        c.values.push_back(a == pi / 2 ? 2 * (pi - r) : orc::cap_autocorrelation_s2(a, r));
        c.std_errors.push_back(0.0);
        c.variation.push_back(0.0);
        c.variation_std_errors.push_back(0.0);
    }
    return c;
}

McConfig config(std::int64_t samples, std::uint64_t seed) {
    McConfig c;
    c.samples = samples;
    c.seed = seed;
    return c;
}

const SphereSpec s2(2);
}  // namespace

TEST_CASE("nonlocal term: trivial cases and the hemisphere first moment") {
    const RadialKernel k = solve_kernel(s2, 0.08);
    const AutocorrCurve hemi = oracle_cap_curve(pi / 2, 1025);
    CHECK(nonlocal_term(hemi, k, 0.0) == 0.0);
    const double g = gamma_eps(k);
    CHECK(nonlocal_term(hemi, k, 0.5) == doctest::Approx(2 * pi * 0.5 / g).epsilon(1e-6));
    const AutocorrCurve full = autocorr_estimate(s2, Region::full(), 1025, config(1000, 1));
    CHECK(std::abs(nonlocal_term(full, k, 0.5)) < 1e-12);
    const AutocorrCurve coarse = oracle_cap_curve(pi / 2, 33);
    CHECK_THROWS_AS(nonlocal_term(coarse, solve_kernel(s2, 0.02), 0.5), RefinementError);
}

TEST_CASE("nonlocal term against direct quadrature of the oracle curve") {
    const double a = pi / 3, eps = 0.08, gamma = 0.5;
    const RadialKernel k = solve_kernel(s2, eps);
    const AutocorrCurve c = oracle_cap_curve(a, 1025);
    const double c0 = c.values.front();
    // Graded substitution r = pi u^2 puts most nodes near the kernel peak.
    const double direct = gamma / eps * 2 * (2 * pi) *
                          orc::simpson(
                              [&](double u) {
                                  const double r = pi * u * u;
                                  if (r <= 0.0) return 0.0;
                                  return k(r) * std::sin(r) * (c0 - orc::cap_autocorrelation_s2(a, r, 400)) * 2 * pi * u;
                              },
                              0.0, 1.0, 4000);
    CHECK(nonlocal_term(c, k, gamma) == doctest::Approx(direct).epsilon(1e-4));
}

TEST_CASE("hemisphere energy, error term and sharp lower bound") {
    const AutocorrCurve c = autocorr_estimate(s2, Region::cap({0, 0, 1}, pi / 2), 513, config(500000, 2));
    for (double eps : {0.16, 0.04}) {
        const RadialKernel k = solve_kernel(s2, eps);
        const EnergyReport r = total_energy(s2, Region::cap({0, 0, 1}, pi / 2), c, k, 0.5);
        CHECK(r.perimeter_analytic);
        CHECK(r.perimeter == doctest::Approx(2 * pi));
        CHECK(r.energy == doctest::Approx(2 * pi * (1 - 0.5 / r.gamma_eps)).epsilon(0.01));
        CHECK(std::abs(r.error_term) <= r.error_term_tolerance);
        CHECK(std::abs(r.energy - r.lower_bound) <= r.lower_bound_tolerance);
        CHECK(r.consistent);
        CHECK_FALSE(r.supercritical);
    }
}

TEST_CASE("two routes agree and the lower bound holds for caps") {
    for (double a : {pi / 6, pi / 3, pi / 2}) {
        const AutocorrCurve c = autocorr_estimate(s2, Region::cap({0, 0, 1}, a), 513, config(1000000, 5));
        for (double eps : {0.16, 0.04}) {
            const RadialKernel k = solve_kernel(s2, eps);
            for (double gamma : {0.25, 0.5}) {
                CAPTURE(a);
                CAPTURE(eps);
                CAPTURE(gamma);
                const EnergyReport r = total_energy(s2, Region::cap({0, 0, 1}, a), c, k, gamma);
                CHECK(std::abs(r.decomposition_gap) <= r.decomposition_tolerance);
                CHECK(r.energy >= r.lower_bound - r.lower_bound_tolerance);
                CHECK(r.error_term >= -r.error_term_tolerance);
                CHECK(r.energy == doctest::Approx(r.perimeter - r.nonlocal_term).epsilon(1e-14));
                CHECK(r.consistent);
            }
        }
    }
}

TEST_CASE("energy is affine in gamma") {
    const AutocorrCurve c = oracle_cap_curve(pi / 3, 513);
    const RadialKernel k = solve_kernel(s2, 0.08);
    const Region cap = Region::cap({0, 0, 1}, pi / 3);
    const double e0 = total_energy(s2, cap, c, k, 0.0).energy;
    const double e1 = total_energy(s2, cap, c, k, 0.3).energy;
    const double e2 = total_energy(s2, cap, c, k, 0.9).energy;
    CHECK(e0 == doctest::Approx(cap_perimeter(s2, pi / 3)).epsilon(1e-15));
    CHECK(std::abs(e2 - (e0 + 3.0 * (e1 - e0))) < 1e-10);
}

TEST_CASE("perimeter falls back to the slope estimate or an override") {
    const Region u = parse_region("union(cap:a=0.4;cap:center=0,0,-1,a=0.4)", 2);
    const AutocorrCurve c = autocorr_estimate(s2, u, 513, config(500000, 3));
    const RadialKernel k = solve_kernel(s2, 0.08);
    const EnergyReport r = total_energy(s2, u, c, k, 0.5);
    CHECK_FALSE(r.perimeter_analytic);
    CHECK(r.perimeter == doctest::Approx(2 * cap_perimeter(s2, 0.4)).epsilon(0.03));
    CHECK(r.perimeter_std_error > 0.0);
    EnergyOptions opts;
    opts.perimeter = 5.0;
    CHECK(total_energy(s2, u, c, k, 0.5, opts).perimeter == 5.0);
    CHECK_THROWS_AS(total_energy(s2, u, c, k, -0.1), DomainError);
}

TEST_CASE("limit energy") {
    CHECK(limit_energy(s2, Region::cap({0, 0, 1}, pi / 2), 0.5).value == doctest::Approx(pi));
    CHECK(limit_energy(s2, Region::cap({0, 0, 1}, pi / 3), 0.5).value == doctest::Approx(pi * std::sqrt(3.0) / 2));
    CHECK(limit_energy(3.0, 0.0).value == 3.0);
    const LimitEnergy sup = limit_energy(3.0, 1.2);
    CHECK(sup.supercritical);
    CHECK(sup.value == doctest::Approx(-0.6));
}

TEST_CASE("gamma sweep on the hemisphere and cap") {
    const std::vector<double> eps{0.16, 0.08, 0.04, 0.02};
    const AutocorrCurve h = autocorr_estimate(s2, Region::cap({0, 0, 1}, pi / 2), 513, config(500000, 4));
    const GammaLimitSweep sh = gamma_limit_sweep(s2, Region::cap({0, 0, 1}, pi / 2), 0.5, eps, h);
    CHECK(sh.reports.size() == 4);
    CHECK(sh.extrapolated_energy == doctest::Approx(pi).epsilon(0.02));
    CHECK(sh.gap_decreasing);
    for (const auto& r : sh.reports) CHECK(r.energy >= r.lower_bound - r.lower_bound_tolerance);
    const AutocorrCurve c = oracle_cap_curve(pi / 3, 513);
    const GammaLimitSweep sc = gamma_limit_sweep(s2, Region::cap({0, 0, 1}, pi / 3), 0.5, eps, c);
    CHECK(sc.relative_gap < 0.03);
    CHECK(sc.gap_decreasing);
    CHECK_THROWS_AS(gamma_limit_sweep(s2, Region::full(), 1.0, eps, h), DomainError);
    CHECK_THROWS_AS(gamma_limit_sweep(s2, Region::full(), 0.5, std::vector<double>{0.02, 0.04}, h), DomainError);
    CHECK(extrapolate_first_order(0.04, 3.0, 0.02, 2.0) == doctest::Approx(1.0));
}

TEST_CASE("radius rescaling") {
    const Region hemi = Region::cap({0, 0, 1}, pi / 2);
    const AutocorrCurve c = autocorr_estimate(s2, hemi, 513, config(200000, 6));
    const RescaledEnergy one = rescaled_energy(1.0, 0.5, 0.08, s2, hemi, c);
    CHECK(one.energy == total_energy(s2, hemi, c, solve_kernel(s2, 0.08), 0.5).energy);
    const RescaledEnergy two = rescaled_energy(2.0, 0.5, 0.08, s2, hemi, c);
    CHECK(two.unit_eps == 0.04);
    CHECK(two.energy == 2.0 * total_energy(s2, hemi, c, solve_kernel(s2, 0.04), 0.5).energy);
    CHECK_THROWS_AS(rescaled_energy(0.0, 0.5, 0.08, s2, hemi, c), DomainError);
}
