#include <geocorr/autocorr.hpp>
#include <geocorr/errors.hpp>
#include <geocorr/region.hpp>
#include <geocorr/slope.hpp>

#include <doctest.h>

#include "oracles/closed_forms.hpp"

#include <cmath>
#include <numbers>

using namespace geocorr;
namespace orc = geocorr::oracle;

namespace {
constexpr double pi = std::numbers::pi;

// Noise-free curve of a polar cap on S^2 from the quadrature oracle.
AutocorrCurve oracle_cap_curve(double a, int grid) {
    AutocorrCurve c;
    c.n = 2;
    c.total_volume = 4 * pi;
    for (int k = 0; k < grid; ++k) {
        const double r = pi * k / (grid - 1);
        c.r_grid.push_back(r);
        c.values.push_back(orc::cap_autocorrelation_s2(a, r));
        c.std_errors.push_back(0.0);
    }
    return c;
}

McConfig config(std::int64_t samples, std::uint64_t seed) {
    McConfig c;
    c.samples = samples;
    c.seed = seed;
    return c;
}
}  // namespace

TEST_CASE("exact cap curve: the extrapolated slope removes the curvature bias") {
    const SphereSpec s2(2);
    const AutocorrCurve c = oracle_cap_curve(pi / 3, 513);
    const SlopeReport with = perimeter_from_curve(c, s2);
    FitConfig plain;
    plain.richardson = false;
    const SlopeReport without = perimeter_from_curve(c, s2, plain);
    const double per = cap_perimeter(s2, pi / 3);
    CHECK(with.extrapolation_order == 1);
    CHECK(without.extrapolation_order == 0);
    CHECK(with.perimeter == doctest::Approx(per).epsilon(2e-3));
    CHECK(std::abs(with.perimeter - per) < std::abs(without.perimeter - per));
    CHECK(with.slope_std_error == 0.0);
    CHECK_FALSE(with.positive_slope);
}

TEST_CASE("sampled hemisphere and cap perimeters") {
    const SphereSpec s2(2);
    const AutocorrCurve h = autocorr_estimate(s2, Region::cap({0, 0, 1}, pi / 2), 513, config(1000000, 1));
    const SlopeReport sh = perimeter_from_curve(h, s2);
    CHECK(sh.perimeter == doctest::Approx(2 * pi).epsilon(1e-9));
    const AutocorrCurve c = autocorr_estimate(s2, Region::cap({0, 0, 1}, pi / 3), 513, config(1000000, 1));
    const SlopeReport sc = perimeter_from_curve(c, s2);
    CHECK(std::abs(sc.perimeter - pi * std::sqrt(3.0)) < 4.0 * sc.perimeter_std_error + sc.slope_systematic);
    CHECK(sc.perimeter == doctest::Approx(pi * std::sqrt(3.0)).epsilon(0.02));
    CHECK(sc.window_points > 20);
    CHECK(sc.samples == c.samples);
}

TEST_CASE("constant curves give zero slope without a positive flag") {
    const SphereSpec s3(3);
    const AutocorrCurve f = autocorr_estimate(s3, Region::full(), 257, config(1000, 1));
    const SlopeReport s = perimeter_from_curve(f, s3);
    CHECK(std::abs(s.raw_slope) < 1e-10);
    CHECK(s.slope <= 0.0);
    CHECK_FALSE(s.positive_slope);
    CHECK(std::abs(s.perimeter) < 1e-9);
}

TEST_CASE("fit window validation") {
    const SphereSpec s2(2);
    const AutocorrCurve c = oracle_cap_curve(1.0, 33);
    FitConfig narrow;
    narrow.r_min = 0.02;
    narrow.r_max = 0.2;  // two grid points at this resolution
    CHECK_THROWS_AS(perimeter_from_curve(c, s2, narrow), DomainError);
    FitConfig backwards;
    backwards.r_min = 0.3;
    backwards.r_max = 0.1;
    CHECK_THROWS_AS(perimeter_from_curve(c, s2, backwards), DomainError);
    CHECK_THROWS_AS(perimeter_from_curve(c, SphereSpec(3)), DomainError);
}
