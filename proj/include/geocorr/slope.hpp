#pragma once

#include <geocorr/autocorr.hpp>
#include <geocorr/sphere.hpp>

#include <cstdint>
#include <vector>

namespace geocorr {

struct FitConfig {
    double r_min = 0.02;
    double r_max = 0.2;
    /// Combine the fits on [r_min, r_max] and [r_min, r_max / 2] to cancel the curvature term.
    bool richardson = true;
};

/// Slope of the autocorrelation at r = 0+ and the perimeter it implies, Per = -2 c'(0) / k_n.
struct SlopeReport {
    double slope = 0.0;  ///< after clamping to <= 0
    double raw_slope = 0.0;
    double slope_std_error = 0.0;
    /// |extrapolated slope - full-window slope|; a bound on the remaining window bias.
    double slope_systematic = 0.0;
    double perimeter = 0.0;
    double perimeter_std_error = 0.0;
    double r_min = 0.0;
    double r_max = 0.0;
    double residual = 0.0;  ///< sqrt(chi^2 / dof) of the full-window fit
    int extrapolation_order = 0;
    int window_points = 0;
    bool positive_slope = false;  ///< raw slope above zero by more than four standard errors
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    /// raw_slope = sum_k functional[k] * curve.values[k].
    std::vector<double> functional;
};

/// Weighted linear fit of c on the window (weights 1 / std_error^2) with an optional Richardson
/// step. Throws DomainError when fewer than four grid points fall in the window. The Richardson
/// step is skipped (order 0) when the halved window has fewer than four points.
SlopeReport perimeter_from_curve(const AutocorrCurve& curve, const SphereSpec& sphere,
                                 const FitConfig& config = {});

}  // namespace geocorr
