#include <geocorr/errors.hpp>
#include <geocorr/fit.hpp>
#include <geocorr/slope.hpp>

#include <algorithm>
#include <cmath>

namespace geocorr {

namespace {

struct WindowFit {
    std::vector<double> functional;  // slope as a linear functional of all curve values
    double slope = 0.0;
    double curvature_response = 0.0;  // slope the fit reports for the data r^2
    double residual = 0.0;
    int points = 0;
};

WindowFit fit_window(const AutocorrCurve& curve, double lo, double hi) {
    const double pad = 1e-12 * std::max(1.0, hi);
    std::vector<std::size_t> idx;
    for (std::size_t k = 0; k < curve.r_grid.size(); ++k)
        if (curve.r_grid[k] >= lo - pad && curve.r_grid[k] <= hi + pad) idx.push_back(k);
    WindowFit out;
    out.points = static_cast<int>(idx.size());
    if (idx.size() < 4) return out;

    std::vector<double> x;
    std::vector<double> y;
    std::vector<double> se;
    for (std::size_t k : idx) {
        x.push_back(curve.r_grid[k]);
        y.push_back(curve.values[k]);
        se.push_back(curve.std_errors[k]);
    }
    const double largest = *std::max_element(se.begin(), se.end());
    std::vector<double> weights(idx.size(), 1.0);
    if (largest > 0.0) {
        // Points with vanishing sampled variance get the weight of a small floor instead.
        const double floor = std::max(largest * 1e-2, 1e-300);
        for (std::size_t i = 0; i < se.size(); ++i) weights[i] = 1.0 / std::pow(std::max(se[i], floor), 2);
    }
    double x0 = 0.0;
    for (double v : x) x0 += v;
    x0 /= static_cast<double>(x.size());
    const PolyFit fit = weighted_polyfit(x, y, weights, 1, x0);

    out.functional.assign(curve.r_grid.size(), 0.0);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        out.functional[idx[i]] = fit.influence[1][i];
        out.curvature_response += fit.influence[1][i] * x[i] * x[i];
    }
    out.slope = fit.coefficients[1];
    out.residual = fit.dof > 0 ? std::sqrt(fit.chi2 / fit.dof) : 0.0;
    return out;
}

double apply_functional(const std::vector<double>& functional, std::span<const double> values) {
    double s = 0.0;
    for (std::size_t k = 0; k < functional.size(); ++k) s += functional[k] * values[k];
    return s;
}

}  // namespace

SlopeReport perimeter_from_curve(const AutocorrCurve& curve, const SphereSpec& sphere, const FitConfig& config) {
    if (curve.n != sphere.n) throw DomainError("curve and sphere dimensions differ");
    if (!(config.r_min >= 0.0) || !(config.r_max > config.r_min))
        throw DomainError("fit window must satisfy 0 <= r_min < r_max");

    const WindowFit full = fit_window(curve, config.r_min, config.r_max);
    if (full.points < 4)
        throw DomainError("fit window [" + std::to_string(config.r_min) + ", " + std::to_string(config.r_max) +
                          "] holds fewer than 4 grid points");

    SlopeReport rep;
    rep.r_min = config.r_min;
    rep.r_max = config.r_max;
    rep.residual = full.residual;
    rep.window_points = full.points;
    rep.samples = curve.samples;
    rep.seed = curve.seed;
    rep.functional = full.functional;

    if (config.richardson) {
        const WindowFit half = fit_window(curve, config.r_min, 0.5 * config.r_max);
        const double denom = full.curvature_response - half.curvature_response;
        if (half.points >= 4 && std::abs(denom) > 1e-14 * std::abs(full.curvature_response)) {
            // Both fits see c'(0) + q * response for a quadratic term q r^2; eliminate q.
            const double a = -half.curvature_response / denom;
            const double b = full.curvature_response / denom;
            for (std::size_t k = 0; k < rep.functional.size(); ++k)
                rep.functional[k] = a * full.functional[k] + b * half.functional[k];
            rep.extrapolation_order = 1;
        }
    }

    rep.raw_slope = apply_functional(rep.functional, curve.values);
    rep.slope_systematic = rep.extrapolation_order > 0 ? std::abs(rep.raw_slope - full.slope) : 0.0;
    rep.slope_std_error = curve.batch_std_error([&](std::span<const double> v) { return apply_functional(rep.functional, v); });
    rep.positive_slope = rep.raw_slope > 4.0 * rep.slope_std_error + 1e-12 * std::abs(curve.values.front());
    rep.slope = std::min(rep.raw_slope, 0.0);
    const double k = sphere_volume_ratio(sphere.n);
    rep.perimeter = -2.0 * rep.slope / k;
    rep.perimeter_std_error = 2.0 * rep.slope_std_error / k;
    return rep;
}

}  // namespace geocorr
