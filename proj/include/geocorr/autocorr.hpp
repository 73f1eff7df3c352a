#pragma once

#include <geocorr/parallel.hpp>
#include <geocorr/region.hpp>
#include <geocorr/sphere.hpp>

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace geocorr {

/// Estimate of the autocorrelation c(r) = Vol(M) E[1(x) 1(exp_x(r w))] over the Liouville
/// measure, on the uniform grid r_k = k pi R / (M - 1).
///
/// Every Liouville draw is extended to `orbit_points` equally spaced points of its great
/// circle, spaced exactly one grid step apart, and all pairs along the orbit are counted. The
/// resulting empirical measure is invariant under the flow by whole grid steps, so the
/// complement relation, the pointwise identity 2(c(0) - c(r)) = G(r) and the reflection
/// symmetry hold exactly rather than in expectation.
struct AutocorrCurve {
    int n = 2;
    double radius = 1.0;
    double total_volume = 0.0;
    std::vector<double> r_grid;
    std::vector<double> values;
    std::vector<double> std_errors;
    /// Mean geodesic variation G(r) of the indicator, counted directly from the same orbits.
    std::vector<double> variation;
    std::vector<double> variation_std_errors;
    /// Curves from disjoint batches of orbits, for errors of derived quantities.
    std::vector<std::vector<double>> batch_values;
    std::int64_t samples = 0;  ///< Liouville points, orbits * orbit_points
    std::int64_t orbits = 0;
    int orbit_points = 0;
    std::uint64_t seed = 0;
    std::string region_label;

    double volume_estimate() const { return values.front(); }

    /// Standard error of a functional of the curve values, from its spread over batches.
    double batch_std_error(const std::function<double(std::span<const double>)>& functional) const;
};

constexpr int kAutocorrBatches = 32;
constexpr std::int64_t kDefaultOrbitChunk = 16;

/// `grid_points` >= 2 grid values on [0, pi R]; `config.samples` is rounded up to whole orbits.
/// `config.chunk_size` counts orbits per chunk.
AutocorrCurve autocorr_estimate(const SphereSpec& sphere, const Region& region, int grid_points,
                                const McConfig& config);

/// Linear interpolation of the curve at r in [0, pi R].
double interpolate_curve(const AutocorrCurve& curve, double r);

}  // namespace geocorr
