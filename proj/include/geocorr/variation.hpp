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

/// Function on the sphere with an optional exact Riemannian gradient norm.
struct ScalarField {
    std::function<double(std::span<const double>)> value;
    std::function<double(std::span<const double>)> gradient_norm;
    std::string label;

    /// f(x) = x_index (0-based), the height function when index = n.
    static ScalarField coordinate(int index);
    static ScalarField constant(double c);
    static ScalarField indicator(Region region);
};

struct Estimate {
    double value = 0.0;
    double std_error = 0.0;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

/// Mean geodesic variation G(r_l) on a list of radii from one shared sample set.
///
/// Every Liouville draw (x, w) is used with both w and -w, so G(-r) = G(r) holds exactly.
/// `covariance` is the row-major covariance matrix of the G estimates.
struct VariationProfile {
    std::vector<double> r;
    std::vector<double> G;
    std::vector<double> G_std_errors;
    std::vector<double> covariance;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
    std::string label;

    double quotient(std::size_t i) const { return G[i] / r[i]; }
    double quotient_std_error(std::size_t i) const { return G_std_errors[i] / std::abs(r[i]); }
    /// Standard error of sum_l a_l G_l.
    double linear_std_error(std::span<const double> a) const;
};

/// `config.chunk_size` counts Liouville draws per chunk.
VariationProfile variation_profile(const SphereSpec& sphere, const ScalarField& field,
                                   std::span<const double> radii, const McConfig& config);

Estimate geodesic_variation(const SphereSpec& sphere, const ScalarField& field, double r,
                            const McConfig& config);

/// G(r) / r; throws DomainError for r <= 0.
Estimate difference_quotient(const SphereSpec& sphere, const ScalarField& field, double r,
                             const McConfig& config);

struct LimitEstimate {
    double value = 0.0;
    double std_error = 0.0;
    int degree = 0;
    bool unstable = false;
    std::vector<double> r;
    std::vector<double> Q;
    std::vector<double> Q_std_errors;
    std::int64_t samples = 0;
    std::uint64_t seed = 0;
};

/// Extrapolates Q(r) = G(r)/r to r -> 0 by a weighted polynomial fit in r over a decreasing
/// positive sequence. `unstable` is set when some Q(r) exceeds the extrapolated value by more
/// than four standard errors.
LimitEstimate variation_limit_smooth(const SphereSpec& sphere, const ScalarField& field,
                                     std::span<const double> r_sequence, const McConfig& config,
                                     int degree = 2);

/// (1/s) int_0^s J(r) G(r) / r dr with Gauss-Legendre nodes in r on (0, s); equals the
/// double integral of |f(x) - f(y)| / d(x, y) against the radial mollifier of width s.
Estimate mollifier_variation(const SphereSpec& sphere, const ScalarField& field, double s,
                             const McConfig& config, int nodes = 16);

}  // namespace geocorr
