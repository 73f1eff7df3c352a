#pragma once

#include <geocorr/quadrature.hpp>
#include <geocorr/rng.hpp>

#include <functional>
#include <span>
#include <vector>

namespace geocorr {

/// A point of S^n stored as a vector in R^{n+1}.
using Point = std::vector<double>;

/// Round sphere S^n of radius R embedded in R^{n+1}.
struct SphereSpec {
    int n = 2;
    double R = 1.0;

    SphereSpec() = default;
    /// Throws DomainError unless n >= 2 and R > 0.
    explicit SphereSpec(int dim, double radius = 1.0);

    int ambient_dim() const noexcept { return n + 1; }
    double volume() const;
};

/// Point of the unit tangent bundle: base point x and unit direction w with x . w = 0.
class UnitTangent {
public:
    /// Renormalizes both vectors and removes the normal component of w. Rejects inputs that are
    /// off the sphere or off the fiber by more than 1e-6.
    UnitTangent(Point x, Point w);

    /// Trusted constructor for vectors that are orthonormal up to rounding.
    static UnitTangent from_orthonormal(Point x, Point w);

    const Point& x() const noexcept { return x_; }
    const Point& w() const noexcept { return w_; }
    int ambient_dim() const noexcept { return static_cast<int>(x_.size()); }

private:
    UnitTangent() = default;
    Point x_;
    Point w_;
};

/// Surface volume sigma_k = 2 pi^{(k+1)/2} / Gamma((k+1)/2) of the unit k-sphere.
double sphere_surface_volume(int k);

/// k_n = (2/(n-1)) sigma_{n-2} / sigma_{n-1}.
double sphere_volume_ratio(int n);

/// k_n evaluated through three independent closed forms.
struct VolumeRatioForms {
    double recursion;  ///< (2/(n-1)) sigma_{n-2} / sigma_{n-1}
    double pi_ratio;   ///< sigma_n / (pi sigma_{n-1})
    double gamma;      ///< (2/sigma_{n-1}) pi^{(n-1)/2} / Gamma((n+1)/2)
};
VolumeRatioForms sphere_volume_ratio_forms(int n);

/// Point reached after geodesic length r: cos(r/R) x + sin(r/R) w (unit vector).
Point exp_map(const SphereSpec& sphere, const UnitTangent& theta, double r);

/// Geodesic flow on the unit tangent bundle.
UnitTangent geodesic_flow(const SphereSpec& sphere, const UnitTangent& theta, double r);

/// R arccos(x . y) with the dot product clamped to [-1, 1].
double geodesic_distance(const SphereSpec& sphere, std::span<const double> x, std::span<const double> y);

/// Jacobian (sin r / r)^{n-1} of the exponential map on the unit sphere, 0 < r < pi.
double jacobian_exp(int n, double r);

/// Uniform point on the unit sphere in R^{ambient}, written to x.
void draw_uniform_point(int ambient, RngStream& rng, double* x);

/// Draw from the normalized Liouville measure written to (x, w): x uniform on the sphere,
/// w uniform on the unit fiber at x.
void draw_liouville(int ambient, RngStream& rng, double* x, double* w);

UnitTangent sample_liouville(const SphereSpec& sphere, RngStream& rng);

/// sigma_{n-1} int_0^{pi R} f(r) (R sin(r/R))^{n-1} dr: integral over S^n_R of a function of
/// the geodesic distance to a fixed point.
double radial_integral(const SphereSpec& sphere, const std::function<double(double)>& f,
                       const QuadratureConfig& quad = {});

/// Radial part of the Laplace-Beltrami operator on the unit S^n, f'' + (n-1) cot(r) f',
/// by central differences with step h.
double radial_laplacian(int n, const std::function<double(double)>& f, double r, double h = 1e-3);

double dot(std::span<const double> a, std::span<const double> b);

}  // namespace geocorr
