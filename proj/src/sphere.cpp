#include <geocorr/errors.hpp>
#include <geocorr/sphere.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geocorr {

namespace {

constexpr double kPi = std::numbers::pi;

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

}  // namespace

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

SphereSpec::SphereSpec(int dim, double radius) : n(dim), R(radius) {
    if (dim < 2) throw DomainError("sphere dimension must be at least 2, got " + std::to_string(dim));
    if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("sphere radius must be positive");
}

double SphereSpec::volume() const { return std::pow(R, n) * sphere_surface_volume(n); }

UnitTangent::UnitTangent(Point x, Point w) {
    if (x.size() != w.size() || x.size() < 3)
        throw DomainError("base point and direction must share an ambient dimension of at least 3");
    const double nx = norm(x);
    if (std::abs(nx - 1.0) > 1e-6) throw DomainError("base point is not on the unit sphere");
    for (double& c : x) c /= nx;
    const double along = dot(x, w);
    if (std::abs(along) > 1e-6) throw DomainError("direction is not tangent at the base point");
    for (std::size_t i = 0; i < w.size(); ++i) w[i] -= along * x[i];
    const double nw = norm(w);
    if (std::abs(nw - 1.0) > 1e-6) throw DomainError("direction is not a unit vector");
    for (double& c : w) c /= nw;
    x_ = std::move(x);
    w_ = std::move(w);
}

UnitTangent UnitTangent::from_orthonormal(Point x, Point w) {
    UnitTangent t;
    t.x_ = std::move(x);
    t.w_ = std::move(w);
    return t;
}

double sphere_surface_volume(int k) {
    if (k < 0) throw DomainError("sphere dimension must be non-negative");
    const double h = 0.5 * (k + 1);
    return 2.0 * std::pow(kPi, h) / std::tgamma(h);
}

double sphere_volume_ratio(int n) {
    if (n < 2) throw DomainError("volume ratio needs n >= 2");
    return 2.0 / (n - 1) * sphere_surface_volume(n - 2) / sphere_surface_volume(n - 1);
}

VolumeRatioForms sphere_volume_ratio_forms(int n) {
    if (n < 2) throw DomainError("volume ratio needs n >= 2");
    const double s_nm2 = sphere_surface_volume(n - 2);
    const double s_nm1 = sphere_surface_volume(n - 1);
    const double s_n = sphere_surface_volume(n);
    VolumeRatioForms f{};
    f.recursion = 2.0 / (n - 1) * s_nm2 / s_nm1;
    f.pi_ratio = s_n / (kPi * s_nm1);
    f.gamma = 2.0 / s_nm1 * std::pow(kPi, 0.5 * (n - 1)) / std::tgamma(0.5 * (n + 1));
    return f;
}

Point exp_map(const SphereSpec& sphere, const UnitTangent& theta, double r) {
    const double t = r / sphere.R;
    const double c = std::cos(t);
    const double s = std::sin(t);
    const Point& x = theta.x();
    const Point& w = theta.w();
    Point out(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = c * x[i] + s * w[i];
    return out;
}

UnitTangent geodesic_flow(const SphereSpec& sphere, const UnitTangent& theta, double r) {
    const double t = r / sphere.R;
    const double c = std::cos(t);
    const double s = std::sin(t);
    const Point& x = theta.x();
    const Point& w = theta.w();
    Point nx(x.size());
    Point nw(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        nx[i] = c * x[i] + s * w[i];
        nw[i] = -s * x[i] + c * w[i];
    }
    return UnitTangent::from_orthonormal(std::move(nx), std::move(nw));
}

double geodesic_distance(const SphereSpec& sphere, std::span<const double> x, std::span<const double> y) {
    return sphere.R * std::acos(std::clamp(dot(x, y), -1.0, 1.0));
}

double jacobian_exp(int n, double r) {
    if (!(r > 0.0) || !(r < kPi)) throw DomainError("exponential-map Jacobian needs 0 < r < pi");
    return std::pow(std::sin(r) / r, n - 1);
}

void draw_uniform_point(int ambient, RngStream& rng, double* x) {
    for (;;) {
        double s = 0.0;
        for (int i = 0; i < ambient; ++i) {
            x[i] = rng.normal();
            s += x[i] * x[i];
        }
        const double nrm = std::sqrt(s);
        if (nrm < 1e-12) continue;
        for (int i = 0; i < ambient; ++i) x[i] /= nrm;
        return;
    }
}

void draw_liouville(int ambient, RngStream& rng, double* x, double* w) {
    draw_uniform_point(ambient, rng, x);
    for (;;) {
        double along = 0.0;
        for (int i = 0; i < ambient; ++i) {
            w[i] = rng.normal();
            along += w[i] * x[i];
        }
        double s = 0.0;
        for (int i = 0; i < ambient; ++i) {
            w[i] -= along * x[i];
            s += w[i] * w[i];
        }
        const double nrm = std::sqrt(s);
        if (nrm < 1e-12) continue;
        for (int i = 0; i < ambient; ++i) w[i] /= nrm;
        return;
    }
}

UnitTangent sample_liouville(const SphereSpec& sphere, RngStream& rng) {
    const int m = sphere.ambient_dim();
    Point x(static_cast<std::size_t>(m));
    Point w(static_cast<std::size_t>(m));
    draw_liouville(m, rng, x.data(), w.data());
    return UnitTangent::from_orthonormal(std::move(x), std::move(w));
}

double radial_integral(const SphereSpec& sphere, const std::function<double(double)>& f,
                       const QuadratureConfig& quad) {
    const int n = sphere.n;
    const double R = sphere.R;
    // Substituting r = R t keeps the quadrature on (0, pi).
    auto integrand = [&](double t) { return f(R * t) * std::pow(std::sin(t), n - 1); };
    const QuadratureResult res = integrate(integrand, 0.0, kPi, quad);
    return sphere_surface_volume(n - 1) * std::pow(R, n) * res.value;
}

double radial_laplacian(int n, const std::function<double(double)>& f, double r, double h) {
    const double fp = f(r + h);
    const double fm = f(r - h);
    const double f0 = f(r);
    const double second = (fp - 2.0 * f0 + fm) / (h * h);
    const double first = (fp - fm) / (2.0 * h);
    return second + (n - 1) * first / std::tan(r);
}

}  // namespace geocorr
