#pragma once

#include <geocorr/sphere.hpp>

#include <functional>
#include <span>
#include <vector>

namespace geocorr {

struct KernelTolerances {
    double rel_tol = 1e-13;
    double abs_tol = 1e-13;
    int nodes_per_panel = 16;
    /// Width of the uniform panels in units of eps (capped at pi/16).
    double panel_width = 0.5;
    /// Innermost resolved radius in units of eps; the profile below it follows the local
    /// singular expansion.
    double inner_cutoff = 1e-6;
};

/// Fundamental solution of K - eps^2 Laplace K = delta on the unit S^n as a function of the
/// geodesic distance r, normalized to unit mass.
///
/// The profile is tabulated at Gauss-Legendre nodes of panels that are dyadic near r = 0 and
/// uniform further out, and interpolated barycentrically inside each panel. Below the innermost
/// panel it is A + B log r (n = 2) or A + B r^{2-n} (n >= 3).
class RadialKernel {
public:
    int n() const noexcept { return n_; }
    double eps() const noexcept { return eps_; }

    /// K(r) for 0 < r <= pi.
    double operator()(double r) const;
    /// K'(r) for 0 < r <= pi.
    double derivative(double r) const;

    /// int_0^r s^p K(s) sin^{n-1}(s) ds for p in {0, 1, 2} and 0 <= r <= pi.
    double cumulative(int p, double r) const;

    /// Phi(r) = (sigma_{n-1} / eps) int_r^pi K(s) sin^{n-1}(s) ds.
    double integrated(double r) const;
    /// int_0^r s^p Phi(s) ds for p in {0, 1}, by parts from cumulative().
    double integrated_cumulative(int p, double r) const;

    /// sigma_{n-1} int_0^pi g(r) K(r) sin^{n-1}(r) dr on the kernel's own quadrature.
    double integrate(const std::function<double(double)>& g) const;

    const std::vector<double>& nodes() const noexcept { return nodes_; }
    const std::vector<double>& weights() const noexcept { return weights_; }
    const std::vector<double>& values() const noexcept { return values_; }
    const std::vector<double>& panel_edges() const noexcept { return edges_; }
    double inner_cutoff() const noexcept { return edges_.front(); }
    /// |1 - mass| with the mass recomputed on a different rule from the interpolant.
    double normalization_residual() const noexcept { return normalization_residual_; }

private:
    friend RadialKernel solve_kernel(const SphereSpec&, double, const KernelTolerances&);

    std::size_t panel_of(double r) const;
    double interpolate(std::size_t panel, double r) const;
    double partial(int p, std::size_t panel, double r) const;
    double tail_value(double r) const;
    double tail_integral(int p, double r) const;

    int n_ = 2;
    double eps_ = 0.0;
    double sigma_ = 0.0;  // sigma_{n-1}
    int order_ = 16;
    std::vector<double> edges_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    std::vector<double> values_;
    std::vector<double> slopes_;
    std::vector<double> bary_;
    std::vector<double> cum_[3];  // cumulative integrals at panel left edges plus the total
    double tail_a_ = 0.0;
    double tail_b_ = 0.0;
    double normalization_residual_ = 0.0;
};

/// Integrates the radial equation eps^2 (K'' + (n-1) cot(r) K') = K from the regular point
/// r = pi towards r = 0 and normalizes the mass. Throws SolverError on step failure, a
/// non-finite normalization, or when the profile would underflow (eps too small).
RadialKernel solve_kernel(const SphereSpec& sphere, double eps, const KernelTolerances& tol = {});

/// sigma_{n-1} int_0^pi (r/eps)^p K(r) sin^{n-1}(r) dr, p in {0, 1, 2}.
double kernel_moment(const RadialKernel& kernel, int p);

struct KernelMoments {
    int n = 2;
    double eps = 0.0;
    double M0 = 0.0;
    double M1_scaled = 0.0;
    double M2_scaled = 0.0;
    double gamma_eps = 0.0;
};
KernelMoments kernel_moments(const RadialKernel& kernel);

/// 1 / (k_n M1_scaled); throws SolverError if the first moment is not positive.
double gamma_eps(const RadialKernel& kernel);

struct GammaEpsSweep {
    std::vector<KernelMoments> rows;
    /// Richardson limit of gamma_eps from the last rows; order estimated from the last three.
    double extrapolated = 0.0;
    double order = 1.0;
    bool monotone = true;  ///< |gamma_eps - 1| non-increasing up to `slack`
    double slack = 0.0;
};

/// Kernels for a strictly decreasing eps list, solved concurrently.
GammaEpsSweep gamma_eps_sweep(const SphereSpec& sphere, std::span<const double> eps_list,
                              const KernelTolerances& tol = {}, int workers = 0);

/// sigma_{n-1} int_delta^pi (r/eps) K(r) sin^{n-1}(r) dr: first-moment mass outside distance delta.
double kernel_moment_outside(const RadialKernel& kernel, double delta);

struct IntegratedKernel {
    double eps = 0.0;
    std::vector<double> r;    ///< 0, the kernel nodes, pi
    std::vector<double> phi;  ///< Phi at r
    double phi_at_zero = 0.0;
    double phi_at_pi = 0.0;
    /// int_0^pi Phi dr by quadrature of the sampled Phi (not by parts).
    double L1_norm = 0.0;
};
IntegratedKernel integrated_kernel(const RadialKernel& kernel);

}  // namespace geocorr
