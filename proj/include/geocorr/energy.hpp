#pragma once

#include <geocorr/autocorr.hpp>
#include <geocorr/helmholtz.hpp>
#include <geocorr/region.hpp>
#include <geocorr/slope.hpp>

#include <optional>
#include <span>
#include <vector>

namespace geocorr {

struct EnergyOptions {
    FitConfig fit;
    /// Overrides the perimeter; otherwise the closed form is used when the region has one and
    /// the slope estimate otherwise.
    std::optional<double> perimeter;
};

/// E = Per - (gamma/eps) 2 sigma_{n-1} int K sin^{n-1} (c(0) - c), evaluated twice: directly,
/// and as (1 - gamma/gamma_eps) Per + 2 gamma int Phi (c' - c'(0)).
struct EnergyReport {
    double gamma = 0.0;
    double eps = 0.0;
    double gamma_eps = 0.0;
    double perimeter = 0.0;
    double perimeter_std_error = 0.0;
    bool perimeter_analytic = false;
    double nonlocal_term = 0.0;
    double nonlocal_std_error = 0.0;
    double energy = 0.0;
    double energy_std_error = 0.0;
    double lower_bound = 0.0;
    double error_term = 0.0;
    double error_term_std_error = 0.0;
    double slope_at_zero = 0.0;

    double decomposition_energy = 0.0;  ///< lower_bound + 2 gamma error_term
    double decomposition_gap = 0.0;     ///< energy - decomposition_energy
    double decomposition_tolerance = 0.0;
    double error_term_tolerance = 0.0;
    double lower_bound_tolerance = 0.0;
    double finite_difference_error = 0.0;
    bool consistent = false;
    bool supercritical = false;  ///< gamma >= 1

    /// Energy from each orbit batch of the curve, for errors of derived quantities.
    std::vector<double> batch_energies;
};

/// (gamma/eps) 2 sigma_{n-1} int_0^pi K sin^{n-1} (c(0) - c) dr with c linear between grid
/// points. Throws RefinementError when fewer than 8 grid points lie in [0, 5 eps].
double nonlocal_term(const AutocorrCurve& curve, const RadialKernel& kernel, double gamma);

/// Needs a unit-sphere curve of the same dimension as the kernel.
EnergyReport total_energy(const SphereSpec& sphere, const Region& region, const AutocorrCurve& curve,
                          const RadialKernel& kernel, double gamma, const EnergyOptions& options = {});

struct LimitEnergy {
    double value = 0.0;
    bool supercritical = false;
};

/// (1 - gamma) Per, flagged when gamma >= 1.
LimitEnergy limit_energy(double perimeter, double gamma);
/// Uses the closed-form perimeter; throws DomainError when the region has none.
LimitEnergy limit_energy(const SphereSpec& sphere, const Region& region, double gamma);

struct GammaLimitSweep {
    std::vector<EnergyReport> reports;
    double extrapolated_energy = 0.0;
    double extrapolated_std_error = 0.0;
    double limit_energy = 0.0;
    double relative_gap = 0.0;
    /// |energy - limit| shrinks along the sweep within four standard errors.
    bool gap_decreasing = true;
    bool unstable = false;
};

/// First-order extrapolation to eps = 0 from the last two points.
double extrapolate_first_order(double eps1, double value1, double eps2, double value2);

/// eps_list strictly decreasing, 0 <= gamma < 1.
GammaLimitSweep gamma_limit_sweep(const SphereSpec& sphere, const Region& region, double gamma,
                                  std::span<const double> eps_list, const AutocorrCurve& curve,
                                  const EnergyOptions& options = {}, const KernelTolerances& tol = {},
                                  int workers = 0);

struct RescaledEnergy {
    double R = 1.0;
    double eps = 0.0;
    double unit_eps = 0.0;
    double energy = 0.0;
    EnergyReport unit_report;
};

/// Energy on the sphere of radius R, defined as R^{n-1} E(eps/R) on the unit sphere. The
/// curve, region and perimeter all refer to the unit sphere.
RescaledEnergy rescaled_energy(double R, double gamma, double eps, const SphereSpec& unit_sphere,
                               const Region& region, const AutocorrCurve& unit_curve,
                               const EnergyOptions& options = {}, const KernelTolerances& tol = {});

}  // namespace geocorr
