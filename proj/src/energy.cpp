#include <geocorr/energy.hpp>
#include <geocorr/errors.hpp>
#include <geocorr/fit.hpp>
#include <geocorr/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace geocorr {

namespace {

constexpr double kPi = std::numbers::pi;

// Kernel integrals tabulated on the curve grid.
class EnergyTables {
public:
    EnergyTables(const AutocorrCurve& curve, const RadialKernel& kernel) : r_(curve.r_grid), eps_(kernel.eps()) {
        if (curve.n != kernel.n()) throw DomainError("curve and kernel dimensions differ");
        if (curve.radius != 1.0) throw DomainError("energies are evaluated on the unit sphere");
        if (r_.size() < 3 || r_.front() != 0.0 || std::abs(r_.back() - kPi) > 1e-12)
            throw DomainError("autocorrelation grid must span [0, pi]");
        const auto near = std::count_if(r_.begin(), r_.end(), [&](double r) { return r <= 5.0 * eps_; });
        if (near < 8)
            throw RefinementError("autocorrelation grid has " + std::to_string(near) +
                                  " points in [0, 5 eps] for eps = " + std::to_string(eps_) +
                                  "; at least 8 are needed (increase the grid size)");
        sigma_ = sphere_surface_volume(kernel.n() - 1);
        const std::size_t m = r_.size();
        c0_.resize(m);
        c1_.resize(m);
        j0_.resize(m);
        j1_.resize(m);
        for (std::size_t k = 0; k < m; ++k) {
            c0_[k] = kernel.cumulative(0, r_[k]);
            c1_[k] = kernel.cumulative(1, r_[k]);
            j0_[k] = kernel.integrated_cumulative(0, r_[k]);
            j1_[k] = kernel.integrated_cumulative(1, r_[k]);
        }
    }

    // 2 sigma / eps int K sin^{n-1} (c(0) - c), without the gamma factor.
    double nonlocal_unit(std::span<const double> c) const {
        double s = 0.0;
        for (std::size_t i = 0; i + 1 < r_.size(); ++i) {
            const double slope = (c[i + 1] - c[i]) / (r_[i + 1] - r_[i]);
            const double alpha = c[0] - c[i] + slope * r_[i];
            s += alpha * (c0_[i + 1] - c0_[i]) - slope * (c1_[i + 1] - c1_[i]);
        }
        return 2.0 * sigma_ / eps_ * s;
    }

    // int_0^pi Phi (c' - slope0) with c' from three-point differences on the sub-grid `idx`
    // and linear in between.
    double error_term(std::span<const double> c, double slope0, const std::vector<std::size_t>& idx) const {
        const std::size_t m = idx.size();
        std::vector<double> d(m);
        for (std::size_t k = 0; k < m; ++k) {
            const std::size_t a = k == 0 ? 0 : (k + 1 == m ? m - 3 : k - 1);
            d[k] = lagrange_derivative(c, idx[a], idx[a + 1], idx[a + 2], r_[idx[k]]);
        }
        double s = 0.0;
        for (std::size_t k = 0; k + 1 < m; ++k) {
            const std::size_t lo = idx[k];
            const std::size_t hi = idx[k + 1];
            const double beta = (d[k + 1] - d[k]) / (r_[hi] - r_[lo]);
            const double alpha = d[k] - slope0 - beta * r_[lo];
            s += alpha * (j0_[hi] - j0_[lo]) + beta * (j1_[hi] - j1_[lo]);
        }
        return s;
    }

    std::vector<std::size_t> fine() const {
        std::vector<std::size_t> idx(r_.size());
        for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
        return idx;
    }

    std::vector<std::size_t> coarse() const {
        std::vector<std::size_t> idx;
        for (std::size_t k = 0; k < r_.size(); k += 2) idx.push_back(k);
        if (idx.back() != r_.size() - 1) idx.push_back(r_.size() - 1);
        return idx;
    }

    double phi_l1() const { return j0_.back(); }

private:
    double lagrange_derivative(std::span<const double> c, std::size_t i0, std::size_t i1, std::size_t i2,
                               double t) const {
        const double x0 = r_[i0];
        const double x1 = r_[i1];
        const double x2 = r_[i2];
        const double l0 = ((t - x1) + (t - x2)) / ((x0 - x1) * (x0 - x2));
        const double l1 = ((t - x0) + (t - x2)) / ((x1 - x0) * (x1 - x2));
        const double l2 = ((t - x0) + (t - x1)) / ((x2 - x0) * (x2 - x1));
        return c[i0] * l0 + c[i1] * l1 + c[i2] * l2;
    }

    const std::vector<double>& r_;
    double eps_;
    double sigma_ = 0.0;
    std::vector<double> c0_;
    std::vector<double> c1_;
    std::vector<double> j0_;
    std::vector<double> j1_;
};

double apply_functional(const std::vector<double>& functional, std::span<const double> values) {
    double s = 0.0;
    for (std::size_t k = 0; k < functional.size(); ++k) s += functional[k] * values[k];
    return s;
}

}  // namespace

double nonlocal_term(const AutocorrCurve& curve, const RadialKernel& kernel, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be non-negative");
    const EnergyTables tables(curve, kernel);
    return gamma * tables.nonlocal_unit(curve.values);
}

EnergyReport total_energy(const SphereSpec& sphere, const Region& region, const AutocorrCurve& curve,
                          const RadialKernel& kernel, double gamma, const EnergyOptions& options) {
    if (!(gamma >= 0.0) || !std::isfinite(gamma)) throw DomainError("gamma must be non-negative");
    if (sphere.R != 1.0) throw DomainError("energies are evaluated on the unit sphere");
    if (sphere.n != curve.n) throw DomainError("sphere and curve dimensions differ");
    const EnergyTables tables(curve, kernel);
    const SlopeReport slope = perimeter_from_curve(curve, sphere, options.fit);

    EnergyReport rep;
    rep.gamma = gamma;
    rep.eps = kernel.eps();
    rep.gamma_eps = gamma_eps(kernel);
    rep.supercritical = gamma >= 1.0;
    if (options.perimeter) {
        rep.perimeter = *options.perimeter;
        rep.perimeter_analytic = true;
    } else if (auto per = region.analytic_perimeter(sphere)) {
        rep.perimeter = *per;
        rep.perimeter_analytic = true;
    } else {
        rep.perimeter = slope.perimeter;
        rep.perimeter_std_error = slope.perimeter_std_error;
    }
    if (!std::isfinite(rep.perimeter)) throw DomainError("no perimeter available for the region");

    const auto fine = tables.fine();
    const auto coarse = tables.coarse();
    const double ratio = gamma / rep.gamma_eps;

    // Everything below is a function of the curve values, so batch replicates give the errors.
    struct Parts {
        double nonlocal, error, energy, gap;
    };
    auto evaluate = [&](std::span<const double> c) {
        Parts p{};
        const double s0 = std::min(apply_functional(slope.functional, c), 0.0);
        p.nonlocal = gamma * tables.nonlocal_unit(c);
        p.error = tables.error_term(c, s0, fine);
        const double per = rep.perimeter_analytic ? rep.perimeter : -2.0 * s0 / sphere_volume_ratio(sphere.n);
        p.energy = per - p.nonlocal;
        p.gap = p.energy - ((1.0 - ratio) * per + 2.0 * gamma * p.error);
        return p;
    };

    const Parts whole = evaluate(curve.values);
    rep.slope_at_zero = slope.slope;
    rep.nonlocal_term = whole.nonlocal;
    rep.energy = whole.energy;
    rep.lower_bound = (1.0 - ratio) * rep.perimeter;
    rep.error_term = whole.error;
    rep.decomposition_energy = rep.lower_bound + 2.0 * gamma * rep.error_term;
    rep.decomposition_gap = rep.energy - rep.decomposition_energy;

    std::vector<double> nl;
    std::vector<double> err;
    std::vector<double> gap;
    for (const auto& b : curve.batch_values) {
        const Parts p = evaluate(b);
        nl.push_back(p.nonlocal);
        err.push_back(p.error);
        gap.push_back(p.gap);
        rep.batch_energies.push_back(p.energy);
    }
    rep.nonlocal_std_error = standard_error_of_mean(nl);
    rep.error_term_std_error = standard_error_of_mean(err);
    rep.energy_std_error = std::hypot(rep.nonlocal_std_error, rep.perimeter_std_error);

    const double err_coarse = tables.error_term(curve.values, slope.slope, coarse);
    rep.finite_difference_error = std::abs(rep.error_term - err_coarse) / 3.0;
    const double window_bias = tables.phi_l1() * slope.slope_systematic;
    const double roundoff = 1e-9 * std::max(1.0, std::abs(rep.perimeter));

    rep.decomposition_tolerance = 4.0 * standard_error_of_mean(gap) +
                                  2.0 * gamma * (window_bias + rep.finite_difference_error) + roundoff;
    rep.error_term_tolerance = 4.0 * rep.error_term_std_error + window_bias + rep.finite_difference_error + roundoff;
    rep.lower_bound_tolerance = 4.0 * rep.energy_std_error + roundoff;
    rep.consistent = std::abs(rep.decomposition_gap) <= rep.decomposition_tolerance &&
                     rep.error_term >= -rep.error_term_tolerance &&
                     rep.energy - rep.lower_bound >= -rep.lower_bound_tolerance;
    return rep;
}

LimitEnergy limit_energy(double perimeter, double gamma) {
    if (!(gamma >= 0.0)) throw DomainError("gamma must be non-negative");
    return {(1.0 - gamma) * perimeter, gamma >= 1.0};
}

LimitEnergy limit_energy(const SphereSpec& sphere, const Region& region, double gamma) {
    const auto per = region.analytic_perimeter(sphere);
    if (!per) throw DomainError("region has no closed-form perimeter; pass an estimate");
    return limit_energy(*per, gamma);
}

double extrapolate_first_order(double eps1, double value1, double eps2, double value2) {
    return value2 + (value2 - value1) * eps2 / (eps1 - eps2);
}

GammaLimitSweep gamma_limit_sweep(const SphereSpec& sphere, const Region& region, double gamma,
                                  std::span<const double> eps_list, const AutocorrCurve& curve,
                                  const EnergyOptions& options, const KernelTolerances& tol, int workers) {
    if (!(gamma >= 0.0) || !(gamma < 1.0)) throw DomainError("the sweep needs 0 <= gamma < 1");
    if (eps_list.size() < 2) throw DomainError("the sweep needs at least two eps values");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw DomainError("eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("eps values must be strictly decreasing");
    }

    GammaLimitSweep sweep;
    sweep.reports = run_chunks(static_cast<std::int64_t>(eps_list.size()), workers, [&](std::int64_t i) {
        const RadialKernel kernel = solve_kernel(sphere, eps_list[static_cast<std::size_t>(i)], tol);
        return total_energy(sphere, region, curve, kernel, gamma, options);
    });

    const EnergyReport& a = sweep.reports[sweep.reports.size() - 2];
    const EnergyReport& b = sweep.reports.back();
    sweep.extrapolated_energy = extrapolate_first_order(a.eps, a.energy, b.eps, b.energy);
    std::vector<double> ext;
    for (std::size_t k = 0; k < std::min(a.batch_energies.size(), b.batch_energies.size()); ++k)
        ext.push_back(extrapolate_first_order(a.eps, a.batch_energies[k], b.eps, b.batch_energies[k]));
    sweep.extrapolated_std_error = std::hypot(standard_error_of_mean(ext), b.perimeter_std_error);

    const double per = b.perimeter;
    sweep.limit_energy = limit_energy(per, gamma).value;
    sweep.relative_gap = std::abs(sweep.extrapolated_energy - sweep.limit_energy) /
                         std::max(std::abs(sweep.limit_energy), 1e-300);

    for (std::size_t i = 1; i < sweep.reports.size(); ++i) {
        const EnergyReport& prev = sweep.reports[i - 1];
        const EnergyReport& cur = sweep.reports[i];
        const double noise = 4.0 * std::hypot(prev.energy_std_error, cur.energy_std_error) +
                             1e-9 * std::max(1.0, std::abs(per));
        if (std::abs(cur.energy - sweep.limit_energy) > std::abs(prev.energy - sweep.limit_energy) + noise)
            sweep.gap_decreasing = false;
    }
    sweep.unstable = !sweep.gap_decreasing;
    return sweep;
}

RescaledEnergy rescaled_energy(double R, double gamma, double eps, const SphereSpec& unit_sphere,
                               const Region& region, const AutocorrCurve& unit_curve,
                               const EnergyOptions& options, const KernelTolerances& tol) {
    if (!(R > 0.0) || !std::isfinite(R)) throw DomainError("radius must be positive");
    if (!(eps > 0.0)) throw DomainError("eps must be positive");
    RescaledEnergy out;
    out.R = R;
    out.eps = eps;
    out.unit_eps = eps / R;
    const RadialKernel kernel = solve_kernel(unit_sphere, out.unit_eps, tol);
    out.unit_report = total_energy(unit_sphere, region, unit_curve, kernel, gamma, options);
    out.energy = std::pow(R, unit_sphere.n - 1) * out.unit_report.energy;
    return out;
}

}  // namespace geocorr
