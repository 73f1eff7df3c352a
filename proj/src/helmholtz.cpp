#include <geocorr/errors.hpp>
#include <geocorr/helmholtz.hpp>
#include <geocorr/parallel.hpp>
#include <geocorr/quadrature.hpp>

#include <boost/numeric/odeint.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <limits>
#include <string>
#include <utility>

namespace geocorr {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kHalfPi = 0.5 * std::numbers::pi;

using State = std::array<double, 2>;

// State (log y, y'/y) for y'' + (n-1) cot(t) y' = y / eps^2. The same equation holds in
// r and in s = pi - r.
struct Riccati {
    int n;
    double inv_eps2;
    void operator()(const State& y, State& dy, double t) const {
        dy[0] = y[1];
        dy[1] = inv_eps2 - (n - 1) * (std::cos(t) / std::sin(t)) * y[1] - y[1] * y[1];
    }
};

struct Sample {
    double log_value;
    double log_slope;  // d log K / dr
};

void run_phase(const Riccati& sys, State state, const std::vector<double>& times, double dt,
               const KernelTolerances& tol, std::vector<State>& out) {
    namespace ode = boost::numeric::odeint;
    out.clear();
    out.reserve(times.size());
    auto stepper = ode::make_controlled(tol.abs_tol, tol.rel_tol, ode::runge_kutta_fehlberg78<State>());
    try {
        ode::integrate_times(stepper, sys, state, times.begin(), times.end(), dt,
                             [&](const State& y, double) { out.push_back(y); });
    } catch (const std::exception& e) {
        throw SolverError(std::string("radial kernel integration failed: ") + e.what());
    }
    for (const State& y : out)
        if (!std::isfinite(y[0]) || !std::isfinite(y[1]))
            throw SolverError("radial kernel integration produced a non-finite value");
}

}  // namespace

RadialKernel solve_kernel(const SphereSpec& sphere, double eps, const KernelTolerances& tol) {
    if (sphere.R != 1.0) throw DomainError("the kernel is solved on the unit sphere; rescale for other radii");
    if (!(eps > 0.0) || !std::isfinite(eps)) throw DomainError("screening length must be positive");
    if (tol.nodes_per_panel < 4) throw DomainError("kernel panels need at least 4 nodes");
    const int n = sphere.n;

    RadialKernel k;
    k.n_ = n;
    k.eps_ = eps;
    k.sigma_ = sphere_surface_volume(n - 1);
    k.order_ = tol.nodes_per_panel;

    // Panel edges: dyadic from delta up to h, then uniform of width about h up to pi.
    const double h = std::min(tol.panel_width * eps, kPi / 16.0);
    const double delta = std::min(tol.inner_cutoff * eps, 0.25 * h);
    k.edges_.push_back(delta);
    for (double e = delta; 2.0 * e < h;) {
        e *= 2.0;
        k.edges_.push_back(e);
    }
    k.edges_.push_back(h);
    const auto uniform = static_cast<int>(std::ceil((kPi - h) / h));
    for (int i = 1; i < uniform; ++i) k.edges_.push_back(h + (kPi - h) * i / uniform);
    k.edges_.push_back(kPi);

    const GaussRule& rule = gauss_legendre(k.order_);
    const std::size_t panels = k.edges_.size() - 1;
    for (std::size_t j = 0; j < panels; ++j) {
        const double a = k.edges_[j];
        const double b = k.edges_[j + 1];
        for (int i = 0; i < k.order_; ++i) {
            k.nodes_.push_back(0.5 * (a + b) + 0.5 * (b - a) * rule.nodes[static_cast<std::size_t>(i)]);
            k.weights_.push_back(0.5 * (b - a) * rule.weights[static_cast<std::size_t>(i)]);
        }
    }
    k.bary_.resize(static_cast<std::size_t>(k.order_));
    for (int i = 0; i < k.order_; ++i) {
        const double t = rule.nodes[static_cast<std::size_t>(i)];
        const double lam = std::sqrt((1.0 - t * t) * rule.weights[static_cast<std::size_t>(i)]);
        k.bary_[static_cast<std::size_t>(i)] = (i % 2 == 0) ? lam : -lam;
    }

    // Every radius where the profile is needed: nodes and panel edges.
    std::vector<double> wanted(k.nodes_);
    wanted.insert(wanted.end(), k.edges_.begin(), k.edges_.end());
    std::sort(wanted.begin(), wanted.end());
    wanted.erase(std::unique(wanted.begin(), wanted.end()), wanted.end());

    const double inv_eps2 = 1.0 / (eps * eps);
    const Riccati sys{n, inv_eps2};
    // Regular expansion y = 1 + a s^2 + b s^4 about s = 0 (r = pi).
    const double ca = inv_eps2 / (2.0 * n);
    const double cb = ca * (inv_eps2 + 2.0 * (n - 1) / 3.0) / (4.0 * (n + 2));
    auto series = [&](double s) {
        const double s2 = s * s;
        const double y = 1.0 + ca * s2 + cb * s2 * s2;
        const double dy = 2.0 * ca * s + 4.0 * cb * s2 * s;
        return State{std::log(y), dy / y};
    };
    const double s0 = 1e-3 * std::min(eps, 1.0);

    std::map<double, Sample> profile;
    std::vector<std::pair<double, double>> far;  // (s = pi - r, r) for r >= pi/2, s above s0
    std::vector<double> near_r;                  // r < pi/2, descending
    for (double r : wanted) {
        if (r >= kHalfPi) {
            const double s = kPi - r;
            if (s <= s0) {
                const State y = series(s);
                profile[r] = {y[0], -y[1]};
            } else {
                far.emplace_back(s, r);
            }
        } else {
            near_r.push_back(r);
        }
    }
    std::sort(far.begin(), far.end());
    std::sort(near_r.begin(), near_r.end(), std::greater<>());

    std::vector<double> times{s0};
    for (const auto& f : far) times.push_back(f.first);
    if (times.back() < kHalfPi) times.push_back(kHalfPi);
    std::vector<State> states;
    run_phase(sys, series(s0), times, 0.25 * std::min(eps, 0.1), tol, states);
    for (std::size_t i = 0; i < far.size(); ++i) profile[far[i].second] = {states[i + 1][0], -states[i + 1][1]};
    const State mid{states.back()[0], -states.back()[1]};

    std::vector<double> rtimes{kHalfPi};
    rtimes.insert(rtimes.end(), near_r.begin(), near_r.end());
    run_phase(sys, mid, rtimes, -0.25 * std::min(eps, 0.1), tol, states);
    for (std::size_t i = 1; i < rtimes.size(); ++i) profile[rtimes[i]] = {states[i][0], states[i][1]};

    double log_max = -std::numeric_limits<double>::infinity();
    for (const auto& [r, smp] : profile) log_max = std::max(log_max, smp.log_value);
    if (log_max > 700.0)
        throw SolverError("kernel profile spans more than e^700 and would underflow at r = pi; use a larger eps "
                          "(got " + std::to_string(eps) + ")");

    auto raw = [&](double r) { return std::exp(profile.at(r).log_value - log_max); };

    k.values_.resize(k.nodes_.size());
    k.slopes_.resize(k.nodes_.size());
    for (std::size_t i = 0; i < k.nodes_.size(); ++i) {
        k.values_[i] = raw(k.nodes_[i]);
        k.slopes_[i] = k.values_[i] * profile.at(k.nodes_[i]).log_slope;
    }

    // Singular expansion matched to value and slope at delta.
    const double kd = raw(delta);
    const double kpd = kd * profile.at(delta).log_slope;
    if (n == 2) {
        k.tail_b_ = kpd * delta;
        k.tail_a_ = kd - k.tail_b_ * std::log(delta);
    } else {
        k.tail_b_ = kpd * std::pow(delta, n - 1) / (2.0 - n);
        k.tail_a_ = kd - k.tail_b_ * std::pow(delta, 2 - n);
    }

    for (int p = 0; p < 3; ++p) {
        auto& cum = k.cum_[p];
        cum.assign(panels + 1, 0.0);
        cum[0] = k.tail_integral(p, delta);
        for (std::size_t j = 0; j < panels; ++j) {
            double s = 0.0;
            for (int i = 0; i < k.order_; ++i) {
                const std::size_t q = j * static_cast<std::size_t>(k.order_) + static_cast<std::size_t>(i);
                const double r = k.nodes_[q];
                s += k.weights_[q] * std::pow(r, p) * k.values_[q] * std::pow(std::sin(r), n - 1);
            }
            cum[j + 1] = cum[j] + s;
        }
    }

    const double mass = k.sigma_ * k.cum_[0].back();
    if (!std::isfinite(mass) || !(mass > 0.0)) throw SolverError("kernel normalization integral is not finite");
    const double scale = 1.0 / mass;
    for (double& v : k.values_) v *= scale;
    for (double& v : k.slopes_) v *= scale;
    k.tail_a_ *= scale;
    k.tail_b_ *= scale;
    for (auto& cum : k.cum_)
        for (double& v : cum) v *= scale;

    // Mass again on a 10-point rule applied to the interpolant.
    const GaussRule& check = gauss_legendre(10);
    double alt = k.tail_integral(0, delta);
    for (std::size_t j = 0; j < panels; ++j) {
        const double a = k.edges_[j];
        const double b = k.edges_[j + 1];
        for (std::size_t i = 0; i < check.nodes.size(); ++i) {
            const double r = 0.5 * (a + b) + 0.5 * (b - a) * check.nodes[i];
            alt += 0.5 * (b - a) * check.weights[i] * k.interpolate(j, r) * std::pow(std::sin(r), n - 1);
        }
    }
    k.normalization_residual_ = std::abs(k.sigma_ * alt - 1.0);
    return k;
}

std::size_t RadialKernel::panel_of(double r) const {
    const auto it = std::upper_bound(edges_.begin(), edges_.end(), r);
    const auto idx = static_cast<std::size_t>(it - edges_.begin());
    return std::min(idx == 0 ? 0 : idx - 1, edges_.size() - 2);
}

double RadialKernel::interpolate(std::size_t panel, double r) const {
    const std::size_t base = panel * static_cast<std::size_t>(order_);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < order_; ++i) {
        const std::size_t q = base + static_cast<std::size_t>(i);
        const double d = r - nodes_[q];
        if (d == 0.0) return values_[q];
        const double c = bary_[static_cast<std::size_t>(i)] / d;
        num += c * values_[q];
        den += c;
    }
    return num / den;
}

double RadialKernel::tail_value(double r) const {
    return n_ == 2 ? tail_a_ + tail_b_ * std::log(r) : tail_a_ + tail_b_ * std::pow(r, 2 - n_);
}

double RadialKernel::tail_integral(int p, double r) const {
    // sin^{n-1}(s) ~ s^{n-1} on (0, r); the relative error r^2 / 6 is below 1e-12 here.
    if (r <= 0.0) return 0.0;
    const int q = p + n_ - 1;
    const double pw = std::pow(r, q + 1);
    if (n_ == 2) {
        const double a = pw / (q + 1);
        const double b = pw * (std::log(r) / (q + 1) - 1.0 / ((q + 1.0) * (q + 1.0)));
        return tail_a_ * a + tail_b_ * b;
    }
    return tail_a_ * pw / (q + 1) + tail_b_ * std::pow(r, p + 2) / (p + 2);
}

double RadialKernel::partial(int p, std::size_t panel, double r) const {
    const double a = edges_[panel];
    if (r <= a) return 0.0;
    const GaussRule& rule = gauss_legendre(order_);
    double s = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
        const double u = 0.5 * (a + r) + 0.5 * (r - a) * rule.nodes[i];
        s += rule.weights[i] * std::pow(u, p) * interpolate(panel, u) * std::pow(std::sin(u), n_ - 1);
    }
    return 0.5 * (r - a) * s;
}

double RadialKernel::operator()(double r) const {
    if (!(r > 0.0) || r > kPi) throw DomainError("kernel radius must lie in (0, pi]");
    if (r < edges_.front()) return tail_value(r);
    return interpolate(panel_of(r), r);
}

double RadialKernel::derivative(double r) const {
    if (!(r > 0.0) || r > kPi) throw DomainError("kernel radius must lie in (0, pi]");
    if (r < edges_.front()) return n_ == 2 ? tail_b_ / r : tail_b_ * (2 - n_) * std::pow(r, 1 - n_);
    const std::size_t panel = panel_of(r);
    const std::size_t base = panel * static_cast<std::size_t>(order_);
    double num = 0.0;
    double den = 0.0;
    for (int i = 0; i < order_; ++i) {
        const std::size_t q = base + static_cast<std::size_t>(i);
        const double d = r - nodes_[q];
        if (d == 0.0) return slopes_[q];
        const double c = bary_[static_cast<std::size_t>(i)] / d;
        num += c * slopes_[q];
        den += c;
    }
    return num / den;
}

double RadialKernel::cumulative(int p, double r) const {
    if (p < 0 || p > 2) throw DomainError("kernel moments are available for p = 0, 1, 2");
    if (r <= 0.0) return 0.0;
    if (r >= kPi) return cum_[p].back();
    if (r < edges_.front()) return tail_integral(p, r);
    const std::size_t panel = panel_of(r);
    return cum_[p][panel] + partial(p, panel, r);
}

double RadialKernel::integrated(double r) const {
    if (r >= kPi) return 0.0;
    return sigma_ / eps_ * (cum_[0].back() - cumulative(0, r));
}

double RadialKernel::integrated_cumulative(int p, double r) const {
    if (r <= 0.0) return 0.0;
    const double rr = std::min(r, kPi);
    if (p == 0) return rr * integrated(rr) + sigma_ / eps_ * cumulative(1, rr);
    if (p == 1) return 0.5 * rr * rr * integrated(rr) + 0.5 * sigma_ / eps_ * cumulative(2, rr);
    throw DomainError("integrated kernel moments are available for p = 0, 1");
}

double RadialKernel::integrate(const std::function<double(double)>& g) const {
    const double delta = edges_.front();
    double s = g(0.5 * delta) * tail_integral(0, delta);
    for (std::size_t q = 0; q < nodes_.size(); ++q)
        s += weights_[q] * g(nodes_[q]) * values_[q] * std::pow(std::sin(nodes_[q]), n_ - 1);
    return sigma_ * s;
}

double kernel_moment(const RadialKernel& kernel, int p) {
    if (p < 0 || p > 2) throw DomainError("kernel moments are available for p = 0, 1, 2");
    return sphere_surface_volume(kernel.n() - 1) * kernel.cumulative(p, kPi) / std::pow(kernel.eps(), p);
}

double gamma_eps(const RadialKernel& kernel) {
    const double m1 = kernel_moment(kernel, 1);
    if (!(m1 > 0.0)) throw SolverError("first kernel moment is not positive");
    return 1.0 / (sphere_volume_ratio(kernel.n()) * m1);
}

KernelMoments kernel_moments(const RadialKernel& kernel) {
    KernelMoments m;
    m.n = kernel.n();
    m.eps = kernel.eps();
    m.M0 = kernel_moment(kernel, 0);
    m.M1_scaled = kernel_moment(kernel, 1);
    m.M2_scaled = kernel_moment(kernel, 2);
    m.gamma_eps = gamma_eps(kernel);
    return m;
}

GammaEpsSweep gamma_eps_sweep(const SphereSpec& sphere, std::span<const double> eps_list,
                              const KernelTolerances& tol, int workers) {
    if (eps_list.empty()) throw DomainError("the eps list is empty");
    for (std::size_t i = 0; i < eps_list.size(); ++i) {
        if (!(eps_list[i] > 0.0)) throw DomainError("eps values must be positive");
        if (i > 0 && !(eps_list[i] < eps_list[i - 1])) throw DomainError("eps values must be strictly decreasing");
    }
    GammaEpsSweep out;
    out.rows = run_chunks(static_cast<std::int64_t>(eps_list.size()), workers, [&](std::int64_t i) {
        return kernel_moments(solve_kernel(sphere, eps_list[static_cast<std::size_t>(i)], tol));
    });
    const auto& rows = out.rows;
    const std::size_t m = rows.size();
    out.extrapolated = rows.back().gamma_eps;
    if (m >= 2) {
        const double rho = rows[m - 2].eps / rows[m - 1].eps;
        if (m >= 3) {
            const double d1 = rows[m - 3].gamma_eps - rows[m - 2].gamma_eps;
            const double d2 = rows[m - 2].gamma_eps - rows[m - 1].gamma_eps;
            const double rho1 = rows[m - 3].eps / rows[m - 2].eps;
            // Equal ratios give the usual estimate; otherwise this is a serviceable approximation.
            const double p = (d1 != 0.0 && d2 != 0.0 && d1 / d2 > 0.0)
                                 ? std::log(d1 / d2) / std::log(0.5 * (rho + rho1))
                                 : 1.0;
            out.order = (std::isfinite(p) && p >= 0.5 && p <= 4.0) ? p : 1.0;
        }
        const double d = rows[m - 1].gamma_eps - rows[m - 2].gamma_eps;
        out.extrapolated = rows[m - 1].gamma_eps + d / (std::pow(rho, out.order) - 1.0);
    }
    out.slack = 10.0 * std::max(tol.rel_tol, tol.abs_tol);
    for (std::size_t i = 1; i < m; ++i)
        if (std::abs(rows[i].gamma_eps - 1.0) > std::abs(rows[i - 1].gamma_eps - 1.0) + out.slack)
            out.monotone = false;
    return out;
}

double kernel_moment_outside(const RadialKernel& kernel, double delta) {
    const double sigma = sphere_surface_volume(kernel.n() - 1);
    return sigma / kernel.eps() * (kernel.cumulative(1, kPi) - kernel.cumulative(1, delta));
}

IntegratedKernel integrated_kernel(const RadialKernel& kernel) {
    IntegratedKernel out;
    out.eps = kernel.eps();
    out.phi_at_zero = kernel.integrated(0.0);
    out.phi_at_pi = kernel.integrated(kPi);
    out.r.push_back(0.0);
    out.phi.push_back(out.phi_at_zero);
    const auto& nodes = kernel.nodes();
    const auto& w = kernel.weights();
    // Phi is nearly constant on (0, delta), so the midpoint value covers that sliver.
    const double delta = kernel.inner_cutoff();
    out.L1_norm = delta * kernel.integrated(0.5 * delta);
    for (std::size_t q = 0; q < nodes.size(); ++q) {
        const double phi = kernel.integrated(nodes[q]);
        out.r.push_back(nodes[q]);
        out.phi.push_back(phi);
        out.L1_norm += w[q] * phi;
    }
    out.r.push_back(kPi);
    out.phi.push_back(out.phi_at_pi);
    return out;
}

}  // namespace geocorr
