#include <geocorr/errors.hpp>
#include <geocorr/fit.hpp>
#include <geocorr/format.hpp>
#include <geocorr/quadrature.hpp>
#include <geocorr/variation.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace geocorr {

namespace {

constexpr std::int64_t kDefaultDrawChunk = 1 << 14;

struct Partial {
    std::vector<double> sum;
    std::vector<double> cross;  // row-major sum of y y^T
};

}  // namespace

ScalarField ScalarField::coordinate(int index) {
    if (index < 0) throw DomainError("coordinate index must be non-negative");
    ScalarField f;
    const auto i = static_cast<std::size_t>(index);
    f.value = [i](std::span<const double> x) { return x[i]; };
    // Tangential part of the constant gradient e_i: sqrt(1 - x_i^2).
    f.gradient_norm = [i](std::span<const double> x) { return std::sqrt(std::max(0.0, 1.0 - x[i] * x[i])); };
    f.label = "coordinate:" + std::to_string(index);
    return f;
}

ScalarField ScalarField::constant(double c) {
    ScalarField f;
    f.value = [c](std::span<const double>) { return c; };
    f.gradient_norm = [](std::span<const double>) { return 0.0; };
    f.label = "constant:" + format_double(c);
    return f;
}

ScalarField ScalarField::indicator(Region region) {
    ScalarField f;
    f.label = "indicator(" + region.literal() + ")";
    f.value = [region = std::move(region)](std::span<const double> x) { return region.contains(x) ? 1.0 : 0.0; };
    return f;
}

double VariationProfile::linear_std_error(std::span<const double> a) const {
    const std::size_t l = r.size();
    double var = 0.0;
    for (std::size_t i = 0; i < l; ++i)
        for (std::size_t j = 0; j < l; ++j) var += a[i] * covariance[i * l + j] * a[j];
    return std::sqrt(std::max(var, 0.0));
}

VariationProfile variation_profile(const SphereSpec& sphere, const ScalarField& field,
                                   std::span<const double> radii, const McConfig& config) {
    if (config.samples < 1) throw DomainError("sample count must be at least 1");
    if (!field.value) throw DomainError("scalar field has no evaluation function");
    const std::size_t l = radii.size();
    if (l == 0) throw DomainError("variation profile needs at least one radius");

    const int ambient = sphere.ambient_dim();
    const std::int64_t chunk = config.chunk_size > 0 ? config.chunk_size : kDefaultDrawChunk;
    const std::int64_t chunks = (config.samples + chunk - 1) / chunk;
    const double volume = sphere.volume();
    std::vector<double> cs(l);
    std::vector<double> sn(l);
    for (std::size_t i = 0; i < l; ++i) {
        cs[i] = std::cos(radii[i] / sphere.R);
        sn[i] = std::sin(radii[i] / sphere.R);
    }

    const auto partials = run_chunks(chunks, config.workers, [&](std::int64_t c) {
        RngStream rng(config.seed, static_cast<std::uint64_t>(c));
        Partial p{std::vector<double>(l, 0.0), std::vector<double>(l * l, 0.0)};
        std::vector<double> x(static_cast<std::size_t>(ambient));
        std::vector<double> w(static_cast<std::size_t>(ambient));
        std::vector<double> fwd(static_cast<std::size_t>(ambient));
        std::vector<double> back(static_cast<std::size_t>(ambient));
        std::vector<double> y(l);
        const std::int64_t end = std::min(config.samples, (c + 1) * chunk);
        for (std::int64_t s = c * chunk; s < end; ++s) {
            draw_liouville(ambient, rng, x.data(), w.data());
            const double f0 = field.value(x);
            for (std::size_t i = 0; i < l; ++i) {
                for (std::size_t k = 0; k < x.size(); ++k) {
                    const double a = cs[i] * x[k];
                    const double b = sn[i] * w[k];
                    fwd[k] = a + b;
                    back[k] = a - b;
                }
                const double pair = std::abs(field.value(fwd) - f0) + std::abs(field.value(back) - f0);
                y[i] = volume * (0.5 * pair);
            }
            for (std::size_t i = 0; i < l; ++i) {
                p.sum[i] += y[i];
                for (std::size_t j = 0; j < l; ++j) p.cross[i * l + j] += y[i] * y[j];
            }
        }
        return p;
    });

    std::vector<double> sum(l, 0.0);
    std::vector<double> cross(l * l, 0.0);
    for (const Partial& p : partials) {
        for (std::size_t i = 0; i < l; ++i) sum[i] += p.sum[i];
        for (std::size_t i = 0; i < l * l; ++i) cross[i] += p.cross[i];
    }

    VariationProfile prof;
    prof.r.assign(radii.begin(), radii.end());
    prof.samples = config.samples;
    prof.seed = config.seed;
    prof.label = field.label;
    const double n = static_cast<double>(config.samples);
    prof.G.resize(l);
    prof.G_std_errors.resize(l);
    prof.covariance.assign(l * l, 0.0);
    for (std::size_t i = 0; i < l; ++i) prof.G[i] = sum[i] / n;
    if (config.samples > 1) {
        for (std::size_t i = 0; i < l; ++i)
            for (std::size_t j = 0; j < l; ++j) {
                const double cov = (cross[i * l + j] / n - prof.G[i] * prof.G[j]) * n / (n - 1.0);
                prof.covariance[i * l + j] = cov / n;
            }
    }
    for (std::size_t i = 0; i < l; ++i) prof.G_std_errors[i] = std::sqrt(std::max(prof.covariance[i * l + i], 0.0));
    return prof;
}

Estimate geodesic_variation(const SphereSpec& sphere, const ScalarField& field, double r,
                            const McConfig& config) {
    const double radii[1] = {r};
    const VariationProfile p = variation_profile(sphere, field, radii, config);
    return {p.G[0], p.G_std_errors[0], p.samples, p.seed};
}

Estimate difference_quotient(const SphereSpec& sphere, const ScalarField& field, double r,
                             const McConfig& config) {
    if (!(r > 0.0)) throw DomainError("difference quotient needs r > 0");
    Estimate e = geodesic_variation(sphere, field, r, config);
    e.value /= r;
    e.std_error /= r;
    return e;
}

LimitEstimate variation_limit_smooth(const SphereSpec& sphere, const ScalarField& field,
                                     std::span<const double> r_sequence, const McConfig& config,
                                     int degree) {
    const std::size_t l = r_sequence.size();
    if (l < 2) throw DomainError("limit extrapolation needs at least two radii");
    for (std::size_t i = 0; i < l; ++i) {
        if (!(r_sequence[i] > 0.0)) throw DomainError("radii must be positive");
        if (i > 0 && !(r_sequence[i] < r_sequence[i - 1])) throw DomainError("radii must be strictly decreasing");
    }
    const VariationProfile prof = variation_profile(sphere, field, r_sequence, config);

    LimitEstimate out;
    out.samples = prof.samples;
    out.seed = prof.seed;
    out.r = prof.r;
    out.degree = std::min<int>(degree, static_cast<int>(l) - 1);
    std::vector<double> q(l);
    std::vector<double> q_se(l);
    bool all_exact = true;
    for (std::size_t i = 0; i < l; ++i) {
        q[i] = prof.quotient(i);
        q_se[i] = prof.quotient_std_error(i);
        if (q_se[i] > 0.0) all_exact = false;
    }
    out.Q = q;
    out.Q_std_errors = q_se;

    double floor = 0.0;
    for (double s : q_se) floor = std::max(floor, s);
    floor = std::max(floor * 1e-3, 1e-300);
    std::vector<double> weights(l, 1.0);
    if (!all_exact)
        for (std::size_t i = 0; i < l; ++i) weights[i] = 1.0 / std::pow(std::max(q_se[i], floor), 2);

    const PolyFit fit = weighted_polyfit(out.r, q, weights, out.degree);
    out.value = fit.coefficients[0];

    // The intercept is linear in G: value = sum_i h_i G_i / r_i.
    std::vector<double> a(l);
    for (std::size_t i = 0; i < l; ++i) a[i] = fit.influence[0][i] / out.r[i];
    out.std_error = prof.linear_std_error(a);

    for (std::size_t i = 0; i < l; ++i) {
        std::vector<double> diff(a);
        for (double& v : diff) v = -v;
        diff[i] += 1.0 / out.r[i];
        const double se = prof.linear_std_error(diff);
        if (q[i] - out.value > 4.0 * se + 1e-12 * std::abs(out.value)) out.unstable = true;
    }
    return out;
}

Estimate mollifier_variation(const SphereSpec& sphere, const ScalarField& field, double s,
                             const McConfig& config, int nodes) {
    if (!(s > 0.0) || !(s < 1.0)) throw DomainError("mollifier width must lie in (0, 1)");
    const GaussRule& rule = gauss_legendre(nodes);
    std::vector<double> radii(static_cast<std::size_t>(nodes));
    std::vector<double> a(static_cast<std::size_t>(nodes));
    for (std::size_t q = 0; q < radii.size(); ++q) {
        const double r = 0.5 * s * (1.0 + rule.nodes[q]);
        radii[q] = r;
        // (1/s) * (s/2) w_q * J(r) / r, with J taken on the unit sphere scaled by R.
        a[q] = 0.5 * rule.weights[q] * jacobian_exp(sphere.n, r / sphere.R) / r;
    }
    const VariationProfile prof = variation_profile(sphere, field, radii, config);
    Estimate e;
    e.samples = prof.samples;
    e.seed = prof.seed;
    for (std::size_t q = 0; q < radii.size(); ++q) e.value += a[q] * prof.G[q];
    e.std_error = prof.linear_std_error(a);
    return e;
}

}  // namespace geocorr
