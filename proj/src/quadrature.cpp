#include <geocorr/errors.hpp>
#include <geocorr/quadrature.hpp>

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

namespace geocorr {

namespace {

GaussRule build_rule(int order) {
    GaussRule rule;
    rule.nodes.resize(static_cast<std::size_t>(order));
    rule.weights.resize(static_cast<std::size_t>(order));
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (order + 0.5));
        double dp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0;
            double p1 = x;
            for (int k = 2; k <= order; ++k) {
                const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = order * (x * p1 - p0) / (x * x - 1.0);
            const double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-16) break;
        }
        const double w = 2.0 / ((1.0 - x * x) * dp * dp);
        rule.nodes[static_cast<std::size_t>(i)] = -x;
        rule.weights[static_cast<std::size_t>(i)] = w;
        rule.nodes[static_cast<std::size_t>(order - 1 - i)] = x;
        rule.weights[static_cast<std::size_t>(order - 1 - i)] = w;
    }
    if (order % 2 == 1) rule.nodes[static_cast<std::size_t>(order / 2)] = 0.0;
    return rule;
}

double apply_rule(const GaussRule& rule, const std::function<double(double)>& f, double a, double b) {
    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * f(mid + half * rule.nodes[i]);
    return sum * half;
}

struct Adaptive {
    const GaussRule& rule;
    const std::function<double(double)>& f;
    const QuadratureConfig& config;
    int panels = 0;

    // Returns (value, error); `tol` is this panel's share of the absolute tolerance.
    std::pair<double, double> run(double a, double b, double whole, double tol, int depth) {
        const double mid = 0.5 * (a + b);
        const double left = apply_rule(rule, f, a, mid);
        const double right = apply_rule(rule, f, mid, b);
        const double refined = left + right;
        const double err = std::abs(refined - whole);
        if (!std::isfinite(refined)) throw QuadratureError("non-finite integrand value", refined, err);
        if (err <= tol || b - a <= 8.0 * std::numeric_limits<double>::epsilon() * std::max(std::abs(a), std::abs(b))) {
            ++panels;
            return {refined, err};
        }
        if (depth >= config.max_depth)
            throw QuadratureError("adaptive quadrature did not converge", refined, err);
        const auto l = run(a, mid, left, 0.5 * tol, depth + 1);
        const auto r = run(mid, b, right, 0.5 * tol, depth + 1);
        return {l.first + r.first, l.second + r.second};
    }
};

}  // namespace

const GaussRule& gauss_legendre(int order) {
    if (order < 1) throw DomainError("Gauss-Legendre order must be positive");
    static std::mutex mutex;
    static std::map<int, std::unique_ptr<GaussRule>> cache;
    std::lock_guard lock(mutex);
    auto& slot = cache[order];
    if (!slot) slot = std::make_unique<GaussRule>(build_rule(order));
    return *slot;
}

QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& config) {
    if (!(b >= a)) throw DomainError("integration interval must satisfy a <= b");
    QuadratureResult result;
    if (a == b) return result;
    const GaussRule& rule = gauss_legendre(config.order);

    std::vector<std::pair<double, double>> pieces;
    double innermost = 0.0;  // unrefined sliver next to a singular endpoint
    if (config.singular_at_left) {
        // Geometric grading towards a: [a + L/2, b], [a + L/4, a + L/2], ... until the sliver
        // [a, a + L 2^-k] no longer matters. Bisection cannot resolve power singularities.
        const double length = b - a;
        double hi = b;
        double scale = 0.0;
        for (int k = 1; k <= 1074; ++k) {
            const double lo = a + length * std::ldexp(1.0, -k);
            if (!(lo > a)) break;
            pieces.emplace_back(lo, hi);
            scale += std::abs(apply_rule(rule, f, lo, hi));
            hi = lo;
            innermost = apply_rule(rule, f, a, hi);
            if (k >= 40 && std::abs(innermost) <= 1e-3 * std::max(config.abs_tolerance, config.rel_tolerance * scale))
                break;
        }
        if (!std::isfinite(innermost)) throw QuadratureError("non-finite integrand value", innermost, 0.0);
    } else {
        pieces.emplace_back(a, b);
    }

    // First pass fixes the scale for the relative tolerance.
    double scale = 0.0;
    std::vector<double> coarse(pieces.size());
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        coarse[i] = apply_rule(rule, f, pieces[i].first, pieces[i].second);
        scale += std::abs(coarse[i]);
    }
    const double total_tol = std::max(config.abs_tolerance, config.rel_tolerance * scale);

    Adaptive adaptive{rule, f, config};
    for (std::size_t i = 0; i < pieces.size(); ++i) {
        const auto [lo, hi] = pieces[i];
        const double share = total_tol * (hi - lo) / (b - a);
        // Tiny graded pieces near a singularity get a floor so they are not over-refined.
        const double tol = std::max(share, total_tol * 1e-3 / static_cast<double>(pieces.size()));
        const auto [value, err] = adaptive.run(lo, hi, coarse[i], tol, 0);
        result.value += value;
        result.error_estimate += err;
    }
    result.value += innermost;
    result.error_estimate += std::abs(innermost);
    result.panels = adaptive.panels;
    return result;
}

}  // namespace geocorr
