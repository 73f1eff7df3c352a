#pragma once

#include <functional>
#include <vector>

namespace geocorr {

/// Gauss-Legendre rule on [-1, 1].
struct GaussRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

/// Nodes and weights by Newton iteration on P_order; cached per order, thread safe.
const GaussRule& gauss_legendre(int order);

struct QuadratureConfig {
    double abs_tolerance = 1e-13;
    double rel_tolerance = 1e-12;
    /// Integrand may carry an integrable singularity at the left endpoint; the interval is
    /// first split geometrically towards it.
    bool singular_at_left = false;
    int max_depth = 48;
    int order = 20;
};

struct QuadratureResult {
    double value = 0.0;
    double error_estimate = 0.0;
    int panels = 0;
};

/// Adaptive Gauss-Legendre on [a, b]; throws QuadratureError when a panel cannot meet its
/// share of the tolerance within max_depth bisections.
QuadratureResult integrate(const std::function<double(double)>& f, double a, double b,
                           const QuadratureConfig& config = {});

}  // namespace geocorr
