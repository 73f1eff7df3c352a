#include <geocorr/errors.hpp>
#include <geocorr/fit.hpp>

#include <Eigen/Dense>

#include <cmath>

namespace geocorr {

PolyFit weighted_polyfit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> weights, int degree, double x0) {
    const auto m = static_cast<Eigen::Index>(x.size());
    const Eigen::Index p = degree + 1;
    if (degree < 0) throw DomainError("polynomial degree must be non-negative");
    if (m < p) throw DomainError("least-squares fit is under-determined");
    if (y.size() != x.size() || weights.size() != x.size()) throw DomainError("fit inputs differ in length");

    Eigen::MatrixXd a(m, p);
    Eigen::VectorXd sw(m);
    for (Eigen::Index i = 0; i < m; ++i) {
        sw(i) = std::sqrt(weights[static_cast<std::size_t>(i)]);
        double power = 1.0;
        const double t = x[static_cast<std::size_t>(i)] - x0;
        for (Eigen::Index c = 0; c < p; ++c) {
            a(i, c) = power * sw(i);
            power *= t;
        }
    }
    // beta = pinv(sqrt(W) A) sqrt(W) y; the influence matrix is pinv(sqrt(W) A) diag(sqrt(W)).
    const Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> qr(a);
    Eigen::MatrixXd influence = qr.pseudoInverse();
    for (Eigen::Index i = 0; i < m; ++i) influence.col(i) *= sw(i);

    PolyFit fit;
    fit.coefficients.assign(static_cast<std::size_t>(p), 0.0);
    fit.influence.assign(static_cast<std::size_t>(p), std::vector<double>(static_cast<std::size_t>(m), 0.0));
    for (Eigen::Index c = 0; c < p; ++c) {
        double beta = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) {
            fit.influence[static_cast<std::size_t>(c)][static_cast<std::size_t>(i)] = influence(c, i);
            beta += influence(c, i) * y[static_cast<std::size_t>(i)];
        }
        fit.coefficients[static_cast<std::size_t>(c)] = beta;
    }
    for (Eigen::Index i = 0; i < m; ++i) {
        double model = 0.0;
        double power = 1.0;
        const double t = x[static_cast<std::size_t>(i)] - x0;
        for (Eigen::Index c = 0; c < p; ++c) {
            model += fit.coefficients[static_cast<std::size_t>(c)] * power;
            power *= t;
        }
        const double res = y[static_cast<std::size_t>(i)] - model;
        fit.chi2 += weights[static_cast<std::size_t>(i)] * res * res;
    }
    fit.dof = static_cast<int>(m - p);
    return fit;
}

double standard_error_of_mean(std::span<const double> values) {
    const std::size_t n = values.size();
    if (n < 2) return 0.0;
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return std::sqrt(ss / static_cast<double>(n - 1) / static_cast<double>(n));
}

}  // namespace geocorr
