#pragma once

#include <span>
#include <vector>

namespace geocorr {

/// Weighted least-squares polynomial y ~ sum_c beta_c (x - x0)^c.
///
/// The fit is linear in y, so `influence[c][i]` = d beta_c / d y_i is returned as well; applying
/// it to other data (batch replicates, covariance) propagates errors without refitting.
struct PolyFit {
    std::vector<double> coefficients;
    std::vector<std::vector<double>> influence;
    double chi2 = 0.0;
    int dof = 0;
};

/// Throws DomainError when there are fewer points than coefficients.
PolyFit weighted_polyfit(std::span<const double> x, std::span<const double> y,
                         std::span<const double> weights, int degree, double x0 = 0.0);

/// Sample standard deviation divided by sqrt(count); 0 for fewer than two values.
double standard_error_of_mean(std::span<const double> values);

}  // namespace geocorr
