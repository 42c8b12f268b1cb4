#pragma once

namespace sage {

// Standard normal CDF.
double normal_cdf(double x);

// Regularized lower incomplete gamma P(a, x), a > 0, x >= 0.
double regularized_gamma_p(double a, double x);

// Chi-squared CDF with k degrees of freedom.
double chi_squared_cdf(double x, int k);

// Chi-squared quantile: smallest x with CDF(x) >= p, p in (0, 1), k >= 1.
double chi_squared_quantile(double p, int k);

}  // namespace sage
