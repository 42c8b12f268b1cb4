#include "sage/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sage {

double normal_cdf(double x) {
    return 0.5 * std::erfc(-x / 1.4142135623730950488);
}

namespace {

// Series expansion, converges fast for x < a + 1.
double gamma_p_series(double a, double x) {
    double term = 1.0 / a;
    double sum = term;
    double ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::fabs(term) < std::fabs(sum) * 1e-16) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

// Continued fraction for Q(a, x) = 1 - P(a, x), good for x >= a + 1.
double gamma_q_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < 500; ++i) {
        const double an = -static_cast<double>(i) * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::fabs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::fabs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

}  // namespace

double regularized_gamma_p(double a, double x) {
    if (a <= 0.0) throw std::invalid_argument("regularized_gamma_p: a must be positive");
    if (x < 0.0) throw std::invalid_argument("regularized_gamma_p: x must be non-negative");
    if (x == 0.0) return 0.0;
    if (x < a + 1.0) return gamma_p_series(a, x);
    return 1.0 - gamma_q_cf(a, x);
}

double chi_squared_cdf(double x, int k) {
    if (k < 1) throw std::invalid_argument("chi_squared_cdf: dof must be >= 1");
    if (x <= 0.0) return 0.0;
    return regularized_gamma_p(0.5 * k, 0.5 * x);
}

double chi_squared_quantile(double p, int k) {
    if (k < 1) throw std::invalid_argument("chi_squared_quantile: dof must be >= 1");
    if (!(p > 0.0 && p < 1.0))
        throw std::invalid_argument("chi_squared_quantile: p must be in (0, 1)");
    // Bracket then bisect; monotone CDF makes this unconditionally safe.
    double lo = 0.0;
    double hi = std::max(1.0, static_cast<double>(k));
    while (chi_squared_cdf(hi, k) < p) {
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("chi_squared_quantile: bracket failed");
    }
    for (int i = 0; i < 200; ++i) {
        const double mid = 0.5 * (lo + hi);
        if (chi_squared_cdf(mid, k) < p)
            lo = mid;
        else
            hi = mid;
        if (hi - lo < 1e-13 * std::max(1.0, hi)) break;
    }
    return 0.5 * (lo + hi);
}

}  // namespace sage
