#pragma once

// Statistical utilities for the test suites: regularised incomplete gamma,
// gamma/chi-square densities and CDFs, and Kolmogorov-Smirnov tests. Kept out of the
// shipped library on purpose so tests never validate the code against itself.

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

namespace testutil {

// lower regularised incomplete gamma P(a, x); series for x < a + 1, Lentz continued
// fraction otherwise
inline double gamma_p(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gamma_p domain");
    if (x == 0.0) return 0.0;
    const double log_gamma = std::lgamma(a);
    if (x < a + 1.0) {
        double term = 1.0 / a;
        double sum = term;
        double ap = a;
        for (int k = 0; k < 500; ++k) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::abs(term) < std::abs(sum) * 1e-15)
                return sum * std::exp(-x + a * std::log(x) - log_gamma);
        }
        throw std::runtime_error("gamma_p series did not converge");
    }
    double b = x + 1.0 - a;
    double c = 1e300;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < 1e-300) d = 1e-300;
        c = b + an / c;
        if (std::abs(c) < 1e-300) c = 1e-300;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < 1e-15) {
            const double q = std::exp(-x + a * std::log(x) - log_gamma) * h;
            return 1.0 - q;
        }
    }
    throw std::runtime_error("gamma_p continued fraction did not converge");
}

inline double gamma_log_pdf(double x, double shape, double scale) {
    if (x <= 0.0) return -std::numeric_limits<double>::infinity();
    return (shape - 1.0) * std::log(x) - x / scale - std::lgamma(shape) -
           shape * std::log(scale);
}

inline double chi2_cdf(double x, double k) { return x <= 0.0 ? 0.0 : gamma_p(0.5 * k, 0.5 * x); }

inline double chi2_log_pdf(double x, double k) { return gamma_log_pdf(x, 0.5 * k, 2.0); }

inline double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

inline double lognormal_cdf(double x, double mean_log, double sd_log) {
    return x <= 0.0 ? 0.0 : normal_cdf((std::log(x) - mean_log) / sd_log);
}

// asymptotic Kolmogorov distribution Q(lambda) = 2 sum (-1)^{k-1} exp(-2 k^2 lambda^2)
inline double kolmogorov_q(double lambda) {
    if (lambda < 1e-8) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::min(1.0, std::max(0.0, sum));
}

// one-sample KS test p-value against a CDF
template <typename Cdf>
double ks_test(std::vector<double> sample, Cdf&& cdf) {
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (size_t i = 0; i < sample.size(); ++i) {
        const double f = cdf(sample[i]);
        d = std::max(d, std::abs(f - (i + 1) / n));
        d = std::max(d, std::abs(f - i / n));
    }
    const double sqrt_n = std::sqrt(n);
    return kolmogorov_q((sqrt_n + 0.12 + 0.11 / sqrt_n) * d);
}

// two-sample KS test p-value
inline double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    double d = 0.0;
    size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] <= b[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() -
                                 static_cast<double>(j) / b.size()));
    }
    const double ne = static_cast<double>(a.size()) * b.size() / (a.size() + b.size());
    const double sqrt_ne = std::sqrt(ne);
    return kolmogorov_q((sqrt_ne + 0.12 + 0.11 / sqrt_ne) * d);
}

inline double mean_of(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / v.size();
}

inline double variance_of(const std::vector<double>& v) {
    const double m = mean_of(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / (v.size() - 1);
}

}  // namespace testutil
