#pragma once

#include <complex>

namespace ppcr::special {

/// Faddeeva function w(z) = exp(-z^2) erfc(-iz) for Im z > 0.
/// Weideman's rational expansion near the origin, Laplace continued fraction
/// for large |z|.
std::complex<double> faddeeva(std::complex<double> z);

/// Scaled complementary error function exp(x^2) erfc(x).
double erfcx(double x);

/// 1 / erfcx(x), finite for every real x.
double inv_erfcx(double x);

/// Log-density and its derivative in x.
struct LogDensity {
    double value;
    double derivative;
};

/// Density of w + d with w ~ N(0, sigma^2) and d ~ Laplace(0, b), sigma > 0, b > 0.
LogDensity gauss_laplace_log_density(double x, double sigma, double b);

/// Voigt profile: density of w + d with w ~ N(0, sigma^2), d ~ Cauchy(0, gamma),
/// sigma > 0, gamma > 0.
LogDensity voigt_log_density(double x, double sigma, double gamma);

}  // namespace ppcr::special
