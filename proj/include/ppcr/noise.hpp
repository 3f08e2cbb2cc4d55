#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/random.hpp"

#include <string>
#include <variant>

namespace ppcr {

struct GaussianNoise {
    Vector mean;
    PsdMatrix cov;
};

struct LaplaceIid {
    double scale;  // b
    Eigen::Index dim;
};

struct CauchyIid {
    double scale;  // gamma
    Eigen::Index dim;
};

/// Raised-cosine density (2/L) cos^2(pi (x - mid) / L) on [lower, upper], L = upper - lower.
struct Cos2Bounded {
    double lower;
    double upper;
    Eigen::Index dim;

    double width() const { return upper - lower; }
    double midpoint() const { return 0.5 * (upper + lower); }
};

/// Symmetric two-lobe noise for multiplicative mechanisms: D = +-(center + e)
/// with equal probability, e raised-cosine on [-half_width, half_width].
/// Lobes vanish smoothly at their edges so the scale Fisher information is
/// finite; flat (uniform) lobes have a parameter-dependent support.
struct TwinUniform {
    double center;
    double half_width;
    Eigen::Index dim;
};

using NoiseFamily = std::variant<GaussianNoise, LaplaceIid, CauchyIid, Cos2Bounded, TwinUniform>;

GaussianNoise gaussian_iid(Eigen::Index dim, double sigma);

Eigen::Index noise_dim(const NoiseFamily& f);
std::string noise_name(const NoiseFamily& f);

/// Throws InvalidInput on non-positive scales, inverted bounds, or
/// TwinUniform with half_width outside (0, center).
void validate(const NoiseFamily& f);

Vector sample_noise(const NoiseFamily& f, RandomStream& rng);

/// One Laplace(0, b) draw by inverse CDF.
double sample_laplace(double b, RandomStream& rng);

/// Location of the noise: Gaussian mean, zero for the symmetric families.
Vector noise_location(const NoiseFamily& f);

/// True for families whose components are i.i.d. scalars with the densities below.
bool is_scalar_iid(const NoiseFamily& f);

/// Per-component density and d/dx ln density of an i.i.d. family
/// (Gaussian qualifies when its covariance is sigma^2 I and mean zero).
double component_pdf(const NoiseFamily& f, double x);
double component_score(const NoiseFamily& f, double x);

/// Support of one component; infinite for unbounded families.
std::pair<double, double> component_support(const NoiseFamily& f);

/// Gradient of ln f at x (all families; Gaussian needs invertible covariance).
Vector log_density_gradient(const NoiseFamily& f, const Vector& x);

/// Raised-cosine inverse CDF on [-L/2, L/2] by bisection to 1e-12 * L.
double cos2_inverse_cdf(double u, double width);
double cos2_cdf(double t, double width);

}  // namespace ppcr
