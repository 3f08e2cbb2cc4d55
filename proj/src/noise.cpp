#include "ppcr/noise.hpp"

#include "ppcr/errors.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ppcr {

namespace {

template <class... Ts>
struct overloaded : Ts... {
    using Ts::operator()...;
};

constexpr double kPi = std::numbers::pi;

double raised_cosine_pdf(double t, double width) {
    if (std::abs(t) >= 0.5 * width) return 0.0;
    const double c = std::cos(kPi * t / width);
    return 2.0 / width * c * c;
}

double raised_cosine_score(double t, double width) {
    if (std::abs(t) >= 0.5 * width) return 0.0;
    return -2.0 * kPi / width * std::tan(kPi * t / width);
}

bool is_centered_isotropic(const GaussianNoise& g, double* sigma) {
    const double var = g.cov(0, 0);
    if ((g.cov.matrix() - var * Matrix::Identity(g.cov.dim(), g.cov.dim())).cwiseAbs().maxCoeff() != 0.0) {
        return false;
    }
    if (g.mean.cwiseAbs().maxCoeff() != 0.0) return false;
    if (sigma != nullptr) *sigma = std::sqrt(var);
    return var > 0.0;
}

}  // namespace

GaussianNoise gaussian_iid(Eigen::Index dim, double sigma) {
    return GaussianNoise{Vector::Zero(dim), PsdMatrix::scaled_identity(dim, sigma * sigma)};
}

Eigen::Index noise_dim(const NoiseFamily& f) {
    return std::visit(overloaded{[](const GaussianNoise& g) { return g.mean.size(); },
                                 [](const auto& s) { return s.dim; }},
                      f);
}

std::string noise_name(const NoiseFamily& f) {
    return std::visit(overloaded{[](const GaussianNoise&) { return std::string("gaussian"); },
                                 [](const LaplaceIid&) { return std::string("laplace"); },
                                 [](const CauchyIid&) { return std::string("cauchy"); },
                                 [](const Cos2Bounded&) { return std::string("cos2"); },
                                 [](const TwinUniform&) { return std::string("twin-uniform"); }},
                      f);
}

void validate(const NoiseFamily& f) {
    std::visit(overloaded{
                   [](const GaussianNoise& g) {
                       if (g.mean.size() != g.cov.dim()) {
                           throw InvalidInput("gaussian noise: mean and covariance dimensions differ");
                       }
                   },
                   [](const LaplaceIid& l) {
                       if (!(l.scale > 0.0) || l.dim < 1) throw InvalidInput("laplace noise: scale must be > 0");
                   },
                   [](const CauchyIid& c) {
                       if (!(c.scale > 0.0) || c.dim < 1) throw InvalidInput("cauchy noise: scale must be > 0");
                   },
                   [](const Cos2Bounded& c) {
                       if (!(c.upper > c.lower) || c.dim < 1) {
                           throw InvalidInput("cos2 noise: upper bound must exceed lower bound");
                       }
                   },
                   [](const TwinUniform& t) {
                       if (!(t.center > 0.0) || !(t.half_width > 0.0) || !(t.half_width < t.center) ||
                           t.dim < 1) {
                           throw InvalidInput("twin-uniform noise: need 0 < half_width < center");
                       }
                   }},
               f);
}

double cos2_cdf(double t, double width) {
    if (t <= -0.5 * width) return 0.0;
    if (t >= 0.5 * width) return 1.0;
    return (t + 0.5 * width) / width + std::sin(2.0 * kPi * t / width) / (2.0 * kPi);
}

double cos2_inverse_cdf(double u, double width) {
    double lo = -0.5 * width;
    double hi = 0.5 * width;
    const double tol = 1e-12 * width;
    while (hi - lo > tol) {
        const double mid = 0.5 * (lo + hi);
        if (cos2_cdf(mid, width) < u) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

double sample_laplace(double b, RandomStream& rng) {
    const double u = rng.uniform_open() - 0.5;
    return -b * std::copysign(1.0, u) * std::log1p(-2.0 * std::abs(u));
}

Vector sample_noise(const NoiseFamily& f, RandomStream& rng) {
    const Eigen::Index n = noise_dim(f);
    Vector out(n);
    std::visit(overloaded{
                   [&](const GaussianNoise& g) {
                       Vector std_normal(n);
                       for (Eigen::Index i = 0; i < n; ++i) std_normal(i) = rng.normal();
                       double sigma = 0.0;
                       if (is_centered_isotropic(g, &sigma)) {
                           out = sigma * std_normal;
                       } else {
                           out = g.mean + psd_sqrt(g.cov).matrix() * std_normal;
                       }
                   },
                   [&](const LaplaceIid& l) {
                       for (Eigen::Index i = 0; i < n; ++i) out(i) = sample_laplace(l.scale, rng);
                   },
                   [&](const CauchyIid& c) {
                       for (Eigen::Index i = 0; i < n; ++i) {
                           out(i) = c.scale * std::tan(kPi * (rng.uniform_open() - 0.5));
                       }
                   },
                   [&](const Cos2Bounded& c) {
                       for (Eigen::Index i = 0; i < n; ++i) {
                           out(i) = c.midpoint() + cos2_inverse_cdf(rng.uniform_open(), c.width());
                       }
                   },
                   [&](const TwinUniform& t) {
                       for (Eigen::Index i = 0; i < n; ++i) {
                           const double sign = rng.uniform_open() < 0.5 ? -1.0 : 1.0;
                           const double e = cos2_inverse_cdf(rng.uniform_open(), 2.0 * t.half_width);
                           out(i) = sign * (t.center + e);
                       }
                   }},
               f);
    return out;
}

Vector noise_location(const NoiseFamily& f) {
    if (const auto* g = std::get_if<GaussianNoise>(&f)) return g->mean;
    return Vector::Zero(noise_dim(f));
}

bool is_scalar_iid(const NoiseFamily& f) {
    if (const auto* g = std::get_if<GaussianNoise>(&f)) return is_centered_isotropic(*g, nullptr);
    return true;
}

double component_pdf(const NoiseFamily& f, double x) {
    return std::visit(
        overloaded{[&](const GaussianNoise& g) {
                       double sigma = 0.0;
                       if (!is_centered_isotropic(g, &sigma)) {
                           throw Unsupported("component_pdf: gaussian noise is not centered isotropic");
                       }
                       return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * kPi));
                   },
                   [&](const LaplaceIid& l) { return std::exp(-std::abs(x) / l.scale) / (2.0 * l.scale); },
                   [&](const CauchyIid& c) {
                       const double r = x / c.scale;
                       return 1.0 / (kPi * c.scale * (1.0 + r * r));
                   },
                   [&](const Cos2Bounded& c) { return raised_cosine_pdf(x - c.midpoint(), c.width()); },
                   [&](const TwinUniform& t) {
                       const double w = 2.0 * t.half_width;
                       return 0.5 * raised_cosine_pdf(x - t.center, w) +
                              0.5 * raised_cosine_pdf(x + t.center, w);
                   }},
        f);
}

double component_score(const NoiseFamily& f, double x) {
    return std::visit(
        overloaded{[&](const GaussianNoise& g) {
                       double sigma = 0.0;
                       if (!is_centered_isotropic(g, &sigma)) {
                           throw Unsupported("component_score: gaussian noise is not centered isotropic");
                       }
                       return -x / (sigma * sigma);
                   },
                   [&](const LaplaceIid& l) {
                       return x == 0.0 ? 0.0 : -std::copysign(1.0, x) / l.scale;
                   },
                   [&](const CauchyIid& c) { return -2.0 * x / (c.scale * c.scale + x * x); },
                   [&](const Cos2Bounded& c) { return raised_cosine_score(x - c.midpoint(), c.width()); },
                   [&](const TwinUniform& t) {
                       const double w = 2.0 * t.half_width;
                       return x >= 0.0 ? raised_cosine_score(x - t.center, w)
                                       : raised_cosine_score(x + t.center, w);
                   }},
        f);
}

std::pair<double, double> component_support(const NoiseFamily& f) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    if (const auto* c = std::get_if<Cos2Bounded>(&f)) return {c->lower, c->upper};
    if (const auto* t = std::get_if<TwinUniform>(&f)) {
        return {-t->center - t->half_width, t->center + t->half_width};
    }
    return {-inf, inf};
}

Vector log_density_gradient(const NoiseFamily& f, const Vector& x) {
    if (const auto* g = std::get_if<GaussianNoise>(&f)) {
        return -(robust_inverse(g->cov.sym()).matrix() * (x - g->mean));
    }
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) out(i) = component_score(f, x(i));
    return out;
}

}  // namespace ppcr
