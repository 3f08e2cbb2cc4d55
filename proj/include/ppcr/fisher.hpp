#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/model.hpp"
#include "ppcr/noise.hpp"
#include "ppcr/parallel.hpp"

#include <cstdint>

namespace ppcr {

enum class FisherTarget { output_y, parameter_theta, mean_h_theta };

struct FisherMatrix {
    PsdMatrix value;
    FisherTarget with_respect_to = FisherTarget::output_y;
};

/// Location-model Fisher information of z = y + d with respect to y:
/// Gaussian -> cov^{-1}, Laplace(b) -> I/b^2, Cauchy(g) -> I/(2 g^2),
/// cos2 on width L -> (4 pi^2 / L^2) I. TwinUniform throws Unsupported.
FisherMatrix fisher_of_noise(const NoiseFamily& f);

/// Location Fisher information of one component, integral of (f'/f)^2 f,
/// computed by adaptive quadrature over the support.
double location_fisher_by_quadrature(const NoiseFamily& f);

/// Scale Fisher information of one component: integral of (1 + x f'(x)/f(x))^2 f(x).
/// For z = D u this gives I_z(u) = J / u^2.
double scale_fisher_by_quadrature(const NoiseFamily& f);

/// A^T * inner * A.
FisherMatrix fisher_affine_pushforward(const Matrix& a, const FisherMatrix& inner);

/// I_z(y) of a mechanism at the point y (affine: closed form; multiplicative:
/// diagonal J/u_j^2 pulled back through A).
SymMatrix mechanism_fisher(const Mechanism& mech, const Vector& y);

struct MonteCarloVector {
    Vector mean;
    Vector std_error;
};

struct MonteCarloMatrix {
    Matrix mean;
    Matrix std_error;
};

/// Monte Carlo estimate of E[d ln p(z|y) / dy] with y = H theta + w.
MonteCarloVector empirical_score_mean(const MeasurementModel& model, const Mechanism& mech,
                                      const Vector& theta, std::size_t n_samples,
                                      std::uint64_t seed,
                                      Execution exec = Execution::parallel);

/// Monte Carlo estimate of E[(d ln p(z|d,theta)/dtheta) (d ln p(z|w,theta)/dtheta)^T].
/// Supported: affine and multiplicative mechanisms (invertible noise map) and
/// the squared-output audit fixture, all with Gaussian measurement noise.
MonteCarloMatrix admissibility_cross_term(const Mechanism& mech, const MeasurementModel& model,
                                          const Vector& theta, std::size_t n_samples,
                                          std::uint64_t seed,
                                          Execution exec = Execution::parallel);

}  // namespace ppcr
