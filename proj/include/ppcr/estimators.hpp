#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/model.hpp"

#include <string>
#include <vector>

namespace ppcr {

struct Estimate {
    Vector theta_hat;
    std::string estimator_id;
    int iterations = 0;
    bool converged = true;
};

/// (H^T H)^{-1} H^T. Throws NotIdentifiable for rank-deficient H.
Matrix least_squares_operator(const Matrix& H);

Estimate least_squares(const Vector& y, const Matrix& H);

/// theta_hat = Sigma_PPCR H^T R (R Sigma_w R + I)^{-1} (z - R mu_w), R = S^{1/2}.
/// Gain and shift are computed once; apply() is a mat-vec.
class OptimalLinearEstimator {
public:
    OptimalLinearEstimator(const MeasurementModel& model, const PsdMatrix& budget);

    Estimate operator()(const Vector& z) const;
    const Matrix& gain() const { return gain_; }
    const Vector& shift() const { return shift_; }

private:
    Matrix gain_;
    Vector shift_;
};

Estimate optimal_linear_estimate(const Vector& z, const MeasurementModel& model, const PsdMatrix& budget);

enum class ConvolutionKind { laplace, cauchy };

struct MleOptions {
    double gradient_tolerance = 1e-8;
    int max_iterations = 500;
    int cauchy_starts = 5;
    /// Cauchy: elemental (n-row exact-fit) candidates screened for starts;
    /// all subsets when there are at most this many, else an even stride.
    int max_elemental = 256;
};

/// Maximum likelihood for z = H theta + w + d, w ~ N(mu, sigma^2 I) and
/// d i.i.d. Laplace(0, scale) or Cauchy(0, scale). Quasi-Newton (BFGS with
/// Armijo backtracking) on the exact convolution log-likelihood. The Cauchy
/// likelihood is multimodal: starts are the LAD fit plus the best elemental
/// fits by likelihood.
class ConvolutionMle {
public:
    ConvolutionMle(const MeasurementModel& model, ConvolutionKind kind, double scale, MleOptions options = {});

    Estimate operator()(const Vector& z) const;

    /// Negative log-likelihood and its gradient in theta.
    double objective(const Vector& z, const Vector& theta, Vector* gradient) const;

private:
    Estimate minimize(const Vector& z, Vector theta) const;

    Matrix H_;
    Vector mu_;
    Matrix ls_;
    Matrix inv_hessian0_;
    struct Elemental {
        std::vector<Eigen::Index> rows;
        Matrix inverse;  // (H restricted to rows)^{-1}
    };
    std::vector<Elemental> elementals_;
    ConvolutionKind kind_;
    double sigma_;
    double scale_;
    MleOptions options_;
};

Estimate mle_laplace_data(const Vector& z, const MeasurementModel& model, double b);
Estimate mle_cauchy_data(const Vector& z, const MeasurementModel& model, double gamma);

/// The released output is the estimate.
Estimate output_perturbation_estimate(const Vector& z);

/// y_hat_j = sign_j |z_j| / c - offset_j, sign taken from the (sign-definite)
/// shifted region, then least squares.
class TwinCentralEstimator {
public:
    TwinCentralEstimator(const MeasurementModel& model, const Mechanism& mech);
    Estimate operator()(const Vector& z) const;

private:
    Matrix ls_;
    Vector sign_;
    Vector offset_;
    double center_;
};

Estimate twin_uniform_central_estimate(const Vector& z, const MeasurementModel& model, const Mechanism& mech);

}  // namespace ppcr
