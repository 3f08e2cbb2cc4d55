#include "ppcr/estimators.hpp"

#include "ppcr/bounds.hpp"
#include "ppcr/errors.hpp"
#include "ppcr/special.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace ppcr {

namespace {

/// sigma for w ~ N(mu, sigma^2 I); anything else is rejected.
double isotropic_sigma(const MeasurementModel& model, const char* op) {
    const auto* g = std::get_if<GaussianNoise>(&model.noise);
    if (g == nullptr) throw Unsupported(std::string(op) + ": measurement noise must be Gaussian");
    double var = 0.0;
    if (!g->cov.is_scaled_identity(&var)) {
        throw Unsupported(std::string(op) + ": measurement noise covariance must be sigma^2 I");
    }
    return std::sqrt(var);
}

const GaussianNoise& gaussian_noise(const MeasurementModel& model, const char* op) {
    const auto* g = std::get_if<GaussianNoise>(&model.noise);
    if (g == nullptr) throw Unsupported(std::string(op) + ": measurement noise must be Gaussian");
    return *g;
}

// -ln p(r) and d/dr of it, for one residual
struct Loss {
    double value;
    double slope;
};

Loss pure_cauchy_loss(double r, double gamma) {
    const double t = r / gamma;
    return {std::log(std::numbers::pi * gamma) + std::log1p(t * t), 2.0 * t / (gamma * (1.0 + t * t))};
}

// Least absolute deviations by IRLS. Convex, so any start reaches the
// optimum; unlike LS it is not dragged off by a single heavy-tailed draw.
Vector lad_fit(const Matrix& H, const Vector& y, Vector theta, double floor) {
    for (int it = 0; it < 200; ++it) {
        const Vector r = y - H * theta;
        const Vector w = r.cwiseAbs().cwiseMax(floor).cwiseInverse();
        const Matrix A = H.transpose() * w.asDiagonal() * H;
        const Vector next = A.ldlt().solve(H.transpose() * w.asDiagonal() * y);
        if (!next.allFinite()) break;
        const double step = (next - theta).norm();
        theta = next;
        if (step <= 1e-12 * (1.0 + theta.norm())) break;
    }
    return theta;
}

}  // namespace

Matrix least_squares_operator(const Matrix& H) {
    const SymMatrix gram(H.transpose() * H);
    if (!is_positive_definite_relative(gram, kRankTolerance)) {
        throw NotIdentifiable("least squares: H^T H is singular");
    }
    return gram.matrix().ldlt().solve(H.transpose());
}

Estimate least_squares(const Vector& y, const Matrix& H) {
    if (y.size() != H.rows()) throw InvalidInput("least_squares: y dimension mismatch");
    return {least_squares_operator(H) * y, "least-squares", 0, true};
}

OptimalLinearEstimator::OptimalLinearEstimator(const MeasurementModel& model, const PsdMatrix& budget) {
    const GaussianNoise& g = gaussian_noise(model, "optimal_linear_estimate");
    const PpcrResult bound = ppcr_bound(model, budget);
    if (!bound.identifiable) throw NotIdentifiable("optimal_linear_estimate: H^T S H is singular");
    const Matrix root = psd_sqrt(budget).matrix();
    const Eigen::Index m = model.m();
    const Matrix inner = root * g.cov.matrix() * root + Matrix::Identity(m, m);
    // Sigma_PPCR H^T R C^{-1}
    const Matrix rhs = inner.ldlt().solve(root * model.H);
    gain_ = bound.sigma_ppcr->matrix() * rhs.transpose();
    shift_ = root * g.mean;
}

Estimate OptimalLinearEstimator::operator()(const Vector& z) const {
    if (z.size() != shift_.size()) throw InvalidInput("optimal_linear_estimate: z dimension mismatch");
    return {gain_ * (z - shift_), "optimal-linear", 0, true};
}

Estimate optimal_linear_estimate(const Vector& z, const MeasurementModel& model, const PsdMatrix& budget) {
    return OptimalLinearEstimator(model, budget)(z);
}

ConvolutionMle::ConvolutionMle(const MeasurementModel& model, ConvolutionKind kind, double scale,
                               MleOptions options)
    : H_(model.H), kind_(kind), sigma_(isotropic_sigma(model, "mle")), scale_(scale), options_(options) {
    model.validate();
    if (!(scale >= 0.0)) throw InvalidInput("mle: privacy noise scale must be >= 0");
    if (kind == ConvolutionKind::laplace && sigma_ == 0.0 && scale > 0.0) {
        throw Unsupported("mle_laplace_data: the pure Laplace likelihood is not differentiable; needs sigma > 0");
    }
    mu_ = gaussian_noise(model, "mle").mean;
    ls_ = least_squares_operator(H_);
    // Start BFGS from the inverse of the Gaussian-approximation Hessian.
    // (For Cauchy 2 gamma^2 is only a curvature scale.)
    const double var = sigma_ * sigma_ + 2.0 * scale * scale;
    inv_hessian0_ = var * (H_.transpose() * H_).ldlt().solve(Matrix::Identity(H_.cols(), H_.cols()));

    if (kind_ == ConvolutionKind::cauchy && scale_ > 0.0) {
        const Eigen::Index m = H_.rows();
        const Eigen::Index n = H_.cols();
        std::vector<std::vector<Eigen::Index>> subsets;
        std::vector<Eigen::Index> pick(static_cast<std::size_t>(n));
        for (Eigen::Index i = 0; i < n; ++i) pick[static_cast<std::size_t>(i)] = i;
        // lexicographic n-subsets of m rows
        while (true) {
            subsets.push_back(pick);
            Eigen::Index i = n - 1;
            while (i >= 0 && pick[static_cast<std::size_t>(i)] == m - n + i) --i;
            if (i < 0) break;
            ++pick[static_cast<std::size_t>(i)];
            for (Eigen::Index j = i + 1; j < n; ++j) pick[static_cast<std::size_t>(j)] = pick[static_cast<std::size_t>(j - 1)] + 1;
            if (subsets.size() > 100000) break;
        }
        const std::size_t keep = static_cast<std::size_t>(std::max(1, options_.max_elemental));
        const double stride = subsets.size() <= keep ? 1.0 : static_cast<double>(subsets.size()) / keep;
        for (std::size_t k = 0; k < std::min(keep, subsets.size()); ++k) {
            const auto& rows = subsets[static_cast<std::size_t>(k * stride)];
            Matrix sub(n, n);
            for (Eigen::Index r = 0; r < n; ++r) sub.row(r) = H_.row(rows[static_cast<std::size_t>(r)]);
            const Eigen::JacobiSVD<Matrix> svd(sub);
            const auto sv = svd.singularValues();
            if (!(sv(n - 1) > 1e-8 * sv(0))) continue;
            elementals_.push_back({rows, sub.inverse()});
        }
    }
}

double ConvolutionMle::objective(const Vector& z, const Vector& theta, Vector* gradient) const {
    const Vector r = z - mu_ - H_ * theta;
    Vector slope(r.size());
    double total = 0.0;
    for (Eigen::Index j = 0; j < r.size(); ++j) {
        Loss l{};
        if (kind_ == ConvolutionKind::laplace) {
            const auto d = special::gauss_laplace_log_density(r(j), sigma_, scale_);
            l = {-d.value, -d.derivative};
        } else if (sigma_ == 0.0) {
            l = pure_cauchy_loss(r(j), scale_);
        } else {
            const auto d = special::voigt_log_density(r(j), sigma_, scale_);
            l = {-d.value, -d.derivative};
        }
        total += l.value;
        slope(j) = l.slope;
    }
    // d/dtheta of sum loss(z - H theta) = -H^T slope
    if (gradient != nullptr) *gradient = -(H_.transpose() * slope);
    return total;
}

Estimate ConvolutionMle::minimize(const Vector& z, Vector theta) const {
    Vector grad;
    double f = objective(z, theta, &grad);
    Matrix inv_h = inv_hessian0_;
    const Eigen::Index n = theta.size();
    int it = 0;
    for (; it < options_.max_iterations; ++it) {
        if (grad.norm() <= options_.gradient_tolerance) break;
        Vector dir = -(inv_h * grad);
        double slope = grad.dot(dir);
        if (!(slope < 0.0)) {
            inv_h = inv_hessian0_;
            dir = -(inv_h * grad);
            slope = grad.dot(dir);
        }
        double step = 1.0;
        Vector next;
        Vector next_grad;
        double next_f = std::numeric_limits<double>::infinity();
        bool accepted = false;
        for (int bt = 0; bt < 60; ++bt) {
            next = theta + step * dir;
            next_f = objective(z, next, &next_grad);
            if (std::isfinite(next_f) && next_f <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            // near the optimum f is flat to rounding; fall back to gradient decrease
            if (std::isfinite(next_f) && next_f <= f + 1e-13 * std::max(1.0, std::abs(f)) &&
                next_grad.norm() < grad.norm()) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) break;
        const Vector s = next - theta;
        const Vector y = next_grad - grad;
        const double sy = s.dot(y);
        if (sy > 1e-300) {
            const double rho = 1.0 / sy;
            const Matrix I = Matrix::Identity(n, n);
            inv_h = (I - rho * s * y.transpose()) * inv_h * (I - rho * y * s.transpose()) + rho * s * s.transpose();
        }
        theta = next;
        f = next_f;
        grad = next_grad;
    }
    const bool converged = grad.norm() <= options_.gradient_tolerance;
    return {theta, kind_ == ConvolutionKind::laplace ? "mle-laplace" : "mle-cauchy", it, converged};
}

Estimate ConvolutionMle::operator()(const Vector& z) const {
    if (z.size() != H_.rows()) throw InvalidInput("mle: z dimension mismatch");
    const Vector seed = ls_ * (z - mu_);
    if (scale_ == 0.0) {
        return {seed, kind_ == ConvolutionKind::laplace ? "mle-laplace" : "mle-cauchy", 0, true};
    }
    if (kind_ == ConvolutionKind::laplace) return minimize(z, seed);

    // Starts: the LAD fit (the LS seed can sit wherever one Cauchy draw puts
    // it, where the likelihood is flat) and the best elemental fits.
    const Vector r = z - mu_;
    std::vector<std::pair<double, Vector>> candidates;
    candidates.emplace_back(-std::numeric_limits<double>::infinity(),
                            lad_fit(H_, r, seed, 1e-9 * std::max(scale_, sigma_)));
    for (const auto& e : elementals_) {
        Vector sub(static_cast<Eigen::Index>(e.rows.size()));
        for (std::size_t i = 0; i < e.rows.size(); ++i) sub(static_cast<Eigen::Index>(i)) = r(e.rows[i]);
        Vector th = e.inverse * sub;
        const double f = objective(z, th, nullptr);
        if (std::isfinite(f)) candidates.emplace_back(f, std::move(th));
    }
    const std::size_t wanted = std::min(candidates.size(), static_cast<std::size_t>(std::max(1, options_.cauchy_starts)));
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(wanted), candidates.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });

    Estimate best;
    double best_f = std::numeric_limits<double>::infinity();
    bool any_converged = false;
    int total_iterations = 0;
    for (std::size_t s = 0; s < wanted; ++s) {
        Estimate e = minimize(z, candidates[s].second);
        total_iterations += e.iterations;
        const double f = objective(z, e.theta_hat, nullptr);
        // converged starts beat unconverged ones
        const bool better = (e.converged && !any_converged) || ((e.converged == any_converged) && f < best_f);
        if (better) {
            best = std::move(e);
            best_f = f;
            any_converged = any_converged || best.converged;
        }
    }
    best.iterations = total_iterations;
    best.converged = any_converged;
    return best;
}

Estimate mle_laplace_data(const Vector& z, const MeasurementModel& model, double b) {
    return ConvolutionMle(model, ConvolutionKind::laplace, b)(z);
}

Estimate mle_cauchy_data(const Vector& z, const MeasurementModel& model, double gamma) {
    return ConvolutionMle(model, ConvolutionKind::cauchy, gamma)(z);
}

Estimate output_perturbation_estimate(const Vector& z) { return {z, "output-direct", 0, true}; }

TwinCentralEstimator::TwinCentralEstimator(const MeasurementModel& model, const Mechanism& mech) {
    if (mech.cls != MechanismClass::multiplicative || !mech.multiplicative_noise) {
        throw InvalidInput("twin central estimator: needs a multiplicative mechanism");
    }
    const auto* twin = std::get_if<TwinUniform>(&*mech.multiplicative_noise);
    if (twin == nullptr) throw InvalidInput("twin central estimator: noise must be twin-lobe");
    if (!mech.region) throw InvalidInput("twin central estimator: mechanism has no certified region");
    if (!mech.transform.isIdentity()) throw Unsupported("twin central estimator: transform must be the identity");
    const Eigen::Index m = model.m();
    if (mech.input_dim() != m) throw InvalidInput("twin central estimator: dimension mismatch");
    sign_.resize(m);
    for (Eigen::Index j = 0; j < m; ++j) {
        const double lo = mech.region->low(j) + mech.offset(j);
        const double hi = mech.region->high(j) + mech.offset(j);
        if (lo > 0.0) {
            sign_(j) = 1.0;
        } else if (hi < 0.0) {
            sign_(j) = -1.0;
        } else {
            throw InvalidInput("twin central estimator: region component " + std::to_string(j) +
                               " is not sign-definite");
        }
    }
    ls_ = least_squares_operator(model.H);
    offset_ = mech.offset;
    center_ = twin->center;
    // remove the measurement-noise mean so LS stays unbiased
    if (const auto* g = std::get_if<GaussianNoise>(&model.noise)) offset_ += g->mean;
}

Estimate TwinCentralEstimator::operator()(const Vector& z) const {
    if (z.size() != sign_.size()) throw InvalidInput("twin central estimator: z dimension mismatch");
    const Vector y_hat = sign_.cwiseProduct(z.cwiseAbs()) / center_ - offset_;
    return {ls_ * y_hat, "twin-central", 0, true};
}

Estimate twin_uniform_central_estimate(const Vector& z, const MeasurementModel& model, const Mechanism& mech) {
    return TwinCentralEstimator(model, mech)(z);
}

}  // namespace ppcr
