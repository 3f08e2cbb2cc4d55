#include "ppcr/mechanisms.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/fisher.hpp"

#include <cmath>
#include <limits>
#include <numbers>

namespace ppcr {

namespace {

double require_scalar_budget(const MeasurementModel& model, const PsdMatrix& budget, const char* op) {
    model.validate();
    if (budget.dim() != model.m()) {
        throw InvalidInput(std::string(op) + ": budget is " + std::to_string(budget.dim()) +
                           "-dim but the measurement is " + std::to_string(model.m()) + "-dim");
    }
    double s = 0.0;
    if (!budget.is_scaled_identity(&s)) {
        throw Unsupported(std::string(op) + ": i.i.d. calibration needs a budget of the form s * I");
    }
    if (!(s > 0.0)) throw InvalidInput(std::string(op) + ": budget scale must be > 0");
    return s;
}

Mechanism data_perturbation(const MeasurementModel& model, MechanismKind kind, NoiseFamily noise,
                            double s) {
    const Eigen::Index m = model.m();
    Mechanism mech;
    mech.kind = kind;
    mech.cls = MechanismClass::affine;
    mech.transform = Matrix::Identity(m, m);
    mech.offset = Vector::Zero(m);
    mech.noise_map = Matrix::Identity(m, m);
    mech.additive_noise = std::move(noise);
    mech.certified_bound = PsdMatrix::scaled_identity(m, s);
    return mech;
}

}  // namespace

Mechanism gaussian_optimal_mechanism(const MeasurementModel& model, const PsdMatrix& budget) {
    model.validate();
    if (budget.dim() != model.m()) {
        throw InvalidInput("gaussian_optimal_mechanism: budget is " + std::to_string(budget.dim()) +
                           "-dim but the measurement is " + std::to_string(model.m()) + "-dim");
    }
    const Eigen::Index m = model.m();
    const Matrix root = psd_sqrt(budget).matrix();
    Mechanism mech;
    mech.kind = MechanismKind::gaussian_optimal;
    mech.cls = MechanismClass::affine;
    mech.transform = root;
    mech.offset = -(root * noise_location(model.noise));
    mech.noise_map = Matrix::Identity(m, m);
    mech.additive_noise = gaussian_iid(m, 1.0);
    mech.certified_bound = budget;
    return mech;
}

Mechanism calibrate_laplace_data_perturbation(const MeasurementModel& model, const PsdMatrix& budget) {
    const double s = require_scalar_budget(model, budget, "calibrate_laplace_data_perturbation");
    return data_perturbation(model, MechanismKind::laplace_data, LaplaceIid{1.0 / std::sqrt(s), model.m()}, s);
}

Mechanism calibrate_laplace_output_perturbation(const MeasurementModel& model, const PsdMatrix& budget) {
    const double s = require_scalar_budget(model, budget, "calibrate_laplace_output_perturbation");
    const Matrix gram = model.H.transpose() * model.H;
    if (!is_positive_definite_relative(SymMatrix(gram))) {
        throw NotIdentifiable("calibrate_laplace_output_perturbation: H is rank deficient");
    }
    const Matrix a = gram.ldlt().solve(model.H.transpose());
    // lambda_max(A^T A) == lambda_max(A A^T); the latter is n x n.
    const double top = SymMatrix(a * a.transpose()).eigenvalues().maxCoeff();
    const double b = std::sqrt(top / s);

    const Eigen::Index n = model.n();
    Mechanism mech;
    mech.kind = MechanismKind::laplace_output;
    mech.cls = MechanismClass::affine;
    mech.transform = a;
    mech.offset = Vector::Zero(n);
    mech.noise_map = Matrix::Identity(n, n);
    mech.additive_noise = LaplaceIid{b, n};
    mech.certified_bound = PsdMatrix::scaled_identity(model.m(), s);
    return mech;
}

Mechanism calibrate_cauchy_data_perturbation(const MeasurementModel& model, const PsdMatrix& budget) {
    const double s = require_scalar_budget(model, budget, "calibrate_cauchy_data_perturbation");
    return data_perturbation(model, MechanismKind::cauchy_data,
                             CauchyIid{1.0 / std::sqrt(2.0 * s), model.m()}, s);
}

Mechanism calibrate_cos2_mechanism(const MeasurementModel& model, const PsdMatrix& budget) {
    const double s = require_scalar_budget(model, budget, "calibrate_cos2_mechanism");
    const double width = 2.0 * std::numbers::pi / std::sqrt(s);
    return data_perturbation(model, MechanismKind::cos2_data,
                             Cos2Bounded{-0.5 * width, 0.5 * width, model.m()}, s);
}

double twin_scale_fisher(double center, double half_width) {
    validate(NoiseFamily{TwinUniform{center, half_width, 1}});
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    return pi2 * center * center / (half_width * half_width) + pi2 / 3.0 + 1.0;
}

Mechanism calibrate_twin_uniform_multiplicative(const MeasurementModel& model, const PsdMatrix& budget,
                                                const Region& y_region, const Vector& offset,
                                                double center) {
    const double s = require_scalar_budget(model, budget, "calibrate_twin_uniform_multiplicative");
    const Eigen::Index m = model.m();
    if (y_region.low.size() != m || y_region.high.size() != m || offset.size() != m) {
        throw InvalidInput("calibrate_twin_uniform_multiplicative: region/offset dimension mismatch");
    }
    if (!(center > 0.0)) throw InvalidInput("calibrate_twin_uniform_multiplicative: center must be > 0");

    // I_z(y) = diag(J(delta) / u_j^2), u = y + offset; its supremum over the
    // box sits at the component closest to zero.
    double closest = std::numeric_limits<double>::infinity();
    for (Eigen::Index j = 0; j < m; ++j) {
        const double lo = y_region.low(j) + offset(j);
        const double hi = y_region.high(j) + offset(j);
        if (!(hi >= lo)) throw InvalidInput("calibrate_twin_uniform_multiplicative: region low > high");
        if (lo <= 0.0 && hi >= 0.0) {
            throw CalibrationInfeasible("twin-uniform: region component " + std::to_string(j) +
                                        " contains y + offset = 0; Fisher information is unbounded there");
        }
        closest = std::min(closest, std::min(std::abs(lo), std::abs(hi)));
    }
    const double target = s * closest * closest;

    // J decreases in delta; the widest lobes (delta -> center) leak the least.
    constexpr double pi2 = std::numbers::pi * std::numbers::pi;
    const double floor = pi2 + pi2 / 3.0 + 1.0;
    if (!(target > floor)) {
        throw CalibrationInfeasible("twin-uniform: budget s = " + std::to_string(s) +
                                    " is below the smallest achievable Fisher information over the region");
    }
    const double wide = std::numbers::pi * center / std::sqrt(target - pi2 / 3.0 - 1.0);

    Mechanism mech;
    mech.kind = MechanismKind::twin_uniform_mult;
    mech.cls = MechanismClass::multiplicative;
    mech.transform = Matrix::Identity(m, m);
    mech.offset = offset;
    mech.noise_map = Matrix::Zero(m, 0);
    mech.multiplicative_noise = TwinUniform{center, wide, m};
    mech.certified_bound = PsdMatrix::scaled_identity(m, s);
    mech.region = y_region;
    return mech;
}

Mechanism squared_output_fixture(const MeasurementModel& model, double tau) {
    model.validate();
    if (!(tau > 0.0)) throw InvalidInput("squared_output_fixture: tau must be > 0");
    const Eigen::Index m = model.m();
    Mechanism mech;
    mech.kind = MechanismKind::squared_output;
    mech.cls = MechanismClass::squared;
    mech.transform = Matrix::Identity(m, m);
    mech.offset = Vector::Zero(m);
    mech.noise_map = Matrix::Identity(m, m);
    mech.additive_noise = gaussian_iid(m, tau);
    mech.certified_bound = PsdMatrix::zero(m);
    return mech;
}

Vector sample(const Mechanism& mech, const Vector& y, RandomStream& rng) {
    if (y.size() != mech.input_dim()) {
        throw InvalidInput("sample: y has " + std::to_string(y.size()) + " entries, mechanism expects " +
                           std::to_string(mech.input_dim()));
    }
    Vector z = mech.transform * y + mech.offset;
    if (mech.cls == MechanismClass::multiplicative || mech.cls == MechanismClass::mixed) {
        if (mech.multiplicative_noise) z = z.cwiseProduct(sample_noise(*mech.multiplicative_noise, rng));
    }
    if (mech.cls != MechanismClass::multiplicative && mech.additive_noise) {
        z += mech.noise_map * sample_noise(*mech.additive_noise, rng);
    }
    if (mech.cls == MechanismClass::squared) z = z.array().square().matrix();
    return z;
}

}  // namespace ppcr
