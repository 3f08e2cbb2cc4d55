#include "ppcr/model.hpp"

#include "ppcr/errors.hpp"

#include <array>
#include <utility>

namespace ppcr {

namespace {

constexpr std::array<std::pair<MechanismKind, std::string_view>, 8> kKindNames{{
    {MechanismKind::gaussian_optimal, "gaussian-optimal"},
    {MechanismKind::laplace_data, "laplace-data"},
    {MechanismKind::laplace_output, "laplace-output"},
    {MechanismKind::cauchy_data, "cauchy-data"},
    {MechanismKind::cos2_data, "cos2-data"},
    {MechanismKind::twin_uniform_mult, "twin-uniform-mult"},
    {MechanismKind::squared_output, "squared-output"},
    {MechanismKind::custom, "custom"},
}};

}  // namespace

MeasurementModel MeasurementModel::gaussian(Matrix H, double sigma) {
    if (!(sigma >= 0.0)) throw InvalidInput("measurement noise sigma must be >= 0");
    const Eigen::Index m = H.rows();
    return MeasurementModel{std::move(H), gaussian_iid(m, sigma)};
}

void MeasurementModel::validate() const {
    if (H.rows() < 1 || H.cols() < 1) throw InvalidInput("measurement model: H must be non-empty");
    ppcr::validate(noise);
    if (noise_dim(noise) != H.rows()) {
        throw InvalidInput("measurement model: noise dimension " + std::to_string(noise_dim(noise)) +
                           " != rows(H) " + std::to_string(H.rows()));
    }
}

Vector MeasurementModel::measure(const Vector& theta, RandomStream& rng) const {
    if (theta.size() != H.cols()) throw InvalidInput("measure: theta dimension mismatch");
    return H * theta + sample_noise(noise, rng);
}

std::string_view to_string(MechanismKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "custom";
}

MechanismKind parse_mechanism_kind(std::string_view text) {
    for (const auto& [k, name] : kKindNames) {
        if (name == text) return k;
    }
    throw InvalidInput("unknown mechanism kind '" + std::string(text) + "'");
}

double Mechanism::noise_scale() const {
    const NoiseFamily* f = nullptr;
    if (multiplicative_noise) {
        f = &*multiplicative_noise;
    } else if (additive_noise) {
        f = &*additive_noise;
    }
    if (f == nullptr) return 0.0;
    if (const auto* l = std::get_if<LaplaceIid>(f)) return l->scale;
    if (const auto* c = std::get_if<CauchyIid>(f)) return c->scale;
    if (const auto* c = std::get_if<Cos2Bounded>(f)) return c->width();
    if (const auto* t = std::get_if<TwinUniform>(f)) return t->half_width;
    return 0.0;
}

}  // namespace ppcr
