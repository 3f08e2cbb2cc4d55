#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/noise.hpp"
#include "ppcr/random.hpp"

#include <optional>
#include <string>
#include <string_view>

namespace ppcr {

/// Linear measurement system y = H theta + w.
struct MeasurementModel {
    Matrix H;
    NoiseFamily noise;

    static MeasurementModel gaussian(Matrix H, double sigma);

    Eigen::Index m() const { return H.rows(); }
    Eigen::Index n() const { return H.cols(); }

    /// Throws InvalidInput when the noise dimension differs from rows(H).
    void validate() const;

    Vector measure(const Vector& theta, RandomStream& rng) const;
};

enum class MechanismClass {
    affine,          // z = A y + b + B d
    multiplicative,  // z = D (A y + b), D diagonal
    mixed,           // z = D (A y + b) + B d
    squared,         // z = (A y + b + B d)^2 componentwise; audit fixture, not admissible
};

enum class MechanismKind {
    gaussian_optimal,
    laplace_data,
    laplace_output,
    cauchy_data,
    cos2_data,
    twin_uniform_mult,
    squared_output,
    custom,
};

std::string_view to_string(MechanismKind kind);
/// Accepts the scenario-file spellings ("gaussian-optimal", "laplace-data", ...).
MechanismKind parse_mechanism_kind(std::string_view text);

/// Axis-aligned box of y values (per component) over which a
/// region-scoped certificate holds.
struct Region {
    Vector low;
    Vector high;
};

/// Calibrated stochastic obfuscation map with its certified Fisher budget.
struct Mechanism {
    MechanismKind kind = MechanismKind::custom;
    MechanismClass cls = MechanismClass::affine;
    Matrix transform;   // A
    Vector offset;      // b
    Matrix noise_map;   // B (additive part)
    std::optional<NoiseFamily> additive_noise;
    std::optional<NoiseFamily> multiplicative_noise;
    PsdMatrix certified_bound;        // S with I_z(y) <= S
    std::optional<Region> region;     // empty: certificate holds for every y

    Eigen::Index input_dim() const { return transform.cols(); }
    Eigen::Index output_dim() const { return transform.rows(); }
    bool global_scope() const { return !region.has_value(); }

    /// Scale parameter of the scalar privacy noise (b, gamma, L or delta),
    /// or zero for Gaussian/absent noise.
    double noise_scale() const;
};

}  // namespace ppcr
