#pragma once

#include "ppcr/linalg.hpp"
#include "ppcr/model.hpp"
#include "ppcr/random.hpp"

namespace ppcr {

/// z = S^{1/2} (y - E[w]) + d with d ~ N(0, I). Certifies I_z(y) = S everywhere.
Mechanism gaussian_optimal_mechanism(const MeasurementModel& model, const PsdMatrix& budget);

/// z = y + d, d i.i.d. Laplace(0, 1/sqrt(s)). Budget must be s * I.
Mechanism calibrate_laplace_data_perturbation(const MeasurementModel& model, const PsdMatrix& budget);

/// z = (H^T H)^{-1} H^T y + d, d i.i.d. Laplace(0, b) with the smallest b
/// such that A^T A / b^2 <= s I.
Mechanism calibrate_laplace_output_perturbation(const MeasurementModel& model, const PsdMatrix& budget);

/// z = y + d, d i.i.d. Cauchy(0, 1/sqrt(2 s)).
Mechanism calibrate_cauchy_data_perturbation(const MeasurementModel& model, const PsdMatrix& budget);

/// z = y + d, d i.i.d. raised-cosine on [-L/2, L/2] with L = 2 pi / sqrt(s).
Mechanism calibrate_cos2_mechanism(const MeasurementModel& model, const PsdMatrix& budget);

/// z_j = D_j (y_j + offset_j) with twin-lobe D around +-center. The lobe
/// half-width is solved in closed form so the largest Fisher information over
/// the region, J(delta) / min_j |y_j + offset_j|^2, equals s. Throws
/// CalibrationInfeasible when the shifted region touches zero or when even
/// the widest admissible lobes leak more than s.
Mechanism calibrate_twin_uniform_multiplicative(const MeasurementModel& model, const PsdMatrix& budget,
                                                const Region& y_region, const Vector& offset,
                                                double center = 1.0);

/// Scale Fisher information of the twin-lobe noise,
/// J(delta) = pi^2 c^2 / delta^2 + pi^2 / 3 + 1.
double twin_scale_fisher(double center, double half_width);

/// Audit fixture z = (y + d)^2 componentwise, d ~ N(0, tau^2 I). Not
/// admissible: the map is not invertible in y for fixed d.
Mechanism squared_output_fixture(const MeasurementModel& model, double tau);

/// One draw z = M(y, d).
Vector sample(const Mechanism& mech, const Vector& y, RandomStream& rng);

}  // namespace ppcr
