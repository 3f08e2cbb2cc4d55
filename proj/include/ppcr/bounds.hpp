#pragma once

#include "ppcr/fisher.hpp"
#include "ppcr/linalg.hpp"
#include "ppcr/model.hpp"

#include <optional>
#include <span>

namespace ppcr {

inline constexpr double kRankTolerance = 1e-10;

/// True iff H^T S H is invertible (relative rank test at kRankTolerance).
bool identifiable_under_privacy(const Matrix& H, const PsdMatrix& budget);

struct PpcrResult {
    std::optional<PsdMatrix> sigma_ppcr;  // absent when not identifiable
    PsdMatrix pp_fisher;
    bool identifiable = false;
    /// The bound is attained by the Gaussian mechanism with the optimal
    /// linear estimator (Gaussian measurement noise only).
    bool attainable = false;

    double trace() const;
};

/// Privacy-preserving Fisher information
///   H^T S^{1/2} (S^{1/2} F^{-1} S^{1/2} + I)^{-1} S^{1/2} H
/// and its inverse, the privacy-preserving CR bound. `attainable` is false
/// in this overload since the noise law is unknown.
PpcrResult ppcr_bound(const Matrix& H, const PsdMatrix& budget, const FisherMatrix& fisher_y);

/// Same, with F taken from the model's noise family. For Gaussian noise the
/// noise covariance is used directly (no inversion) and `attainable` is set.
PpcrResult ppcr_bound(const MeasurementModel& model, const PsdMatrix& budget);

/// One sensor at one time: y = H theta + w, w ~ N(., noise_cov), budget S.
struct SensorBlock {
    Matrix H;
    PsdMatrix budget;
    PsdMatrix noise_cov;
};

/// Privacy-preserving Fisher information of one Gaussian block.
PsdMatrix pp_fisher_block(const SensorBlock& block);

/// Sum of per-block privacy-preserving Fisher matrices over sensors and times.
PsdMatrix pp_fisher_additive(std::span<const SensorBlock> blocks);

/// True iff sum_i H_i^T S_i H_i is invertible.
bool joint_identifiable(std::span<const SensorBlock> blocks);

/// (1/N^2) sum_i 1/S_i: the variance floor of privacy-preserving average
/// consensus with per-agent budgets S_i > 0.
double consensus_mse_bound(std::span<const double> budgets);

}  // namespace ppcr
