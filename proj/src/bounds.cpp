#include "ppcr/bounds.hpp"

#include "ppcr/errors.hpp"

#include <cassert>

namespace ppcr {

namespace {

/// H^T R (R C R + I)^{-1} R H with R = S^{1/2} and C the (inverse-Fisher) noise covariance.
PsdMatrix sandwich(const Matrix& H, const PsdMatrix& budget, const Matrix& cov) {
    const Matrix root = psd_sqrt(budget).matrix();
    const Eigen::Index m = H.rows();
    const Matrix inner = root * cov * root + Matrix::Identity(m, m);
    const Matrix rh = root * H;
    return PsdMatrix(SymMatrix(rh.transpose() * inner.ldlt().solve(rh)));
}

void check_dims(const Matrix& H, const PsdMatrix& budget, const char* op) {
    if (H.rows() < 1 || H.cols() < 1) throw InvalidInput(std::string(op) + ": H must be non-empty");
    if (budget.dim() != H.rows()) {
        throw InvalidInput(std::string(op) + ": budget is " + std::to_string(budget.dim()) +
                           "-dim but H has " + std::to_string(H.rows()) + " rows");
    }
}

PpcrResult finish(const Matrix& H, const PsdMatrix& budget, PsdMatrix pp_fisher, bool attainable) {
    PpcrResult out;
    out.pp_fisher = std::move(pp_fisher);
    out.identifiable = identifiable_under_privacy(H, budget);
    out.attainable = attainable && out.identifiable;
    if (out.identifiable) {
        // Identifiability guarantees an invertible pp_fisher; robust_inverse
        // throws otherwise.
        out.sigma_ppcr = PsdMatrix(robust_inverse(out.pp_fisher.sym()));
    }
    return out;
}

}  // namespace

bool identifiable_under_privacy(const Matrix& H, const PsdMatrix& budget) {
    check_dims(H, budget, "identifiable_under_privacy");
    return is_positive_definite_relative(SymMatrix(H.transpose() * budget.matrix() * H), kRankTolerance);
}

double PpcrResult::trace() const {
    return sigma_ppcr ? sigma_ppcr->matrix().trace() : std::numeric_limits<double>::infinity();
}

PpcrResult ppcr_bound(const Matrix& H, const PsdMatrix& budget, const FisherMatrix& fisher_y) {
    check_dims(H, budget, "ppcr_bound");
    if (fisher_y.value.dim() != H.rows()) throw InvalidInput("ppcr_bound: Fisher matrix dimension mismatch");
    const Matrix cov = robust_inverse(fisher_y.value.sym()).matrix();
    return finish(H, budget, sandwich(H, budget, cov), false);
}

PpcrResult ppcr_bound(const MeasurementModel& model, const PsdMatrix& budget) {
    model.validate();
    check_dims(model.H, budget, "ppcr_bound");
    if (const auto* g = std::get_if<GaussianNoise>(&model.noise)) {
        return finish(model.H, budget, sandwich(model.H, budget, g->cov.matrix()), true);
    }
    const Matrix cov = robust_inverse(fisher_of_noise(model.noise).value.sym()).matrix();
    return finish(model.H, budget, sandwich(model.H, budget, cov), false);
}

PsdMatrix pp_fisher_block(const SensorBlock& block) {
    check_dims(block.H, block.budget, "pp_fisher_block");
    if (block.noise_cov.dim() != block.H.rows()) throw InvalidInput("pp_fisher_block: noise covariance mismatch");
    return sandwich(block.H, block.budget, block.noise_cov.matrix());
}

PsdMatrix pp_fisher_additive(std::span<const SensorBlock> blocks) {
    if (blocks.empty()) throw InvalidInput("pp_fisher_additive: no blocks");
    const Eigen::Index n = blocks.front().H.cols();
    Matrix total = Matrix::Zero(n, n);
    for (const auto& b : blocks) {
        if (b.H.cols() != n) throw InvalidInput("pp_fisher_additive: inconsistent parameter dimension");
        total += pp_fisher_block(b).matrix();
    }
    return PsdMatrix(SymMatrix(total));
}

bool joint_identifiable(std::span<const SensorBlock> blocks) {
    if (blocks.empty()) return false;
    const Eigen::Index n = blocks.front().H.cols();
    Matrix total = Matrix::Zero(n, n);
    for (const auto& b : blocks) {
        if (b.H.cols() != n) throw InvalidInput("joint_identifiable: inconsistent parameter dimension");
        check_dims(b.H, b.budget, "joint_identifiable");
        total += b.H.transpose() * b.budget.matrix() * b.H;
    }
    return is_positive_definite_relative(SymMatrix(total), kRankTolerance);
}

double consensus_mse_bound(std::span<const double> budgets) {
    if (budgets.empty()) throw InvalidInput("consensus_mse_bound: no agents");
    double acc = 0.0;
    for (double s : budgets) {
        if (!(s > 0.0)) throw InvalidInput("consensus_mse_bound: every budget must be > 0");
        acc += 1.0 / s;
    }
    const double n = static_cast<double>(budgets.size());
    return acc / (n * n);
}

}  // namespace ppcr
