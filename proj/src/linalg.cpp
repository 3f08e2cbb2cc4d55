#include "ppcr/linalg.hpp"

#include "ppcr/errors.hpp"

#include <algorithm>
#include <cmath>

namespace ppcr {

namespace {

Eigen::SelfAdjointEigenSolver<Matrix> eigensolve(const Matrix& m) {
    return Eigen::SelfAdjointEigenSolver<Matrix>(m, Eigen::ComputeEigenvectors);
}

void require_same_dim(const SymMatrix& a, const SymMatrix& b, const char* what) {
    if (a.dim() != b.dim()) {
        throw InvalidInput(std::string(what) + ": dimension mismatch (" +
                           std::to_string(a.dim()) + " vs " + std::to_string(b.dim()) + ")");
    }
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& entries) {
    if (entries.rows() < 1 || entries.rows() != entries.cols()) {
        throw InvalidInput("SymMatrix: entries must be square with dim >= 1");
    }
    entries_ = 0.5 * (entries + entries.transpose());
}

SymMatrix SymMatrix::identity(Eigen::Index dim) {
    return SymMatrix(Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::zero(Eigen::Index dim) { return SymMatrix(Matrix::Zero(dim, dim)); }

SymMatrix SymMatrix::scaled_identity(Eigen::Index dim, double scale) {
    return SymMatrix(scale * Matrix::Identity(dim, dim));
}

SymMatrix SymMatrix::diagonal(std::span<const double> diag) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(diag.size()),
                            static_cast<Eigen::Index>(diag.size()));
    for (std::size_t i = 0; i < diag.size(); ++i) {
        m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = diag[i];
    }
    return SymMatrix(m);
}

Vector SymMatrix::eigenvalues() const {
    return Eigen::SelfAdjointEigenSolver<Matrix>(entries_, Eigen::EigenvaluesOnly).eigenvalues();
}

SymMatrix operator+(const SymMatrix& a, const SymMatrix& b) {
    require_same_dim(a, b, "SymMatrix +");
    return SymMatrix(a.entries_ + b.entries_);
}

SymMatrix operator-(const SymMatrix& a, const SymMatrix& b) {
    require_same_dim(a, b, "SymMatrix -");
    return SymMatrix(a.entries_ - b.entries_);
}

SymMatrix operator*(double s, const SymMatrix& a) { return SymMatrix(s * a.entries_); }

PsdMatrix::PsdMatrix(const SymMatrix& base) {
    const auto solver = eigensolve(base.matrix());
    const Vector& lambda = solver.eigenvalues();
    const double floor = -kPsdTolerance * std::max(1.0, lambda.maxCoeff());
    if (lambda.minCoeff() < floor) {
        throw InvalidInput("PsdMatrix: smallest eigenvalue " + std::to_string(lambda.minCoeff()) +
                           " is below the PSD tolerance");
    }
    if (lambda.minCoeff() >= 0.0) {
        base_ = base;
        return;
    }
    // Clamp tiny negative eigenvalues.
    const Vector clamped = lambda.cwiseMax(0.0);
    base_ = SymMatrix(solver.eigenvectors() * clamped.asDiagonal() *
                      solver.eigenvectors().transpose());
}

PsdMatrix PsdMatrix::scaled_identity(Eigen::Index dim, double scale) {
    if (scale < 0.0) throw InvalidInput("PsdMatrix: negative scale");
    return PsdMatrix(SymMatrix::scaled_identity(dim, scale));
}

bool PsdMatrix::is_scaled_identity(double* scale) const {
    const Matrix& m = matrix();
    const double s = m(0, 0);
    if ((m - s * Matrix::Identity(dim(), dim())).cwiseAbs().maxCoeff() != 0.0) return false;
    if (scale != nullptr) *scale = s;
    return true;
}

PsdMatrix psd_sqrt(const PsdMatrix& a) {
    if (a.dim() < 1) throw InvalidInput("psd_sqrt: dimension must be >= 1");
    const auto solver = eigensolve(a.matrix());
    const Vector root = solver.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    return PsdMatrix(
        SymMatrix(solver.eigenvectors() * root.asDiagonal() * solver.eigenvectors().transpose()));
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
    require_same_dim(a, b, "loewner_leq");
    const Vector lambda = (b - a).eigenvalues();
    const double spectral = std::max(std::abs(lambda.minCoeff()), std::abs(lambda.maxCoeff()));
    return lambda.minCoeff() >= -tol * std::max(1.0, spectral);
}

bool is_matrix_supremum(const SymMatrix& candidate, std::span<const SymMatrix> family,
                        double tol) {
    if (family.empty()) throw InvalidInput("is_matrix_supremum: empty family");
    bool member = false;
    for (const auto& f : family) {
        require_same_dim(candidate, f, "is_matrix_supremum");
        if ((candidate.matrix() - f.matrix()).cwiseAbs().maxCoeff() <= tol) member = true;
    }
    if (!member) return false;
    return std::all_of(family.begin(), family.end(),
                       [&](const SymMatrix& f) { return loewner_leq(f, candidate, tol); });
}

SymMatrix robust_inverse(const SymMatrix& a, double ridge) {
    if (ridge < 0.0) throw InvalidInput("robust_inverse: ridge must be >= 0");
    const Matrix shifted = a.matrix() + ridge * Matrix::Identity(a.dim(), a.dim());
    const auto solver = eigensolve(shifted);
    const Vector& lambda = solver.eigenvalues();
    const double largest = lambda.cwiseAbs().maxCoeff();
    const double smallest = lambda.cwiseAbs().minCoeff();
    if (largest == 0.0 || smallest <= largest * 1e-12) {
        throw NotIdentifiable("robust_inverse: matrix is singular (condition number >= 1e12)");
    }
    return SymMatrix(solver.eigenvectors() * lambda.cwiseInverse().asDiagonal() *
                     solver.eigenvectors().transpose());
}

bool is_positive_definite_relative(const SymMatrix& a, double rel_tol) {
    const Vector lambda = a.eigenvalues();
    const double top = lambda.maxCoeff();
    return top > 0.0 && lambda.minCoeff() > rel_tol * top;
}

}  // namespace ppcr
