#pragma once

#include <Eigen/Dense>

#include <span>

namespace ppcr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double kPsdTolerance = 1e-10;

/// Dense real symmetric matrix. The stored entries are exactly symmetric:
/// construction averages the input with its transpose.
class SymMatrix {
public:
    SymMatrix() = default;
    explicit SymMatrix(const Matrix& entries);

    static SymMatrix identity(Eigen::Index dim);
    static SymMatrix zero(Eigen::Index dim);
    static SymMatrix scaled_identity(Eigen::Index dim, double scale);
    static SymMatrix diagonal(std::span<const double> diag);

    Eigen::Index dim() const { return entries_.rows(); }
    const Matrix& matrix() const { return entries_; }
    double operator()(Eigen::Index i, Eigen::Index j) const { return entries_(i, j); }

    /// Eigenvalues in ascending order.
    Vector eigenvalues() const;

    friend SymMatrix operator+(const SymMatrix& a, const SymMatrix& b);
    friend SymMatrix operator-(const SymMatrix& a, const SymMatrix& b);
    friend SymMatrix operator*(double s, const SymMatrix& a);

private:
    Matrix entries_;
};

/// Symmetric positive semidefinite matrix. Eigenvalues within
/// kPsdTolerance * max(1, lambda_max) below zero are clamped to zero;
/// anything more negative is rejected.
class PsdMatrix {
public:
    PsdMatrix() = default;
    explicit PsdMatrix(const SymMatrix& base);
    explicit PsdMatrix(const Matrix& entries) : PsdMatrix(SymMatrix(entries)) {}

    static PsdMatrix identity(Eigen::Index dim) { return PsdMatrix(SymMatrix::identity(dim)); }
    static PsdMatrix zero(Eigen::Index dim) { return PsdMatrix(SymMatrix::zero(dim)); }
    static PsdMatrix scaled_identity(Eigen::Index dim, double scale);

    Eigen::Index dim() const { return base_.dim(); }
    const SymMatrix& sym() const { return base_; }
    const Matrix& matrix() const { return base_.matrix(); }
    double operator()(Eigen::Index i, Eigen::Index j) const { return base_(i, j); }

    /// True when the matrix equals scale * I exactly; writes the scale.
    bool is_scaled_identity(double* scale = nullptr) const;

private:
    SymMatrix base_;
};

/// Principal square root via symmetric eigendecomposition.
PsdMatrix psd_sqrt(const PsdMatrix& a);

/// A <= B in the Loewner order, i.e. lambda_min(B - A) >= -tol * max(1, ||B - A||_2).
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol);

/// True iff the candidate belongs to the family (entrywise within tol) and
/// dominates every member in the Loewner order.
bool is_matrix_supremum(const SymMatrix& candidate, std::span<const SymMatrix> family,
                        double tol);

/// Inverse of (A + ridge * I). With ridge == 0 the matrix must be positive
/// definite with condition number below 1e12, otherwise NotIdentifiable is thrown.
SymMatrix robust_inverse(const SymMatrix& a, double ridge = 0.0);

/// Relative rank test used by the identifiability checks:
/// lambda_min > rel_tol * lambda_max (and lambda_max > 0).
bool is_positive_definite_relative(const SymMatrix& a, double rel_tol = 1e-10);

}  // namespace ppcr
