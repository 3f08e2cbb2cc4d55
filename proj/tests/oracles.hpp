// Independent reference computations for the unit and acceptance tests.
// Nothing here calls into the library's numerics.
#pragma once

#include <Eigen/Dense>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/quadrature/exp_sinh.hpp>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <vector>

namespace oracle {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline constexpr double pi = std::numbers::pi;

/// Rank by SVD with a relative threshold.
inline int rank(const Matrix& a, double rel_tol) {
    const Eigen::JacobiSVD<Matrix> svd(a);
    const Vector sv = svd.singularValues();
    if (sv.size() == 0 || sv(0) <= 0.0) return 0;
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > rel_tol * sv(0) ? 1 : 0;
    return r;
}

/// Symmetric square root through a fresh eigendecomposition.
inline Matrix sqrtm(const Matrix& a) {
    const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (a + a.transpose()));
    return es.eigenvectors() * es.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
           es.eigenvectors().transpose();
}

/// Privacy-preserving Fisher information straight from its definition,
/// H^T R (R Sigma R + I)^{-1} R H with R = S^{1/2}, via a full-pivot LU.
inline Matrix pp_fisher(const Matrix& H, const Matrix& S, const Matrix& Sigma) {
    const Matrix R = sqrtm(S);
    const Matrix C = R * Sigma * R + Matrix::Identity(S.rows(), S.cols());
    return H.transpose() * R * C.fullPivLu().solve(R * H);
}

/// Integral over the real line by double-exponential quadrature, split at 0.
template <class F>
double integrate_line(F f) {
    boost::math::quadrature::exp_sinh<double> es;
    auto right = [&](double t) { return f(t); };
    auto left = [&](double t) { return f(-t); };
    return es.integrate(right, 0.0, std::numeric_limits<double>::infinity()) +
           es.integrate(left, 0.0, std::numeric_limits<double>::infinity());
}

template <class F>
double integrate(F f, double a, double b) {
    boost::math::quadrature::tanh_sinh<double> ts;
    return ts.integrate(f, a, b);
}

inline double normal_pdf(double x, double sigma) {
    return std::exp(-0.5 * x * x / (sigma * sigma)) / (sigma * std::sqrt(2.0 * pi));
}

/// Density of N(0, sigma^2) + Laplace(0, b), closed form with erfc.
inline double gauss_laplace_pdf(double x, double sigma, double b) {
    const double k = sigma * sigma / (2.0 * b * b);
    const double a1 = std::exp(k - x / b) * std::erfc((sigma / b - x / sigma) / std::sqrt(2.0));
    const double a2 = std::exp(k + x / b) * std::erfc((sigma / b + x / sigma) / std::sqrt(2.0));
    return (a1 + a2) / (4.0 * b);
}

/// Voigt density by direct convolution quadrature.
inline double voigt_pdf(double x, double sigma, double gamma) {
    // panels end at both peaks (u = 0 and u = x)
    auto f = [&](double u) { return normal_pdf(u, sigma) * gamma / (pi * (gamma * gamma + (x - u) * (x - u))); };
    const double lo = std::min(0.0, x), hi = std::max(0.0, x);
    double mid = hi > lo ? integrate(f, lo, hi) : 0.0;
    return mid + integrate_line([&](double t) { return t >= 0 ? f(hi + t) : f(lo + t); });
}

inline Matrix uniform_matrix(std::mt19937_64& g, int rows, int cols, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(g);
    return m;
}

/// Random PSD matrix of the given rank (rank < dim gives a singular one).
inline Matrix random_psd(std::mt19937_64& g, int dim, int rank_) {
    const Matrix f = uniform_matrix(g, dim, rank_);
    return f * f.transpose();
}

}  // namespace oracle

namespace oracle {

/// One sensor of a random identifiability instance.
struct Block {
    Matrix H;
    Matrix S;
    Matrix Sigma;
};

/// Small-integer entries so that rank deficiency is exact, not marginal.
inline Matrix integer_matrix(std::mt19937_64& g, int rows, int cols, int range = 2) {
    std::uniform_int_distribution<int> u(-range, range);
    Matrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int j = 0; j < cols; ++j) m(i, j) = u(g);
    return m;
}

/// Random multi-sensor instance; budgets are frequently rank deficient.
inline std::vector<Block> random_instance(std::mt19937_64& g, int n) {
    std::uniform_int_distribution<int> sensors(1, 4), rows(1, 3), coin(0, 3);
    std::vector<Block> out;
    const int N = sensors(g);
    for (int i = 0; i < N; ++i) {
        const int m = rows(g);
        Block b;
        b.H = integer_matrix(g, m, n);
        const int budget_rank = coin(g) == 0 ? 0 : std::uniform_int_distribution<int>(1, m)(g);
        const Matrix f = integer_matrix(g, m, budget_rank);
        b.S = budget_rank == 0 ? Matrix::Zero(m, m) : Matrix(f * f.transpose());
        const Matrix q = uniform_matrix(g, m, m);
        b.Sigma = q * q.transpose() + 0.1 * Matrix::Identity(m, m);
        out.push_back(b);
    }
    return out;
}

/// Brute force: stack S_i^{1/2} H_i and count singular values.
inline bool identifiable_brute(const std::vector<Block>& blocks, int n) {
    Eigen::Index rows = 0;
    for (const auto& b : blocks) rows += b.H.rows();
    Matrix stacked(rows, n);
    Eigen::Index at = 0;
    double scale = 0.0;
    for (const auto& b : blocks) {
        const Matrix r = sqrtm(b.S);
        stacked.middleRows(at, b.H.rows()) = r * b.H;
        scale = std::max(scale, r.norm() * b.H.norm());
        at += b.H.rows();
    }
    // threshold against the problem scale: an exactly-zero R H comes out
    // as rounding noise, which a purely relative count would call full rank
    const Vector sv = Eigen::JacobiSVD<Matrix>(stacked).singularValues();
    int r = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) r += sv(i) > 1e-7 * scale ? 1 : 0;
    return r == n;
}

/// Stacked system: block-diagonal S and Sigma, one pp_fisher evaluation.
inline Matrix pp_fisher_stacked(const std::vector<Block>& blocks) {
    Eigen::Index rows = 0;
    for (const auto& b : blocks) rows += b.H.rows();
    const Eigen::Index n = blocks.front().H.cols();
    Matrix H(rows, n), S = Matrix::Zero(rows, rows), Sigma = Matrix::Zero(rows, rows);
    Eigen::Index at = 0;
    for (const auto& b : blocks) {
        const Eigen::Index m = b.H.rows();
        H.middleRows(at, m) = b.H;
        S.block(at, at, m, m) = b.S;
        Sigma.block(at, at, m, m) = b.Sigma;
        at += m;
    }
    return pp_fisher(H, S, Sigma);
}

}  // namespace oracle
