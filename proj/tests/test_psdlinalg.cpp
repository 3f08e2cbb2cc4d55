#include "oracles.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/linalg.hpp"

#include <doctest.h>

#include <random>
#include <vector>

using namespace ppcr;

TEST_CASE("SymMatrix stores the symmetric part") {
    Matrix a(2, 2);
    a << 1, 2, 4, 3;
    const SymMatrix s(a);
    CHECK(s(0, 1) == doctest::Approx(3.0));
    CHECK(s(1, 0) == s(0, 1));
    CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), InvalidInput);
}

TEST_CASE("eigenvalues ascend and match the 2x2 closed form") {
    Matrix a(2, 2);
    a << 2, 1, 1, 3;
    const Vector ev = SymMatrix(a).eigenvalues();
    // (5 -+ sqrt(5)) / 2
    CHECK(ev(0) == doctest::Approx((5.0 - std::sqrt(5.0)) / 2.0).epsilon(1e-14));
    CHECK(ev(1) == doctest::Approx((5.0 + std::sqrt(5.0)) / 2.0).epsilon(1e-14));
}

TEST_CASE("PsdMatrix clamps rounding negatives and rejects real ones") {
    Matrix a = Matrix::Identity(2, 2);
    a(1, 1) = -1e-14;
    CHECK_NOTHROW(PsdMatrix{a});
    a(1, 1) = -1e-3;
    CHECK_THROWS_AS(PsdMatrix{a}, InvalidInput);
    CHECK_THROWS_AS(PsdMatrix::scaled_identity(3, -1.0), InvalidInput);

    double scale = 0.0;
    CHECK(PsdMatrix::scaled_identity(3, 2.5).is_scaled_identity(&scale));
    CHECK(scale == 2.5);
    Matrix d = Matrix::Identity(2, 2);
    d(1, 1) = 2.0;
    CHECK_FALSE(PsdMatrix(d).is_scaled_identity());
}

TEST_CASE("psd_sqrt squares back and agrees with an independent root") {
    std::mt19937_64 g(11);
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 1 + trial % 6;
        const Matrix a = oracle::random_psd(g, n, n);
        const Matrix r = psd_sqrt(PsdMatrix(a)).matrix();
        CHECK((r * r - a).norm() <= 1e-10 * (1.0 + a.norm()));
        CHECK((r - oracle::sqrtm(a)).norm() <= 1e-9 * (1.0 + a.norm()));
    }
    // rank-deficient input keeps its null space; rounding-level eigenvalues
    // come back as ~1e-8 after the root, so count on the root's scale
    const Matrix low = oracle::random_psd(g, 4, 2);
    const Matrix r = psd_sqrt(PsdMatrix(low)).matrix();
    CHECK(oracle::rank(r, 1e-6) == 2);
}

TEST_CASE("Loewner order") {
    const SymMatrix a = SymMatrix::identity(2);
    const SymMatrix b = SymMatrix::scaled_identity(2, 2.0);
    CHECK(loewner_leq(a, b, 1e-12));
    CHECK_FALSE(loewner_leq(b, a, 1e-12));
    Matrix c(2, 2);
    c << 2, 0, 0, 0.5;  // incomparable with I
    CHECK_FALSE(loewner_leq(a, SymMatrix(c), 1e-12));
    CHECK_FALSE(loewner_leq(SymMatrix(c), a, 1e-12));
}

TEST_CASE("matrix supremum must belong to the family and dominate it") {
    const SymMatrix top = SymMatrix::scaled_identity(2, 3.0);
    std::vector<SymMatrix> family{SymMatrix::identity(2), top, SymMatrix::scaled_identity(2, 2.0)};
    CHECK(is_matrix_supremum(top, family, 1e-12));
    CHECK_FALSE(is_matrix_supremum(SymMatrix::scaled_identity(2, 4.0), family, 1e-12));  // not a member
    CHECK_FALSE(is_matrix_supremum(SymMatrix::identity(2), family, 1e-12));
    CHECK_THROWS_AS(is_matrix_supremum(top, std::vector<SymMatrix>{}, 1e-12), InvalidInput);
}

TEST_CASE("robust_inverse") {
    std::mt19937_64 g(5);
    const Matrix a = oracle::random_psd(g, 4, 4) + 0.1 * Matrix::Identity(4, 4);
    const Matrix inv = robust_inverse(SymMatrix(a)).matrix();
    CHECK((inv * a - Matrix::Identity(4, 4)).norm() < 1e-10);

    const Matrix singular = oracle::random_psd(g, 4, 3);
    CHECK_THROWS_AS(robust_inverse(SymMatrix(singular)), NotIdentifiable);
    const Matrix ridged = robust_inverse(SymMatrix(singular), 0.5).matrix();
    CHECK((ridged * (singular + 0.5 * Matrix::Identity(4, 4)) - Matrix::Identity(4, 4)).norm() < 1e-9);
    CHECK_THROWS_AS(robust_inverse(SymMatrix(a), -1.0), InvalidInput);
}

TEST_CASE("relative positive-definiteness agrees with an SVD rank count") {
    std::mt19937_64 g(8);
    int agree = 0;
    for (int trial = 0; trial < 200; ++trial) {
        const int n = 2 + trial % 5;
        const int r = 1 + static_cast<int>(g() % static_cast<std::uint64_t>(n));
        const Matrix a = oracle::random_psd(g, n, r);
        const bool expected = oracle::rank(a, 1e-10) == n;
        agree += is_positive_definite_relative(SymMatrix(a), 1e-10) == expected ? 1 : 0;
    }
    CHECK(agree == 200);
    CHECK_FALSE(is_positive_definite_relative(SymMatrix::zero(3)));
}
