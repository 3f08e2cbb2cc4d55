#include "oracles.hpp"

#include "ppcr/errors.hpp"
#include "ppcr/fisher.hpp"
#include "ppcr/mechanisms.hpp"

#include <doctest.h>

#include <cmath>

using namespace ppcr;

namespace {

// Fisher information of a location family by the oracle's own quadrature,
// using a central-difference score so nothing is shared with the library.
template <class Pdf>
double fisher_numeric(Pdf pdf, double lo, double hi) {
    auto integrand = [&](double x) {
        const double h = 1e-6 * (1.0 + std::abs(x));
        const double p = pdf(x);
        if (p <= 0.0) return 0.0;
        const double s = (std::log(pdf(x + h)) - std::log(pdf(x - h))) / (2 * h);
        return s * s * p;
    };
    if (std::isinf(lo)) return oracle::integrate_line(integrand);
    return oracle::integrate(integrand, lo, hi);
}

}  // namespace

TEST_CASE("closed-form noise Fisher information against quadrature") {
    SUBCASE("Laplace") {
        for (double b : {0.1, 1.0, 4.0}) {
            const double closed = fisher_of_noise(LaplaceIid{b, 1}).value.matrix()(0, 0);
            CHECK(closed == doctest::Approx(1.0 / (b * b)).epsilon(1e-14));
            CHECK(location_fisher_by_quadrature(LaplaceIid{b, 1}) == doctest::Approx(closed).epsilon(1e-6));
        }
    }
    SUBCASE("Cauchy") {
        for (double g : {0.05, 1.0, 7.0}) {
            const double closed = fisher_of_noise(CauchyIid{g, 1}).value.matrix()(0, 0);
            CHECK(closed == doctest::Approx(1.0 / (2 * g * g)).epsilon(1e-14));
            CHECK(location_fisher_by_quadrature(CauchyIid{g, 1}) == doctest::Approx(closed).epsilon(1e-6));
            const double oracle_value = fisher_numeric(
                [&](double x) { return g / (oracle::pi * (g * g + x * x)); }, -INFINITY, INFINITY);
            CHECK(oracle_value == doctest::Approx(closed).epsilon(1e-6));
        }
    }
    SUBCASE("raised cosine") {
        for (double L : {0.3, 2.0, 10.0}) {
            const Cos2Bounded c{-L / 2, L / 2, 1};
            const double closed = fisher_of_noise(c).value.matrix()(0, 0);
            CHECK(closed == doctest::Approx(4 * oracle::pi * oracle::pi / (L * L)).epsilon(1e-14));
            CHECK(location_fisher_by_quadrature(c) == doctest::Approx(closed).epsilon(1e-6));
            // (f'/f)^2 f = (2/L)(2 pi/L)^2 sin^2: integrate it analytically-free
            const double q = oracle::integrate([&](double x) {
                const double k = oracle::pi / L;
                return (2.0 / L) * 4 * k * k * std::sin(k * x) * std::sin(k * x);
            }, -L / 2, L / 2);
            CHECK(q == doctest::Approx(closed).epsilon(1e-10));
        }
    }
    SUBCASE("Gaussian") {
        const auto g = gaussian_iid(3, 0.2);
        CHECK((fisher_of_noise(g).value.matrix() - 25.0 * Matrix::Identity(3, 3)).norm() < 1e-12);
        CHECK(location_fisher_by_quadrature(gaussian_iid(1, 0.2)) == doctest::Approx(25.0).epsilon(1e-6));
    }
}

TEST_CASE("twin-lobe scale Fisher information: closed form against quadrature") {
    for (double c : {1.0, 2.5}) {
        for (double d : {1e-4, 0.01, 0.3, 0.9}) {
            const TwinUniform tw{c, d * c, 1};
            const double closed = twin_scale_fisher(c, d * c);
            const double expected = oracle::pi * oracle::pi / (d * d) + oracle::pi * oracle::pi / 3 + 1;
            CHECK(closed == doctest::Approx(expected).epsilon(1e-13));
            CHECK(scale_fisher_by_quadrature(tw) == doctest::Approx(closed).epsilon(1e-6));
            // independent: one lobe, (1 + x f'/f)^2 f with f the raised cosine at c
            const double h = d * c;
            const double q = oracle::integrate([&](double t) {
                const double k = oracle::pi / (2 * h);
                const double x = c + t;
                const double score = -2 * k * std::tan(k * t);
                const double f = (1.0 / h) * std::cos(k * t) * std::cos(k * t);
                const double v = 1 + x * score;
                return v * v * f;
            }, -h, h);
            CHECK(q == doctest::Approx(closed).epsilon(1e-6));
        }
    }
    CHECK_THROWS_AS(fisher_of_noise(TwinUniform{1.0, 0.5, 1}), Unsupported);
}

TEST_CASE("mechanism Fisher information") {
    std::mt19937_64 g(3);
    const auto model = MeasurementModel::gaussian(oracle::uniform_matrix(g, 6, 3), 0.2);
    const Matrix S = oracle::random_psd(g, 6, 6) + 0.1 * Matrix::Identity(6, 6);
    const Vector y = Vector::Random(6);

    const Mechanism gauss = gaussian_optimal_mechanism(model, PsdMatrix(S));
    CHECK((mechanism_fisher(gauss, y).matrix() - S).norm() <= 1e-10 * S.norm());

    const Mechanism lap = calibrate_laplace_data_perturbation(model, PsdMatrix::scaled_identity(6, 2.0));
    CHECK((mechanism_fisher(lap, y).matrix() - 2.0 * Matrix::Identity(6, 6)).norm() < 1e-12);

    // output perturbation: A^T A / b^2 with A the LS operator
    const Mechanism out = calibrate_laplace_output_perturbation(model, PsdMatrix::scaled_identity(6, 2.0));
    const Matrix A = (model.H.transpose() * model.H).inverse() * model.H.transpose();
    const double b = out.noise_scale();
    CHECK((mechanism_fisher(out, y).matrix() - A.transpose() * A / (b * b)).norm() < 1e-10);
}

TEST_CASE("admissibility statistics") {
    std::mt19937_64 g(9);
    const auto model = MeasurementModel::gaussian(oracle::uniform_matrix(g, 4, 2), 0.3);
    const Vector theta = Vector::LinSpaced(2, -0.5, 0.5);

    const Mechanism lap = calibrate_laplace_data_perturbation(model, PsdMatrix::scaled_identity(4, 1.0));
    const auto score = empirical_score_mean(model, lap, theta, 40000, 17);
    for (Eigen::Index j = 0; j < score.mean.size(); ++j) CHECK(std::abs(score.mean(j)) <= 5 * score.std_error(j));
    const auto cross = admissibility_cross_term(lap, model, theta, 40000, 18);
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) CHECK(std::abs(cross.mean(i, j)) <= 5 * cross.std_error(i, j));

    const Mechanism sq = squared_output_fixture(model, 1.0);
    const auto bad = admissibility_cross_term(sq, model, theta, 40000, 19);
    double worst = 0.0;
    for (Eigen::Index i = 0; i < 2; ++i)
        for (Eigen::Index j = 0; j < 2; ++j) worst = std::max(worst, std::abs(bad.mean(i, j)) / bad.std_error(i, j));
    CHECK(worst > 5.0);
}
