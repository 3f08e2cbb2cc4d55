#include "oracles.hpp"

#include "ppcr/special.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>

using namespace ppcr;

TEST_CASE("Faddeeva on the imaginary axis is erfcx") {
    for (double y : {0.01, 0.3, 1.0, 2.5, 7.0, 30.0}) {
        const double expected = y < 20 ? std::exp(y * y) * std::erfc(y) : 1.0 / (y * std::sqrt(oracle::pi)) * (1 - 0.5 / (y * y) + 0.75 / std::pow(y, 4));
        const auto w = special::faddeeva({0.0, y});
        CHECK(w.real() == doctest::Approx(expected).epsilon(1e-9));
        CHECK(std::abs(w.imag()) < 1e-12);
    }
}

TEST_CASE("Faddeeva off-axis against its integral representation") {
    // w(z) = (i / pi) int e^{-t^2} / (z - t) dt, Im z > 0
    for (auto z : {std::complex<double>(0.5, 0.5), std::complex<double>(2.0, 0.1), std::complex<double>(-3.0, 1.5),
                   std::complex<double>(6.0, 0.05), std::complex<double>(12.0, 4.0)}) {
        const double re = oracle::integrate_line([&](double t) {
            return std::exp(-t * t) * std::real(std::complex<double>(0, 1) / (z - t)) / oracle::pi;
        });
        const double im = oracle::integrate_line([&](double t) {
            return std::exp(-t * t) * std::imag(std::complex<double>(0, 1) / (z - t)) / oracle::pi;
        });
        const auto w = special::faddeeva(z);
        CHECK(std::abs(w - std::complex<double>(re, im)) <= 1e-8 * std::abs(w));
    }
}

TEST_CASE("erfcx and its reciprocal") {
    for (double x : {-3.0, -0.5, 0.0, 0.7, 4.0, 15.0}) {
        const double expected = std::exp(x * x) * std::erfc(x);
        CHECK(special::erfcx(x) == doctest::Approx(expected).epsilon(1e-12));
        CHECK(special::inv_erfcx(x) * expected == doctest::Approx(1.0).epsilon(1e-12));
    }
    CHECK(std::isfinite(special::inv_erfcx(-40.0)));
    CHECK(special::erfcx(1e4) == doctest::Approx(1.0 / (1e4 * std::sqrt(oracle::pi))).epsilon(1e-8));
}

TEST_CASE("Gauss-Laplace log-density against the erfc closed form") {
    for (double sigma : {0.05, 0.2, 1.0}) {
        for (double b : {0.1, 0.5, 3.0}) {
            for (double x : {-4.0, -1.0, -0.1, 0.0, 0.3, 2.0, 10.0}) {
                const double expected = std::log(oracle::gauss_laplace_pdf(x, sigma, b));
                if (!std::isfinite(expected)) continue;  // closed form underflows far out
                const auto d = special::gauss_laplace_log_density(x, sigma, b);
                CHECK(d.value == doctest::Approx(expected).epsilon(1e-9));
                const double h = 1e-5;
                const double fd = (special::gauss_laplace_log_density(x + h, sigma, b).value -
                                   special::gauss_laplace_log_density(x - h, sigma, b).value) / (2 * h);
                CHECK(d.derivative == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
        }
    }
}

TEST_CASE("Gauss-Laplace far tail stays finite") {
    const auto d = special::gauss_laplace_log_density(200.0, 0.2, 0.5);
    CHECK(std::isfinite(d.value));
    CHECK(d.derivative == doctest::Approx(-1.0 / 0.5).epsilon(1e-6));
}

TEST_CASE("Voigt log-density against direct convolution") {
    for (double sigma : {0.1, 0.2, 1.0}) {
        for (double gamma : {0.05, 0.7, 2.0}) {
            for (double x : {-5.0, -0.4, 0.0, 0.25, 3.0, 40.0}) {
                const double expected = std::log(oracle::voigt_pdf(x, sigma, gamma));
                const auto d = special::voigt_log_density(x, sigma, gamma);
                CHECK(d.value == doctest::Approx(expected).epsilon(1e-8));
                const double h = 1e-5;
                const double fd = (special::voigt_log_density(x + h, sigma, gamma).value -
                                   special::voigt_log_density(x - h, sigma, gamma).value) / (2 * h);
                CHECK(d.derivative == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
            }
        }
    }
}
