#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/spectral.hpp"

#include <cmath>
#include <limits>
#include <numbers>

using namespace spde;
using std::numbers::pi;

TEST_CASE("eigenvalues follow (k pi)^2") {
    CHECK(eigenvalue(1) == doctest::Approx(9.869604401089358).epsilon(1e-15));
    CHECK(eigenvalue(3) == doctest::Approx(88.82643960980423).epsilon(1e-15));
    CHECK_THROWS_AS(eigenvalue(0), DomainError);

    EigenSystem sys(4);
    CHECK(sys.dim() == 4);
    CHECK(sys.lambda(2) == doctest::Approx(4 * pi * pi));
    CHECK(sys.lambda(4) == doctest::Approx(16 * pi * pi));
}

TEST_CASE("basis functions are sqrt(2) sin(k pi x)") {
    CHECK(evaluate_basis(1, 0.5) == doctest::Approx(std::sqrt(2.0)).epsilon(1e-15));
    CHECK(std::abs(evaluate_basis(2, 0.5)) < 1e-15);
    CHECK(evaluate_basis(3, 1.0 / 6.0) == doctest::Approx(std::sqrt(2.0)));
    CHECK(std::abs(evaluate_basis(5, 0.0)) < 1e-15);
    CHECK(std::abs(evaluate_basis(5, 1.0)) < 1e-14);
    CHECK_THROWS_AS(evaluate_basis(1, 1.5), DomainError);
}

TEST_CASE("basis is orthonormal under midpoint quadrature") {
    const int n = 20000;
    for (std::size_t j = 1; j <= 4; ++j) {
        for (std::size_t k = 1; k <= 4; ++k) {
            double s = 0.0;
            for (int i = 0; i < n; ++i) {
                const double x = (i + 0.5) / n;
                s += evaluate_basis(j, x) * evaluate_basis(k, x) / n;
            }
            CHECK(s == doctest::Approx(j == k ? 1.0 : 0.0).epsilon(1e-7).scale(1.0));
        }
    }
}

TEST_CASE("semigroup damps each mode") {
    const SpectralVector v{1.0, 1.0};
    const auto s = apply_semigroup(0.1, v);
    CHECK(s[0] == doctest::Approx(std::exp(-0.1 * pi * pi)));
    CHECK(s[0] == doctest::Approx(0.372707).epsilon(1e-6));
    CHECK(s[1] == doctest::Approx(std::exp(-0.4 * pi * pi)));
    CHECK(apply_semigroup(0.0, v) == v);
    CHECK_THROWS_AS(apply_semigroup(-1e-3, v), DomainError);
}

TEST_CASE("semigroup property S(t)S(s) = S(t+s)") {
    SpectralVector v(8);
    for (std::size_t i = 0; i < 8; ++i) v[i] = 1.0 / (1.0 + i);
    const auto a = apply_semigroup(0.03, apply_semigroup(0.02, v));
    const auto b = apply_semigroup(0.05, v);
    for (std::size_t i = 0; i < 8; ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-14));
}

TEST_CASE("fractional norms") {
    const auto e2 = SpectralVector::unit(2, 3);
    CHECK(hs_fractional_norm(2.0, e2) == doctest::Approx(4 * pi * pi));
    CHECK(hs_fractional_norm(0.0, SpectralVector{3.0, 4.0}) == doctest::Approx(5.0));
    CHECK(hs_fractional_norm(1.0, SpectralVector{1.0, 1.0}) == doctest::Approx(std::sqrt(5.0) * pi));
    const auto half = apply_fractional_power(1.0, SpectralVector{1.0, 1.0});
    CHECK(half[0] == doctest::Approx(pi));
    CHECK(half[1] == doctest::Approx(2 * pi));
}

TEST_CASE("inner products pad the shorter vector") {
    const SpectralVector a{1.0, 2.0, 3.0};
    const SpectralVector b{4.0, 5.0};
    CHECK(h_inner(a, b) == doctest::Approx(14.0));
    CHECK(h_inner(b, a) == doctest::Approx(14.0));
    CHECK(h_norm(a) == doctest::Approx(std::sqrt(14.0)));

    auto c = b;
    c += a;
    CHECK(c.dim() == 3);
    CHECK(c[2] == 3.0);
    CHECK(c.mode(3) == 3.0);
    CHECK(c.mode(9) == 0.0);
}

TEST_CASE("non-finite coefficients are rejected") {
    CHECK_THROWS_AS(SpectralVector({1.0, std::nan("")}), DomainError);
    SpectralVector v{1.0, 2.0};
    v[1] = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(v.check_finite(), DomainError);
    CHECK_THROWS_AS(SpectralVector::unit(0, 3), DomainError);
    CHECK_THROWS_AS(SpectralVector::unit(4, 3), DomainError);
}
