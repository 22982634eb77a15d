#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/fem.hpp"
#include "spde/spectral.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <numbers>

using namespace spde;
using std::numbers::pi;

namespace {

/// Closed-form spectrum of the uniform P1 pencil (K, M).
double p1_eigenvalue(std::size_t i, double h) {
    const double c = std::cos(static_cast<double>(i) * pi * h);
    return 6.0 / (h * h) * (1.0 - c) / (2.0 + c);
}

/// Composite Simpson rule for ⟨e_k, φ_i⟩ on the two elements of node i.
double hat_load_simpson(std::size_t k, std::size_t i, std::size_t interior) {
    const double h = 1.0 / static_cast<double>(interior + 1);
    const double xi = static_cast<double>(i) * h;
    const int n = 2000;
    double s = 0.0;
    for (int side = -1; side <= 1; side += 2) {
        const double a = side < 0 ? xi - h : xi;
        const double step = h / n;
        for (int j = 0; j <= n; ++j) {
            const double x = a + j * step;
            const double hat = 1.0 - std::abs(x - xi) / h;
            const double w = (j == 0 || j == n) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
            s += w * hat * std::sqrt(2.0) * std::sin(static_cast<double>(k) * pi * x) * step / 3.0;
        }
    }
    return s;
}

}  // namespace

TEST_CASE("discretization parameters") {
    const auto s = Discretization::spectral(8);
    CHECK(s.h() == doctest::Approx(1.0 / (8 * pi)));
    CHECK(s.label() == "spectral:N=8");
    const auto f = Discretization::fem(7);
    CHECK(f.h() == 0.125);
    CHECK(f.size() == 7);
    CHECK(f.label() == "fem:M=7");
    CHECK_THROWS_AS(Discretization::spectral(0), DomainError);
    CHECK_THROWS_AS(Discretization::fem(0), DomainError);
}

TEST_CASE("P1 matrices for one and two interior nodes") {
    const auto one = assemble_p1(1);
    CHECK(one.h == 0.5);
    CHECK(one.stiffness.diag[0] == doctest::Approx(4.0));
    CHECK(one.mass.diag[0] == doctest::Approx(1.0 / 3.0));
    const auto eig = discrete_eigensystem(one);
    CHECK(eig.lambdas[0] == doctest::Approx(12.0).epsilon(1e-12));

    const auto two = assemble_p1(2);
    const double h = 1.0 / 3.0;
    CHECK(two.stiffness.diag[0] == doctest::Approx(2.0 / h));
    CHECK(two.stiffness.off[0] == doctest::Approx(-1.0 / h));
    CHECK(two.mass.diag[1] == doctest::Approx(4.0 * h / 6.0));
    CHECK(two.mass.off[0] == doctest::Approx(h / 6.0));
}

TEST_CASE("discrete eigenvalues match the closed form and overestimate lambda_i") {
    for (std::size_t m : {3u, 7u, 31u, 127u}) {
        const auto op = assemble_p1(m);
        const auto eig = discrete_eigensystem(op);
        REQUIRE(eig.lambdas.size() == m);
        for (std::size_t i = 1; i <= m; ++i) {
            CHECK(eig.lambdas[i - 1] == doctest::Approx(p1_eigenvalue(i, op.h)).epsilon(1e-10));
            CHECK(eig.lambdas[i - 1] >= eigenvalue(i) * (1 - 1e-12));
        }
        // Mass orthonormality of the eigenvectors.
        const Eigen::MatrixXd gram = eig.vectors.transpose() * op.mass.dense() * eig.vectors;
        CHECK((gram - Eigen::MatrixXd::Identity(m, m)).cwiseAbs().maxCoeff() < 1e-10);
    }
    // Known values for M = 3.
    const auto eig3 = discrete_eigensystem(assemble_p1(3));
    CHECK(eig3.lambdas[0] == doctest::Approx(10.38664201).epsilon(1e-9));
    CHECK(eig3.lambdas[1] == doctest::Approx(48.0).epsilon(1e-12));
    CHECK(eig3.lambdas[2] == doctest::Approx(126.75621514).epsilon(1e-9));
}

TEST_CASE("lowest discrete eigenvalue converges at rate h^2") {
    double prev = 0.0;
    for (std::size_t m : {7u, 15u, 31u, 63u}) {
        const auto eig = discrete_eigensystem(assemble_p1(m));
        const double err = eig.lambdas[0] - eigenvalue(1);
        if (prev > 0.0) CHECK(prev / err == doctest::Approx(4.0).epsilon(0.02));
        prev = err;
    }
}

TEST_CASE("hat load column agrees with quadrature") {
    const std::size_t m = 9;
    for (std::size_t k : {1u, 2u, 5u, 10u, 23u}) {
        const auto col = hat_load_column(k, m);
        for (std::size_t i = 1; i <= m; ++i) CHECK(col[i - 1] == doctest::Approx(hat_load_simpson(k, i, m)).epsilon(1e-9).scale(1e-3));
    }
    CHECK_THROWS_AS(hat_load_column(0, 3), DomainError);
}

TEST_CASE("tridiagonal solver") {
    const auto op = assemble_p1(6);
    Coords b(6);
    b << 1, -2, 3, 0.5, 0, 4;
    const Coords x = solve_spd_tridiagonal(op.stiffness, b);
    CHECK((op.stiffness.dense() * x - b).norm() < 1e-12);
    CHECK_THROWS_AS(solve_spd_tridiagonal(op.stiffness, Coords::Ones(3)), DomainError);
}

TEST_CASE("spectral projection keeps the first N coefficients") {
    const SpectralVector v{1.0, 2.0, 3.0, 4.0};
    const auto c = p_h_project(v, Discretization::spectral(2));
    REQUIRE(c.size() == 2);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 2.0);
    CHECK(r_h_project(v, Discretization::spectral(2)) == c);
}

TEST_CASE("P_h is idempotent on V_h") {
    const auto disc = Discretization::fem(7);
    Coords c(7);
    c << 0.3, -1.0, 2.0, 0.1, 0.0, -0.7, 1.2;
    const auto v = expand_coordinates(c, disc, 1 << 14);
    const Coords back = p_h_project(v, disc);
    CHECK((back - c).cwiseAbs().maxCoeff() < 1e-5);
    // The energy inner product of the truncated expansion converges like
    // 1/dim, so R_h recovers c only up to that truncation error.
    const double ritz_err = (r_h_project(v, disc) - c).cwiseAbs().maxCoeff();
    const auto coarse = expand_coordinates(c, disc, 1 << 13);
    const double coarse_err = (r_h_project(coarse, disc) - c).cwiseAbs().maxCoeff();
    CHECK(ritz_err < 5e-4);
    CHECK(coarse_err / ritz_err == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("P_h is self-adjoint") {
    const auto disc = Discretization::fem(15);
    SpectralVector v(12), w(12);
    for (std::size_t i = 0; i < 12; ++i) {
        v[i] = std::sin(1.0 + i);
        w[i] = std::cos(0.5 * i) / (1.0 + i);
    }
    const double pvw = h_inner(expand_coordinates(p_h_project(v, disc), disc, 12), w);
    const double vpw = h_inner(v, expand_coordinates(p_h_project(w, disc), disc, 12));
    CHECK(pvw == doctest::Approx(vpw).epsilon(1e-12));
}

TEST_CASE("R_h satisfies Galerkin orthogonality in the energy inner product") {
    const std::size_t m = 11;
    const auto disc = Discretization::fem(m);
    SpectralVector v(40);
    for (std::size_t k = 1; k <= 40; ++k) v[k - 1] = 1.0 / std::pow(static_cast<double>(k), 3);
    const Coords c = r_h_project(v, disc);
    const auto op = assemble_p1(m);
    // a(v, φ_j) = Σ_k λ_k v_k ⟨e_k, φ_j⟩ must equal (K c)_j.
    Coords a = Coords::Zero(m);
    for (std::size_t k = 1; k <= 40; ++k) a += eigenvalue(k) * v[k - 1] * hat_load_column(k, m);
    CHECK((op.stiffness.dense() * c - a).cwiseAbs().maxCoeff() < 1e-10 * a.norm());
}

TEST_CASE("galerkin space couplings") {
    const GalerkinSpace sp(Discretization::fem(7), 64);
    CHECK(sp.dim() == 7);
    CHECK(sp.coupling().rows() == 7);
    CHECK(sp.coupling().cols() == 64);
    // Columns of α hold modal coordinates of P_h e_k; their norms are ‖P_h e_k‖ ≤ 1.
    for (std::size_t k = 1; k <= 64; ++k) CHECK(sp.modal_projection_of_mode(k).norm() <= 1.0 + 1e-12);
    // Modal and nodal coordinates are related by the eigenvectors.
    Coords modal(7);
    modal << 1, 2, 3, 4, 5, 6, 7;
    CHECK((sp.from_nodal(sp.to_nodal(modal)) - modal).norm() < 1e-12);

    const GalerkinSpace spec(Discretization::spectral(5), 5);
    CHECK(spec.coupling().size() == 0);
    CHECK(spec.lambdas()[4] == doctest::Approx(eigenvalue(5)));
}

TEST_CASE("discrete semigroup is diagonal for spectral truncation") {
    const auto disc = Discretization::spectral(3);
    Coords c(3);
    c << 1, 1, 1;
    const Coords s = apply_discrete_semigroup(0.01, c, disc);
    for (int i = 0; i < 3; ++i) CHECK(s[i] == doctest::Approx(std::exp(-0.01 * eigenvalue(i + 1))));
    CHECK_THROWS_AS(apply_discrete_semigroup(-1.0, c, disc), DomainError);
}

TEST_CASE("F_h vanishes on modes inside a spectral space") {
    const auto disc = Discretization::spectral(4);
    const auto r = apply_F_h(0.1, SpectralVector::unit(2, 8), disc, 8);
    CHECK(h_norm(r) < 1e-15);
    const auto out = apply_F_h(0.1, SpectralVector::unit(5, 8), disc, 8);
    CHECK(out[4] == doctest::Approx(-std::exp(-0.1 * eigenvalue(5))));
    CHECK_THROWS_AS(apply_F_h(0.0, SpectralVector::unit(1, 2), disc, 8), DomainError);
}

TEST_CASE("operator norm of F_h for spectral truncation is e^{-lambda_{N+1} t}") {
    const double t = 0.01;
    const double n = operator_norm_F_h(t, Discretization::spectral(4), 64);
    CHECK(n == doctest::Approx(std::exp(-t * eigenvalue(5))).epsilon(1e-7));
    CHECK_THROWS_AS(operator_norm_F_h(0.0, Discretization::spectral(4), 64), DomainError);
}

TEST_CASE("operator norm of F_h for FEM matches a dense eigensolve") {
    const std::size_t modes = 96;
    for (double t : {0.01, 0.1}) {
        const GalerkinSpace sp(Discretization::fem(15), modes);
        const Eigen::MatrixXd& alpha = sp.coupling();
        Eigen::VectorXd decay_h(sp.dim());
        for (std::size_t i = 0; i < sp.dim(); ++i) decay_h[i] = std::exp(-t * sp.lambdas()[i]);
        Eigen::MatrixXd f = alpha.transpose() * decay_h.asDiagonal() * alpha;
        for (std::size_t k = 1; k <= modes; ++k) f(k - 1, k - 1) -= std::exp(-t * eigenvalue(k));
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(f);
        const double dense = es.eigenvalues().cwiseAbs().maxCoeff();
        const auto est = operator_norm_F_h(t, sp);
        CHECK(est.value == doctest::Approx(dense).epsilon(1e-7));
    }
}

TEST_CASE("M = 2 eigenvectors are symmetric and antisymmetric about the midpoint") {
    const auto eig = discrete_eigensystem(assemble_p1(2));
    CHECK(eig.vectors(0, 0) == doctest::Approx(eig.vectors(1, 0)));
    CHECK(eig.vectors(0, 1) == doctest::Approx(-eig.vectors(1, 1)));
}

TEST_CASE("discrete semigroup on an eigenvector") {
    const GalerkinSpace sp(Discretization::fem(5), 8);
    Coords modal = Coords::Zero(5);
    modal[0] = 1.0;
    const Coords nodal = sp.to_nodal(modal);
    const Coords s = apply_discrete_semigroup(1.0, nodal, sp);
    CHECK((s - std::exp(-sp.lambdas()[0]) * nodal).cwiseAbs().maxCoeff() < 1e-15);
    CHECK(apply_discrete_semigroup(0.0, nodal, sp) == nodal);
}
