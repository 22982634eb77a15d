#include "spde/fem.hpp"

#include "spde/errors.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

namespace spde {

namespace {

// sin(π r / n) with r reduced modulo 2n; exact zeros at multiples of π.
double sin_pi_ratio(std::size_t numerator, std::size_t n) {
    const std::size_t r = numerator % (2 * n);
    if (r == 0 || r == n) return 0.0;
    return std::sin(std::numbers::pi * static_cast<double>(r) / static_cast<double>(n));
}

void require_positive_time(double t, const char* what) {
    if (!(t >= 0.0)) throw DomainError(std::string(what) + ": t must be >= 0");
}

}  // namespace

Discretization Discretization::spectral(std::size_t n_modes) {
    if (n_modes == 0) throw DomainError("Discretization::spectral: N must be >= 1");
    return {Kind::spectral, n_modes, 1.0 / (static_cast<double>(n_modes) * std::numbers::pi)};
}

Discretization Discretization::fem(std::size_t interior_nodes) {
    if (interior_nodes == 0) throw DomainError("Discretization::fem: M must be >= 1");
    return {Kind::fem, interior_nodes, 1.0 / static_cast<double>(interior_nodes + 1)};
}

std::string Discretization::label() const {
    return (is_spectral() ? "spectral:N=" : "fem:M=") + std::to_string(size_);
}

Eigen::MatrixXd SymTridiagonal::dense() const {
    const auto n = static_cast<Eigen::Index>(diag.size());
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) m(i, i) = diag[i];
    for (Eigen::Index i = 0; i + 1 < n; ++i) m(i, i + 1) = m(i + 1, i) = off[i];
    return m;
}

Coords SymTridiagonal::multiply(const Coords& x) const {
    const auto n = static_cast<Eigen::Index>(diag.size());
    Coords y(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = diag[i] * x(i);
        if (i > 0) acc += off[i - 1] * x(i - 1);
        if (i + 1 < n) acc += off[i] * x(i + 1);
        y(i) = acc;
    }
    return y;
}

FemOperator assemble_p1(std::size_t interior_nodes) {
    if (interior_nodes == 0) throw DomainError("assemble_p1: M must be >= 1");
    const double h = 1.0 / static_cast<double>(interior_nodes + 1);
    FemOperator op;
    op.interior_nodes = interior_nodes;
    op.h = h;
    op.stiffness.diag.assign(interior_nodes, 2.0 / h);
    op.stiffness.off.assign(interior_nodes - 1, -1.0 / h);
    op.mass.diag.assign(interior_nodes, 4.0 * h / 6.0);
    op.mass.off.assign(interior_nodes - 1, h / 6.0);
    return op;
}

DiscreteEigenSystem discrete_eigensystem(const FemOperator& op) {
    const Eigen::MatrixXd k = op.stiffness.dense();
    const Eigen::MatrixXd m = op.mass.dense();
    Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(k, m, Eigen::ComputeEigenvectors | Eigen::Ax_lBx);
    if (solver.info() != Eigen::Success) {
        std::ostringstream msg;
        msg << "discrete_eigensystem: generalized eigensolver failed for M=" << op.interior_nodes
            << " (Eigen info code " << static_cast<int>(solver.info()) << ")";
        throw ComputationError(msg.str());
    }
    DiscreteEigenSystem out;
    out.lambdas.assign(solver.eigenvalues().data(), solver.eigenvalues().data() + solver.eigenvalues().size());
    out.vectors = solver.eigenvectors();

    for (Eigen::Index j = 0; j < out.vectors.cols(); ++j) {
        auto col = out.vectors.col(j);
        // Fix the sign so the largest-magnitude entry is positive.
        Eigen::Index arg = 0;
        col.cwiseAbs().maxCoeff(&arg);
        if (col(arg) < 0.0) col = -col;

        const double lambda = out.lambdas[static_cast<std::size_t>(j)];
        const double residual = (k * col - lambda * (m * col)).norm();
        if (!(lambda > 0.0) || residual > 1e-10 * lambda) {
            std::ostringstream msg;
            msg << "discrete_eigensystem: pair " << j + 1 << " of M=" << op.interior_nodes
                << " has lambda=" << lambda << ", residual=" << residual;
            throw ComputationError(msg.str());
        }
    }
    return out;
}

Coords solve_spd_tridiagonal(const SymTridiagonal& t, const Coords& b) {
    const std::size_t n = t.size();
    if (static_cast<std::size_t>(b.size()) != n) throw DomainError("solve_spd_tridiagonal: size mismatch");
    // Thomas algorithm; no pivoting is needed for SPD input.
    std::vector<double> c(n), d(n);
    double denom = t.diag[0];
    if (!(denom > 0.0)) throw ComputationError("solve_spd_tridiagonal: matrix is not positive definite");
    c[0] = n > 1 ? t.off[0] / denom : 0.0;
    d[0] = b(0) / denom;
    for (std::size_t i = 1; i < n; ++i) {
        denom = t.diag[i] - t.off[i - 1] * c[i - 1];
        if (!(denom > 0.0)) throw ComputationError("solve_spd_tridiagonal: matrix is not positive definite");
        c[i] = i + 1 < n ? t.off[i] / denom : 0.0;
        d[i] = (b(static_cast<Eigen::Index>(i)) - t.off[i - 1] * d[i - 1]) / denom;
    }
    Coords x(static_cast<Eigen::Index>(n));
    x(static_cast<Eigen::Index>(n - 1)) = d[n - 1];
    for (std::size_t i = n - 1; i-- > 0;) {
        x(static_cast<Eigen::Index>(i)) = d[i] - c[i] * x(static_cast<Eigen::Index>(i + 1));
    }
    return x;
}

Coords hat_load_column(std::size_t k, std::size_t interior_nodes) {
    if (k == 0) throw DomainError("hat_load_column: k must be >= 1");
    const std::size_t n = interior_nodes + 1;
    const double h = 1.0 / static_cast<double>(n);
    const double w = static_cast<double>(k) * std::numbers::pi;
    // ∫ φ_i(x) sin(wx) dx = sin(w x_i) · 4 sin²(wh/2) / (w² h)
    const double s = sin_pi_ratio(k, 2 * n);  // sin(wh/2)
    const double kernel = std::numbers::sqrt2 * 4.0 * s * s / (w * w * h);
    Coords col(static_cast<Eigen::Index>(interior_nodes));
    for (std::size_t i = 1; i <= interior_nodes; ++i) {
        col(static_cast<Eigen::Index>(i - 1)) = kernel * sin_pi_ratio(k * i, n);
    }
    return col;
}

GalerkinSpace::GalerkinSpace(Discretization disc, std::size_t modes) : disc_(disc), modes_(modes) {
    if (modes == 0) throw DomainError("GalerkinSpace: modes must be >= 1");
    const std::size_t n = disc_.size();
    if (disc_.is_spectral()) {
        lambdas_.resize(n);
        for (std::size_t k = 1; k <= n; ++k) lambdas_[k - 1] = eigenvalue(k);
        return;
    }
    op_ = assemble_p1(n);
    eig_ = discrete_eigensystem(op_);
    lambdas_ = eig_.lambdas;
    alpha_.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(modes));
    for (std::size_t k = 1; k <= modes; ++k) {
        alpha_.col(static_cast<Eigen::Index>(k - 1)) = eig_.vectors.transpose() * hat_load_column(k, n);
    }
}

Coords GalerkinSpace::modal_projection_of_mode(std::size_t k) const {
    if (k == 0) throw DomainError("modal_projection_of_mode: k must be >= 1");
    if (disc_.is_spectral()) {
        Coords e = Coords::Zero(static_cast<Eigen::Index>(dim()));
        if (k <= dim()) e(static_cast<Eigen::Index>(k - 1)) = 1.0;
        return e;
    }
    if (k <= modes_) return alpha_.col(static_cast<Eigen::Index>(k - 1));
    return eig_.vectors.transpose() * hat_load_column(k, disc_.size());
}

Coords GalerkinSpace::modal_projection(const SpectralVector& v) const {
    Coords beta = Coords::Zero(static_cast<Eigen::Index>(dim()));
    const std::size_t cached = std::min(v.dim(), modes_);
    if (disc_.is_spectral()) {
        for (std::size_t k = 1; k <= std::min(v.dim(), dim()); ++k) beta(static_cast<Eigen::Index>(k - 1)) = v[k - 1];
        return beta;
    }
    const Eigen::Map<const Eigen::VectorXd> head(v.coeffs().data(), static_cast<Eigen::Index>(cached));
    beta = alpha_.leftCols(static_cast<Eigen::Index>(cached)) * head;
    for (std::size_t k = cached + 1; k <= v.dim(); ++k) {
        if (v[k - 1] != 0.0) beta += v[k - 1] * modal_projection_of_mode(k);
    }
    return beta;
}

SpectralVector GalerkinSpace::expand(const Coords& modal, std::size_t dim) const {
    SpectralVector out(dim);
    if (disc_.is_spectral()) {
        for (std::size_t k = 1; k <= std::min(dim, this->dim()); ++k) out[k - 1] = modal(static_cast<Eigen::Index>(k - 1));
        return out;
    }
    const std::size_t cached = std::min(dim, modes_);
    Eigen::Map<Eigen::VectorXd> head(out.coeffs().data(), static_cast<Eigen::Index>(cached));
    head = alpha_.leftCols(static_cast<Eigen::Index>(cached)).transpose() * modal;
    for (std::size_t k = cached + 1; k <= dim; ++k) out[k - 1] = modal_projection_of_mode(k).dot(modal);
    return out;
}

Coords GalerkinSpace::to_nodal(const Coords& modal) const {
    if (disc_.is_spectral()) return modal;
    return eig_.vectors * modal;
}

Coords GalerkinSpace::from_nodal(const Coords& nodal) const {
    if (disc_.is_spectral()) return nodal;
    return eig_.vectors.transpose() * op_.mass.multiply(nodal);
}

Coords p_h_project(const SpectralVector& v, const Discretization& disc) {
    v.check_finite();
    const std::size_t n = disc.size();
    if (disc.is_spectral()) {
        Coords c = Coords::Zero(static_cast<Eigen::Index>(n));
        for (std::size_t k = 1; k <= std::min(n, v.dim()); ++k) c(static_cast<Eigen::Index>(k - 1)) = v[k - 1];
        return c;
    }
    Coords b = Coords::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k <= v.dim(); ++k) {
        if (v[k - 1] != 0.0) b += v[k - 1] * hat_load_column(k, n);
    }
    return solve_spd_tridiagonal(assemble_p1(n).mass, b);
}

Coords r_h_project(const SpectralVector& v, const Discretization& disc) {
    v.check_finite();
    if (disc.is_spectral()) return p_h_project(v, disc);
    const std::size_t n = disc.size();
    Coords b = Coords::Zero(static_cast<Eigen::Index>(n));
    for (std::size_t k = 1; k <= v.dim(); ++k) {
        if (v[k - 1] != 0.0) b += eigenvalue(k) * v[k - 1] * hat_load_column(k, n);
    }
    return solve_spd_tridiagonal(assemble_p1(n).stiffness, b);
}

SpectralVector expand_coordinates(const Coords& c, const Discretization& disc, std::size_t dim) {
    SpectralVector out(dim);
    if (disc.is_spectral()) {
        for (std::size_t k = 1; k <= std::min<std::size_t>(dim, static_cast<std::size_t>(c.size())); ++k)
            out[k - 1] = c(static_cast<Eigen::Index>(k - 1));
        return out;
    }
    for (std::size_t k = 1; k <= dim; ++k) out[k - 1] = hat_load_column(k, disc.size()).dot(c);
    return out;
}

Coords apply_discrete_semigroup(double t, const Coords& c, const GalerkinSpace& space) {
    require_positive_time(t, "apply_discrete_semigroup");
    if (static_cast<std::size_t>(c.size()) != space.dim())
        throw DomainError("apply_discrete_semigroup: coordinate dimension mismatch");
    if (t == 0.0) return c;
    Coords modal = space.from_nodal(c);
    for (std::size_t i = 0; i < space.dim(); ++i) modal(static_cast<Eigen::Index>(i)) *= std::exp(-space.lambdas()[i] * t);
    return space.to_nodal(modal);
}

Coords apply_discrete_semigroup(double t, const Coords& c, const Discretization& disc) {
    return apply_discrete_semigroup(t, c, GalerkinSpace(disc, 1));
}

namespace {

// y = F_h(t) x on span{e_1..e_n}, n = space.modes().
void apply_F_h_truncated(const GalerkinSpace& space, const std::vector<double>& decay_h,
                         const std::vector<double>& decay, const Eigen::VectorXd& x, Eigen::VectorXd& y) {
    if (space.discretization().is_spectral()) {
        // Diagonal: resolved modes cancel exactly, the rest see -S(t).
        for (Eigen::Index k = 0; k < y.size(); ++k) {
            const auto uk = static_cast<std::size_t>(k);
            y(k) = (uk < space.dim() ? decay_h[uk] - decay[uk] : -decay[uk]) * x(k);
        }
        return;
    }
    Eigen::VectorXd modal = space.coupling() * x;
    for (Eigen::Index i = 0; i < modal.size(); ++i) modal(i) *= decay_h[static_cast<std::size_t>(i)];
    y.noalias() = space.coupling().transpose() * modal;
    for (Eigen::Index k = 0; k < y.size(); ++k) y(k) -= decay[static_cast<std::size_t>(k)] * x(k);
}

}  // namespace

SpectralVector apply_F_h(double t, const SpectralVector& v, const GalerkinSpace& space) {
    if (!(t > 0.0)) throw DomainError("apply_F_h: t must be > 0");
    v.check_finite();
    const std::size_t ref_dim = space.modes();
    Coords modal = space.modal_projection(v);
    for (std::size_t i = 0; i < space.dim(); ++i) modal(static_cast<Eigen::Index>(i)) *= std::exp(-space.lambdas()[i] * t);
    SpectralVector out = space.expand(modal, ref_dim);
    out -= apply_semigroup(t, v.resized(ref_dim));
    return out;
}

SpectralVector apply_F_h(double t, const SpectralVector& v, const Discretization& disc, std::size_t ref_dim) {
    return apply_F_h(t, v, GalerkinSpace(disc, ref_dim));
}

OperatorNormEstimate operator_norm_F_h(double t, const GalerkinSpace& space, std::size_t max_iterations) {
    if (!(t > 0.0)) throw DomainError("operator_norm_F_h: t must be > 0 (the h²/t bound degenerates at t = 0)");
    const std::size_t n = space.modes();
    std::vector<double> decay_h(space.dim()), decay(n);
    for (std::size_t i = 0; i < space.dim(); ++i) decay_h[i] = std::exp(-space.lambdas()[i] * t);
    for (std::size_t k = 1; k <= n; ++k) decay[k - 1] = std::exp(-eigenvalue(k) * t);

    constexpr double tolerance = 1e-8;
    Eigen::VectorXd v = Eigen::VectorXd::Ones(static_cast<Eigen::Index>(n)).normalized();
    Eigen::VectorXd fv(v.size()), w(v.size());
    for (std::size_t it = 1; it <= max_iterations; ++it) {
        apply_F_h_truncated(space, decay_h, decay, v, fv);
        apply_F_h_truncated(space, decay_h, decay, fv, w);
        const double rho = fv.squaredNorm();  // vᵀFᵀFv with ‖v‖ = 1
        if (rho == 0.0) return {0.0, it};
        const double residual = (w - rho * v).norm();
        if (residual <= tolerance * rho) return {std::sqrt(rho), it};
        v = w / w.norm();
    }
    std::ostringstream msg;
    msg << "operator_norm_F_h: power iteration did not converge in " << max_iterations << " iterations (t=" << t
        << ", " << space.discretization().label() << ")";
    throw ComputationError(msg.str());
}

double operator_norm_F_h(double t, const Discretization& disc, std::size_t ref_dim) {
    return operator_norm_F_h(t, GalerkinSpace(disc, ref_dim)).value;
}

}  // namespace spde
