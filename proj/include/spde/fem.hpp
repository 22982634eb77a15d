#pragma once

// Galerkin spaces V_h ⊂ Ḣ¹: spectral truncation span{e_1..e_N} and P1 finite
// elements on the uniform mesh of (0,1) with M interior nodes. Both are
// represented through the eigenpairs of the discrete operator A_h, which makes
// S_h(t) = e^{-tA_h} diagonal.

#include "spde/spectral.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <string>
#include <vector>

namespace spde {

using Coords = Eigen::VectorXd;

class Discretization {
public:
    enum class Kind { spectral, fem };

    /// V_h = span{e_1..e_N}; h := λ_N^{-1/2} = 1/(Nπ).
    static Discretization spectral(std::size_t n_modes);
    /// P1 hat functions on M interior nodes; h := 1/(M+1).
    static Discretization fem(std::size_t interior_nodes);

    Kind kind() const noexcept { return kind_; }
    bool is_spectral() const noexcept { return kind_ == Kind::spectral; }
    /// N for spectral truncation, M for the mesh; equals dim V_h in both cases.
    std::size_t size() const noexcept { return size_; }
    double h() const noexcept { return h_; }
    std::string label() const;

    friend bool operator==(const Discretization&, const Discretization&) = default;

private:
    Discretization(Kind kind, std::size_t size, double h) : kind_(kind), size_(size), h_(h) {}
    Kind kind_;
    std::size_t size_;
    double h_;
};

/// Symmetric tridiagonal matrix: `diag` has n entries, `off` has n-1.
struct SymTridiagonal {
    std::vector<double> diag;
    std::vector<double> off;

    std::size_t size() const noexcept { return diag.size(); }
    Eigen::MatrixXd dense() const;
    Coords multiply(const Coords& x) const;
};

/// Stiffness ⟨φ_i', φ_j'⟩ and mass ⟨φ_i, φ_j⟩ matrices of the hat functions.
struct FemOperator {
    std::size_t interior_nodes = 0;
    double h = 0.0;
    SymTridiagonal stiffness;
    SymTridiagonal mass;
};

/// Generalized eigenpairs stiffness·ψ = λ·mass·ψ, ascending, with
/// mass-orthonormal columns in `vectors`.
struct DiscreteEigenSystem {
    std::vector<double> lambdas;
    Eigen::MatrixXd vectors;
};

FemOperator assemble_p1(std::size_t interior_nodes);

/// Throws ComputationError when the solver fails or a pair violates
/// ‖Kψ - λMψ‖ ≤ 1e-10·λ.
DiscreteEigenSystem discrete_eigensystem(const FemOperator& op);

/// Solves T x = b for symmetric positive definite tridiagonal T.
Coords solve_spd_tridiagonal(const SymTridiagonal& t, const Coords& b);

/// ⟨e_k, φ_i⟩_H for all interior nodes i, from the closed-form integral of
/// √2 sin(kπx) against the hat function centred at x_i.
Coords hat_load_column(std::size_t k, std::size_t interior_nodes);

/// V_h together with the data needed to move between it and the spectral
/// representation of H. Immutable after construction.
///
/// Elements of V_h are carried in "modal" coordinates: coefficients in the
/// H-orthonormal eigenbasis (ψ_{h,i}) of A_h. For spectral truncation this
/// is the identity on the first N modes. `coupling()` holds
/// α_{ik} = ⟨ψ_{h,i}, e_k⟩_H for k ≤ modes(), so that the modal coordinates of
/// P_h v are α·v and the e_k-expansion of a modal vector β is αᵀβ.
class GalerkinSpace {
public:
    GalerkinSpace(Discretization disc, std::size_t modes);

    const Discretization& discretization() const noexcept { return disc_; }
    std::size_t dim() const noexcept { return lambdas_.size(); }
    std::size_t modes() const noexcept { return modes_; }
    double h() const noexcept { return disc_.h(); }

    /// Eigenvalues λ_{h,i} of A_h, ascending.
    const std::vector<double>& lambdas() const noexcept { return lambdas_; }
    /// α restricted to k ≤ modes(). Empty for spectral truncation, where α is
    /// the identity on the first N modes and is never materialized.
    const Eigen::MatrixXd& coupling() const noexcept { return alpha_; }

    /// Modal coordinates of P_h v. Modes of v beyond modes() are included.
    Coords modal_projection(const SpectralVector& v) const;
    /// α_{·k}: modal coordinates of P_h e_k.
    Coords modal_projection_of_mode(std::size_t k) const;

    /// e_k-expansion of a modal vector, truncated at `dim`.
    SpectralVector expand(const Coords& modal, std::size_t dim) const;

    /// Nodal (hat-function) coordinates of a modal vector; identity for spectral.
    Coords to_nodal(const Coords& modal) const;
    Coords from_nodal(const Coords& nodal) const;

    const FemOperator* fem_operator() const noexcept { return disc_.is_spectral() ? nullptr : &op_; }
    const DiscreteEigenSystem* fem_eigensystem() const noexcept {
        return disc_.is_spectral() ? nullptr : &eig_;
    }

private:
    Discretization disc_;
    std::size_t modes_;
    std::vector<double> lambdas_;
    FemOperator op_;
    DiscreteEigenSystem eig_;
    Eigen::MatrixXd alpha_;
};

/// Coordinates of P_h v: the first N coefficients (spectral) or the nodal
/// values solving mass·c = b with b_i = ⟨v, φ_i⟩_H (FEM).
Coords p_h_project(const SpectralVector& v, const Discretization& disc);

/// Coordinates of R_h v: solves stiffness·c = b, b_i = ⟨v, φ_i⟩_{Ḣ¹}.
/// Coincides with p_h_project for spectral truncation.
Coords r_h_project(const SpectralVector& v, const Discretization& disc);

/// e_k-expansion (up to `dim` modes) of an element of V_h given in the
/// coordinates returned by p_h_project / r_h_project.
SpectralVector expand_coordinates(const Coords& c, const Discretization& disc, std::size_t dim);

/// S_h(t)c in the same coordinates as p_h_project.
Coords apply_discrete_semigroup(double t, const Coords& c, const Discretization& disc);
Coords apply_discrete_semigroup(double t, const Coords& c, const GalerkinSpace& space);

/// F_h(t)v = S_h(t)P_h v - S(t)v expanded up to `ref_dim` modes.
SpectralVector apply_F_h(double t, const SpectralVector& v, const Discretization& disc, std::size_t ref_dim);
SpectralVector apply_F_h(double t, const SpectralVector& v, const GalerkinSpace& space);

struct OperatorNormEstimate {
    double value = 0.0;
    std::size_t iterations = 0;
};

/// ‖F_h(t)‖_{L(H)} restricted to span{e_1..e_{space.modes()}}, by power
/// iteration on F_h(t)ᵀF_h(t). Converged when the eigen-residual is below
/// 1e-8 relative, which bounds the relative error of the norm by 5e-9.
OperatorNormEstimate operator_norm_F_h(double t, const GalerkinSpace& space,
                                       std::size_t max_iterations = 500000);
double operator_norm_F_h(double t, const Discretization& disc, std::size_t ref_dim);

}  // namespace spde
