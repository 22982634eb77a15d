#pragma once

// Spectral machinery for H = L²(0,1), A = -d²/dx² with homogeneous Dirichlet
// conditions. Eigenpairs are e_k(x) = √2 sin(kπx), λ_k = (kπ)², k ≥ 1.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace spde {

/// Coefficients of an element of H in the Dirichlet eigenbasis.
/// Entry `[k-1]` holds ⟨x, e_k⟩_H, so mode numbers are 1-based while
/// storage is 0-based.
class SpectralVector {
public:
    /// Zero vector of the given dimension (dim ≥ 1).
    explicit SpectralVector(std::size_t dim);
    explicit SpectralVector(std::vector<double> coeffs);
    SpectralVector(std::initializer_list<double> coeffs);

    /// Unit vector e_k embedded in dimension `dim` (k ≤ dim).
    static SpectralVector unit(std::size_t k, std::size_t dim);

    std::size_t dim() const noexcept { return coeffs_.size(); }

    double operator[](std::size_t i) const { return coeffs_[i]; }
    double& operator[](std::size_t i) { return coeffs_[i]; }

    /// Coefficient of mode k (1-based); zero beyond dim.
    double mode(std::size_t k) const noexcept;

    std::span<const double> coeffs() const noexcept { return coeffs_; }
    std::span<double> coeffs() noexcept { return coeffs_; }

    /// Copy truncated or zero-padded to `dim`.
    SpectralVector resized(std::size_t dim) const;

    /// Throws DomainError if any entry is NaN or infinite.
    void check_finite() const;

    SpectralVector& operator+=(const SpectralVector& other);
    SpectralVector& operator-=(const SpectralVector& other);
    SpectralVector& operator*=(double s);

    friend bool operator==(const SpectralVector&, const SpectralVector&) = default;

private:
    std::vector<double> coeffs_;
};

SpectralVector operator+(SpectralVector a, const SpectralVector& b);
SpectralVector operator-(SpectralVector a, const SpectralVector& b);
SpectralVector operator*(double s, SpectralVector v);

/// λ_k = (kπ)². Throws DomainError for k = 0.
double eigenvalue(std::size_t k);

/// Eigenvalues λ_1..λ_dim, computed from the closed form.
class EigenSystem {
public:
    explicit EigenSystem(std::size_t dim);
    std::size_t dim() const noexcept { return lambdas_.size(); }
    double lambda(std::size_t k) const { return lambdas_.at(k - 1); }
    std::span<const double> lambdas() const noexcept { return lambdas_; }

private:
    std::vector<double> lambdas_;
};

/// √2 sin(kπx) for x ∈ [0,1].
double evaluate_basis(std::size_t k, double x);

/// S(t)v = Σ e^{-λ_k t} v_k e_k. Throws DomainError for t < 0.
SpectralVector apply_semigroup(double t, const SpectralVector& v);

/// ‖v‖_s = (Σ λ_k^s v_k²)^{1/2} = ‖A^{s/2} v‖_H.
double hs_fractional_norm(double s, const SpectralVector& v);

/// ⟨v, w⟩_H; the shorter vector is treated as zero-padded.
double h_inner(const SpectralVector& v, const SpectralVector& w);

double h_norm(const SpectralVector& v);

/// A^{s/2} v, applied mode by mode.
SpectralVector apply_fractional_power(double s, const SpectralVector& v);

}  // namespace spde
