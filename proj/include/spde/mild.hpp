#pragma once

// Mild solutions of dX + AX dt = f dt + G dL, X(0) = x0, with time-constant f
// and diagonal G = diag(g_k), evaluated exactly in time:
//
//   X_h(T) = S_h(T)P_h x0 + A_h^{-1}(I - S_h(T))P_h f + Σ_j S_h(T-τ_j)P_h G ξ_j e_{κ_j}.
//
// The jump sum is the stochastic convolution for one realization of the
// compound Poisson driver; it is exact because the integrand is deterministic
// and the compensator of the symmetric jump law vanishes. The reference X(T)
// is the same formula on the spectral truncation with ref_dim modes.

#include "spde/fem.hpp"
#include "spde/levy.hpp"
#include "spde/spectral.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace spde {

struct ModelSpec {
    SpectralVector x0;
    SpectralVector f;       // constant in time
    std::vector<double> g;  // G e_k = g_k e_k; zero beyond g.size()
    double horizon;
    LevyMeasureSpec levy;

    double g_at(std::size_t k) const noexcept { return k >= 1 && k <= g.size() ? g[k - 1] : 0.0; }

    /// Throws DomainError for a non-positive horizon or non-finite data.
    void validate() const;
};

/// X(T) (reference) or X_h(T) for one path. `coeffs` uses the coordinates of
/// p_h_project: spectral coefficients, or nodal values on the mesh.
struct SolutionSample {
    Discretization disc;
    bool reference = false;
    Coords coeffs;
    std::uint64_t path_id = 0;
};

/// A model bound to one Galerkin space, with the per-mode noise pushforward
/// P_h G e_k cached in modal coordinates. Immutable and shareable.
class GalerkinModel {
public:
    /// `modes` bounds the spectral expansions used for FEM couplings; it is
    /// raised to cover all noise modes.
    GalerkinModel(const ModelSpec& spec, Discretization disc, std::size_t modes);

    /// Spectral evaluation of the exact mild solution with ref_dim modes.
    static GalerkinModel reference(const ModelSpec& spec, std::size_t ref_dim);

    const ModelSpec& spec() const noexcept { return spec_; }
    const GalerkinSpace& space() const noexcept { return space_; }
    bool is_reference() const noexcept { return reference_; }
    std::size_t dim() const noexcept { return space_.dim(); }

    /// Modal coordinates of the deterministic part (= E X_h(T)).
    const Coords& deterministic_modal() const noexcept { return deterministic_; }

    /// Modal coordinates of the stochastic convolution for one path.
    Coords stochastic_convolution_modal(const PoissonSamplePath& path) const;

    /// Deterministic part plus stochastic convolution, accumulated in that order.
    Coords solve_modal(const PoissonSamplePath& path) const;

    /// E‖X_h(T)‖²_H = ‖E X_h(T)‖² + Σ_k q_k g_k² ∫_0^T ‖S_h(s)P_h e_k‖² ds.
    double analytic_second_moment() const;
    /// The noise part of analytic_second_moment alone.
    double noise_second_moment() const;

    /// Natural coordinates (spectral or nodal) of a modal vector.
    Coords to_coordinates(const Coords& modal) const { return space_.to_nodal(modal); }

    /// ⟨X_h, ψ⟩_H for X_h given in modal coordinates.
    double inner_with(const Coords& modal, const SpectralVector& psi) const;

    /// ‖X_h - X‖²_H for X_h in modal coordinates and X a reference modal
    /// vector (spectral coefficients).
    double squared_distance_to_reference(const Coords& modal, const Coords& reference_modal) const;

private:
    GalerkinModel(const ModelSpec& spec, Discretization disc, std::size_t modes, bool reference);

    ModelSpec spec_;
    GalerkinSpace space_;
    bool reference_;
    Coords deterministic_;
    std::vector<double> q_;
};

/// E‖X_h(T) - X(T)‖²_H in closed form, X evaluated with ref_dim modes.
double analytic_strong_error_squared(const GalerkinModel& model, const GalerkinModel& reference);

/// Per-mode variance q_k g_k² (1 - e^{-2λT}) / (2λ) of the spectral stochastic convolution.
double spectral_mode_variance(const ModelSpec& spec, std::size_t k);

/// E‖X(T) - X_ref(T)‖²: the second moment carried by data modes above
/// ref_dim, which the reference drops. Zero when all data fits in ref_dim.
double reference_tail_second_moment(const ModelSpec& spec, std::size_t ref_dim);

// Spec-level conveniences; each builds a GalerkinModel with `ref_dim` modes.
Coords deterministic_part(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim = 1);
Coords stochastic_convolution(const ModelSpec& spec, const PoissonSamplePath& path, const Discretization& disc,
                              std::size_t ref_dim = 1);
SolutionSample solve_mild(const ModelSpec& spec, const PoissonSamplePath& path, const Discretization& disc,
                          std::uint64_t path_id = 0, std::size_t ref_dim = 1);
/// Reference variant of solve_mild.
SolutionSample solve_mild_reference(const ModelSpec& spec, const PoissonSamplePath& path, std::size_t ref_dim,
                                    std::uint64_t path_id = 0);
Coords analytic_mean(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim = 1);
double analytic_second_moment(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim = 1);

}  // namespace spde
