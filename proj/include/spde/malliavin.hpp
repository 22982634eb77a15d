#pragma once

// Malliavin calculus on a Poisson random measure, restricted to finitely many
// disjoint cells B_1..B_M with measures μ_m. Random variables are functions
// of the counts n = (p(B_1), ..., p(B_M)), which are independent Poisson(μ_m).
// D adds one point to a cell (a forward difference in n) and δ is its adjoint.
// Expectations are exact sums over a truncated lattice of counts.
//
// Cells are indexed from 0 in this module.

#include "spde/mild.hpp"
#include "spde/spectral.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace spde {

class CellPartition {
public:
    /// Throws DomainError unless there is at least one cell and every
    /// measure is positive and finite. `windows` optionally assigns each cell
    /// a time-window index for predictability checks; by default all cells
    /// share window 0.
    explicit CellPartition(std::vector<double> measures, std::vector<std::size_t> windows = {});

    std::size_t size() const noexcept { return measures_.size(); }
    double measure(std::size_t m) const { return measures_.at(m); }
    const std::vector<double>& measures() const noexcept { return measures_; }
    std::size_t window(std::size_t m) const { return windows_.at(m); }

private:
    std::vector<double> measures_;
    std::vector<std::size_t> windows_;
};

/// Real function of the count vector that reads only the counts of `cells`.
/// The callable receives the full count vector (length M).
class LatticeFunction {
public:
    using Fn = std::function<double(std::span<const int>)>;

    LatticeFunction(std::vector<std::size_t> cells, Fn fn);

    /// Constant c.
    static LatticeFunction constant(double c);
    /// n_m + offset.
    static LatticeFunction count(std::size_t m, double offset = 0.0);
    /// Σ_j coeffs[j]·n_m^j.
    static LatticeFunction polynomial(std::size_t m, std::vector<double> coeffs);
    /// Table over {0..max_count}^cells.size(), row-major in the order of
    /// `cells`. Evaluating with any count above max_count throws DomainError.
    static LatticeFunction tabulated(std::vector<std::size_t> cells, int max_count, std::vector<double> values);

    const std::vector<std::size_t>& cells() const noexcept { return cells_; }
    bool depends_on(std::size_t m) const;
    double operator()(std::span<const int> counts) const { return fn_(counts); }

    /// n ↦ f(n + e_m) - f(n).
    LatticeFunction shifted_difference(std::size_t m) const;
    /// n ↦ f(n)·g(n).
    LatticeFunction times(const LatticeFunction& g) const;

private:
    std::vector<std::size_t> cells_;  // sorted, unique
    Fn fn_;
};

/// F = Σ_i f_i(n)·h_i.
struct CylindricalTerm {
    LatticeFunction f;
    SpectralVector h;
};

class CylindricalRV {
public:
    CylindricalRV() = default;
    explicit CylindricalRV(std::vector<CylindricalTerm> terms);

    const std::vector<CylindricalTerm>& terms() const noexcept { return terms_; }
    void add_term(LatticeFunction f, SpectralVector h);
    /// Sorted union of the cells read by any term.
    std::vector<std::size_t> cells() const;
    /// Largest dimension among the h_i (at least 1).
    std::size_t dim() const;

    /// F(n), with dimension dim().
    SpectralVector evaluate(std::span<const int> counts) const;

    CylindricalRV& operator+=(const CylindricalRV& other);

private:
    std::vector<CylindricalTerm> terms_;
};

/// Φ = Σ_m c_m(n)·1_{B_m}·h_m with at most one value per cell. A missing
/// coefficient means c_m ≡ 1 (deterministic field).
struct FieldValue {
    std::size_t cell;
    SpectralVector h;
    std::optional<LatticeFunction> coefficient;
};

class SimpleField {
public:
    SimpleField() = default;
    /// Throws DomainError if a cell appears twice.
    explicit SimpleField(std::vector<FieldValue> values);

    const std::vector<FieldValue>& values() const noexcept { return values_; }
    bool is_deterministic() const;
    /// h_m·c_m(n) on cell m, or nothing if m is outside the support.
    std::optional<SpectralVector> value_at(std::size_t m, std::span<const int> counts) const;
    /// Cells of the support together with the cells the coefficients read.
    std::vector<std::size_t> cells() const;
    /// Throws DomainError if a coefficient reads a cell whose window is not
    /// strictly earlier than the window of the cell it multiplies.
    void check_predictable(const CellPartition& part) const;

private:
    std::vector<FieldValue> values_;
};

/// Truncated product of Poisson(μ_m) laws on {0..n_max}^M.
class PoissonLattice {
public:
    /// n_max is the least value with Σ_m Σ_{n>n_max} w_m(n)(1+n)^moment_order
    /// ≤ tolerance, so both the neglected mass and the neglected moments up to
    /// moment_order are below tolerance. `max_points` caps any enumeration.
    explicit PoissonLattice(const CellPartition& part, double tolerance = 1e-12, int moment_order = 8,
                            std::uint64_t max_points = 200'000'000);

    const CellPartition& partition() const noexcept { return part_; }
    int n_max() const noexcept { return n_max_; }
    /// Neglected probability Σ_m P(p(B_m) > n_max), summed term by term.
    double tail_mass() const noexcept { return tail_mass_; }
    double weight(std::size_t m, int n) const { return weights_.at(m).at(static_cast<std::size_t>(n)); }

    /// Calls visit(counts, weight) for every point of {0..n_max}^cells with
    /// all other counts zero, in lexicographic order. Throws ComputationError
    /// when the point count exceeds the budget.
    void enumerate(const std::vector<std::size_t>& cells,
                   const std::function<void(std::span<const int>, double)>& visit) const;

    /// Σ over the lattice of weight·fn(n) for a scalar function of `cells`.
    double expect(const std::vector<std::size_t>& cells, const std::function<double(std::span<const int>)>& fn) const;

private:
    CellPartition part_;
    int n_max_ = 0;
    double tail_mass_ = 0.0;
    std::uint64_t max_points_;
    std::vector<std::vector<double>> weights_;
};

/// [DF]_m for every cell m: the cylindrical variable with functions
/// n ↦ f_i(n + e_m) - f_i(n). Terms not reading cell m are dropped.
std::vector<CylindricalRV> malliavin_derivative(const CylindricalRV& F, const CellPartition& part);

/// δ(φ) = Σ_m (n_m - μ_m)·h_m for a deterministic simple field.
CylindricalRV divergence_simple(const SimpleField& phi, const CellPartition& part);

/// δ(Φ) for an elementary field, from the Mecke formula: cell m contributes
/// (n_m·c_m(n - e_m) - μ_m·c_m(n))·h_m. When c_m does not read cell m this is
/// c_m(n)(n_m - μ_m)·h_m.
CylindricalRV divergence(const SimpleField& phi, const CellPartition& part);

/// The Itô sum Σ_m c_m(n)(n_m - μ_m) h_m of an elementary predictable field.
CylindricalRV ito_integral(const SimpleField& phi, const CellPartition& part);

/// E[F] over the lattice. Throws DomainError if F is not finite somewhere on it.
SpectralVector expectation(const CylindricalRV& F, const PoissonLattice& lattice);

/// |E Σ_m μ_m ⟨[DF]_m, φ_m⟩ - E ⟨F, δ(φ)⟩|; φ may be elementary, in which
/// case δ is `divergence`.
double duality_residual(const CylindricalRV& F, const SimpleField& phi, const PoissonLattice& lattice);

struct LipschitzMap {
    std::string name;
    std::function<SpectralVector(const SpectralVector&)> apply;
};

LipschitzMap identity_map();
/// x ↦ ‖x‖_H·u.
LipschitzMap norm_scaling_map(SpectralVector u);
/// x ↦ clamp(a·x + b, -c, c) coefficientwise.
LipschitzMap clamped_affine_map(double a, SpectralVector b, double c);
/// x ↦ a·x + b.
LipschitzMap affine_map(double a, SpectralVector b);

/// Max over lattice points n and cells m of
/// ‖[Dφ(F)]_m(n) - (φ(F(n) + [DF]_m(n)) - φ(F(n)))‖ / (1 + ‖φ(F(n))‖ + ‖φ(F(n + e_m))‖).
/// φ(F) is represented as the cylindrical variable Σ_k ⟨φ(F(n)), e_k⟩ e_k.
double chain_rule_check(const LipschitzMap& phi, const CylindricalRV& F, const PoissonLattice& lattice);

/// Max over lattice points and cells of ‖[Dδ(φ)]_m(n) - h_m·1{m ∈ supp φ}‖.
double d_delta_identity_check(const SimpleField& phi, const PoissonLattice& lattice);

struct SkorohodItoReport {
    /// Max over lattice points of ‖δ(Φ)(n) - I(Φ)(n)‖ / (1 + ‖I(Φ)(n)‖).
    double pointwise_residual = 0.0;
    /// Max over the test variables G of |E Σ_m μ_m⟨[DG]_m, Φ_m⟩ - E⟨G, I(Φ)⟩|.
    double duality_residual = 0.0;
};

/// Throws DomainError if Φ is not predictable with respect to the windows of
/// the partition.
SkorohodItoReport skorohod_ito_check(const SimpleField& phi, const PoissonLattice& lattice,
                                     const std::vector<CylindricalRV>& test_variables);

/// |E‖I(Φ)‖² - E Σ_m μ_m c_m(n)²‖h_m‖²| for a predictable Φ.
double isometry_residual(const SimpleField& phi, const PoissonLattice& lattice);

/// Max duality residual over `pairs` random (F, φ): M ∈ {1,2,3} cells with
/// μ_m ∈ (0,1], F with up to three terms whose f_i are polynomials of degree
/// ≤ 3 in the counts of one or two cells, φ deterministic with random support.
double randomized_duality_max_residual(std::size_t pairs, std::uint64_t seed);

struct CheckResult {
    std::string name;
    double residual = 0.0;
    double bound = 0.0;
    bool pass = false;
};

/// The lattice identity suite on fixed fixtures: randomized duality (100
/// pairs from `seed`), chain rule for each map, D∘δ, Skorokhod = Itô and the
/// isometry.
std::vector<CheckResult> malliavin_identity_checks(std::uint64_t seed);

struct IntegrationByPartsReport {
    double lhs = 0.0;  // MC estimate of E⟨X_h(T), Z_h(T)⟩
    double standard_error = 0.0;
    double rhs = 0.0;  // Σ_k q_k g_k² ∫_0^T ‖S_h(s)P_h e_k‖² ds
    std::size_t samples = 0;

    double residual() const;
    /// |lhs - rhs| ≤ 4·SE (exact agreement when SE = 0).
    bool pass() const;
};

/// F = X_h(T) against the noise Φ(s) = S_h(T-s)P_h G, whose stochastic
/// integral is the stochastic convolution Z_h(T). The derivative of X_h(T) is
/// the deterministic field S_h(T-s)P_h G u, so the right-hand side is closed form.
IntegrationByPartsReport integration_by_parts_check(const ModelSpec& spec, const Discretization& disc,
                                                    std::size_t samples, std::uint64_t seed, unsigned threads = 1,
                                                    std::size_t modes = 1);

}  // namespace spde
