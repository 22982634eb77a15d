#pragma once

// Square-integrable, mean-zero, pure-jump Lévy process in U = H built from a
// finite-activity Poisson random measure. A jump lands in mode k with
// probability p_k and has size ±a_k·e_k, each sign with probability 1/2, so
// the jump law is symmetric, the compensator vanishes and
// Q = diag(q_k), q_k = λ_tot p_k a_k².

#include "spde/rng.hpp"
#include "spde/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace spde {

class LevyMeasureSpec {
public:
    /// Throws DomainError unless intensity ≥ 0, probabilities are
    /// nonnegative and sum to 1 within 1e-12, and scales are positive.
    LevyMeasureSpec(double intensity, std::vector<double> mode_probs, std::vector<double> jump_scales);

    double intensity() const noexcept { return intensity_; }
    std::size_t modes() const noexcept { return probs_.size(); }
    const std::vector<double>& mode_probs() const noexcept { return probs_; }
    const std::vector<double>& jump_scales() const noexcept { return scales_; }

    /// Mode k (1-based) for a uniform variate in (0,1).
    std::uint32_t mode_for(double u) const;

    friend bool operator==(const LevyMeasureSpec& a, const LevyMeasureSpec& b) {
        return a.intensity_ == b.intensity_ && a.probs_ == b.probs_ && a.scales_ == b.scales_;
    }

private:
    double intensity_;
    std::vector<double> probs_;
    std::vector<double> scales_;
    std::vector<double> cumulative_;
};

struct Jump {
    double time;
    std::uint32_t mode;  // 1-based
    double size;         // ±a_mode

    friend bool operator==(const Jump&, const Jump&) = default;
};

struct PoissonSamplePath {
    double horizon = 0.0;
    std::vector<Jump> jumps;  // strictly increasing times in (0, horizon]

    friend bool operator==(const PoissonSamplePath&, const PoissonSamplePath&) = default;
};

struct CovarianceDiag {
    std::vector<double> q;

    double trace() const;
};

CovarianceDiag covariance_diag(const LevyMeasureSpec& spec);

/// ∫‖u‖² ν(du) = λ_tot Σ p_k a_k² = trace Q.
double second_moment_of_measure(const LevyMeasureSpec& spec);

/// One realization of the jump marks on (0, horizon]: count ~ Poisson(λ_tot T),
/// sorted uniform times, categorical modes, fair signs.
PoissonSamplePath sample_path(const LevyMeasureSpec& spec, double horizon, RandomStream& stream);

/// L(t) = Σ_{τ_j ≤ t} ξ_j e_{κ_j}, as a vector of dimension `dim` (modes
/// above dim are dropped).
SpectralVector evaluate_L(const PoissonSamplePath& path, double t, std::size_t dim);

/// Q^{1/2} v; modes beyond the measure's support map to zero.
SpectralVector q_sqrt_apply(const LevyMeasureSpec& spec, const SpectralVector& v);

/// Rows `sample_id,jump_time,mode,size`, without header.
void write_path_rows(std::ostream& out, std::uint64_t sample_id, const PoissonSamplePath& path);
inline constexpr const char* kPathCsvHeader = "sample_id,jump_time,mode,size";

/// Parses a path dump (with header) back into per-sample paths. Samples with
/// no jumps do not appear in a dump and are therefore absent here.
std::vector<std::pair<std::uint64_t, PoissonSamplePath>> read_path_csv(std::istream& in, double horizon);

}  // namespace spde
