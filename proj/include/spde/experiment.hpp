#pragma once

// Convergence experiments: weak and strong errors of Galerkin levels against a
// spectral reference, analytic or Monte Carlo, log-log rate fits, and the
// deterministic smoothing check for F_h(t) = S_h(t)P_h - S(t).

#include "spde/fem.hpp"
#include "spde/mild.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace spde {

/// A coefficient sequence given explicitly or as scale·k^power for k = 1..dim.
struct CoefficientSpec {
    struct PowerLaw {
        double power = 0.0;
        double scale = 1.0;
        std::size_t dim = 1;
        friend bool operator==(const PowerLaw&, const PowerLaw&) = default;
    };

    std::vector<double> values;
    std::optional<PowerLaw> power_law;

    static CoefficientSpec explicit_values(std::vector<double> values);
    static CoefficientSpec power(double power, double scale, std::size_t dim);

    std::vector<double> materialize() const;
    friend bool operator==(const CoefficientSpec&, const CoefficientSpec&) = default;
};

struct LevyConfig {
    double intensity = 0.0;
    CoefficientSpec mode_weights;  // normalized to probabilities
    CoefficientSpec jump_scales;
    /// When set, jump scales are multiplied by one common factor so that
    /// trace Q equals this value.
    std::optional<double> trace;

    LevyMeasureSpec build() const;
    friend bool operator==(const LevyConfig&, const LevyConfig&) = default;
};

struct Functional {
    enum class Kind { squared_norm, linear };
    Kind kind = Kind::squared_norm;
    std::string name;     // CSV label
    CoefficientSpec psi;  // linear only

    friend bool operator==(const Functional&, const Functional&) = default;
};

struct SmoothingConfig {
    std::vector<double> t_grid{0.01, 0.05, 0.1, 0.5, 1.0};
    std::vector<std::size_t> fem_nodes{7, 15, 31, 63};
    std::size_t modes = 1024;

    friend bool operator==(const SmoothingConfig&, const SmoothingConfig&) = default;
};

enum class Mode { analytic, mc };

struct ExperimentConfig {
    double horizon = 1.0;
    CoefficientSpec x0;
    CoefficientSpec f;
    CoefficientSpec g;
    LevyConfig levy;
    std::vector<Discretization> discretizations;
    std::size_t ref_dim = 0;
    std::vector<Functional> functionals;
    std::size_t mc_samples = 10000;
    std::uint64_t seed = 0;
    Mode mode = Mode::analytic;
    SmoothingConfig smoothing;

    ModelSpec model() const;
    /// Throws ConfigError naming the offending field.
    void validate() const;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

/// T = 1, x0_k = f_k = k^{-3}, g_k = 1 (k ≤ 2048), p_k ∝ k^{-1}, λ_tot = 2000,
/// trace Q = 1, spectral levels N ∈ {4, 8, 16, 32, 64}, ref_dim = 2048.
ExperimentConfig default_config();

/// Parses a JSON document. Unknown keys, missing keys, wrong types and
/// invalid values throw ConfigError; syntax errors report line and column.
ExperimentConfig parse_config(const std::string& json_text);
std::string serialize_config(const ExperimentConfig& config);

struct RatePoint {
    double h;
    double error;
};

struct RateFitResult {
    std::vector<RatePoint> points;
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
};

/// Least squares fit of ln e against ln h. Throws DomainError for fewer than
/// three points, a non-positive error or repeated h.
RateFitResult fit_rate(const std::vector<RatePoint>& points);

/// e/(1 + |ln h|).
double log_corrected(double error, double h);

/// Levels whose error is below this are dropped from fits.
inline constexpr double kErrorFloor = 1e-14;

struct LevelError {
    Discretization disc = Discretization::spectral(1);
    /// Analytic: exact E[φ(X_h)] - E[φ(X)] (weak) or E‖X_h - X‖² (strong).
    /// MC: the corresponding sample mean.
    double signed_value = 0.0;
    /// |signed_value| (weak) or its square root (strong).
    double error = 0.0;
    /// Standard error of `error`; NaN in analytic mode.
    double std_error = 0.0;
    /// Standard error of `signed_value`; NaN in analytic mode.
    double value_std_error = 0.0;
    /// Sample variance ratio uncoupled/coupled; NaN unless requested.
    double coupling_gain = 0.0;
    bool dropped = false;
};

struct RateExperiment {
    std::string name;
    std::vector<LevelError> levels;
    std::optional<RateFitResult> raw_fit;
    std::optional<RateFitResult> corrected_fit;
    std::vector<std::string> warnings;
    /// MC only: some level has std_error > 0.25·error.
    bool inconclusive = false;
    std::size_t suggested_samples = 0;
};

struct RunOptions {
    std::optional<std::size_t> samples;  // overrides config.mc_samples
    unsigned threads = 1;
    /// Also run the uncoupled estimator and record coupling_gain.
    bool measure_coupling = false;
};

/// One RateExperiment per functional, in config order.
std::vector<RateExperiment> weak_error_analytic(const ExperimentConfig& config);
std::vector<RateExperiment> weak_error_mc(const ExperimentConfig& config, const RunOptions& options = {});
/// Dispatches on config.mode.
std::vector<RateExperiment> weak_error(const ExperimentConfig& config, const RunOptions& options = {});

RateExperiment strong_error_analytic(const ExperimentConfig& config);
RateExperiment strong_error_mc(const ExperimentConfig& config, const RunOptions& options = {});
RateExperiment strong_error(const ExperimentConfig& config, const RunOptions& options = {});

struct SmoothingRow {
    double h;
    double t;
    double norm;
    double ratio;  // t·norm/h²
};

struct SmoothingResult {
    std::vector<SmoothingRow> rows;  // level-major, t ascending within a level
    std::vector<double> max_ratio;   // per level
    /// Max-over-t ratio at the finest level.
    double calibrated_c = 0.0;
    /// norm(h)/norm(h/2) for consecutive levels with exactly halved h, per t.
    std::vector<double> reduction_factors;
    bool pass = false;
    std::vector<std::string> failures;
};

/// PASS when the max-over-t ratios differ by less than a factor 2 across
/// levels, no ratio exceeds 1.1·calibrated_c, and every reduction factor lies
/// in [3.5, 4.5]. Throws DomainError for t ≤ 0 or fewer than one level.
SmoothingResult smoothing_check(const std::vector<double>& t_grid, const std::vector<Discretization>& levels,
                                std::size_t modes, unsigned threads = 1);

/// ‖R_h v - v‖_H / (h²‖v‖_{Ḣ²}) for v given in the spectral basis.
double ritz_ratio(const SpectralVector& v, const Discretization& disc);

}  // namespace spde
