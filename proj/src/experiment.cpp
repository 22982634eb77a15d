#include "spde/experiment.hpp"

#include "spde/errors.hpp"
#include "spde/levy.hpp"
#include "spde/parallel.hpp"
#include "spde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

namespace spde {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Moments {
    double mean = 0.0;
    double variance = 0.0;  // unbiased sample variance
    double std_error = 0.0;
};

// Two-pass mean and variance in index order.
Moments moments(const std::vector<double>& v) {
    Moments m;
    const auto n = static_cast<double>(v.size());
    for (double x : v) m.mean += x;
    m.mean /= n;
    for (double x : v) m.variance += (x - m.mean) * (x - m.mean);
    m.variance /= n - 1.0;
    m.std_error = std::sqrt(m.variance / n);
    return m;
}

std::string format_level(const Discretization& d) { return d.label(); }

// Drops levels below the floor and fits the remainder raw and log-corrected.
void fit_levels(RateExperiment& exp) {
    std::vector<RatePoint> raw;
    std::vector<RatePoint> corrected;
    for (LevelError& level : exp.levels) {
        if (!(level.error >= kErrorFloor)) {
            level.dropped = true;
            exp.warnings.push_back(exp.name + ": level " + format_level(level.disc) +
                                   " dropped, error below the 1e-14 floor");
            continue;
        }
        raw.push_back({level.disc.h(), level.error});
        corrected.push_back({level.disc.h(), log_corrected(level.error, level.disc.h())});
    }
    if (raw.size() < 3) {
        exp.warnings.push_back(exp.name + ": fewer than 3 levels above the error floor, no rate fitted");
        return;
    }
    exp.raw_fit = fit_rate(raw);
    exp.corrected_fit = fit_rate(corrected);
}

void flag_inconclusive(RateExperiment& exp, std::size_t samples) {
    double worst = 0.0;
    for (const LevelError& level : exp.levels) {
        if (level.dropped) continue;
        worst = std::max(worst, level.std_error / (0.25 * level.error));
    }
    if (worst > 1.0) {
        exp.inconclusive = true;
        exp.suggested_samples = static_cast<std::size_t>(std::ceil(static_cast<double>(samples) * worst * worst * 1.1));
    }
}

double functional_value(const Functional& fn, const GalerkinModel& model, const Coords& modal, const SpectralVector& psi) {
    if (fn.kind == Functional::Kind::squared_norm) return modal.squaredNorm();
    return model.inner_with(modal, psi);
}

std::vector<SpectralVector> functional_vectors(const ExperimentConfig& config) {
    std::vector<SpectralVector> out;
    for (const Functional& fn : config.functionals) {
        out.push_back(fn.kind == Functional::Kind::linear ? SpectralVector(fn.psi.materialize()) : SpectralVector(1));
    }
    return out;
}

std::vector<GalerkinModel> build_levels(const ExperimentConfig& config, const ModelSpec& spec) {
    std::vector<GalerkinModel> out;
    out.reserve(config.discretizations.size());
    for (const Discretization& d : config.discretizations) out.emplace_back(spec, d, config.ref_dim);
    return out;
}

}  // namespace

double log_corrected(double error, double h) { return error / (1.0 + std::fabs(std::log(h))); }

RateFitResult fit_rate(const std::vector<RatePoint>& points) {
    if (points.size() < 3) throw DomainError("fit_rate: at least 3 points are required");
    std::set<double> hs;
    for (const RatePoint& p : points) {
        if (!(p.h > 0.0) || !std::isfinite(p.h)) throw DomainError("fit_rate: h must be positive and finite");
        if (!(p.error > 0.0) || !std::isfinite(p.error)) throw DomainError("fit_rate: errors must be positive and finite");
        if (!hs.insert(p.h).second) throw DomainError("fit_rate: repeated h");
    }
    const auto n = static_cast<double>(points.size());
    double mx = 0.0, my = 0.0;
    for (const RatePoint& p : points) {
        mx += std::log(p.h);
        my += std::log(p.error);
    }
    mx /= n;
    my /= n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (const RatePoint& p : points) {
        const double dx = std::log(p.h) - mx;
        const double dy = std::log(p.error) - my;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    RateFitResult r;
    r.points = points;
    r.slope = sxy / sxx;
    r.intercept = my - r.slope * mx;
    const double ss_res = std::max(0.0, syy - r.slope * sxy);
    r.r_squared = syy > 0.0 ? std::clamp(1.0 - ss_res / syy, 0.0, 1.0) : 1.0;
    return r;
}

std::vector<RateExperiment> weak_error_analytic(const ExperimentConfig& config) {
    const ModelSpec spec = config.model();
    const GalerkinModel reference = GalerkinModel::reference(spec, config.ref_dim);
    const std::vector<GalerkinModel> levels = build_levels(config, spec);
    const std::vector<SpectralVector> psis = functional_vectors(config);

    std::vector<RateExperiment> out;
    for (std::size_t f = 0; f < config.functionals.size(); ++f) {
        const Functional& fn = config.functionals[f];
        RateExperiment exp;
        exp.name = fn.name;
        double ref_value = 0.0;
        if (fn.kind == Functional::Kind::squared_norm) {
            ref_value = reference.analytic_second_moment();
        } else {
            ref_value = reference.inner_with(reference.deterministic_modal(), psis[f]);
        }
        for (const GalerkinModel& model : levels) {
            LevelError level;
            level.disc = model.space().discretization();
            if (fn.kind == Functional::Kind::squared_norm) {
                level.signed_value = model.analytic_second_moment() - ref_value;
            } else {
                // The stochastic convolution has mean zero.
                level.signed_value = model.inner_with(model.deterministic_modal(), psis[f]) - ref_value;
            }
            level.error = std::fabs(level.signed_value);
            level.std_error = kNaN;
            level.value_std_error = kNaN;
            level.coupling_gain = kNaN;
            exp.levels.push_back(level);
        }
        fit_levels(exp);
        out.push_back(std::move(exp));
    }
    return out;
}

std::vector<RateExperiment> weak_error_mc(const ExperimentConfig& config, const RunOptions& options) {
    const std::size_t samples = options.samples.value_or(config.mc_samples);
    if (samples < 2) throw DomainError("weak_error_mc: at least 2 samples are required");
    const ModelSpec spec = config.model();
    const GalerkinModel reference = GalerkinModel::reference(spec, config.ref_dim);
    const std::vector<GalerkinModel> levels = build_levels(config, spec);
    const std::vector<SpectralVector> psis = functional_vectors(config);
    const std::size_t nl = levels.size();
    const std::size_t nf = config.functionals.size();

    // diffs[(l*nf + f)][i]: φ(X_h) - φ(X) for sample i, coupled and uncoupled.
    std::vector<std::vector<double>> coupled(nl * nf, std::vector<double>(samples));
    std::vector<std::vector<double>> uncoupled;
    if (options.measure_coupling) uncoupled.assign(nl * nf, std::vector<double>(samples));

    parallel_for(samples, options.threads, [&](std::size_t i) {
        RandomStream stream(config.seed, i);
        const PoissonSamplePath path = sample_path(spec.levy, spec.horizon, stream);
        const Coords x_ref = reference.solve_modal(path);
        std::vector<double> ref_values(nf);
        for (std::size_t f = 0; f < nf; ++f) ref_values[f] = functional_value(config.functionals[f], reference, x_ref, psis[f]);

        std::vector<double> independent_values(nf);
        if (options.measure_coupling) {
            RandomStream aux(config.seed, kAuxiliaryStreamOffset + i);
            const Coords x_ind = reference.solve_modal(sample_path(spec.levy, spec.horizon, aux));
            for (std::size_t f = 0; f < nf; ++f)
                independent_values[f] = functional_value(config.functionals[f], reference, x_ind, psis[f]);
        }
        for (std::size_t l = 0; l < nl; ++l) {
            const Coords x_h = levels[l].solve_modal(path);
            for (std::size_t f = 0; f < nf; ++f) {
                const double value = functional_value(config.functionals[f], levels[l], x_h, psis[f]);
                coupled[l * nf + f][i] = value - ref_values[f];
                if (options.measure_coupling) uncoupled[l * nf + f][i] = value - independent_values[f];
            }
        }
    });

    std::vector<RateExperiment> out;
    for (std::size_t f = 0; f < nf; ++f) {
        RateExperiment exp;
        exp.name = config.functionals[f].name;
        for (std::size_t l = 0; l < nl; ++l) {
            const Moments m = moments(coupled[l * nf + f]);
            LevelError level;
            level.disc = levels[l].space().discretization();
            level.signed_value = m.mean;
            level.error = std::fabs(m.mean);
            level.std_error = m.std_error;
            level.value_std_error = m.std_error;
            level.coupling_gain = kNaN;
            if (options.measure_coupling) {
                const Moments u = moments(uncoupled[l * nf + f]);
                level.coupling_gain = m.variance > 0.0 ? u.variance / m.variance : std::numeric_limits<double>::infinity();
            }
            exp.levels.push_back(level);
        }
        fit_levels(exp);
        flag_inconclusive(exp, samples);
        out.push_back(std::move(exp));
    }
    return out;
}

std::vector<RateExperiment> weak_error(const ExperimentConfig& config, const RunOptions& options) {
    return config.mode == Mode::analytic ? weak_error_analytic(config) : weak_error_mc(config, options);
}

RateExperiment strong_error_analytic(const ExperimentConfig& config) {
    const ModelSpec spec = config.model();
    const GalerkinModel reference = GalerkinModel::reference(spec, config.ref_dim);
    RateExperiment exp;
    exp.name = "strong";
    for (const GalerkinModel& model : build_levels(config, spec)) {
        LevelError level;
        level.disc = model.space().discretization();
        level.signed_value = analytic_strong_error_squared(model, reference);
        level.error = std::sqrt(std::max(0.0, level.signed_value));
        level.std_error = kNaN;
        level.value_std_error = kNaN;
        level.coupling_gain = kNaN;
        exp.levels.push_back(level);
    }
    fit_levels(exp);
    return exp;
}

RateExperiment strong_error_mc(const ExperimentConfig& config, const RunOptions& options) {
    const std::size_t samples = options.samples.value_or(config.mc_samples);
    if (samples < 2) throw DomainError("strong_error_mc: at least 2 samples are required");
    const ModelSpec spec = config.model();
    const GalerkinModel reference = GalerkinModel::reference(spec, config.ref_dim);
    const std::vector<GalerkinModel> levels = build_levels(config, spec);
    const std::size_t nl = levels.size();

    std::vector<std::vector<double>> sq(nl, std::vector<double>(samples));
    parallel_for(samples, options.threads, [&](std::size_t i) {
        RandomStream stream(config.seed, i);
        const PoissonSamplePath path = sample_path(spec.levy, spec.horizon, stream);
        const Coords x_ref = reference.solve_modal(path);
        for (std::size_t l = 0; l < nl; ++l) sq[l][i] = levels[l].squared_distance_to_reference(levels[l].solve_modal(path), x_ref);
    });

    RateExperiment exp;
    exp.name = "strong";
    for (std::size_t l = 0; l < nl; ++l) {
        const Moments m = moments(sq[l]);
        LevelError level;
        level.disc = levels[l].space().discretization();
        level.signed_value = m.mean;
        level.value_std_error = m.std_error;
        level.error = std::sqrt(std::max(0.0, m.mean));
        // Delta method for the square root.
        level.std_error = level.error > 0.0 ? m.std_error / (2.0 * level.error) : 0.0;
        level.coupling_gain = kNaN;
        exp.levels.push_back(level);
    }
    fit_levels(exp);
    flag_inconclusive(exp, samples);
    return exp;
}

RateExperiment strong_error(const ExperimentConfig& config, const RunOptions& options) {
    return config.mode == Mode::analytic ? strong_error_analytic(config) : strong_error_mc(config, options);
}

SmoothingResult smoothing_check(const std::vector<double>& t_grid, const std::vector<Discretization>& levels,
                                std::size_t modes, unsigned threads) {
    if (levels.empty()) throw DomainError("smoothing_check: at least one level is required");
    if (t_grid.empty()) throw DomainError("smoothing_check: empty t grid");
    for (double t : t_grid) {
        if (!(t > 0.0) || !std::isfinite(t)) throw DomainError("smoothing_check: every t must be positive and finite");
    }
    std::vector<double> ts(t_grid);
    std::sort(ts.begin(), ts.end());

    std::vector<GalerkinSpace> spaces;
    spaces.reserve(levels.size());
    for (const Discretization& d : levels) spaces.emplace_back(d, modes);

    const std::size_t nt = ts.size();
    std::vector<double> norms(levels.size() * nt);
    parallel_for(norms.size(), threads, [&](std::size_t idx) {
        norms[idx] = operator_norm_F_h(ts[idx % nt], spaces[idx / nt]).value;
    });

    SmoothingResult r;
    std::size_t finest = 0;
    for (std::size_t l = 0; l < levels.size(); ++l) {
        const double h = levels[l].h();
        double worst = 0.0;
        for (std::size_t j = 0; j < nt; ++j) {
            const double norm = norms[l * nt + j];
            const double ratio = ts[j] * norm / (h * h);
            r.rows.push_back({h, ts[j], norm, ratio});
            worst = std::max(worst, ratio);
        }
        r.max_ratio.push_back(worst);
        if (h < levels[finest].h()) finest = l;
    }
    r.calibrated_c = r.max_ratio[finest];

    // Reduction factors between FEM meshes whose h is exactly halved.
    for (std::size_t a = 0; a < levels.size(); ++a) {
        for (std::size_t b = 0; b < levels.size(); ++b) {
            if (levels[a].is_spectral() || levels[b].is_spectral() || levels[b].size() + 1 != 2 * (levels[a].size() + 1))
                continue;
            for (std::size_t j = 0; j < nt; ++j) r.reduction_factors.push_back(norms[a * nt + j] / norms[b * nt + j]);
        }
    }

    const auto [lo, hi] = std::minmax_element(r.max_ratio.begin(), r.max_ratio.end());
    if (!(*hi < 2.0 * *lo))
        r.failures.push_back("max-over-t ratio varies by a factor " + std::to_string(*hi / *lo) + " across levels");
    for (const SmoothingRow& row : r.rows) {
        if (row.ratio > 1.1 * r.calibrated_c) {
            r.failures.push_back("ratio " + std::to_string(row.ratio) + " at h=" + std::to_string(row.h) +
                                 ", t=" + std::to_string(row.t) + " exceeds 1.1 times the calibrated constant");
        }
    }
    for (double factor : r.reduction_factors) {
        if (!(factor >= 3.5 && factor <= 4.5))
            r.failures.push_back("norm reduction factor " + std::to_string(factor) + " outside [3.5, 4.5]");
    }
    r.pass = r.failures.empty();
    return r;
}

double ritz_ratio(const SpectralVector& v, const Discretization& disc) {
    const Coords c = r_h_project(v, disc);
    const double v2 = hs_fractional_norm(2.0, v);
    if (!(v2 > 0.0)) throw DomainError("ritz_ratio: v must have a nonzero Ḣ² norm");
    const double h = disc.h();
    if (disc.is_spectral()) {
        SpectralVector diff = expand_coordinates(c, disc, std::max(v.dim(), disc.size()));
        diff -= v;
        return h_norm(diff) / (h * h * v2);
    }
    // ‖R_h v - v‖² = ‖Π(R_h v) - v‖² + (‖R_h v‖² - ‖Π(R_h v)‖²), where Π
    // truncates the e_k-expansion; the bracket is the part of R_h v above the
    // truncation.
    const std::size_t dim = std::max<std::size_t>(v.dim(), 32 * (disc.size() + 1));
    const SpectralVector expansion = expand_coordinates(c, disc, dim);
    const double full_sq = c.dot(assemble_p1(disc.size()).mass.multiply(c));
    const double expansion_sq = h_inner(expansion, expansion);
    SpectralVector diff = expansion;
    diff -= v;
    const double sq = h_inner(diff, diff) + std::max(0.0, full_sq - expansion_sq);
    return std::sqrt(sq) / (h * h * v2);
}

}  // namespace spde
