#include "spde/mild.hpp"

#include "spde/errors.hpp"

#include <algorithm>
#include <cmath>

namespace spde {

namespace {

// ∫_0^T e^{-c s} ds
double decay_integral(double c, double horizon) { return -std::expm1(-c * horizon) / c; }

// exp(-x) underflows to exactly zero beyond this argument, so skipping such
// terms leaves sums bit-identical.
constexpr double kUnderflowArgument = 746.0;

}  // namespace

void ModelSpec::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("ModelSpec: horizon must be positive and finite");
    x0.check_finite();
    f.check_finite();
    for (std::size_t k = 0; k < g.size(); ++k) {
        if (!std::isfinite(g[k])) throw DomainError("ModelSpec: g_" + std::to_string(k + 1) + " is not finite");
    }
}

GalerkinModel::GalerkinModel(const ModelSpec& spec, Discretization disc, std::size_t modes)
    : GalerkinModel(spec, disc, modes, false) {}

GalerkinModel GalerkinModel::reference(const ModelSpec& spec, std::size_t ref_dim) {
    return GalerkinModel(spec, Discretization::spectral(ref_dim), ref_dim, true);
}

GalerkinModel::GalerkinModel(const ModelSpec& spec, Discretization disc, std::size_t modes, bool reference)
    : spec_(spec), space_((spec.validate(), disc), std::max(modes, spec.levy.modes())), reference_(reference) {
    q_ = covariance_diag(spec_.levy).q;
    const Coords x0 = space_.modal_projection(spec_.x0);
    const Coords f = space_.modal_projection(spec_.f);
    deterministic_.resize(static_cast<Eigen::Index>(dim()));
    for (std::size_t i = 0; i < dim(); ++i) {
        const double lambda = space_.lambdas()[i];
        const auto ii = static_cast<Eigen::Index>(i);
        deterministic_(ii) = x0(ii) * std::exp(-lambda * spec_.horizon) + f(ii) * decay_integral(lambda, spec_.horizon);
    }
}

Coords GalerkinModel::stochastic_convolution_modal(const PoissonSamplePath& path) const {
    Coords beta = Coords::Zero(static_cast<Eigen::Index>(dim()));
    if (path.horizon != spec_.horizon) throw DomainError("stochastic_convolution: path horizon differs from model horizon");
    const double horizon = spec_.horizon;
    const auto& lambdas = space_.lambdas();
    if (space_.discretization().is_spectral()) {
        for (const Jump& j : path.jumps) {
            if (j.mode > dim()) continue;
            const double lambda = lambdas[j.mode - 1];
            beta(j.mode - 1) += std::exp(-lambda * (horizon - j.time)) * (spec_.g_at(j.mode) * j.size);
        }
        return beta;
    }
    const Eigen::MatrixXd& alpha = space_.coupling();
    for (const Jump& j : path.jumps) {
        const double amplitude = spec_.g_at(j.mode) * j.size;
        if (amplitude == 0.0) continue;
        const double lag = horizon - j.time;
        const auto col = static_cast<Eigen::Index>(j.mode - 1);
        for (std::size_t i = 0; i < dim(); ++i) {
            const double x = lambdas[i] * lag;
            if (x > kUnderflowArgument) break;
            const auto ii = static_cast<Eigen::Index>(i);
            beta(ii) += std::exp(-x) * amplitude * alpha(ii, col);
        }
    }
    return beta;
}

Coords GalerkinModel::solve_modal(const PoissonSamplePath& path) const {
    // Same accumulation order as stochastic_convolution_modal, seeded with the
    // deterministic part, so spectral levels reproduce the reference bitwise
    // on resolved modes.
    Coords beta = deterministic_;
    if (path.horizon != spec_.horizon) throw DomainError("solve_mild: path horizon differs from model horizon");
    const double horizon = spec_.horizon;
    const auto& lambdas = space_.lambdas();
    if (space_.discretization().is_spectral()) {
        for (const Jump& j : path.jumps) {
            if (j.mode > dim()) continue;
            const double lambda = lambdas[j.mode - 1];
            beta(j.mode - 1) += std::exp(-lambda * (horizon - j.time)) * (spec_.g_at(j.mode) * j.size);
        }
        return beta;
    }
    beta += stochastic_convolution_modal(path);
    return beta;
}

double GalerkinModel::noise_second_moment() const {
    const std::size_t noise_modes = std::min(q_.size(), spec_.g.size());
    const auto& lambdas = space_.lambdas();
    double acc = 0.0;
    if (space_.discretization().is_spectral()) {
        for (std::size_t k = 1; k <= std::min(noise_modes, dim()); ++k)
            acc += spectral_mode_variance(spec_, k);
        return acc;
    }
    const Eigen::MatrixXd& alpha = space_.coupling();
    std::vector<double> weights(dim());
    for (std::size_t i = 0; i < dim(); ++i) weights[i] = decay_integral(2.0 * lambdas[i], spec_.horizon);
    for (std::size_t k = 1; k <= noise_modes; ++k) {
        const double g = spec_.g_at(k);
        const double qk = q_[k - 1] * g * g;
        if (qk == 0.0) continue;
        double mode_acc = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) {
            const double a = alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
            mode_acc += a * a * weights[i];
        }
        acc += qk * mode_acc;
    }
    return acc;
}

double GalerkinModel::analytic_second_moment() const { return deterministic_.squaredNorm() + noise_second_moment(); }

double GalerkinModel::inner_with(const Coords& modal, const SpectralVector& psi) const {
    if (space_.discretization().is_spectral()) {
        double acc = 0.0;
        for (std::size_t k = 1; k <= std::min(dim(), psi.dim()); ++k) acc += modal(static_cast<Eigen::Index>(k - 1)) * psi[k - 1];
        return acc;
    }
    return modal.dot(space_.modal_projection(psi));
}

double GalerkinModel::squared_distance_to_reference(const Coords& modal, const Coords& reference_modal) const {
    const auto ref_dim = static_cast<std::size_t>(reference_modal.size());
    double acc = 0.0;
    if (space_.discretization().is_spectral()) {
        const std::size_t common = std::min(dim(), ref_dim);
        for (std::size_t k = 0; k < common; ++k) {
            const double d = modal(static_cast<Eigen::Index>(k)) - reference_modal(static_cast<Eigen::Index>(k));
            acc += d * d;
        }
        for (std::size_t k = common; k < ref_dim; ++k) acc += reference_modal(static_cast<Eigen::Index>(k)) * reference_modal(static_cast<Eigen::Index>(k));
        for (std::size_t k = common; k < dim(); ++k) acc += modal(static_cast<Eigen::Index>(k)) * modal(static_cast<Eigen::Index>(k));
        return acc;
    }
    const SpectralVector expanded = space_.expand(modal, ref_dim);
    double expanded_sq = 0.0;
    for (std::size_t k = 0; k < ref_dim; ++k) {
        const double d = expanded[k] - reference_modal(static_cast<Eigen::Index>(k));
        acc += d * d;
        expanded_sq += expanded[k] * expanded[k];
    }
    // Part of X_h orthogonal to span{e_1..e_ref_dim}.
    return acc + (modal.squaredNorm() - expanded_sq);
}

double spectral_mode_variance(const ModelSpec& spec, std::size_t k) {
    if (k == 0 || k > spec.levy.modes()) return 0.0;
    const double g = spec.g_at(k);
    const double a = spec.levy.jump_scales()[k - 1];
    const double q = spec.levy.intensity() * spec.levy.mode_probs()[k - 1] * a * a;
    return q * g * g * decay_integral(2.0 * eigenvalue(k), spec.horizon);
}

double analytic_strong_error_squared(const GalerkinModel& model, const GalerkinModel& reference) {
    if (model.spec().horizon != reference.spec().horizon)
        throw DomainError("analytic_strong_error_squared: models have different horizons");
    const ModelSpec& spec = model.spec();
    const std::size_t ref_dim = reference.dim();
    const double mean_part = model.squared_distance_to_reference(model.deterministic_modal(), reference.deterministic_modal());

    const std::size_t noise_modes = std::min(spec.levy.modes(), spec.g.size());
    double noise_part = 0.0;
    if (model.space().discretization().is_spectral()) {
        const std::size_t n = model.dim();
        for (std::size_t k = std::min(n, ref_dim) + 1; k <= std::min(noise_modes, std::max(n, ref_dim)); ++k)
            noise_part += spectral_mode_variance(spec, k);
        return mean_part + noise_part;
    }

    const CovarianceDiag cov = covariance_diag(spec.levy);
    const auto& lambdas = model.space().lambdas();
    const Eigen::MatrixXd& alpha = model.space().coupling();
    for (std::size_t k = 1; k <= noise_modes; ++k) {
        const double g = spec.g_at(k);
        const double qk = cov.q[k - 1] * g * g;
        if (qk == 0.0) continue;
        const double lambda_k = eigenvalue(k);
        double per_mode = 0.0;
        for (std::size_t i = 0; i < model.dim(); ++i) {
            const double a = alpha(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k - 1));
            double term = decay_integral(2.0 * lambdas[i], spec.horizon);
            if (k <= ref_dim) term -= 2.0 * decay_integral(lambdas[i] + lambda_k, spec.horizon);
            per_mode += a * a * term;
        }
        if (k <= ref_dim) per_mode += decay_integral(2.0 * lambda_k, spec.horizon);
        noise_part += qk * per_mode;
    }
    return mean_part + noise_part;
}

double reference_tail_second_moment(const ModelSpec& spec, std::size_t ref_dim) {
    const std::size_t data_modes = std::max({spec.x0.dim(), spec.f.dim(), std::min(spec.levy.modes(), spec.g.size())});
    double acc = 0.0;
    for (std::size_t k = ref_dim + 1; k <= data_modes; ++k) {
        const double lambda = eigenvalue(k);
        const double mean = spec.x0.mode(k) * std::exp(-lambda * spec.horizon) + spec.f.mode(k) * decay_integral(lambda, spec.horizon);
        acc += mean * mean + spectral_mode_variance(spec, k);
    }
    return acc;
}

Coords deterministic_part(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim) {
    const GalerkinModel model(spec, disc, ref_dim);
    return model.to_coordinates(model.deterministic_modal());
}

Coords stochastic_convolution(const ModelSpec& spec, const PoissonSamplePath& path, const Discretization& disc,
                              std::size_t ref_dim) {
    const GalerkinModel model(spec, disc, ref_dim);
    return model.to_coordinates(model.stochastic_convolution_modal(path));
}

SolutionSample solve_mild(const ModelSpec& spec, const PoissonSamplePath& path, const Discretization& disc,
                          std::uint64_t path_id, std::size_t ref_dim) {
    const GalerkinModel model(spec, disc, ref_dim);
    return {disc, false, model.to_coordinates(model.solve_modal(path)), path_id};
}

SolutionSample solve_mild_reference(const ModelSpec& spec, const PoissonSamplePath& path, std::size_t ref_dim,
                                    std::uint64_t path_id) {
    const GalerkinModel model = GalerkinModel::reference(spec, ref_dim);
    return {model.space().discretization(), true, model.solve_modal(path), path_id};
}

Coords analytic_mean(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim) {
    return deterministic_part(spec, disc, ref_dim);
}

double analytic_second_moment(const ModelSpec& spec, const Discretization& disc, std::size_t ref_dim) {
    return GalerkinModel(spec, disc, ref_dim).analytic_second_moment();
}

}  // namespace spde
