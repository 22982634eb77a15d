#include "spde/malliavin.hpp"

#include "spde/errors.hpp"
#include "spde/parallel.hpp"
#include "spde/rng.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>

namespace spde {

namespace {

std::vector<std::size_t> sorted_unique(std::vector<std::size_t> v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

std::vector<std::size_t> merge_cells(const std::vector<std::size_t>& a, const std::vector<std::size_t>& b) {
    std::vector<std::size_t> out(a);
    out.insert(out.end(), b.begin(), b.end());
    return sorted_unique(std::move(out));
}

std::vector<int> shifted(std::span<const int> counts, std::size_t m, int by) {
    std::vector<int> out(counts.begin(), counts.end());
    out.at(m) += by;
    return out;
}

double log_poisson_weight(double mu, int n) { return -mu + n * std::log(mu) - std::lgamma(n + 1.0); }

}  // namespace

CellPartition::CellPartition(std::vector<double> measures, std::vector<std::size_t> windows)
    : measures_(std::move(measures)), windows_(std::move(windows)) {
    if (measures_.empty()) throw DomainError("CellPartition: at least one cell is required");
    for (std::size_t m = 0; m < measures_.size(); ++m) {
        if (!(measures_[m] > 0.0) || !std::isfinite(measures_[m]))
            throw DomainError("CellPartition: measure of cell " + std::to_string(m) + " must be positive and finite");
    }
    if (windows_.empty()) windows_.assign(measures_.size(), 0);
    if (windows_.size() != measures_.size()) throw DomainError("CellPartition: one window per cell is required");
}

LatticeFunction::LatticeFunction(std::vector<std::size_t> cells, Fn fn) : cells_(sorted_unique(std::move(cells))), fn_(std::move(fn)) {
    if (!fn_) throw DomainError("LatticeFunction: empty callable");
}

LatticeFunction LatticeFunction::constant(double c) {
    return LatticeFunction({}, [c](std::span<const int>) { return c; });
}

LatticeFunction LatticeFunction::count(std::size_t m, double offset) {
    return LatticeFunction({m}, [m, offset](std::span<const int> n) { return n[m] + offset; });
}

LatticeFunction LatticeFunction::polynomial(std::size_t m, std::vector<double> coeffs) {
    return LatticeFunction({m}, [m, coeffs = std::move(coeffs)](std::span<const int> n) {
        // Horner in the count.
        double acc = 0.0;
        for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) acc = acc * n[m] + *it;
        return acc;
    });
}

LatticeFunction LatticeFunction::tabulated(std::vector<std::size_t> cells, int max_count, std::vector<double> values) {
    if (max_count < 0) throw DomainError("LatticeFunction::tabulated: max_count must be >= 0");
    std::size_t expected = 1;
    for (std::size_t i = 0; i < cells.size(); ++i) expected *= static_cast<std::size_t>(max_count) + 1;
    if (values.size() != expected) throw DomainError("LatticeFunction::tabulated: table size does not match the domain");
    if (sorted_unique(cells) != cells) throw DomainError("LatticeFunction::tabulated: cells must be sorted and distinct");
    auto table = std::make_shared<const std::vector<double>>(std::move(values));
    return LatticeFunction(cells, [cells, max_count, table](std::span<const int> n) {
        std::size_t index = 0;
        for (std::size_t c : cells) {
            const int v = n[c];
            if (v < 0 || v > max_count)
                throw DomainError("tabulated lattice function: count " + std::to_string(v) + " of cell " +
                                  std::to_string(c) + " is outside {0.." + std::to_string(max_count) + "}");
            index = index * (static_cast<std::size_t>(max_count) + 1) + static_cast<std::size_t>(v);
        }
        return (*table)[index];
    });
}

bool LatticeFunction::depends_on(std::size_t m) const { return std::binary_search(cells_.begin(), cells_.end(), m); }

LatticeFunction LatticeFunction::shifted_difference(std::size_t m) const {
    return LatticeFunction(cells_, [fn = fn_, m](std::span<const int> n) {
        const std::vector<int> up = shifted(n, m, 1);
        return fn(up) - fn(n);
    });
}

LatticeFunction LatticeFunction::times(const LatticeFunction& g) const {
    return LatticeFunction(merge_cells(cells_, g.cells_),
                           [f = fn_, h = g.fn_](std::span<const int> n) { return f(n) * h(n); });
}

CylindricalRV::CylindricalRV(std::vector<CylindricalTerm> terms) : terms_(std::move(terms)) {}

void CylindricalRV::add_term(LatticeFunction f, SpectralVector h) { terms_.push_back({std::move(f), std::move(h)}); }

std::vector<std::size_t> CylindricalRV::cells() const {
    std::vector<std::size_t> out;
    for (const auto& t : terms_) out.insert(out.end(), t.f.cells().begin(), t.f.cells().end());
    return sorted_unique(std::move(out));
}

std::size_t CylindricalRV::dim() const {
    std::size_t d = 1;
    for (const auto& t : terms_) d = std::max(d, t.h.dim());
    return d;
}

SpectralVector CylindricalRV::evaluate(std::span<const int> counts) const {
    SpectralVector out(dim());
    for (const auto& t : terms_) {
        const double c = t.f(counts);
        for (std::size_t k = 0; k < t.h.dim(); ++k) out[k] += c * t.h[k];
    }
    return out;
}

CylindricalRV& CylindricalRV::operator+=(const CylindricalRV& other) {
    terms_.insert(terms_.end(), other.terms_.begin(), other.terms_.end());
    return *this;
}

SimpleField::SimpleField(std::vector<FieldValue> values) : values_(std::move(values)) {
    std::set<std::size_t> seen;
    for (const auto& v : values_) {
        if (!seen.insert(v.cell).second)
            throw DomainError("SimpleField: cell " + std::to_string(v.cell) + " carries more than one value");
    }
}

bool SimpleField::is_deterministic() const {
    return std::all_of(values_.begin(), values_.end(), [](const FieldValue& v) { return !v.coefficient; });
}

std::optional<SpectralVector> SimpleField::value_at(std::size_t m, std::span<const int> counts) const {
    for (const auto& v : values_) {
        if (v.cell != m) continue;
        SpectralVector out = v.h;
        if (v.coefficient) out *= (*v.coefficient)(counts);
        return out;
    }
    return std::nullopt;
}

std::vector<std::size_t> SimpleField::cells() const {
    std::vector<std::size_t> out;
    for (const auto& v : values_) {
        out.push_back(v.cell);
        if (v.coefficient) out.insert(out.end(), v.coefficient->cells().begin(), v.coefficient->cells().end());
    }
    return sorted_unique(std::move(out));
}

void SimpleField::check_predictable(const CellPartition& part) const {
    for (const auto& v : values_) {
        if (v.cell >= part.size()) throw DomainError("SimpleField: cell " + std::to_string(v.cell) + " is not in the partition");
        if (!v.coefficient) continue;
        for (std::size_t c : v.coefficient->cells()) {
            if (c >= part.size() || part.window(c) >= part.window(v.cell))
                throw DomainError("SimpleField: coefficient on cell " + std::to_string(v.cell) + " reads cell " +
                                  std::to_string(c) + ", which is not in an earlier time window (not predictable)");
        }
    }
}

PoissonLattice::PoissonLattice(const CellPartition& part, double tolerance, int moment_order, std::uint64_t max_points)
    : part_(part), max_points_(max_points) {
    if (!(tolerance > 0.0)) throw DomainError("PoissonLattice: tolerance must be positive");
    if (moment_order < 0) throw DomainError("PoissonLattice: moment_order must be >= 0");

    // Terms w(n)(1+n)^p are summed from the far end, where they are negligible.
    std::size_t cap = 64;
    for (double mu : part_.measures()) cap = std::max(cap, static_cast<std::size_t>(mu + 40.0 * std::sqrt(mu) + 64.0 + moment_order));
    std::vector<double> moment_suffix(cap + 2, 0.0);
    std::vector<double> mass_suffix(cap + 2, 0.0);
    for (double mu : part_.measures()) {
        double moment = 0.0;
        double mass = 0.0;
        for (std::size_t n = cap + 1; n-- > 0;) {
            const double w = std::exp(log_poisson_weight(mu, static_cast<int>(n)));
            moment += w * std::pow(1.0 + static_cast<double>(n), moment_order);
            mass += w;
            moment_suffix[n] += moment;
            mass_suffix[n] += mass;
        }
    }
    std::size_t n_max = 0;
    while (n_max < cap && moment_suffix[n_max + 1] > tolerance) ++n_max;
    if (moment_suffix[n_max + 1] > tolerance) throw ComputationError("PoissonLattice: cell measures too large for the tolerance");
    n_max_ = static_cast<int>(n_max);
    tail_mass_ = mass_suffix[n_max + 1];

    weights_.resize(part_.size());
    for (std::size_t m = 0; m < part_.size(); ++m) {
        weights_[m].resize(n_max + 1);
        for (std::size_t n = 0; n <= n_max; ++n)
            weights_[m][n] = std::exp(log_poisson_weight(part_.measure(m), static_cast<int>(n)));
    }
}

void PoissonLattice::enumerate(const std::vector<std::size_t>& cells,
                               const std::function<void(std::span<const int>, double)>& visit) const {
    const std::vector<std::size_t> active = sorted_unique(cells);
    double points = 1.0;
    for (std::size_t c : active) {
        if (c >= part_.size()) throw DomainError("PoissonLattice: cell " + std::to_string(c) + " is not in the partition");
        points *= n_max_ + 1.0;
    }
    if (points > static_cast<double>(max_points_))
        throw ComputationError("PoissonLattice: enumeration of " + std::to_string(active.size()) +
                               " cells exceeds the budget of " + std::to_string(max_points_) + " points");

    std::vector<int> counts(part_.size(), 0);
    for (;;) {
        double w = 1.0;
        for (std::size_t c : active) w *= weights_[c][static_cast<std::size_t>(counts[c])];
        visit(counts, w);
        // Odometer, last active cell fastest.
        std::size_t i = active.size();
        while (i > 0) {
            const std::size_t c = active[i - 1];
            if (counts[c] < n_max_) {
                ++counts[c];
                break;
            }
            counts[c] = 0;
            --i;
        }
        if (i == 0) return;
    }
}

double PoissonLattice::expect(const std::vector<std::size_t>& cells,
                              const std::function<double(std::span<const int>)>& fn) const {
    double acc = 0.0;
    enumerate(cells, [&](std::span<const int> n, double w) {
        const double v = fn(n);
        if (!std::isfinite(v)) throw DomainError("expectation: integrand is not finite on the lattice");
        acc += w * v;
    });
    return acc;
}

std::vector<CylindricalRV> malliavin_derivative(const CylindricalRV& F, const CellPartition& part) {
    std::vector<CylindricalRV> out(part.size());
    for (const auto& t : F.terms()) {
        for (std::size_t c : t.f.cells()) {
            if (c >= part.size()) throw DomainError("malliavin_derivative: term reads cell " + std::to_string(c) + " outside the partition");
            out[c].add_term(t.f.shifted_difference(c), t.h);
        }
    }
    return out;
}

CylindricalRV divergence_simple(const SimpleField& phi, const CellPartition& part) {
    if (!phi.is_deterministic()) throw DomainError("divergence_simple: field must be deterministic");
    CylindricalRV out;
    for (const auto& v : phi.values()) out.add_term(LatticeFunction::count(v.cell, -part.measure(v.cell)), v.h);
    return out;
}

CylindricalRV divergence(const SimpleField& phi, const CellPartition& part) {
    CylindricalRV out;
    for (const auto& v : phi.values()) {
        const std::size_t m = v.cell;
        const double mu = part.measure(m);
        if (!v.coefficient) {
            out.add_term(LatticeFunction::count(m, -mu), v.h);
            continue;
        }
        const LatticeFunction c = *v.coefficient;
        std::vector<std::size_t> cells = c.cells();
        cells.push_back(m);
        out.add_term(LatticeFunction(std::move(cells),
                                     [c, m, mu](std::span<const int> n) {
                                         const double removed = n[m] > 0 ? n[m] * c(shifted(n, m, -1)) : 0.0;
                                         return removed - mu * c(n);
                                     }),
                     v.h);
    }
    return out;
}

CylindricalRV ito_integral(const SimpleField& phi, const CellPartition& part) {
    CylindricalRV out;
    for (const auto& v : phi.values()) {
        LatticeFunction increment = LatticeFunction::count(v.cell, -part.measure(v.cell));
        out.add_term(v.coefficient ? v.coefficient->times(increment) : increment, v.h);
    }
    return out;
}

SpectralVector expectation(const CylindricalRV& F, const PoissonLattice& lattice) {
    SpectralVector acc(F.dim());
    lattice.enumerate(F.cells(), [&](std::span<const int> n, double w) {
        const SpectralVector v = F.evaluate(n);
        for (std::size_t k = 0; k < v.dim(); ++k) {
            if (!std::isfinite(v[k])) throw DomainError("expectation: random variable is not finite on the lattice");
            acc[k] += w * v[k];
        }
    });
    return acc;
}

double duality_residual(const CylindricalRV& F, const SimpleField& phi, const PoissonLattice& lattice) {
    const CellPartition& part = lattice.partition();
    const std::vector<CylindricalRV> DF = malliavin_derivative(F, part);
    const CylindricalRV delta = divergence(phi, part);
    double lhs = 0.0;
    double rhs = 0.0;
    lattice.enumerate(merge_cells(F.cells(), phi.cells()), [&](std::span<const int> n, double w) {
        double l = 0.0;
        for (const auto& v : phi.values()) {
            const auto value = phi.value_at(v.cell, n);
            l += part.measure(v.cell) * h_inner(DF[v.cell].evaluate(n), *value);
        }
        lhs += w * l;
        rhs += w * h_inner(F.evaluate(n), delta.evaluate(n));
    });
    return std::fabs(lhs - rhs);
}

LipschitzMap identity_map() {
    return {"identity", [](const SpectralVector& x) { return x; }};
}

LipschitzMap norm_scaling_map(SpectralVector u) {
    return {"norm_scaling", [u = std::move(u)](const SpectralVector& x) { return h_norm(x) * u; }};
}

LipschitzMap clamped_affine_map(double a, SpectralVector b, double c) {
    if (!(c > 0.0)) throw DomainError("clamped_affine_map: clamp level must be positive");
    return {"clamped_affine", [a, b = std::move(b), c](const SpectralVector& x) {
                SpectralVector y = a * x;
                y += b;
                for (std::size_t k = 0; k < y.dim(); ++k) y[k] = std::clamp(y[k], -c, c);
                return y;
            }};
}

LipschitzMap affine_map(double a, SpectralVector b) {
    return {"affine", [a, b = std::move(b)](const SpectralVector& x) {
                SpectralVector y = a * x;
                y += b;
                return y;
            }};
}

double chain_rule_check(const LipschitzMap& phi, const CylindricalRV& F, const PoissonLattice& lattice) {
    const CellPartition& part = lattice.partition();
    const std::vector<std::size_t> cells = F.cells();
    std::vector<int> origin(part.size(), 0);
    const std::size_t out_dim = phi.apply(F.evaluate(origin)).dim();

    // φ(F) as a cylindrical variable in its own right.
    CylindricalRV G;
    for (std::size_t k = 0; k < out_dim; ++k) {
        G.add_term(LatticeFunction(cells,
                                   [&phi, &F, k](std::span<const int> n) {
                                       const SpectralVector y = phi.apply(F.evaluate(n));
                                       return k < y.dim() ? y[k] : 0.0;
                                   }),
                   SpectralVector::unit(k + 1, out_dim));
    }
    const std::vector<CylindricalRV> DF = malliavin_derivative(F, part);
    const std::vector<CylindricalRV> DG = malliavin_derivative(G, part);

    double worst = 0.0;
    lattice.enumerate(cells, [&](std::span<const int> n, double) {
        const SpectralVector Fn = F.evaluate(n);
        const SpectralVector base = phi.apply(Fn);
        for (std::size_t m : cells) {
            SpectralVector moved = Fn;
            moved += DF[m].evaluate(n);
            const SpectralVector image = phi.apply(moved);
            SpectralVector diff = DG[m].evaluate(n);
            diff -= image;
            diff += base;
            const double scale = 1.0 + h_norm(base) + h_norm(phi.apply(F.evaluate(shifted(n, m, 1))));
            worst = std::max(worst, h_norm(diff) / scale);
        }
    });
    return worst;
}

double d_delta_identity_check(const SimpleField& phi, const PoissonLattice& lattice) {
    const CellPartition& part = lattice.partition();
    const CylindricalRV delta = divergence_simple(phi, part);
    const std::vector<CylindricalRV> D = malliavin_derivative(delta, part);
    double worst = 0.0;
    lattice.enumerate(delta.cells(), [&](std::span<const int> n, double) {
        for (std::size_t m = 0; m < part.size(); ++m) {
            SpectralVector diff = D[m].evaluate(n);
            if (const auto expected = phi.value_at(m, n)) diff -= *expected;
            worst = std::max(worst, h_norm(diff));
        }
    });
    return worst;
}

SkorohodItoReport skorohod_ito_check(const SimpleField& phi, const PoissonLattice& lattice,
                                     const std::vector<CylindricalRV>& test_variables) {
    const CellPartition& part = lattice.partition();
    phi.check_predictable(part);
    const CylindricalRV delta = divergence(phi, part);
    const CylindricalRV ito = ito_integral(phi, part);

    SkorohodItoReport report;
    lattice.enumerate(phi.cells(), [&](std::span<const int> n, double) {
        const SpectralVector i = ito.evaluate(n);
        SpectralVector diff = delta.evaluate(n);
        diff -= i;
        report.pointwise_residual = std::max(report.pointwise_residual, h_norm(diff) / (1.0 + h_norm(i)));
    });

    for (const CylindricalRV& G : test_variables) {
        const std::vector<CylindricalRV> DG = malliavin_derivative(G, part);
        double lhs = 0.0;
        double rhs = 0.0;
        lattice.enumerate(merge_cells(G.cells(), phi.cells()), [&](std::span<const int> n, double w) {
            double l = 0.0;
            for (const auto& v : phi.values()) l += part.measure(v.cell) * h_inner(DG[v.cell].evaluate(n), *phi.value_at(v.cell, n));
            lhs += w * l;
            rhs += w * h_inner(G.evaluate(n), ito.evaluate(n));
        });
        report.duality_residual = std::max(report.duality_residual, std::fabs(lhs - rhs));
    }
    return report;
}

double isometry_residual(const SimpleField& phi, const PoissonLattice& lattice) {
    const CellPartition& part = lattice.partition();
    phi.check_predictable(part);
    const CylindricalRV ito = ito_integral(phi, part);
    double lhs = 0.0;
    double rhs = 0.0;
    lattice.enumerate(phi.cells(), [&](std::span<const int> n, double w) {
        const SpectralVector I = ito.evaluate(n);
        lhs += w * h_inner(I, I);
        double r = 0.0;
        for (const auto& v : phi.values()) {
            const SpectralVector value = *phi.value_at(v.cell, n);
            r += part.measure(v.cell) * h_inner(value, value);
        }
        rhs += w * r;
    });
    return std::fabs(lhs - rhs);
}

double randomized_duality_max_residual(std::size_t pairs, std::uint64_t seed) {
    constexpr std::size_t kDim = 3;
    double worst = 0.0;
    for (std::size_t p = 0; p < pairs; ++p) {
        RandomStream rng(seed, p);
        auto uniform = [&](double lo, double hi) { return lo + (hi - lo) * rng.uniform_open(); };
        auto index = [&](std::size_t n) { return static_cast<std::size_t>(rng() % n); };
        auto random_vector = [&] {
            SpectralVector h(kDim);
            for (std::size_t k = 0; k < kDim; ++k) h[k] = uniform(-1.0, 1.0);
            return h;
        };

        const std::size_t cells = 1 + index(3);
        std::vector<double> measures(cells);
        for (auto& mu : measures) mu = uniform(0.0, 1.0);
        const CellPartition part(measures);
        const PoissonLattice lattice(part);

        CylindricalRV F;
        const std::size_t terms = 1 + index(3);
        for (std::size_t t = 0; t < terms; ++t) {
            std::vector<double> a(4), b(4);
            for (auto& x : a) x = uniform(-1.0, 1.0);
            for (auto& x : b) x = uniform(-1.0, 1.0);
            const std::size_t m1 = index(cells);
            const std::size_t m2 = index(cells);
            const std::size_t deg1 = index(4);
            const std::size_t deg2 = 3 - deg1;
            a.resize(deg1 + 1);
            b.resize(deg2 + 1);
            // Product of a degree-d1 polynomial in n_{m1} and a degree-(3-d1)
            // polynomial in n_{m2}: total degree ≤ 3.
            LatticeFunction f = LatticeFunction::polynomial(m1, a).times(LatticeFunction::polynomial(m2, b));
            F.add_term(std::move(f), random_vector());
        }

        std::vector<FieldValue> values;
        for (std::size_t m = 0; m < cells; ++m) {
            if (rng() & 1u) values.push_back({m, random_vector(), std::nullopt});
        }
        if (values.empty()) values.push_back({index(cells), random_vector(), std::nullopt});
        worst = std::max(worst, duality_residual(F, SimpleField(std::move(values)), lattice));
    }
    return worst;
}

double IntegrationByPartsReport::residual() const { return std::fabs(lhs - rhs); }

bool IntegrationByPartsReport::pass() const { return residual() <= 4.0 * standard_error || residual() == 0.0; }

IntegrationByPartsReport integration_by_parts_check(const ModelSpec& spec, const Discretization& disc,
                                                    std::size_t samples, std::uint64_t seed, unsigned threads,
                                                    std::size_t modes) {
    if (samples < 2) throw DomainError("integration_by_parts_check: at least 2 samples are required");
    const GalerkinModel model(spec, disc, modes);
    std::vector<double> values(samples);
    parallel_for(samples, threads, [&](std::size_t i) {
        RandomStream stream(seed, i);
        const PoissonSamplePath path = sample_path(spec.levy, spec.horizon, stream);
        const Coords z = model.stochastic_convolution_modal(path);
        const Coords x = model.deterministic_modal() + z;
        values[i] = x.dot(z);
    });
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(samples);
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    var /= static_cast<double>(samples - 1);

    IntegrationByPartsReport report;
    report.lhs = mean;
    report.standard_error = std::sqrt(var / static_cast<double>(samples));
    report.rhs = model.noise_second_moment();
    report.samples = samples;
    return report;
}

namespace {

CheckResult check(std::string name, double residual, double bound) {
    return {std::move(name), residual, bound, residual <= bound};
}

}  // namespace

std::vector<CheckResult> malliavin_identity_checks(std::uint64_t seed) {
    std::vector<CheckResult> out;
    out.push_back(check("duality_randomized", randomized_duality_max_residual(100, seed), 1e-10));

    {
        const CellPartition part({0.7, 0.4});
        const PoissonLattice lattice(part);
        const SpectralVector h{1.0, -0.5, 0.25};
        CylindricalRV single;
        single.add_term(LatticeFunction::count(0), h);
        CylindricalRV mixed;
        mixed.add_term(LatticeFunction::polynomial(0, {0.5, -1.0, 0.0, 0.2}), SpectralVector{0.3, 1.0, -2.0});
        mixed.add_term(LatticeFunction::count(1, -0.4).times(LatticeFunction::count(0)), SpectralVector{-1.0, 0.0, 0.7});
        const std::vector<LipschitzMap> maps = {identity_map(), norm_scaling_map(SpectralVector{0.6, 0.8}),
                                                clamped_affine_map(0.75, SpectralVector{0.1, -0.2, 0.3}, 2.5),
                                                affine_map(-1.5, SpectralVector{2.0, 0.0, -1.0})};
        for (const LipschitzMap& map : maps) {
            const double r = std::max(chain_rule_check(map, single, lattice), chain_rule_check(map, mixed, lattice));
            out.push_back(check("chain_rule_" + map.name, r, 1e-12));
        }
    }

    {
        const CellPartition part({0.9, 0.3, 0.55});
        const PoissonLattice lattice(part);
        const SimpleField single({{0, SpectralVector{1.0, 2.0}, std::nullopt}});
        const SimpleField multi({{0, SpectralVector{1.0, 2.0}, std::nullopt},
                                 {1, SpectralVector{-0.5, 0.0, 3.0}, std::nullopt},
                                 {2, SpectralVector{0.25}, std::nullopt}});
        out.push_back(check("d_delta_single_cell", d_delta_identity_check(single, lattice), 1e-12));
        out.push_back(check("d_delta_multi_cell", d_delta_identity_check(multi, lattice), 1e-12));
    }

    {
        // Two time windows of two cells each; coefficients in the second
        // window read counts of the first.
        const CellPartition part({0.5, 0.8, 0.6, 0.35}, {0, 0, 1, 1});
        const PoissonLattice lattice(part);
        const SimpleField phi({{0, SpectralVector{1.0, -1.0}, std::nullopt},
                               {1, SpectralVector{0.5, 0.2, 0.1}, std::nullopt},
                               {2, SpectralVector{0.0, 1.5}, LatticeFunction::count(0)},
                               {3, SpectralVector{-0.7, 0.4},
                                LatticeFunction({0, 1}, [](std::span<const int> n) { return n[0] * n[1] - 0.3 * n[1] * n[1]; })}});
        CylindricalRV g1;
        g1.add_term(LatticeFunction::polynomial(2, {0.0, 1.0, -0.5}), SpectralVector{1.0, 0.5});
        g1.add_term(LatticeFunction::count(0).times(LatticeFunction::count(3)), SpectralVector{-0.2, 1.0});
        CylindricalRV g2;
        g2.add_term(LatticeFunction::count(1).times(LatticeFunction::polynomial(2, {1.0, 0.0, 0.0, 0.1})), SpectralVector{0.3, -0.3, 1.0});
        const SkorohodItoReport report = skorohod_ito_check(phi, lattice, {g1, g2});
        out.push_back(check("skorohod_ito_pointwise", report.pointwise_residual, 1e-12));
        out.push_back(check("skorohod_ito_duality", report.duality_residual, 1e-10));
        out.push_back(check("isometry", isometry_residual(phi, lattice), 1e-10));
    }
    return out;
}

}  // namespace spde
