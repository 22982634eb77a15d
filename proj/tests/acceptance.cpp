// Acceptance suite: prints one PASS/FAIL line per criterion and exits nonzero
// if any criterion fails. Tolerances and runtime limits are fixed here.

#include "spde/cli.hpp"
#include "spde/experiment.hpp"
#include "spde/levy.hpp"
#include "spde/malliavin.hpp"
#include "spde/rng.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/poisson.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

using namespace spde;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

bool g_all_pass = true;

void criterion(int id, const std::string& name, double limit_seconds, const std::function<Outcome()>& body) {
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
        o = body();
    } catch (const std::exception& e) {
        o = {false, std::string("exception: ") + e.what()};
    }
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = elapsed < limit_seconds;
    const bool pass = o.pass && in_time;
    g_all_pass = g_all_pass && pass;
    char timing[96];
    std::snprintf(timing, sizeof(timing), "%.2f s, limit %.0f s%s", elapsed, limit_seconds, in_time ? "" : " EXCEEDED");
    std::cout << (pass ? "PASS" : "FAIL") << " criterion " << id << " (" << name << "): " << o.detail << " [" << timing
              << "]" << std::endl;
}

std::string fmt(const char* format, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), format, a, b, c, d);
    return buf;
}

unsigned worker_count() { return std::max(1u, std::thread::hardware_concurrency()); }

Outcome weak_rate() {
    const auto weak = weak_error_analytic(default_config());
    const auto& fit = weak.at(0).corrected_fit;
    if (!fit) return {false, "no fit"};
    const bool ok = fit->slope >= 1.8 && fit->slope <= 2.2 && fit->r_squared >= 0.98;
    return {ok, fmt("corrected slope %.4f in [1.8, 2.2], R2 %.5f >= 0.98", fit->slope, fit->r_squared)};
}

Outcome strong_rate() {
    const auto config = default_config();
    const auto strong = strong_error_analytic(config);
    const auto weak = weak_error_analytic(config);
    if (!strong.raw_fit || !weak.at(0).corrected_fit) return {false, "no fit"};
    const double s = strong.raw_fit->slope;
    const double w = weak[0].corrected_fit->slope;
    const bool ok = s >= 0.8 && s <= 1.2 && strong.raw_fit->r_squared >= 0.98 && std::fabs(w - 2.0 * s) <= 0.3;
    return {ok, fmt("slope %.4f in [0.8, 1.2] (R2 %.5f), |weak - 2 strong| = %.4f <= 0.3", s, strong.raw_fit->r_squared,
                    std::fabs(w - 2.0 * s))};
}

Outcome smoothing() {
    const auto sm = default_config().smoothing;
    std::vector<Discretization> levels;
    for (std::size_t m : sm.fem_nodes) levels.push_back(Discretization::fem(m));
    const auto r = smoothing_check(sm.t_grid, levels, sm.modes, 1);
    const auto [lo, hi] = std::minmax_element(r.max_ratio.begin(), r.max_ratio.end());
    const auto [rlo, rhi] = std::minmax_element(r.reduction_factors.begin(), r.reduction_factors.end());
    const bool ok = r.pass && *hi / *lo < 2.0 && *rlo >= 3.5 && *rhi <= 4.5;
    return {ok, fmt("max-over-t ratio spread %.4f < 2, reduction factors in [%.4f, %.4f] within [3.5, 4.5]", *hi / *lo,
                    *rlo, *rhi)};
}

Outcome ritz() {
    const auto e1 = SpectralVector::unit(1, 1);
    std::vector<double> ratios;
    for (std::size_t m : {7u, 15u, 31u, 63u, 127u}) ratios.push_back(ritz_ratio(e1, Discretization::fem(m)));
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    const bool ok = std::isfinite(*hi) && *lo > 0.0 && *hi / *lo < 2.0;
    return {ok, fmt("ratio in [%.5f, %.5f] over h = 1/8..1/128, spread %.4f < 2", *lo, *hi, *hi / *lo)};
}

Outcome mc_consistency() {
    const auto config = default_config();
    RunOptions opt;
    opt.samples = 10000;
    opt.threads = worker_count();
    opt.measure_coupling = true;

    const auto weak_a = weak_error_analytic(config).at(0);
    const auto weak_m = weak_error_mc(config, opt).at(0);
    const auto strong_a = strong_error_analytic(config);
    const auto strong_m = strong_error_mc(config, opt);

    double worst_weak = 0.0, worst_strong = 0.0, min_gain = INFINITY;
    for (std::size_t l = 0; l < weak_a.levels.size(); ++l) {
        const auto& m = weak_m.levels[l];
        worst_weak = std::max(worst_weak, std::fabs(m.signed_value - weak_a.levels[l].signed_value) / m.value_std_error);
        min_gain = std::min(min_gain, m.coupling_gain);
        const auto& s = strong_m.levels[l];
        worst_strong =
            std::max(worst_strong, std::fabs(s.signed_value - strong_a.levels[l].signed_value) / s.value_std_error);
    }
    const bool ok = worst_weak <= 4.0 && worst_strong <= 4.0 && min_gain > 10.0;
    return {ok, fmt("max |MC - analytic|/SE weak %.3f, strong %.3f (<= 4); min coupling variance gain %.1f > 10",
                    worst_weak, worst_strong, min_gain)};
}

Outcome malliavin() {
    const auto checks = malliavin_identity_checks(42);
    // Bounds required per identity family.
    const auto required = [](const std::string& name) {
        if (name.rfind("duality", 0) == 0 || name == "isometry" || name == "skorohod_ito_duality") return 1e-10;
        return 1e-12;
    };
    bool ok = !checks.empty();
    std::string worst;
    double worst_ratio = 0.0;
    for (const auto& c : checks) {
        const bool pass = c.pass && c.residual <= required(c.name);
        ok = ok && pass;
        const double ratio = c.residual / required(c.name);
        if (ratio >= worst_ratio) {
            worst_ratio = ratio;
            worst = c.name;
        }
        if (!pass) std::cout << "  " << c.name << " residual " << c.residual << " > " << required(c.name) << '\n';
    }
    std::ostringstream d;
    d << checks.size() << " identities, largest residual/bound " << worst_ratio << " (" << worst << ")";
    return {ok, d.str()};
}

Outcome integration_by_parts() {
    const auto config = default_config();
    const auto r = integration_by_parts_check(config.model(), config.discretizations.back(), 10000, config.seed,
                                              worker_count(), config.ref_dim);
    return {r.pass(), fmt("|LHS - RHS| = %.3g <= 4 SE = %.3g (LHS %.6g, RHS %.6g)", r.residual(), 4.0 * r.standard_error,
                          r.lhs, r.rhs)};
}

Outcome sampler() {
    // K = 8 modes, λ_tot = 50, p_k ∝ 1/k, trace Q = 1.
    const std::size_t modes = 8;
    const double intensity = 50.0;
    const std::size_t paths = 100000;
    std::vector<double> p(modes);
    double z = 0.0;
    for (std::size_t k = 1; k <= modes; ++k) z += 1.0 / static_cast<double>(k);
    for (std::size_t k = 1; k <= modes; ++k) p[k - 1] = 1.0 / (static_cast<double>(k) * z);
    const std::vector<double> a(modes, std::sqrt(1.0 / intensity));
    const LevyMeasureSpec spec(intensity, p, a);
    const auto q = covariance_diag(spec).q;

    std::vector<double> s1(modes), s2(modes), s4(modes);
    std::vector<std::uint64_t> counts(paths);
    for (std::size_t i = 0; i < paths; ++i) {
        RandomStream stream(2024, i);
        const auto path = sample_path(spec, 1.0, stream);
        counts[i] = path.jumps.size();
        const auto l = evaluate_L(path, 1.0, modes);
        for (std::size_t k = 0; k < modes; ++k) {
            const double v = l[k];
            s1[k] += v;
            s2[k] += v * v;
            s4[k] += v * v * v * v;
        }
    }
    const double n = static_cast<double>(paths);
    double worst_mean = 0.0, worst_var = 0.0;
    for (std::size_t k = 0; k < modes; ++k) {
        const double mean = s1[k] / n;
        const double m2 = s2[k] / n;
        const double var = m2 - mean * mean;
        worst_mean = std::max(worst_mean, std::fabs(mean) / std::sqrt(var / n));
        // SE of the second moment about the known mean 0.
        const double se_var = std::sqrt((s4[k] / n - m2 * m2) / n);
        worst_var = std::max(worst_var, std::fabs(m2 - q[k]) / se_var);
    }

    // Chi-square goodness of fit of the jump counts against Poisson(50), with
    // tail bins merged until every expected count is at least 5.
    const boost::math::poisson_distribution<double> pois(intensity);
    std::vector<double> expected, observed;
    std::uint64_t lo = 0;
    while (n * boost::math::cdf(pois, static_cast<double>(lo)) < 5.0) ++lo;
    std::uint64_t hi = lo;
    while (n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(hi))) >= 5.0) ++hi;
    expected.push_back(n * boost::math::cdf(pois, static_cast<double>(lo)));
    for (std::uint64_t c = lo + 1; c <= hi; ++c) expected.push_back(n * boost::math::pdf(pois, static_cast<double>(c)));
    expected.push_back(n * boost::math::cdf(boost::math::complement(pois, static_cast<double>(hi))));
    observed.assign(expected.size(), 0.0);
    for (std::uint64_t c : counts) {
        const std::size_t bin = c <= lo ? 0 : (c > hi ? expected.size() - 1 : static_cast<std::size_t>(c - lo));
        observed[bin] += 1.0;
    }
    double chi2 = 0.0;
    for (std::size_t b = 0; b < expected.size(); ++b) chi2 += (observed[b] - expected[b]) * (observed[b] - expected[b]) / expected[b];
    const boost::math::chi_squared_distribution<double> dist(static_cast<double>(expected.size() - 1));
    const double p_value = boost::math::cdf(boost::math::complement(dist, chi2));

    const bool ok = worst_mean <= 4.0 && worst_var <= 4.0 && p_value > 0.01;
    return {ok, fmt("max |mean|/SE %.3f, max |var - q_k|/SE %.3f (<= 4); jump-count chi2 = %.2f, p = %.4f > 0.01",
                    worst_mean, worst_var, chi2, p_value)};
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Outcome reproducibility() {
    const auto dir = std::filesystem::temp_directory_path() / "spde_acceptance";
    std::filesystem::create_directories(dir);
    const std::vector<std::vector<std::string>> invocations{
        {"simulate", "--samples", "200"},
        {"weak-rate", "--mode", "analytic"},
        {"weak-rate", "--mode", "mc", "--samples", "1000"},
        {"strong-rate", "--mode", "analytic"},
        {"strong-rate", "--mode", "mc", "--samples", "1000"},
        {"smoothing-check"},
        {"malliavin-check", "--samples", "1000"},
    };
    const std::vector<std::string> thread_settings{"1", "1", "4", std::to_string(worker_count())};
    std::size_t compared = 0;
    for (const auto& base : invocations) {
        std::string first;
        for (std::size_t r = 0; r < thread_settings.size(); ++r) {
            auto args = base;
            const auto out = dir / ("run" + std::to_string(r) + ".csv");
            args.insert(args.end(), {"--seed", "42", "--threads", thread_settings[r], "--out", out.string()});
            std::ostringstream sink_out, sink_err;
            const int code = run_cli(args, sink_out, sink_err);
            if (code == 2) return {false, base[0] + " exited with a usage error: " + sink_err.str()};
            const std::string bytes = slurp(out);
            if (bytes.empty()) return {false, base[0] + " wrote no CSV"};
            if (r == 0) {
                first = bytes;
            } else if (bytes != first) {
                return {false, base[0] + " output differs with --threads " + thread_settings[r]};
            }
            ++compared;
        }
    }
    std::filesystem::remove_all(dir);
    return {true, std::to_string(invocations.size()) + " invocations, " + std::to_string(compared) +
                      " runs byte-identical across repeats and --threads 1/4/" + std::to_string(worker_count())};
}

}  // namespace

int main() {
    criterion(1, "weak rate", 10, weak_rate);
    criterion(2, "strong rate", 10, strong_rate);
    criterion(3, "smoothing bound", 60, smoothing);
    criterion(4, "Ritz estimate", 5, ritz);
    criterion(5, "MC consistency", 300, mc_consistency);
    criterion(6, "Malliavin identities", 60, malliavin);
    criterion(7, "integration by parts", 60, integration_by_parts);
    criterion(8, "Levy sampler statistics", 60, sampler);
    criterion(9, "reproducibility", 600, reproducibility);
    std::cout << (g_all_pass ? "ALL PASS" : "SOME CRITERIA FAILED") << std::endl;
    return g_all_pass ? 0 : 1;
}
