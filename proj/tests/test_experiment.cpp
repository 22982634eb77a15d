#include "doctest.h"
#include "spde/errors.hpp"
#include "spde/experiment.hpp"

#include <cmath>
#include <numbers>

using namespace spde;

namespace {

ExperimentConfig small_config() {
    ExperimentConfig c;
    c.horizon = 0.5;
    c.x0 = CoefficientSpec::power(-2.0, 1.0, 64);
    c.f = CoefficientSpec::power(-3.0, 1.0, 64);
    c.g = CoefficientSpec::power(0.0, 1.0, 64);
    c.levy.intensity = 500.0;
    c.levy.mode_weights = CoefficientSpec::power(-1.0, 1.0, 64);
    c.levy.jump_scales = CoefficientSpec::power(0.0, 1.0, 64);
    c.levy.trace = 1.0;
    c.discretizations = {Discretization::spectral(2), Discretization::spectral(4), Discretization::spectral(8)};
    c.ref_dim = 64;
    c.functionals = {Functional{Functional::Kind::squared_norm, "sq", {}}};
    c.mc_samples = 400;
    c.seed = 5;
    return c;
}

}  // namespace

TEST_CASE("rate fit of exact power data") {
    std::vector<RatePoint> pts;
    for (int j = 3; j <= 7; ++j) {
        const double h = std::ldexp(1.0, -j);
        pts.push_back({h, h * h});
    }
    const auto fit = fit_rate(pts);
    CHECK(fit.slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(fit.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit.intercept == doctest::Approx(0.0).scale(1.0).epsilon(1e-12));
}

TEST_CASE("rate fit with a logarithmic factor, raw and corrected") {
    std::vector<RatePoint> raw, corrected;
    for (int j = 3; j <= 7; ++j) {
        const double h = std::ldexp(1.0, -j);
        const double e = h * h * (1.0 + std::abs(std::log(h)));
        raw.push_back({h, e});
        corrected.push_back({h, log_corrected(e, h)});
    }
    const auto r = fit_rate(raw);
    CHECK(r.slope == doctest::Approx(1.7695959100496312).epsilon(1e-12));
    CHECK(r.r_squared == doctest::Approx(0.999847392991636).epsilon(1e-10));
    CHECK(fit_rate(corrected).slope == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("rate fit input validation") {
    CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.1, 2.0}, {0.05, 0.5}}), DomainError);
    CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.05, 0.0}, {0.025, 0.5}}), DomainError);
    CHECK_THROWS_AS(fit_rate({{0.1, 1.0}, {0.05, 0.5}}), DomainError);
}

TEST_CASE("config round trip") {
    const auto d = default_config();
    CHECK(parse_config(serialize_config(d)) == d);

    auto c = small_config();
    c.discretizations = {Discretization::fem(3), Discretization::fem(7), Discretization::fem(15)};
    c.functionals.push_back(Functional{Functional::Kind::linear, "lin", CoefficientSpec::explicit_values({1.0, 0.5, 0.25})});
    c.x0 = CoefficientSpec::explicit_values({0.1, 0.2, 0.30000000000000004});
    c.mode = Mode::mc;
    c.smoothing.t_grid = {0.02, 0.2};
    const auto again = parse_config(serialize_config(c));
    CHECK(again == c);
    CHECK(serialize_config(again) == serialize_config(c));
}

TEST_CASE("config errors name the offending field") {
    const std::string good = serialize_config(small_config());

    auto expect_error = [](const std::string& text, const std::string& where) {
        try {
            parse_config(text);
            FAIL("no ConfigError for " << where);
        } catch (const ConfigError& e) {
            CAPTURE(e.where());
            CHECK(e.where().find(where) != std::string::npos);
        }
    };

    std::string unknown = good;
    unknown.insert(1, "\"bogus\": 1,");
    expect_error(unknown, "bogus");

    std::string syntax = good;
    syntax.replace(syntax.find("\"seed\""), 6, "seed");
    expect_error(syntax, "line");

    auto c = small_config();
    c.discretizations.pop_back();
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.ref_dim = 16;
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.discretizations = {Discretization::spectral(4), Discretization::spectral(2), Discretization::spectral(8)};
    CHECK_THROWS_AS(c.validate(), ConfigError);
    c = small_config();
    c.horizon = -1.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("coefficient specs") {
    const auto v = CoefficientSpec::power(-1.0, 2.0, 4).materialize();
    REQUIRE(v.size() == 4);
    CHECK(v[0] == 2.0);
    CHECK(v[3] == 0.5);
    CHECK(CoefficientSpec::explicit_values({1.0, 3.0}).materialize() == std::vector<double>{1.0, 3.0});

    LevyConfig lc;
    lc.intensity = 4.0;
    lc.mode_weights = CoefficientSpec::explicit_values({1.0, 3.0});
    lc.jump_scales = CoefficientSpec::explicit_values({1.0, 1.0});
    lc.trace = 2.0;
    const auto spec = lc.build();
    CHECK(spec.mode_probs()[1] == doctest::Approx(0.75));
    CHECK(second_moment_of_measure(spec) == doctest::Approx(2.0));
}

TEST_CASE("noise-free resolved data gives zero errors") {
    auto c = small_config();
    c.x0 = CoefficientSpec::explicit_values({1.0, 0.5});
    c.f = CoefficientSpec::explicit_values({0.0});
    c.g = CoefficientSpec::explicit_values({0.0});
    const auto weak = weak_error_analytic(c);
    REQUIRE(weak.size() == 1);
    for (const auto& l : weak[0].levels) {
        CHECK(l.error == 0.0);
        CHECK(l.dropped);
    }
    CHECK(!weak[0].raw_fit);
    CHECK(!weak[0].warnings.empty());
    const auto strong = strong_error_analytic(c);
    for (const auto& l : strong.levels) CHECK(l.error == 0.0);
}

TEST_CASE("linear functional on resolved modes sees only the deterministic error") {
    auto c = small_config();
    c.functionals = {Functional{Functional::Kind::linear, "lin", CoefficientSpec::explicit_values({1.0, -1.0})}};
    c.discretizations = {Discretization::fem(3), Discretization::fem(7), Discretization::fem(15)};
    const auto model = c.model();
    const auto w = weak_error_analytic(c);
    for (const auto& l : w[0].levels) {
        const auto mean_h = expand_coordinates(analytic_mean(model, l.disc, c.ref_dim), l.disc, c.ref_dim);
        const auto mean = analytic_mean(model, Discretization::spectral(c.ref_dim), c.ref_dim);
        double expected = 0.0;
        expected += (mean_h.mode(1) - mean[0]) - (mean_h.mode(2) - mean[1]);
        CHECK(l.signed_value == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("analytic errors decrease and the MC estimate agrees") {
    const auto c = small_config();
    const auto weak = weak_error_analytic(c)[0];
    for (std::size_t i = 1; i < weak.levels.size(); ++i) CHECK(weak.levels[i].error < weak.levels[i - 1].error);

    RunOptions opt;
    opt.samples = 4000;
    const auto mc = weak_error_mc(c, opt)[0];
    for (std::size_t i = 0; i < mc.levels.size(); ++i)
        CHECK(std::abs(mc.levels[i].signed_value - weak.levels[i].signed_value) <= 4 * mc.levels[i].value_std_error);

    const auto strong = strong_error_analytic(c);
    const auto smc = strong_error_mc(c, opt);
    for (std::size_t i = 0; i < smc.levels.size(); ++i)
        CHECK(std::abs(smc.levels[i].signed_value - strong.levels[i].signed_value) <= 4 * smc.levels[i].value_std_error);
}

TEST_CASE("MC results do not depend on the thread count") {
    const auto c = small_config();
    RunOptions one, four;
    one.samples = four.samples = 300;
    four.threads = 4;
    const auto a = weak_error_mc(c, one)[0];
    const auto b = weak_error_mc(c, four)[0];
    for (std::size_t i = 0; i < a.levels.size(); ++i) {
        CHECK(a.levels[i].signed_value == b.levels[i].signed_value);
        CHECK(a.levels[i].std_error == b.levels[i].std_error);
    }
    const auto s1 = strong_error_mc(c, one);
    const auto s4 = strong_error_mc(c, four);
    for (std::size_t i = 0; i < s1.levels.size(); ++i) CHECK(s1.levels[i].signed_value == s4.levels[i].signed_value);
}

TEST_CASE("smoothing ratio for spectral truncation has a closed form") {
    const std::vector<double> t{0.001, 0.01};
    const auto r = smoothing_check(t, {Discretization::spectral(4), Discretization::spectral(8)}, 64);
    REQUIRE(r.rows.size() == 4);
    for (const auto& row : r.rows) {
        const std::size_t n = row.h == Discretization::spectral(4).h() ? 4 : 8;
        const double expected = row.t * std::exp(-eigenvalue(n + 1) * row.t) / (row.h * row.h);
        CHECK(row.ratio == doctest::Approx(expected).epsilon(1e-6));
    }
    CHECK_THROWS_AS(smoothing_check({0.0, 0.1}, {Discretization::spectral(4)}, 64), DomainError);
}

TEST_CASE("smoothing check passes on the FEM levels and norms decay in t") {
    const std::vector<double> t{0.01, 0.05, 0.1, 0.5, 1.0};
    const auto r = smoothing_check(
        t, {Discretization::fem(7), Discretization::fem(15), Discretization::fem(31), Discretization::fem(63)}, 512, 4);
    CHECK(r.pass);
    for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
        if (r.rows[i].h == r.rows[i + 1].h) CHECK(r.rows[i + 1].norm < r.rows[i].norm);
    }
}

TEST_CASE("Ritz projection error of e_1 scales with h^2") {
    const auto e1 = SpectralVector::unit(1, 1);
    std::vector<double> ratios;
    for (std::size_t m : {7u, 15u, 31u, 63u, 127u}) ratios.push_back(ritz_ratio(e1, Discretization::fem(m)));
    const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
    CHECK(*hi / *lo < 2.0);
    CHECK(*hi < 1.0);
    CHECK(ritz_ratio(SpectralVector::unit(1, 1), Discretization::spectral(4)) == 0.0);
}
