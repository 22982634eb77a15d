#include "spde/cli.hpp"

#include "spde/csv.hpp"
#include "spde/errors.hpp"
#include "spde/experiment.hpp"
#include "spde/levy.hpp"
#include "spde/malliavin.hpp"
#include "spde/parallel.hpp"
#include "spde/rng.hpp"

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace spde {

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

// Weak-rate verdict: log-corrected slope and fit quality.
constexpr double kWeakMinSlope = 1.8;
constexpr double kStrongMinSlope = 0.8;
constexpr double kMinRSquared = 0.98;

struct CommonOptions {
    std::string config_path;
    std::string out_path;
    std::optional<std::uint64_t> seed;
    std::string mode;
    std::optional<std::size_t> samples;
    unsigned threads = 1;
    std::string paths_path;  // simulate only
};

ExperimentConfig load_config(const CommonOptions& opts) {
    ExperimentConfig config = default_config();
    if (!opts.config_path.empty()) {
        std::ifstream in(opts.config_path, std::ios::binary);
        if (!in) throw ConfigError(opts.config_path, "cannot open config file");
        std::ostringstream text;
        text << in.rdbuf();
        try {
            config = parse_config(text.str());
        } catch (const ConfigError& e) {
            throw ConfigError(opts.config_path + ": " + e.where(), std::string(e.what()).substr(e.where().size() + 2));
        }
    }
    if (opts.seed) config.seed = *opts.seed;
    if (opts.mode == "analytic") config.mode = Mode::analytic;
    if (opts.mode == "mc") config.mode = Mode::mc;
    if (opts.samples) {
        if (*opts.samples < 2) throw ConfigError("--samples", "must be at least 2");
        config.mc_samples = *opts.samples;
    }
    return config;
}

void emit(const CommonOptions& opts, const std::string& csv, std::ostream& out) {
    if (opts.out_path.empty()) {
        out << csv;
        return;
    }
    std::ofstream file(opts.out_path, std::ios::binary | std::ios::trunc);
    if (!file) throw ConfigError(opts.out_path, "cannot open output file");
    file << csv;
    if (!file) throw ConfigError(opts.out_path, "write failed");
}

RunOptions run_options(const ExperimentConfig& config, const CommonOptions& opts) {
    RunOptions r;
    r.samples = config.mc_samples;
    r.threads = opts.threads;
    return r;
}

void print_warnings(const RateExperiment& exp, std::ostream& err) {
    for (const std::string& w : exp.warnings) err << "warning: " << w << '\n';
}

// Returns the exit code contribution of one fitted experiment.
int rate_verdict(const std::string& what, const RateExperiment& exp, const std::optional<RateFitResult>& fit,
                 double min_slope, std::ostream& err) {
    print_warnings(exp, err);
    if (exp.inconclusive) {
        err << what << ": INCONCLUSIVE (standard error above 25% of a level error); rerun with --samples "
            << exp.suggested_samples << '\n';
        return kExitFail;
    }
    if (!fit) {
        err << what << ": N/A (no rate fitted)\n";
        return kExitPass;
    }
    const bool pass = fit->slope >= min_slope && fit->r_squared >= kMinRSquared;
    err << what << ": slope " << format_double(fit->slope) << ", R^2 " << format_double(fit->r_squared) << " -> "
        << (pass ? "PASS" : "FAIL") << '\n';
    return pass ? kExitPass : kExitFail;
}

int cmd_weak_rate(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load_config(opts);
    const std::vector<RateExperiment> results = weak_error(config, run_options(config, opts));
    const bool mc = config.mode == Mode::mc;

    std::ostringstream csv;
    CsvWriter w(csv);
    if (mc) {
        w.row("functional", "h", "error", "log_corrected_error", "slope", "r2", "std_error");
    } else {
        w.row("functional", "h", "error", "log_corrected_error", "slope", "r2");
    }
    int code = kExitPass;
    for (const RateExperiment& exp : results) {
        const double slope = exp.corrected_fit ? exp.corrected_fit->slope : std::nan("");
        const double r2 = exp.corrected_fit ? exp.corrected_fit->r_squared : std::nan("");
        for (const LevelError& level : exp.levels) {
            const double h = level.disc.h();
            if (mc) {
                w.row(exp.name, h, level.error, log_corrected(level.error, h), slope, r2, level.std_error);
            } else {
                w.row(exp.name, h, level.error, log_corrected(level.error, h), slope, r2);
            }
        }
        code = std::max(code, rate_verdict("weak-rate " + exp.name + " (log-corrected)", exp, exp.corrected_fit,
                                           kWeakMinSlope, err));
    }
    emit(opts, csv.str(), out);
    return code;
}

int cmd_strong_rate(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load_config(opts);
    const RateExperiment exp = strong_error(config, run_options(config, opts));
    const bool mc = config.mode == Mode::mc;

    std::ostringstream csv;
    CsvWriter w(csv);
    if (mc) {
        w.row("h", "error", "slope", "r2", "std_error");
    } else {
        w.row("h", "error", "slope", "r2");
    }
    const double slope = exp.raw_fit ? exp.raw_fit->slope : std::nan("");
    const double r2 = exp.raw_fit ? exp.raw_fit->r_squared : std::nan("");
    for (const LevelError& level : exp.levels) {
        if (mc) {
            w.row(level.disc.h(), level.error, slope, r2, level.std_error);
        } else {
            w.row(level.disc.h(), level.error, slope, r2);
        }
    }
    emit(opts, csv.str(), out);
    return rate_verdict("strong-rate", exp, exp.raw_fit, kStrongMinSlope, err);
}

int cmd_smoothing_check(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load_config(opts);
    std::vector<Discretization> levels;
    for (std::size_t m : config.smoothing.fem_nodes) levels.push_back(Discretization::fem(m));
    const SmoothingResult result = smoothing_check(config.smoothing.t_grid, levels, config.smoothing.modes, opts.threads);

    std::ostringstream csv;
    CsvWriter w(csv);
    w.row("h", "t", "norm", "ratio");
    for (const SmoothingRow& row : result.rows) w.row(row.h, row.t, row.norm, row.ratio);
    emit(opts, csv.str(), out);

    for (const std::string& f : result.failures) err << "smoothing-check: " << f << '\n';
    err << "smoothing-check: calibrated C " << format_double(result.calibrated_c) << " -> "
        << (result.pass ? "PASS" : "FAIL") << '\n';
    return result.pass ? kExitPass : kExitFail;
}

int cmd_malliavin_check(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load_config(opts);
    std::vector<CheckResult> checks = malliavin_identity_checks(config.seed);

    const IntegrationByPartsReport ibp = integration_by_parts_check(
        config.model(), config.discretizations.back(), config.mc_samples, config.seed, opts.threads, config.ref_dim);
    checks.push_back({"integration_by_parts", ibp.residual(), 4.0 * ibp.standard_error, ibp.pass()});

    std::ostringstream csv;
    CsvWriter w(csv);
    w.row("check_name", "residual", "bound", "pass");
    bool all = true;
    for (const CheckResult& c : checks) {
        w.row(c.name, c.residual, c.bound, c.pass ? "true" : "false");
        if (!c.pass) err << "malliavin-check: " << c.name << " FAIL\n";
        all = all && c.pass;
    }
    emit(opts, csv.str(), out);
    err << "malliavin-check: " << (all ? "PASS" : "FAIL") << '\n';
    return all ? kExitPass : kExitFail;
}

int cmd_simulate(const CommonOptions& opts, std::ostream& out, std::ostream& err) {
    const ExperimentConfig config = load_config(opts);
    const ModelSpec spec = config.model();
    const GalerkinModel reference = GalerkinModel::reference(spec, config.ref_dim);
    std::vector<GalerkinModel> levels;
    for (const Discretization& d : config.discretizations) levels.emplace_back(spec, d, config.ref_dim);

    const std::size_t samples = config.mc_samples;
    std::vector<std::string> rows(samples);
    std::vector<std::string> path_rows(opts.paths_path.empty() ? 0 : samples);
    parallel_for(samples, opts.threads, [&](std::size_t i) {
        RandomStream stream(config.seed, i);
        const PoissonSamplePath path = sample_path(spec.levy, spec.horizon, stream);
        const Coords x_ref = reference.solve_modal(path);
        std::ostringstream s;
        CsvWriter w(s);
        w.row(i, "reference:N=" + std::to_string(config.ref_dim), reference.space().h(),
              path.jumps.size(), x_ref.squaredNorm(), 0.0);
        for (const GalerkinModel& level : levels) {
            const Coords x = level.solve_modal(path);
            w.row(i, level.space().discretization().label(), level.space().h(), path.jumps.size(), x.squaredNorm(),
                  level.squared_distance_to_reference(x, x_ref));
        }
        rows[i] = s.str();
        if (!path_rows.empty()) {
            std::ostringstream p;
            write_path_rows(p, i, path);
            path_rows[i] = p.str();
        }
    });

    std::ostringstream csv;
    CsvWriter(csv).row("sample_id", "discretization", "h", "jumps", "squared_norm", "squared_error");
    for (const std::string& r : rows) csv << r;
    emit(opts, csv.str(), out);
    if (!opts.paths_path.empty()) {
        std::ostringstream dump;
        dump << kPathCsvHeader << '\n';
        for (const std::string& r : path_rows) dump << r;
        CommonOptions path_opts = opts;
        path_opts.out_path = opts.paths_path;
        emit(path_opts, dump.str(), out);
    }
    err << "simulate: " << samples << " samples\n";
    return kExitPass;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Galerkin convergence experiments for a parabolic SPDE with additive Lévy noise", "spde"};
    app.require_subcommand(1, 1);

    CommonOptions opts;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", opts.config_path, "JSON experiment config (built-in default when omitted)");
        sub->add_option("--out", opts.out_path, "Output CSV path (stdout when omitted)");
        sub->add_option("--seed", opts.seed, "Override the config seed");
        sub->add_option("--mode", opts.mode, "analytic or mc")->check(CLI::IsMember({"analytic", "mc"}));
        sub->add_option("--samples", opts.samples, "Override the config sample count");
        sub->add_option("--threads", opts.threads, "Worker threads; never changes results")->check(CLI::PositiveNumber);
    };

    using Handler = int (*)(const CommonOptions&, std::ostream&, std::ostream&);
    const std::pair<const char*, Handler> commands[] = {
        {"simulate", cmd_simulate},
        {"weak-rate", cmd_weak_rate},
        {"strong-rate", cmd_strong_rate},
        {"smoothing-check", cmd_smoothing_check},
        {"malliavin-check", cmd_malliavin_check},
    };
    const char* descriptions[] = {
        "Sample paths and write per-level solution norms and errors",
        "Weak error of each functional per level and the fitted rate",
        "Strong error per level and the fitted rate",
        "Operator norm of S_h(t)P_h - S(t) on FEM levels",
        "Malliavin calculus identities and integration by parts",
    };
    std::vector<CLI::App*> subs;
    for (std::size_t i = 0; i < std::size(commands); ++i) {
        CLI::App* sub = app.add_subcommand(commands[i].first, descriptions[i]);
        add_common(sub);
        if (std::string(commands[i].first) == "simulate")
            sub->add_option("--paths", opts.paths_path, "Also write the jump dump (sample_id,jump_time,mode,size)");
        subs.push_back(sub);
    }

    std::vector<std::string> argv_storage;
    argv_storage.emplace_back("spde");
    argv_storage.insert(argv_storage.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const std::string& a : argv_storage) argv.push_back(a.c_str());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitPass;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitPass;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) return commands[i].second(opts, out, err);
        }
    } catch (const ConfigError& e) {
        err << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const DomainError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const ComputationError& e) {
        err << "computation failed: " << e.what() << '\n';
        return kExitFail;
    }
    return kExitUsage;
}

}  // namespace spde
