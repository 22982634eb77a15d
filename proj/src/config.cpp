#include "spde/errors.hpp"
#include "spde/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <set>

namespace spde {

using nlohmann::json;

CoefficientSpec CoefficientSpec::explicit_values(std::vector<double> values) {
    CoefficientSpec c;
    c.values = std::move(values);
    return c;
}

CoefficientSpec CoefficientSpec::power(double power, double scale, std::size_t dim) {
    CoefficientSpec c;
    c.power_law = PowerLaw{power, scale, dim};
    return c;
}

std::vector<double> CoefficientSpec::materialize() const {
    if (!power_law) return values;
    std::vector<double> out(power_law->dim);
    for (std::size_t k = 1; k <= out.size(); ++k) out[k - 1] = power_law->scale * std::pow(static_cast<double>(k), power_law->power);
    return out;
}

LevyMeasureSpec LevyConfig::build() const {
    std::vector<double> probs = mode_weights.materialize();
    std::vector<double> scales = jump_scales.materialize();
    double total = 0.0;
    for (double w : probs) total += w;
    if (!(total > 0.0) || !std::isfinite(total)) throw DomainError("mode weights must have a positive finite sum");
    for (double& w : probs) w /= total;
    if (trace) {
        double current = 0.0;
        for (std::size_t k = 0; k < std::min(probs.size(), scales.size()); ++k) current += intensity * probs[k] * scales[k] * scales[k];
        if (!(current > 0.0)) throw DomainError("trace rescaling needs a positive intensity and scales");
        const double factor = std::sqrt(*trace / current);
        for (double& a : scales) a *= factor;
    }
    return LevyMeasureSpec(intensity, std::move(probs), std::move(scales));
}

ModelSpec ExperimentConfig::model() const {
    return ModelSpec{SpectralVector(x0.materialize()), SpectralVector(f.materialize()), g.materialize(), horizon, levy.build()};
}

namespace {

void require_finite(const std::vector<double>& v, const std::string& where) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw ConfigError(where + "[" + std::to_string(i) + "]", "value is not finite");
    }
}

}  // namespace

void ExperimentConfig::validate() const {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw ConfigError("model.horizon", "must be positive and finite");
    const std::pair<const CoefficientSpec*, const char*> coeffs[] = {
        {&x0, "model.x0"}, {&f, "model.f"}, {&g, "model.g"}, {&levy.mode_weights, "levy.mode_weights"}, {&levy.jump_scales, "levy.jump_scales"}};
    for (const auto& [spec, where] : coeffs) {
        const std::vector<double> v = spec->materialize();
        if (v.empty()) throw ConfigError(where, "must have at least one coefficient");
        require_finite(v, where);
    }
    if (levy.mode_weights.materialize().size() != levy.jump_scales.materialize().size())
        throw ConfigError("levy.jump_scales", "must have as many entries as levy.mode_weights");
    if (levy.trace && !(*levy.trace > 0.0 && std::isfinite(*levy.trace))) throw ConfigError("levy.trace", "must be positive and finite");
    try {
        (void)levy.build();
    } catch (const DomainError& e) {
        throw ConfigError("levy", e.what());
    }

    if (discretizations.size() < 3) throw ConfigError("discretizations", "at least 3 levels are required for a rate fit");
    for (std::size_t i = 0; i < discretizations.size(); ++i) {
        const std::string where = "discretizations[" + std::to_string(i) + "]";
        if (i > 0 && !(discretizations[i].h() < discretizations[i - 1].h()))
            throw ConfigError(where, "levels must be sorted by strictly decreasing h");
        if (ref_dim < 4 * discretizations[i].size())
            throw ConfigError("ref_dim", "must be at least 4 times the dimension of " + discretizations[i].label());
    }
    if (functionals.empty()) throw ConfigError("functionals", "at least one functional is required");
    std::set<std::string> names;
    for (std::size_t i = 0; i < functionals.size(); ++i) {
        const std::string where = "functionals[" + std::to_string(i) + "]";
        if (functionals[i].name.empty() || functionals[i].name.find_first_of(",\n\r\"") != std::string::npos)
            throw ConfigError(where + ".name", "must be non-empty and free of commas, quotes and line breaks");
        if (!names.insert(functionals[i].name).second) throw ConfigError(where + ".name", "duplicate functional name");
        if (functionals[i].kind == Functional::Kind::linear) {
            const std::vector<double> psi = functionals[i].psi.materialize();
            if (psi.empty()) throw ConfigError(where + ".psi", "must have at least one coefficient");
            require_finite(psi, where + ".psi");
        }
    }
    if (mc_samples < 2) throw ConfigError("mc_samples", "must be at least 2");
    if (smoothing.t_grid.empty()) throw ConfigError("smoothing.t_grid", "must not be empty");
    for (std::size_t i = 0; i < smoothing.t_grid.size(); ++i) {
        if (!(smoothing.t_grid[i] > 0.0) || !std::isfinite(smoothing.t_grid[i]))
            throw ConfigError("smoothing.t_grid[" + std::to_string(i) + "]", "t must be positive and finite");
    }
    if (smoothing.fem_nodes.empty()) throw ConfigError("smoothing.fem_nodes", "must not be empty");
    for (std::size_t i = 0; i < smoothing.fem_nodes.size(); ++i) {
        if (smoothing.fem_nodes[i] == 0) throw ConfigError("smoothing.fem_nodes[" + std::to_string(i) + "]", "must be positive");
    }
    if (smoothing.modes == 0) throw ConfigError("smoothing.modes", "must be positive");
}

ExperimentConfig default_config() {
    constexpr std::size_t kModes = 2048;
    ExperimentConfig c;
    c.horizon = 1.0;
    c.x0 = CoefficientSpec::power(-3.0, 1.0, kModes);
    c.f = CoefficientSpec::power(-3.0, 1.0, kModes);
    c.g = CoefficientSpec::power(0.0, 1.0, kModes);
    c.levy.intensity = 2000.0;
    c.levy.mode_weights = CoefficientSpec::power(-1.0, 1.0, kModes);
    c.levy.jump_scales = CoefficientSpec::power(0.0, 1.0, kModes);
    c.levy.trace = 1.0;
    for (std::size_t n : {4, 8, 16, 32, 64}) c.discretizations.push_back(Discretization::spectral(n));
    c.ref_dim = kModes;
    c.functionals.push_back({Functional::Kind::squared_norm, "squared_norm", {}});
    c.mc_samples = 10000;
    c.seed = 42;
    c.mode = Mode::analytic;
    return c;
}

namespace {

// Field access with the JSON path carried along for diagnostics.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

    const std::string& path() const { return path_; }
    const json& raw() const { return j_; }

    [[noreturn]] void fail(const std::string& what) const { throw ConfigError(path_.empty() ? "(document)" : path_, what); }

    void expect_object(std::initializer_list<const char*> allowed) const {
        if (!j_.is_object()) fail("expected an object");
        for (const auto& [key, value] : j_.items()) {
            bool known = false;
            for (const char* a : allowed) known = known || key == a;
            if (!known) Node(value, join(key)).fail("unknown key");
        }
    }

    bool has(const char* key) const { return j_.contains(key); }

    Node at(const char* key) const {
        if (!j_.contains(key)) Node(j_, join(key)).fail("missing required key");
        return Node(j_.at(key), join(key));
    }

    std::vector<Node> elements() const {
        if (!j_.is_array()) fail("expected an array");
        std::vector<Node> out;
        for (std::size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_.at(i), path_ + "[" + std::to_string(i) + "]");
        return out;
    }

    double number() const {
        if (!j_.is_number()) fail("expected a number");
        return j_.get<double>();
    }

    std::uint64_t unsigned_integer() const {
        if (j_.is_number_unsigned()) return j_.get<std::uint64_t>();
        if (j_.is_number_integer()) {
            if (j_.get<std::int64_t>() < 0) fail("expected a non-negative integer");
            return static_cast<std::uint64_t>(j_.get<std::int64_t>());
        }
        fail("expected a non-negative integer");
    }

    std::size_t size_value() const { return static_cast<std::size_t>(unsigned_integer()); }

    std::string string() const {
        if (!j_.is_string()) fail("expected a string");
        return j_.get<std::string>();
    }

private:
    std::string join(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    const json& j_;
    std::string path_;
};

CoefficientSpec parse_coefficients(const Node& n) {
    if (n.raw().is_array()) {
        std::vector<double> values;
        for (const Node& e : n.elements()) values.push_back(e.number());
        return CoefficientSpec::explicit_values(std::move(values));
    }
    n.expect_object({"power", "scale", "dim"});
    const double scale = n.has("scale") ? n.at("scale").number() : 1.0;
    const std::size_t dim = n.at("dim").size_value();
    if (dim == 0) n.at("dim").fail("must be positive");
    return CoefficientSpec::power(n.at("power").number(), scale, dim);
}

Discretization parse_discretization(const Node& n) {
    if (!n.raw().is_object()) n.fail("expected an object");
    const std::string type = n.at("type").string();
    if (type == "spectral") {
        n.expect_object({"type", "N"});
        const std::size_t size = n.at("N").size_value();
        if (size == 0) n.at("N").fail("must be positive");
        return Discretization::spectral(size);
    }
    if (type == "fem") {
        n.expect_object({"type", "M"});
        const std::size_t size = n.at("M").size_value();
        if (size == 0) n.at("M").fail("must be positive");
        return Discretization::fem(size);
    }
    n.at("type").fail("expected \"spectral\" or \"fem\"");
}

Functional parse_functional(const Node& n) {
    if (!n.raw().is_object()) n.fail("expected an object");
    const std::string type = n.at("type").string();
    Functional out;
    if (type == "squared_norm") {
        n.expect_object({"type", "name"});
        out.kind = Functional::Kind::squared_norm;
    } else if (type == "linear") {
        n.expect_object({"type", "name", "psi"});
        out.kind = Functional::Kind::linear;
        out.psi = parse_coefficients(n.at("psi"));
    } else {
        n.at("type").fail("expected \"squared_norm\" or \"linear\"");
    }
    out.name = n.has("name") ? n.at("name").string() : type;
    return out;
}

json coefficients_json(const CoefficientSpec& c) {
    if (!c.power_law) return json(c.values);
    return json{{"power", c.power_law->power}, {"scale", c.power_law->scale}, {"dim", c.power_law->dim}};
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        // e.byte is 1-based and points just past the offending character.
        const std::size_t end = std::min(e.byte > 0 ? e.byte - 1 : 0, json_text.size());
        std::size_t line = 1, column = 1;
        for (std::size_t i = 0; i < end; ++i) {
            if (json_text[i] == '\n') {
                ++line;
                column = 1;
            } else {
                ++column;
            }
        }
        throw ConfigError("line " + std::to_string(line) + ", column " + std::to_string(column), e.what());
    }
    const Node root(doc, "");
    root.expect_object({"model", "levy", "discretizations", "ref_dim", "functionals", "mc_samples", "seed", "mode", "smoothing"});

    ExperimentConfig c;
    const Node model = root.at("model");
    model.expect_object({"horizon", "x0", "f", "g"});
    c.horizon = model.at("horizon").number();
    c.x0 = parse_coefficients(model.at("x0"));
    c.f = parse_coefficients(model.at("f"));
    c.g = parse_coefficients(model.at("g"));

    const Node levy = root.at("levy");
    levy.expect_object({"intensity", "mode_weights", "jump_scales", "trace"});
    c.levy.intensity = levy.at("intensity").number();
    c.levy.mode_weights = parse_coefficients(levy.at("mode_weights"));
    c.levy.jump_scales = parse_coefficients(levy.at("jump_scales"));
    if (levy.has("trace")) c.levy.trace = levy.at("trace").number();

    for (const Node& d : root.at("discretizations").elements()) c.discretizations.push_back(parse_discretization(d));
    c.ref_dim = root.at("ref_dim").size_value();
    for (const Node& f : root.at("functionals").elements()) c.functionals.push_back(parse_functional(f));
    c.mc_samples = root.at("mc_samples").size_value();
    c.seed = root.at("seed").unsigned_integer();
    const std::string mode = root.at("mode").string();
    if (mode == "analytic") {
        c.mode = Mode::analytic;
    } else if (mode == "mc") {
        c.mode = Mode::mc;
    } else {
        root.at("mode").fail("expected \"analytic\" or \"mc\"");
    }

    if (root.has("smoothing")) {
        const Node s = root.at("smoothing");
        s.expect_object({"t_grid", "fem_nodes", "modes"});
        if (s.has("t_grid")) {
            c.smoothing.t_grid.clear();
            for (const Node& t : s.at("t_grid").elements()) c.smoothing.t_grid.push_back(t.number());
        }
        if (s.has("fem_nodes")) {
            c.smoothing.fem_nodes.clear();
            for (const Node& m : s.at("fem_nodes").elements()) c.smoothing.fem_nodes.push_back(m.size_value());
        }
        if (s.has("modes")) c.smoothing.modes = s.at("modes").size_value();
    }

    c.validate();
    return c;
}

std::string serialize_config(const ExperimentConfig& c) {
    json doc;
    doc["model"] = {{"horizon", c.horizon}, {"x0", coefficients_json(c.x0)}, {"f", coefficients_json(c.f)}, {"g", coefficients_json(c.g)}};
    json levy = {{"intensity", c.levy.intensity},
                 {"mode_weights", coefficients_json(c.levy.mode_weights)},
                 {"jump_scales", coefficients_json(c.levy.jump_scales)}};
    if (c.levy.trace) levy["trace"] = *c.levy.trace;
    doc["levy"] = levy;
    json levels = json::array();
    for (const Discretization& d : c.discretizations) {
        if (d.is_spectral()) {
            levels.push_back({{"type", "spectral"}, {"N", d.size()}});
        } else {
            levels.push_back({{"type", "fem"}, {"M", d.size()}});
        }
    }
    doc["discretizations"] = levels;
    doc["ref_dim"] = c.ref_dim;
    json functionals = json::array();
    for (const Functional& f : c.functionals) {
        if (f.kind == Functional::Kind::squared_norm) {
            functionals.push_back({{"type", "squared_norm"}, {"name", f.name}});
        } else {
            functionals.push_back({{"type", "linear"}, {"name", f.name}, {"psi", coefficients_json(f.psi)}});
        }
    }
    doc["functionals"] = functionals;
    doc["mc_samples"] = c.mc_samples;
    doc["seed"] = c.seed;
    doc["mode"] = c.mode == Mode::analytic ? "analytic" : "mc";
    doc["smoothing"] = {{"t_grid", c.smoothing.t_grid}, {"fem_nodes", c.smoothing.fem_nodes}, {"modes", c.smoothing.modes}};
    return doc.dump(2) + "\n";
}

}  // namespace spde
