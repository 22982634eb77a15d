#include "spde/levy.hpp"

#include "spde/csv.hpp"
#include "spde/errors.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <sstream>
#include <string>

namespace spde {

LevyMeasureSpec::LevyMeasureSpec(double intensity, std::vector<double> mode_probs, std::vector<double> jump_scales)
    : intensity_(intensity), probs_(std::move(mode_probs)), scales_(std::move(jump_scales)) {
    if (!(intensity_ >= 0.0) || !std::isfinite(intensity_)) throw DomainError("LevyMeasureSpec: intensity must be finite and >= 0");
    if (probs_.empty()) throw DomainError("LevyMeasureSpec: at least one mode is required");
    if (probs_.size() != scales_.size()) throw DomainError("LevyMeasureSpec: mode_probs and jump_scales differ in length");
    double total = 0.0;
    for (std::size_t k = 0; k < probs_.size(); ++k) {
        if (!(probs_[k] >= 0.0) || !std::isfinite(probs_[k]))
            throw DomainError("LevyMeasureSpec: mode probability " + std::to_string(k + 1) + " is negative or non-finite");
        if (!(scales_[k] > 0.0) || !std::isfinite(scales_[k]))
            throw DomainError("LevyMeasureSpec: jump scale " + std::to_string(k + 1) + " must be positive and finite");
        total += probs_[k];
    }
    if (std::fabs(total - 1.0) > 1e-12) throw DomainError("LevyMeasureSpec: mode probabilities must sum to 1");
    cumulative_.resize(probs_.size());
    std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
}

std::uint32_t LevyMeasureSpec::mode_for(double u) const {
    const double target = u * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    // Skip zero-probability modes sharing the same cumulative value.
    auto idx = static_cast<std::size_t>(it - cumulative_.begin());
    while (probs_[idx] == 0.0 && idx + 1 < probs_.size()) ++idx;
    return static_cast<std::uint32_t>(idx + 1);
}

double CovarianceDiag::trace() const { return std::accumulate(q.begin(), q.end(), 0.0); }

CovarianceDiag covariance_diag(const LevyMeasureSpec& spec) {
    CovarianceDiag out;
    out.q.resize(spec.modes());
    for (std::size_t k = 0; k < spec.modes(); ++k) {
        const double a = spec.jump_scales()[k];
        out.q[k] = spec.intensity() * spec.mode_probs()[k] * a * a;
    }
    return out;
}

double second_moment_of_measure(const LevyMeasureSpec& spec) { return covariance_diag(spec).trace(); }

PoissonSamplePath sample_path(const LevyMeasureSpec& spec, double horizon, RandomStream& stream) {
    if (!(horizon > 0.0) || !std::isfinite(horizon)) throw DomainError("sample_path: horizon must be positive");
    PoissonSamplePath path;
    path.horizon = horizon;
    const auto count = static_cast<std::size_t>(stream.poisson(spec.intensity() * horizon));
    if (count == 0) return path;

    // Order statistics of `count` uniforms: normalized partial sums of
    // count+1 exponential spacings. Resample on a (probability-zero) tie.
    std::vector<double> times(count);
    for (;;) {
        double acc = 0.0;
        for (auto& t : times) {
            acc += stream.exponential();
            t = acc;
        }
        const double total = acc + stream.exponential();
        bool strictly_increasing = true;
        double prev = 0.0;
        for (auto& t : times) {
            t = horizon * (t / total);
            if (!(t > prev) || t > horizon) strictly_increasing = false;
            prev = t;
        }
        if (strictly_increasing) break;
    }

    path.jumps.reserve(count);
    for (double t : times) {
        const std::uint64_t bits = stream();
        const double u = (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
        const std::uint32_t mode = spec.mode_for(u);
        const double scale = spec.jump_scales()[mode - 1];
        path.jumps.push_back({t, mode, (bits & 1u) ? scale : -scale});
    }
    return path;
}

SpectralVector evaluate_L(const PoissonSamplePath& path, double t, std::size_t dim) {
    if (!(t >= 0.0) || t > path.horizon) throw DomainError("evaluate_L: t outside [0, horizon]");
    SpectralVector out(dim);
    for (const Jump& j : path.jumps) {
        if (j.time > t) break;
        if (j.mode <= dim) out[j.mode - 1] += j.size;
    }
    return out;
}

SpectralVector q_sqrt_apply(const LevyMeasureSpec& spec, const SpectralVector& v) {
    const CovarianceDiag cov = covariance_diag(spec);
    SpectralVector out(v.dim());
    for (std::size_t k = 0; k < std::min(v.dim(), cov.q.size()); ++k) out[k] = std::sqrt(cov.q[k]) * v[k];
    return out;
}

void write_path_rows(std::ostream& out, std::uint64_t sample_id, const PoissonSamplePath& path) {
    CsvWriter csv(out);
    for (const Jump& j : path.jumps) csv.row(sample_id, j.time, j.mode, j.size);
}

namespace {

template <typename T>
T parse_field(const std::string& s, std::size_t line, const char* name) {
    T value{};
    const auto res = std::from_chars(s.data(), s.data() + s.size(), value);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw DomainError("read_path_csv: line " + std::to_string(line) + ": bad " + name + " '" + s + "'");
    return value;
}

}  // namespace

std::vector<std::pair<std::uint64_t, PoissonSamplePath>> read_path_csv(std::istream& in, double horizon) {
    std::string line;
    if (!std::getline(in, line) || line != kPathCsvHeader) throw DomainError("read_path_csv: missing header");
    std::map<std::uint64_t, PoissonSamplePath> paths;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::stringstream ss(line);
        std::string field;
        while (std::getline(ss, field, ',')) fields.push_back(field);
        if (fields.size() != 4) throw DomainError("read_path_csv: line " + std::to_string(line_no) + ": expected 4 fields");
        const auto id = parse_field<std::uint64_t>(fields[0], line_no, "sample_id");
        Jump j{parse_field<double>(fields[1], line_no, "jump_time"), parse_field<std::uint32_t>(fields[2], line_no, "mode"),
               parse_field<double>(fields[3], line_no, "size")};
        auto& path = paths[id];
        path.horizon = horizon;
        if (j.mode == 0 || !(j.time > 0.0) || j.time > horizon ||
            (!path.jumps.empty() && !(j.time > path.jumps.back().time)))
            throw DomainError("read_path_csv: line " + std::to_string(line_no) + ": invalid jump");
        path.jumps.push_back(j);
    }
    return {paths.begin(), paths.end()};
}

}  // namespace spde
