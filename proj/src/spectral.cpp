#include "spde/spectral.hpp"

#include "spde/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace spde {

SpectralVector::SpectralVector(std::size_t dim) : coeffs_(dim, 0.0) {
    if (dim == 0) throw DomainError("SpectralVector: dim must be >= 1");
}

SpectralVector::SpectralVector(std::vector<double> coeffs) : coeffs_(std::move(coeffs)) {
    if (coeffs_.empty()) throw DomainError("SpectralVector: dim must be >= 1");
    check_finite();
}

SpectralVector::SpectralVector(std::initializer_list<double> coeffs)
    : SpectralVector(std::vector<double>(coeffs)) {}

SpectralVector SpectralVector::unit(std::size_t k, std::size_t dim) {
    if (k == 0 || k > dim) throw DomainError("SpectralVector::unit: mode out of range");
    SpectralVector v(dim);
    v.coeffs_[k - 1] = 1.0;
    return v;
}

double SpectralVector::mode(std::size_t k) const noexcept {
    return (k >= 1 && k <= coeffs_.size()) ? coeffs_[k - 1] : 0.0;
}

SpectralVector SpectralVector::resized(std::size_t dim) const {
    SpectralVector out(dim);
    std::copy_n(coeffs_.begin(), std::min(dim, coeffs_.size()), out.coeffs_.begin());
    return out;
}

void SpectralVector::check_finite() const {
    for (std::size_t i = 0; i < coeffs_.size(); ++i) {
        if (!std::isfinite(coeffs_[i]))
            throw DomainError("SpectralVector: non-finite coefficient at mode " + std::to_string(i + 1));
    }
}

SpectralVector& SpectralVector::operator+=(const SpectralVector& other) {
    if (other.dim() > dim()) coeffs_.resize(other.dim(), 0.0);
    for (std::size_t i = 0; i < other.dim(); ++i) coeffs_[i] += other.coeffs_[i];
    return *this;
}

SpectralVector& SpectralVector::operator-=(const SpectralVector& other) {
    if (other.dim() > dim()) coeffs_.resize(other.dim(), 0.0);
    for (std::size_t i = 0; i < other.dim(); ++i) coeffs_[i] -= other.coeffs_[i];
    return *this;
}

SpectralVector& SpectralVector::operator*=(double s) {
    for (double& c : coeffs_) c *= s;
    return *this;
}

SpectralVector operator+(SpectralVector a, const SpectralVector& b) { return a += b; }
SpectralVector operator-(SpectralVector a, const SpectralVector& b) { return a -= b; }
SpectralVector operator*(double s, SpectralVector v) { return v *= s; }

double eigenvalue(std::size_t k) {
    if (k == 0) throw DomainError("eigenvalue: k must be >= 1");
    const double w = static_cast<double>(k) * std::numbers::pi;
    return w * w;
}

EigenSystem::EigenSystem(std::size_t dim) : lambdas_(dim) {
    if (dim == 0) throw DomainError("EigenSystem: dim must be >= 1");
    for (std::size_t k = 1; k <= dim; ++k) lambdas_[k - 1] = eigenvalue(k);
}

double evaluate_basis(std::size_t k, double x) {
    if (k == 0) throw DomainError("evaluate_basis: k must be >= 1");
    if (!(x >= 0.0 && x <= 1.0)) throw DomainError("evaluate_basis: x outside [0,1]");
    // sin(kπx) vanishes exactly at the endpoints; avoid the 1e-16 residue of sin(kπ).
    if (x == 0.0 || x == 1.0) return 0.0;
    return std::numbers::sqrt2 * std::sin(static_cast<double>(k) * std::numbers::pi * x);
}

SpectralVector apply_semigroup(double t, const SpectralVector& v) {
    if (!(t >= 0.0)) throw DomainError("apply_semigroup: t must be >= 0");
    SpectralVector out = v;
    if (t == 0.0) return out;
    for (std::size_t k = 1; k <= v.dim(); ++k) out[k - 1] *= std::exp(-eigenvalue(k) * t);
    return out;
}

double hs_fractional_norm(double s, const SpectralVector& v) {
    if (!(s >= 0.0)) throw DomainError("hs_fractional_norm: s must be >= 0");
    if (s == 0.0) return std::sqrt(h_inner(v, v));
    double acc = 0.0;
    for (std::size_t k = 1; k <= v.dim(); ++k) acc += std::pow(eigenvalue(k), s) * v[k - 1] * v[k - 1];
    return std::sqrt(acc);
}

double h_inner(const SpectralVector& v, const SpectralVector& w) {
    const std::size_t n = std::min(v.dim(), w.dim());
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) acc += v[i] * w[i];
    return acc;
}

double h_norm(const SpectralVector& v) { return std::sqrt(h_inner(v, v)); }

SpectralVector apply_fractional_power(double s, const SpectralVector& v) {
    if (!(s >= 0.0)) throw DomainError("apply_fractional_power: s must be >= 0");
    SpectralVector out = v;
    for (std::size_t k = 1; k <= v.dim(); ++k) out[k - 1] *= std::pow(eigenvalue(k), 0.5 * s);
    return out;
}

}  // namespace spde
