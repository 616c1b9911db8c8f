#pragma once

// Continuous-time Fejer kernel and the resolution-product correction term.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numbers>

#include "mixspec/errors.hpp"

namespace mixspec {

/// Averaging time of a covariance estimate.
class Duration {
public:
    explicit Duration(double seconds) : value_(seconds) {
        require(std::isfinite(seconds) && seconds > 0.0, "duration must be positive and finite");
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

/// gamma = T * B / n: averaging time times the frequency spacing of a sinusoidal grid.
class ResolutionProduct {
public:
    explicit ResolutionProduct(double gamma) : value_(gamma) {
        require(std::isfinite(gamma) && gamma > 0.0, "resolution product must be positive and finite");
    }
    static ResolutionProduct from_grid(double T, double bandwidth, std::int64_t n) {
        require(n >= 1, "grid size must be at least one");
        return ResolutionProduct(T * bandwidth / static_cast<double>(n));
    }
    double value() const noexcept { return value_; }

private:
    double value_;
};

namespace detail {

// Splits x = k + r with k integer and |r| <= 1/2. Both parts are exact in floating point.
inline double reduce_half_period(double x, bool& odd) {
    const double k = std::nearbyint(x);
    odd = std::fmod(std::fabs(k), 2.0) == 1.0;
    return x - k;
}

}  // namespace detail

/// sin(pi x) / (pi x), exact zeros at nonzero integers, series near the origin.
inline double sinc(double x) {
    const double px = std::numbers::pi * x;
    if (std::fabs(px) < 1e-4) {
        const double p2 = px * px;
        return 1.0 - p2 / 6.0 + p2 * p2 / 120.0;
    }
    bool odd = false;
    const double r = detail::reduce_half_period(x, odd);
    const double s = std::sin(std::numbers::pi * r);
    return (odd ? -s : s) / px;
}

/// exp(i pi x) with the argument reduced to [-1/2, 1/2] before evaluation.
inline std::complex<double> half_turn_phase(double x) {
    bool odd = false;
    const double r = detail::reduce_half_period(x, odd);
    const auto p = std::polar(1.0, std::numbers::pi * r);
    return odd ? -p : p;
}

/// exp(i 2 pi x), reduced modulo one turn.
inline std::complex<double> turn_phase(double x) {
    return std::polar(1.0, 2.0 * std::numbers::pi * (x - std::nearbyint(x)));
}

/// f_T(theta) = 2 (1 - cos(2 pi theta T)) / (theta^2 T (2 pi)^2) = T sinc^2(theta T).
inline double fejer(double theta, Duration T) {
    const double s = sinc(theta * T.value());
    return T.value() * s * s;
}

inline double fejer(double theta, double T) { return fejer(theta, Duration(T)); }

/// rho(gamma) = g (1 - g) / gamma with g the fractional part of gamma.
inline double rho(ResolutionProduct gamma) {
    const double g = gamma.value();
    const double frac = g - std::floor(g);
    return frac * (1.0 - frac) / g;
}

inline double rho(double gamma) { return rho(ResolutionProduct(gamma)); }

/// Number of terms M such that the two-sided tail sum_{|m|>M} f_gamma(m) is below tail_tol.
/// Uses f_gamma(m) <= 4 / (gamma (2 pi m)^2) and sum_{m>M} 1/m^2 < 1/M.
inline std::int64_t kernel_sum_terms(ResolutionProduct gamma, double tail_tol) {
    require(std::isfinite(tail_tol) && tail_tol > 0.0, "tail tolerance must be positive");
    const double c = 4.0 / (gamma.value() * 4.0 * std::numbers::pi * std::numbers::pi);
    const double m = std::ceil(2.0 * c / tail_tol);
    require(m < 4e9, "tail tolerance too small for this resolution product");
    return std::max<std::int64_t>(1, static_cast<std::int64_t>(m));
}

/// sum_{m=-M}^{M} f_gamma(m), truncated so the neglected tail is below tail_tol.
/// Converges to gamma + rho(gamma).
inline double sampled_kernel_sum(ResolutionProduct gamma, double tail_tol) {
    const std::int64_t terms = kernel_sum_terms(gamma, tail_tol);
    const Duration g(gamma.value());
    double tail = 0.0;
    // Smallest terms first.
    for (std::int64_t m = terms; m >= 1; --m) tail += fejer(static_cast<double>(m), g);
    return gamma.value() + 2.0 * tail;
}

inline double sampled_kernel_sum(double gamma, double tail_tol) {
    return sampled_kernel_sum(ResolutionProduct(gamma), tail_tol);
}

}  // namespace mixspec
