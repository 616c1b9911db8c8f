#pragma once

// Closed-form variance of time-averaged covariance estimates for mixed spectra:
// finite-sample values, their large-T surrogates, and the limits as T grows.

#include <algorithm>
#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/quadrature.hpp"
#include "mixspec/spectra.hpp"

namespace mixspec {

struct VarianceReport {
    double finite_sample = 0.0;
    double asymptotic_surrogate = 0.0;
    double limit = 0.0;
    double T = 0.0;
};

namespace detail {

// Zeros of f_T(center - .) inside (lo, hi). When there are more than `cap`, keep the main lobe
// region dense and fall back to a uniform partition elsewhere.
constexpr int kCheapBreakpointCap = 1 << 22;
constexpr int kCostlyBreakpointCap = 20000;

inline std::vector<double> kernel_breakpoints(double center, double T, double lo, double hi,
                                              int cap = kCostlyBreakpointCap) {
    std::vector<double> pts;
    const double k_lo = std::ceil((lo - center) * T), k_hi = std::floor((hi - center) * T);
    if (k_hi - k_lo + 1 <= cap) {
        for (double k = k_lo; k <= k_hi; k += 1.0) pts.push_back(center + k / T);
        return pts;
    }
    for (int k = -64; k <= 64; ++k) {
        const double p = center + k / T;
        if (p > lo && p < hi) pts.push_back(p);
    }
    for (int i = 1; i < cap; ++i) pts.push_back(lo + (hi - lo) * i / cap);
    return pts;
}

inline QuadratureOptions inner_options(const QuadratureOptions& opt) {
    QuadratureOptions inner = opt;
    inner.abs_tol = opt.abs_tol * 1e-2;
    inner.rel_tol = std::max(opt.rel_tol * 1e-2, 1e-13);
    return inner;
}

// C(u) = int Phi_x(phi + u) Phi_y(phi) dphi.
inline double density_correlation(const SpectralDensity& x, const SpectralDensity& y, double u,
                                  const QuadratureOptions& opt) {
    const double lo = std::max(y.band().lo(), x.band().lo() - u);
    const double hi = std::min(y.band().hi(), x.band().hi() - u);
    if (!(hi > lo)) return 0.0;
    if (x.flat_level() && y.flat_level()) return *x.flat_level() * *y.flat_level() * (hi - lo);
    std::vector<double> breaks = y.breakpoints();
    for (double b : x.breakpoints()) breaks.push_back(b - u);
    return integrate([&](double phi) { return x(phi + u) * y(phi); }, lo, hi, breaks, inner_options(opt)).value;
}

}  // namespace detail

/// int f_T(theta0 - phi) Phi(phi) dphi.
inline double fejer_against_density(double theta0, const SpectralDensity& d, Duration T,
                                    const QuadratureOptions& opt = {}) {
    const Band& b = d.band();
    std::vector<double> breaks =
        detail::kernel_breakpoints(theta0, T.value(), b.lo(), b.hi(), detail::kCheapBreakpointCap);
    breaks.insert(breaks.end(), d.breakpoints().begin(), d.breakpoints().end());
    return integrate([&](double phi) { return fejer(theta0 - phi, T) * d(phi); }, b.lo(), b.hi(), breaks, opt).value;
}

/// Double integral of f_T(theta - phi) Phi_x(theta) Phi_y(phi), evaluated as a single
/// integral of f_T against the correlation of the two densities.
inline double fejer_density_density(const SpectralDensity& x, const SpectralDensity& y, Duration T,
                                    const QuadratureOptions& opt = {}) {
    const double u_lo = x.band().lo() - y.band().hi();
    const double u_hi = x.band().hi() - y.band().lo();
    // Flat pairs have a closed-form correlation, so every kernel zero can be a breakpoint.
    const bool cheap = x.flat_level() && y.flat_level();
    std::vector<double> breaks = detail::kernel_breakpoints(
        0.0, T.value(), u_lo, u_hi, cheap ? detail::kCheapBreakpointCap : detail::kCostlyBreakpointCap);
    for (double bx : x.breakpoints())
        for (double by : y.breakpoints()) breaks.push_back(bx - by);
    auto integrand = [&](double u) { return fejer(u, T) * detail::density_correlation(x, y, u, opt); };
    return integrate(integrand, u_lo, u_hi, breaks, opt).value;
}

namespace detail {

inline double mass_mass_sum(const std::vector<PointMass>& a, const std::vector<PointMass>& b, Duration T) {
    double s = 0.0;
    for (const auto& p : a) {
        double row = 0.0;
        for (const auto& q : b) row += q.power * fejer(p.freq - q.freq, T);
        s += p.power * row;
    }
    return s;
}

}  // namespace detail

/// Var r_x(tau; T) = (1/T) iint f_T(theta - phi) dmu(theta) dmu(phi) + sum_k (kappa_k - 2) alpha_k^4.
/// Independent of the lag.
inline double autocov_variance(const MixedSpectrum& spec, Duration T, const QuadratureOptions& opt = {}) {
    const auto& masses = spec.masses();
    double scaled = 0.0;
    if (const auto& d = spec.density()) {
        scaled += fejer_density_density(*d, *d, T, opt);
        for (const auto& m : masses) scaled += 2.0 * m.power * fejer_against_density(m.freq, *d, T, opt);
    }
    // Symmetric sum: diagonal contributes alpha_k^4 f_T(0) = alpha_k^4 T.
    double off = 0.0, fourth = 0.0;
    for (std::size_t k = 0; k < masses.size(); ++k) {
        double row = 0.0;
        for (std::size_t l = k + 1; l < masses.size(); ++l)
            row += masses[l].power * fejer(masses[k].freq - masses[l].freq, T);
        off += masses[k].power * row;
        const double p2 = masses[k].power * masses[k].power;
        // (1/T) p^2 f_T(0) + (kappa - 2) p^2 = (kappa - 1) p^2
        fourth += (masses[k].kurtosis - 1.0) * p2;
    }
    scaled += 2.0 * off;
    return std::max(0.0, scaled / T.value() + fourth);
}

/// Var r_xy(tau; T) = (1/T) iint f_T(theta - phi) dmu_x(theta) dmu_y(phi).
inline double crosscov_variance(const MixedSpectrum& x, const MixedSpectrum& y, Duration T,
                                const QuadratureOptions& opt = {}) {
    double scaled = 0.0;
    if (x.density() && y.density()) scaled += fejer_density_density(*x.density(), *y.density(), T, opt);
    if (y.density())
        for (const auto& m : x.masses()) scaled += m.power * fejer_against_density(m.freq, *y.density(), T, opt);
    if (x.density())
        for (const auto& m : y.masses()) scaled += m.power * fejer_against_density(m.freq, *x.density(), T, opt);
    scaled += detail::mass_mass_sum(x.masses(), y.masses(), T);
    return std::max(0.0, scaled / T.value());
}

namespace detail {

inline void require_continuous_at_masses(const std::optional<SpectralDensity>& d, const std::vector<PointMass>& m) {
    if (!d) return;
    for (const auto& p : m)
        if (!d->continuous_at(p.freq))
            throw InvalidArgument("density must be continuous at every mass frequency for the large-T expansion");
}

inline double density_product_integral(const SpectralDensity& x, const SpectralDensity& y,
                                       const QuadratureOptions& opt) {
    const double lo = std::max(x.band().lo(), y.band().lo());
    const double hi = std::min(x.band().hi(), y.band().hi());
    if (!(hi > lo)) return 0.0;
    if (x.flat_level() && y.flat_level()) return *x.flat_level() * *y.flat_level() * (hi - lo);
    std::vector<double> breaks = x.breakpoints();
    breaks.insert(breaks.end(), y.breakpoints().begin(), y.breakpoints().end());
    return integrate([&](double t) { return x(t) * y(t); }, lo, hi, breaks, opt).value;
}

}  // namespace detail

/// Psi_T / T with Psi_T = int Phi^2 + 2 sum alpha_k^2 Phi(theta_k) + T sum (kappa_k - 1) alpha_k^4.
inline double autocov_variance_asymptotic(const MixedSpectrum& spec, Duration T, const QuadratureOptions& opt = {}) {
    detail::require_continuous_at_masses(spec.density(), spec.masses());
    double psi = density_energy(spec, opt);
    for (const auto& m : spec.masses()) {
        if (spec.density()) psi += 2.0 * m.power * (*spec.density())(m.freq);
        psi += T.value() * (m.kurtosis - 1.0) * m.power * m.power;
    }
    return psi / T.value();
}

/// sum_k (kappa_k - 1) alpha_k^4.
inline double autocov_variance_limit(const MixedSpectrum& spec) {
    double s = 0.0;
    for (const auto& m : spec.masses()) s += (m.kurtosis - 1.0) * m.power * m.power;
    return s;
}

/// sum over line pairs at a common frequency of alpha_k^2 beta_l^2.
inline double crosscov_variance_limit(const MixedSpectrum& x, const MixedSpectrum& y) {
    double s = 0.0;
    for (const auto& p : x.masses())
        for (const auto& q : y.masses())
            if (same_frequency(p.freq, q.freq)) s += p.power * q.power;
    return s;
}

/// Psi'_T / T for the cross-covariance estimate.
inline double crosscov_variance_asymptotic(const MixedSpectrum& x, const MixedSpectrum& y, Duration T,
                                           const QuadratureOptions& opt = {}) {
    detail::require_continuous_at_masses(y.density(), x.masses());
    detail::require_continuous_at_masses(x.density(), y.masses());
    double psi = 0.0;
    if (x.density() && y.density()) psi += detail::density_product_integral(*x.density(), *y.density(), opt);
    if (y.density())
        for (const auto& m : x.masses()) psi += m.power * (*y.density())(m.freq);
    if (x.density())
        for (const auto& m : y.masses()) psi += m.power * (*x.density())(m.freq);
    psi += T.value() * crosscov_variance_limit(x, y);
    return psi / T.value();
}

inline VarianceReport autocov_report(const MixedSpectrum& spec, Duration T, const QuadratureOptions& opt = {}) {
    return {autocov_variance(spec, T, opt), autocov_variance_asymptotic(spec, T, opt), autocov_variance_limit(spec),
            T.value()};
}

inline VarianceReport crosscov_report(const MixedSpectrum& x, const MixedSpectrum& y, Duration T,
                                      const QuadratureOptions& opt = {}) {
    return {crosscov_variance(x, y, T, opt), crosscov_variance_asymptotic(x, y, T, opt), crosscov_variance_limit(x, y),
            T.value()};
}

/// Large-T, large-n limit of T Var for a sinusoidal grid approximation:
/// ((kappa - 1) gamma + rho(gamma)) int Phi^2.
inline double approximation_variance_asymptote(double kappa, ResolutionProduct gamma, double energy) {
    require(std::isfinite(kappa) && kappa >= 1.0, "kurtosis must be at least one");
    require(std::isfinite(energy) && energy >= 0.0, "density energy must be nonnegative");
    return ((kappa - 1.0) * gamma.value() + rho(gamma)) * energy;
}

/// int ((kappa(theta) - 1) gamma + rho(gamma)) Phi(theta)^2 dtheta. Jumps in kappa
/// should be passed as extra breakpoints.
inline double frequency_varying_kurtosis_asymptote(const std::function<double(double)>& kappa_of_freq,
                                                   ResolutionProduct gamma, const SpectralDensity& density,
                                                   std::span<const double> kappa_breaks = {},
                                                   const QuadratureOptions& opt = {}) {
    std::vector<double> breaks = density.breakpoints();
    breaks.insert(breaks.end(), kappa_breaks.begin(), kappa_breaks.end());
    const double g = gamma.value(), r = rho(gamma);
    auto integrand = [&](double t) {
        const double k = kappa_of_freq(t);
        if (!(k >= 1.0)) throw InvalidArgument("kurtosis must be at least one");
        const double v = density(t);
        return ((k - 1.0) * g + r) * v * v;
    };
    return integrate(integrand, density.band().lo(), density.band().hi(), breaks, opt).value;
}

}  // namespace mixspec
