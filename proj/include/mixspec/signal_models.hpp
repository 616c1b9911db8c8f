#pragma once

// Sums of stochastic sinusoids: amplitude laws, singular process specs, the uniform-grid
// approximation of a density, and surrogates used to sample processes with a density.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/random.hpp"
#include "mixspec/spectra.hpp"

namespace mixspec {

enum class AmplitudeKind { complex_gaussian, fixed_magnitude, two_point };

/// Law of a unit-power amplitude; scaled by sqrt(power) when drawn.
struct AmplitudeLaw {
    AmplitudeKind kind = AmplitudeKind::complex_gaussian;
    double kurtosis = 2.0;

    static AmplitudeLaw gaussian() { return {AmplitudeKind::complex_gaussian, 2.0}; }
    static AmplitudeLaw fixed_magnitude() { return {AmplitudeKind::fixed_magnitude, 1.0}; }
    /// |z| in {0, m} with P(|z| = m) = 1/kappa and m^2 = kappa.
    static AmplitudeLaw two_point(double kappa) {
        require(std::isfinite(kappa) && kappa >= 1.0, "kurtosis must be at least one");
        return {AmplitudeKind::two_point, kappa};
    }
    /// Fixed magnitude at 1, Gaussian at 2, two-point otherwise.
    static AmplitudeLaw from_kurtosis(double kappa) {
        if (kappa == 1.0) return fixed_magnitude();
        if (kappa == 2.0) return gaussian();
        return two_point(kappa);
    }
};

inline std::string to_string(AmplitudeKind k) {
    switch (k) {
        case AmplitudeKind::complex_gaussian: return "gaussian";
        case AmplitudeKind::fixed_magnitude: return "fixed";
        case AmplitudeKind::two_point: return "two_point";
    }
    return "unknown";
}

struct SingularProcessSpec {
    std::vector<double> freqs;
    std::vector<double> powers;
    std::vector<AmplitudeLaw> laws;  ///< one per component

    SingularProcessSpec() = default;
    SingularProcessSpec(std::vector<double> f, std::vector<double> p, std::vector<AmplitudeLaw> l)
        : freqs(std::move(f)), powers(std::move(p)), laws(std::move(l)) {
        if (laws.size() == 1 && freqs.size() > 1) laws.assign(freqs.size(), laws.front());
        require(freqs.size() == powers.size() && freqs.size() == laws.size(), "component lists must have equal length");
        for (std::size_t k = 0; k < freqs.size(); ++k) {
            require(std::isfinite(freqs[k]), "frequencies must be finite");
            require(std::isfinite(powers[k]) && powers[k] > 0.0, "powers must be positive");
        }
        std::vector<double> sorted = freqs;
        std::sort(sorted.begin(), sorted.end());
        for (std::size_t k = 1; k < sorted.size(); ++k)
            require(!same_frequency(sorted[k - 1], sorted[k]), "frequencies must be distinct");
    }

    std::size_t size() const noexcept { return freqs.size(); }
};

/// One draw of the amplitudes; refers to, but does not own, its spec.
struct Realization {
    std::vector<std::complex<double>> amplitudes;
    const SingularProcessSpec* spec = nullptr;
};

/// Line spectrum with the powers and kurtoses of the spec.
inline MixedSpectrum to_mixed_spectrum(const SingularProcessSpec& spec) {
    std::vector<PointMass> m;
    m.reserve(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) m.push_back({spec.freqs[k], spec.powers[k], spec.laws[k].kurtosis});
    return MixedSpectrum::lines(std::move(m));
}

/// Inverse of to_mixed_spectrum for the line part.
inline SingularProcessSpec lines_spec(const std::vector<PointMass>& masses) {
    std::vector<double> f, p;
    std::vector<AmplitudeLaw> l;
    for (const auto& m : masses) {
        f.push_back(m.freq);
        p.push_back(m.power);
        l.push_back(AmplitudeLaw::from_kurtosis(m.kurtosis));
    }
    return {f, p, l};
}

inline std::complex<double> draw_amplitude(const AmplitudeLaw& law, double power, RandomStream& rng) {
    switch (law.kind) {
        case AmplitudeKind::complex_gaussian: return rng.complex_normal(power);
        case AmplitudeKind::fixed_magnitude: return std::polar(std::sqrt(power), rng.phase());
        case AmplitudeKind::two_point: {
            const double u = rng.uniform();
            const double phi = rng.phase();
            if (u * law.kurtosis >= 1.0) return {0.0, 0.0};
            return std::polar(std::sqrt(law.kurtosis * power), phi);
        }
    }
    return {0.0, 0.0};
}

inline Realization draw_amplitudes(const SingularProcessSpec& spec, RandomStream& rng) {
    Realization r;
    r.spec = &spec;
    r.amplitudes.reserve(spec.size());
    for (std::size_t k = 0; k < spec.size(); ++k) r.amplitudes.push_back(draw_amplitude(spec.laws[k], spec.powers[k], rng));
    return r;
}

/// Grid theta_k = theta_c + B (k - 1 - n/2) / n, k = 1..n, with powers (B/n) Phi(theta_k).
/// Grid points where the density vanishes are dropped.
inline SingularProcessSpec build_approximation(const SpectralDensity& density, std::int64_t n, AmplitudeLaw law) {
    require(n >= 1, "grid size must be at least one");
    const Band& b = density.band();
    const double nd = static_cast<double>(n);
    std::vector<double> f, p;
    for (std::int64_t j = 0; j < n; ++j) {
        const double theta = b.center + b.bandwidth * (static_cast<double>(j) - 0.5 * nd) / nd;
        const double power = b.bandwidth / nd * density(theta);
        if (power > 0.0) {
            f.push_back(theta);
            p.push_back(power);
        }
    }
    if (f.empty()) throw InvalidArgument("density vanishes on every grid point");
    return {f, p, std::vector<AmplitudeLaw>(f.size(), law)};
}

inline SingularProcessSpec shift_grid(const SingularProcessSpec& spec, double delta) {
    require(std::isfinite(delta), "shift must be finite");
    SingularProcessSpec out = spec;
    for (double& f : out.freqs) f += delta;
    return out;
}

/// Number of frequencies the two specs have in common.
inline std::size_t shared_frequency_count(const SingularProcessSpec& a, const SingularProcessSpec& b) {
    std::size_t count = 0;
    for (double fa : a.freqs)
        for (double fb : b.freqs)
            if (same_frequency(fa, fb)) ++count;
    return count;
}

struct SurrogateOptions {
    /// Grid points per 1/T of bandwidth; 1 gives the coarsest grid with gamma <= 1.
    std::int64_t oversample = 2;
    /// Floor on the grid size. At small B T the coarse grid differs visibly from the density
    /// at finite T; the relative excess in variance scales like gamma^2 / (B T).
    std::int64_t min_components = 256;
};

/// n = oversample * ceil(B T), at least min_components.
inline std::int64_t surrogate_size(const SpectralDensity& density, Duration T, const SurrogateOptions& opt = {}) {
    require(opt.oversample >= 1 && opt.min_components >= 1, "surrogate sizes must be positive");
    const double base = std::max(1.0, std::ceil(density.band().bandwidth * T.value() * (1.0 - 1e-12)));
    require(base * static_cast<double>(opt.oversample) < 1e7, "surrogate grid too large");
    return std::max<std::int64_t>(opt.min_components, static_cast<std::int64_t>(base) * opt.oversample);
}

/// Uniform-grid process standing in for a process with density Phi over horizon T.
/// gamma = B T / n <= 1 by construction.
inline SingularProcessSpec density_surrogate(const SpectralDensity& density, Duration T,
                                             AmplitudeLaw law = AmplitudeLaw::gaussian(),
                                             const SurrogateOptions& opt = {}) {
    return build_approximation(density, surrogate_size(density, T, opt), law);
}

/// Concatenates two component lists; frequencies must stay distinct.
inline SingularProcessSpec concatenate(const SingularProcessSpec& a, const SingularProcessSpec& b) {
    auto f = a.freqs, p = a.powers;
    auto l = a.laws;
    f.insert(f.end(), b.freqs.begin(), b.freqs.end());
    p.insert(p.end(), b.powers.begin(), b.powers.end());
    l.insert(l.end(), b.laws.begin(), b.laws.end());
    return {f, p, l};
}

/// Sampling spec for a mixed spectrum: density surrogate plus the lines. When a line falls on a
/// surrogate grid point the grid is moved by half a spacing.
inline SingularProcessSpec mixed_surrogate(const MixedSpectrum& spec, Duration T, const SurrogateOptions& opt = {}) {
    const SingularProcessSpec lines = lines_spec(spec.masses());
    if (!spec.density()) {
        require(!lines.freqs.empty(), "spectrum has neither density nor lines");
        return lines;
    }
    SingularProcessSpec grid = density_surrogate(*spec.density(), T, AmplitudeLaw::gaussian(), opt);
    if (shared_frequency_count(grid, lines) > 0) {
        const double spacing =
            spec.density()->band().bandwidth / static_cast<double>(surrogate_size(*spec.density(), T, opt));
        const auto& d = *spec.density();
        // Re-evaluate powers at the shifted points rather than translating the old ones.
        std::vector<double> f, p;
        for (double theta : grid.freqs) {
            const double t = theta + 0.5 * spacing;
            const double power = spacing * d(t);
            if (power > 0.0) {
                f.push_back(t);
                p.push_back(power);
            }
        }
        grid = SingularProcessSpec(f, p, std::vector<AmplitudeLaw>(f.size(), AmplitudeLaw::gaussian()));
    }
    if (lines.freqs.empty()) return grid;
    return concatenate(grid, lines);
}

}  // namespace mixspec
