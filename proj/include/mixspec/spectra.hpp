#pragma once

// Band-limited mixed spectra: an optional density on a band plus a finite set of
// spectral lines, and the covariance functions they define.

#include <algorithm>
#include <cmath>
#include <complex>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/quadrature.hpp"

namespace mixspec {

using cdouble = std::complex<double>;

struct Band {
    double center = 0.0;
    double bandwidth = 1.0;

    Band() = default;
    Band(double c, double b) : center(c), bandwidth(b) {
        require(std::isfinite(c), "band center must be finite");
        require(std::isfinite(b) && b > 0.0, "bandwidth must be positive");
    }
    double lo() const noexcept { return center - 0.5 * bandwidth; }
    double hi() const noexcept { return center + 0.5 * bandwidth; }
    bool contains(double theta) const noexcept { return theta >= lo() && theta <= hi(); }
};

/// Frequencies closer than 1e-12 relative are the same spectral line.
inline bool same_frequency(double a, double b) {
    return std::fabs(a - b) <= 1e-12 * std::max(std::fabs(a), std::fabs(b));
}

/// Nonnegative, piecewise continuous power density supported on a band.
class SpectralDensity {
public:
    using Table = std::vector<std::pair<double, double>>;

    SpectralDensity(Band band, std::function<double(double)> eval, std::vector<double> breakpoints,
                    std::vector<double> discontinuities, std::string tag)
        : band_(band), eval_(std::move(eval)), breakpoints_(std::move(breakpoints)),
          discontinuities_(std::move(discontinuities)), tag_(std::move(tag)) {
        require(static_cast<bool>(eval_), "density needs an evaluator");
        breakpoints_.push_back(band_.lo());
        breakpoints_.push_back(band_.hi());
        for (double d : discontinuities_) breakpoints_.push_back(d);
        std::sort(breakpoints_.begin(), breakpoints_.end());
        breakpoints_.erase(std::unique(breakpoints_.begin(), breakpoints_.end()), breakpoints_.end());
    }

    double operator()(double theta) const { return band_.contains(theta) ? eval_(theta) : 0.0; }

    const Band& band() const noexcept { return band_; }
    const std::string& tag() const noexcept { return tag_; }
    /// Kinks and jumps, band edges included; quadrature panels split here.
    const std::vector<double>& breakpoints() const noexcept { return breakpoints_; }
    const std::vector<double>& discontinuities() const noexcept { return discontinuities_; }

    /// Constant level when the density is flat on its band.
    std::optional<double> flat_level() const noexcept { return flat_level_; }
    const Table& table() const noexcept { return table_; }

    /// False when theta sits on a declared jump or the one-sided limits differ.
    bool continuous_at(double theta) const {
        for (double d : discontinuities_)
            if (same_frequency(d, theta) || std::fabs(d - theta) <= 1e-12 * band_.bandwidth) return false;
        const double h = 1e-9 * band_.bandwidth;
        const double left = (*this)(theta - h), right = (*this)(theta + h);
        return std::fabs(left - right) <= 1e-6 * std::max({std::fabs(left), std::fabs(right), 1e-300});
    }

private:
    friend SpectralDensity flat_band_density(Band, double);
    friend SpectralDensity table_density(Band, Table);

    Band band_;
    std::function<double(double)> eval_;
    std::vector<double> breakpoints_;
    std::vector<double> discontinuities_;
    std::string tag_;
    std::optional<double> flat_level_;
    Table table_;
};

/// Constant density total_power / B on the band.
inline SpectralDensity flat_band_density(Band band, double total_power) {
    require(std::isfinite(total_power) && total_power > 0.0, "total power must be positive");
    const double level = total_power / band.bandwidth;
    SpectralDensity d(band, [level](double) { return level; }, {}, {band.lo(), band.hi()}, "flat");
    d.flat_level_ = level;
    return d;
}

/// Piecewise-linear density through (freq, value) nodes, zero outside the node range.
inline SpectralDensity table_density(Band band, SpectralDensity::Table table) {
    require(table.size() >= 2, "tabulated density needs at least two nodes");
    for (std::size_t i = 0; i < table.size(); ++i) {
        require(std::isfinite(table[i].first) && std::isfinite(table[i].second), "table entries must be finite");
        require(table[i].second >= 0.0, "density values must be nonnegative");
        require(band.contains(table[i].first), "table nodes must lie inside the band");
        if (i > 0) require(table[i].first > table[i - 1].first, "table frequencies must increase strictly");
    }
    std::vector<double> nodes;
    for (const auto& [f, v] : table) nodes.push_back(f);
    std::vector<double> jumps;
    if (table.front().second > 0.0) jumps.push_back(table.front().first);
    if (table.back().second > 0.0) jumps.push_back(table.back().first);

    auto shared = std::make_shared<const SpectralDensity::Table>(table);
    auto eval = [shared](double theta) {
        const auto& t = *shared;
        if (theta < t.front().first || theta > t.back().first) return 0.0;
        auto it = std::upper_bound(t.begin(), t.end(), theta,
                                   [](double x, const auto& node) { return x < node.first; });
        if (it == t.end()) return t.back().second;
        const auto& [f1, v1] = *it;
        const auto& [f0, v0] = *(it - 1);
        return v0 + (v1 - v0) * (theta - f0) / (f1 - f0);
    };
    SpectralDensity d(band, eval, nodes, jumps, "table");
    d.table_ = std::move(table);
    return d;
}

struct PointMass {
    double freq = 0.0;
    double power = 1.0;     ///< alpha_k^2
    double kurtosis = 2.0;  ///< E|z|^4 / (E|z|^2)^2
};

/// dmu = Phi(theta) dtheta + sum_k alpha_k^2 delta(theta - theta_k).
class MixedSpectrum {
public:
    MixedSpectrum() = default;
    MixedSpectrum(std::optional<SpectralDensity> density, std::vector<PointMass> masses)
        : density_(std::move(density)), masses_(std::move(masses)) {
        for (std::size_t i = 0; i < masses_.size(); ++i) {
            const auto& m = masses_[i];
            require(std::isfinite(m.freq), "mass frequency must be finite");
            require(std::isfinite(m.power) && m.power > 0.0, "mass power must be positive");
            require(std::isfinite(m.kurtosis) && m.kurtosis >= 1.0, "kurtosis must be at least one");
            if (density_)
                require(density_->band().contains(m.freq), "mass frequencies must lie in the density band");
            for (std::size_t j = 0; j < i; ++j)
                require(!same_frequency(masses_[j].freq, m.freq), "mass frequencies must be distinct");
        }
    }

    static MixedSpectrum density_only(SpectralDensity d) { return MixedSpectrum(std::move(d), {}); }
    static MixedSpectrum lines(std::vector<PointMass> m) { return MixedSpectrum(std::nullopt, std::move(m)); }

    const std::optional<SpectralDensity>& density() const noexcept { return density_; }
    const std::vector<PointMass>& masses() const noexcept { return masses_; }

private:
    std::optional<SpectralDensity> density_;
    std::vector<PointMass> masses_;
};

/// Integral of the density alone.
inline double density_power(const SpectralDensity& d, const QuadratureOptions& opt = {}) {
    if (auto level = d.flat_level()) return *level * d.band().bandwidth;
    return integrate([&](double t) { return d(t); }, d.band().lo(), d.band().hi(), d.breakpoints(), opt).value;
}

inline double total_power(const MixedSpectrum& spec, const QuadratureOptions& opt = {}) {
    double p = spec.density() ? density_power(*spec.density(), opt) : 0.0;
    for (const auto& m : spec.masses()) p += m.power;
    return p;
}

/// r(tau) = integral of exp(i 2 pi theta tau) dmu(theta).
inline cdouble covariance_function(const MixedSpectrum& spec, double tau, const QuadratureOptions& opt = {}) {
    cdouble r{0.0, 0.0};
    if (const auto& d = spec.density()) {
        const Band& band = d->band();
        std::vector<double> breaks = d->breakpoints();
        const double cycles = std::fabs(band.bandwidth * tau);
        const int extra = static_cast<int>(std::min(std::ceil(cycles), 10000.0));
        for (int i = 1; i < extra; ++i) breaks.push_back(band.lo() + band.bandwidth * i / extra);
        // Demodulate by the band center so the integrand varies on the scale of B only.
        auto integrand = [&](double theta) { return turn_phase((theta - band.center) * tau) * (*d)(theta); };
        r = integrate(integrand, band.lo(), band.hi(), breaks, opt).value * turn_phase(band.center * tau);
    }
    for (const auto& m : spec.masses()) r += m.power * turn_phase(m.freq * tau);
    return r;
}

/// Integral of Phi^2 over the band; zero without a density.
inline double density_energy(const MixedSpectrum& spec, const QuadratureOptions& opt = {}) {
    const auto& d = spec.density();
    if (!d) return 0.0;
    if (auto level = d->flat_level()) return *level * *level * d->band().bandwidth;
    return integrate([&](double t) { const double v = (*d)(t); return v * v; }, d->band().lo(), d->band().hi(),
                     d->breakpoints(), opt)
        .value;
}

/// sqrt( int_0^tau_max |r_a - r_s|^2 / int_0^tau_max |r_a|^2 ), trapezoid rule on `grid` points.
inline double relative_covariance_error(const MixedSpectrum& target, const MixedSpectrum& approx, double tau_max,
                                        int grid, const QuadratureOptions& opt = {}) {
    require(std::isfinite(tau_max) && tau_max > 0.0, "tau_max must be positive");
    require(grid >= 2, "need at least two lag points");
    const double h = tau_max / (grid - 1);
    double num = 0.0, den = 0.0;
    for (int j = 0; j < grid; ++j) {
        const double t = h * j;
        const double w = (j == 0 || j == grid - 1) ? 0.5 : 1.0;
        const cdouble ra = covariance_function(target, t, opt);
        const cdouble rs = covariance_function(approx, t, opt);
        num += w * std::norm(ra - rs);
        den += w * std::norm(ra);
    }
    if (!(den > 0.0)) throw InvalidArgument("target covariance is identically zero on the lag range");
    return std::sqrt(num / den);
}

}  // namespace mixspec
