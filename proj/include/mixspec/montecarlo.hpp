#pragma once

// Monte Carlo campaigns comparing the empirical variance of covariance estimates with theory.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <functional>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <thread>
#include <vector>

#include "mixspec/cov_estimation.hpp"
#include "mixspec/errors.hpp"
#include "mixspec/random.hpp"
#include "mixspec/signal_models.hpp"
#include "mixspec/spectra.hpp"
#include "mixspec/variance_theory.hpp"

namespace mixspec {

enum class VarianceMethod { plain, jackknife };

struct EmpiricalVariance {
    double variance = 0.0;         ///< mean |v - mean v|^2, unbiased
    double standard_error = 0.0;
    std::complex<double> pseudo_variance{0.0, 0.0};  ///< mean (v - mean v)^2, diagnostic
    std::complex<double> mean{0.0, 0.0};
};

inline EmpiricalVariance empirical_variance(std::span<const std::complex<double>> values,
                                            VarianceMethod method = VarianceMethod::jackknife) {
    const std::size_t n = values.size();
    require(n >= 2, "need at least two values");
    const double N = static_cast<double>(n);
    std::complex<double> mean{0.0, 0.0};
    for (const auto& v : values) mean += v;
    mean /= N;

    std::vector<double> sq(n);
    double D = 0.0;
    std::complex<double> pseudo{0.0, 0.0};
    for (std::size_t i = 0; i < n; ++i) {
        const std::complex<double> d = values[i] - mean;
        sq[i] = std::norm(d);
        D += sq[i];
        pseudo += d * d;
    }
    EmpiricalVariance out;
    out.mean = mean;
    out.variance = D / (N - 1.0);
    out.pseudo_variance = pseudo / (N - 1.0);

    if (method == VarianceMethod::jackknife && n >= 3) {
        // Leave-one-out variance: (D - |d_i|^2 N/(N-1)) / (N-2).
        double loo_mean = 0.0;
        std::vector<double> loo(n);
        for (std::size_t i = 0; i < n; ++i) {
            loo[i] = (D - sq[i] * N / (N - 1.0)) / (N - 2.0);
            loo_mean += loo[i];
        }
        loo_mean /= N;
        double acc = 0.0;
        for (double v : loo) acc += (v - loo_mean) * (v - loo_mean);
        out.standard_error = std::sqrt((N - 1.0) / N * acc);
    } else {
        const double m = D / N;
        double acc = 0.0;
        for (double s : sq) acc += (s - m) * (s - m);
        out.standard_error = std::sqrt(acc / (N - 1.0) / N) * N / (N - 1.0);
    }
    return out;
}

/// Evaluates fn(i) for i in [0, count) on `workers` threads; results are stored by index, so
/// the output does not depend on the worker count. The first exception is rethrown.
template <class T, class Fn>
std::vector<T> parallel_map(std::size_t count, unsigned workers, Fn&& fn) {
    std::vector<T> out(count);
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(count, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < count; ++i) out[i] = fn(i);
        return out;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto body = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                out[i] = fn(i);
            } catch (...) {
                std::lock_guard lock(error_mutex);
                if (!error) error = std::current_exception();
                next = count;
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(body);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
    return out;
}

enum class Scenario { autocov, crosscov, approx_sweep };

struct Campaign {
    Scenario scenario = Scenario::autocov;
    MixedSpectrum x;
    std::optional<MixedSpectrum> y;
    std::vector<double> T_grid;
    double tau = 0.0;
    std::size_t trials = 2000;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
    SurrogateOptions surrogate;
    VarianceMethod method = VarianceMethod::jackknife;
};

struct CampaignRow {
    double T = 0.0;
    double gamma = std::numeric_limits<double>::quiet_NaN();
    double empirical_variance = std::numeric_limits<double>::quiet_NaN();
    double standard_error = std::numeric_limits<double>::quiet_NaN();
    double theory_finite = 0.0;
    double theory_asymptotic = std::numeric_limits<double>::quiet_NaN();
    double theory_limit = 0.0;
};

struct CampaignResult {
    std::vector<CampaignRow> rows;
};

namespace detail {

inline void validate_campaign(const Campaign& c) {
    require(c.trials >= 2, "a campaign needs at least two trials");
    require(!c.T_grid.empty(), "T grid must not be empty");
    for (std::size_t i = 0; i < c.T_grid.size(); ++i) {
        require(std::isfinite(c.T_grid[i]) && c.T_grid[i] > 0.0, "durations must be positive");
        if (i > 0) require(c.T_grid[i] > c.T_grid[i - 1], "T grid must increase");
    }
    require(std::isfinite(c.tau), "lag must be finite");
}

// Gamma of the density surrogate, NaN without a density.
inline double surrogate_gamma(const MixedSpectrum& s, Duration T, const SurrogateOptions& opt) {
    if (!s.density()) return std::numeric_limits<double>::quiet_NaN();
    return s.density()->band().bandwidth * T.value() / static_cast<double>(surrogate_size(*s.density(), T, opt));
}

// Stream purposes; x and y of one trial draw from separate streams.
constexpr std::uint64_t purpose_x(std::size_t t_index) { return 2 * t_index + 1; }
constexpr std::uint64_t purpose_y(std::size_t t_index) { return 2 * t_index + 2; }

inline double asymptotic_or_nan(const std::function<double()>& f) {
    try {
        return f();
    } catch (const InvalidArgument&) {
        return std::numeric_limits<double>::quiet_NaN();
    }
}

}  // namespace detail

inline CampaignResult run_autocov_campaign(const Campaign& c) {
    require(c.scenario == Scenario::autocov, "campaign is not an auto-covariance campaign");
    detail::validate_campaign(c);
    CampaignResult result;
    for (std::size_t ti = 0; ti < c.T_grid.size(); ++ti) {
        const Duration T(c.T_grid[ti]);
        const SingularProcessSpec sampling = mixed_surrogate(c.x, T, c.surrogate);
        const EstimatorConfig cfg{T, c.tau};
        const EstimatorKernel kernel(sampling.freqs, sampling.freqs, cfg);
        const auto values = parallel_map<std::complex<double>>(c.trials, c.workers, [&](std::size_t i) {
            RandomStream rng(c.master_seed, i, detail::purpose_x(ti));
            const Realization r = draw_amplitudes(sampling, rng);
            return kernel.apply(r.amplitudes, r.amplitudes);
        });
        const auto ev = empirical_variance(values, c.method);
        CampaignRow row;
        row.T = T.value();
        row.gamma = detail::surrogate_gamma(c.x, T, c.surrogate);
        row.empirical_variance = ev.variance;
        row.standard_error = ev.standard_error;
        row.theory_finite = autocov_variance(c.x, T);
        row.theory_asymptotic = detail::asymptotic_or_nan([&] { return autocov_variance_asymptotic(c.x, T); });
        row.theory_limit = autocov_variance_limit(c.x);
        result.rows.push_back(row);
    }
    return result;
}

inline CampaignResult run_crosscov_campaign(const Campaign& c) {
    require(c.scenario == Scenario::crosscov, "campaign is not a cross-covariance campaign");
    require(c.y.has_value(), "cross-covariance campaign needs a second spectrum");
    detail::validate_campaign(c);
    const MixedSpectrum& y = *c.y;
    CampaignResult result;
    for (std::size_t ti = 0; ti < c.T_grid.size(); ++ti) {
        const Duration T(c.T_grid[ti]);
        const SingularProcessSpec sx = mixed_surrogate(c.x, T, c.surrogate);
        const SingularProcessSpec sy = mixed_surrogate(y, T, c.surrogate);
        const EstimatorConfig cfg{T, c.tau};
        const EstimatorKernel kernel(sx.freqs, sy.freqs, cfg);
        const auto values = parallel_map<std::complex<double>>(c.trials, c.workers, [&](std::size_t i) {
            RandomStream rx(c.master_seed, i, detail::purpose_x(ti));
            RandomStream ry(c.master_seed, i, detail::purpose_y(ti));
            const Realization a = draw_amplitudes(sx, rx);
            const Realization b = draw_amplitudes(sy, ry);
            return kernel.apply(a.amplitudes, b.amplitudes);
        });
        const auto ev = empirical_variance(values, c.method);
        CampaignRow row;
        row.T = T.value();
        row.gamma = detail::surrogate_gamma(c.x, T, c.surrogate);
        row.empirical_variance = ev.variance;
        row.standard_error = ev.standard_error;
        row.theory_finite = crosscov_variance(c.x, y, T);
        row.theory_asymptotic = detail::asymptotic_or_nan([&] { return crosscov_variance_asymptotic(c.x, y, T); });
        row.theory_limit = crosscov_variance_limit(c.x, y);
        result.rows.push_back(row);
    }
    return result;
}

/// How the grid size and duration follow from gamma in an approximation sweep.
struct ApproxRule {
    enum class Kind { fixed_T, fixed_n } kind = Kind::fixed_T;
    /// fixed_T: nominal duration; n = round(B T / gamma) and T is then adjusted to gamma n / B
    /// so that gamma is exact. fixed_n: the grid size, with T = gamma n / B.
    double value = 1e5;
};

struct ApproxSweep {
    SpectralDensity density;
    AmplitudeLaw law;
    std::vector<double> gamma_grid;
    ApproxRule rule;
    std::size_t trials = 0;  ///< 0 skips the Monte Carlo column
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
    double tau = 0.0;
    VarianceMethod method = VarianceMethod::jackknife;
};

struct ApproxPoint {
    std::int64_t n = 0;
    double T = 0.0;
};

inline ApproxPoint approx_point(double bandwidth, double gamma, const ApproxRule& rule) {
    require(std::isfinite(gamma) && gamma > 0.0, "gamma must be positive");
    require(std::isfinite(rule.value) && rule.value > 0.0, "rule value must be positive");
    ApproxPoint p;
    if (rule.kind == ApproxRule::Kind::fixed_T) {
        p.n = std::max<std::int64_t>(1, std::llround(bandwidth * rule.value / gamma));
    } else {
        require(rule.value >= 1.0 && rule.value == std::floor(rule.value), "grid size must be a positive integer");
        p.n = static_cast<std::int64_t>(rule.value);
    }
    p.T = gamma * static_cast<double>(p.n) / bandwidth;
    return p;
}

/// Per gamma: uniform grid, its finite-T variance, the large-T asymptote, and optionally
/// the Monte Carlo variance of the grid process.
inline CampaignResult run_approx_sweep(const ApproxSweep& s) {
    require(!s.gamma_grid.empty(), "gamma grid must not be empty");
    require(s.trials == 0 || s.trials >= 2, "Monte Carlo needs at least two trials");
    const double B = s.density.band().bandwidth;
    const double energy = density_energy(MixedSpectrum::density_only(s.density));
    CampaignResult result;
    for (std::size_t gi = 0; gi < s.gamma_grid.size(); ++gi) {
        const double gamma = s.gamma_grid[gi];
        const ApproxPoint pt = approx_point(B, gamma, s.rule);
        const Duration T(pt.T);
        const SingularProcessSpec grid = build_approximation(s.density, pt.n, s.law);
        const MixedSpectrum lines = to_mixed_spectrum(grid);
        CampaignRow row;
        row.T = T.value();
        row.gamma = gamma;
        row.theory_finite = autocov_variance(lines, T);
        row.theory_asymptotic =
            approximation_variance_asymptote(s.law.kurtosis, ResolutionProduct(gamma), energy) / T.value();
        row.theory_limit = autocov_variance_limit(lines);
        if (s.trials > 0) {
            const EstimatorKernel kernel(grid.freqs, grid.freqs, EstimatorConfig{T, s.tau});
            const auto values = parallel_map<std::complex<double>>(s.trials, s.workers, [&](std::size_t i) {
                RandomStream rng(s.master_seed, i, gi + 1);
                const Realization r = draw_amplitudes(grid, rng);
                return kernel.apply(r.amplitudes, r.amplitudes);
            });
            const auto ev = empirical_variance(values, s.method);
            row.empirical_variance = ev.variance;
            row.standard_error = ev.standard_error;
        }
        result.rows.push_back(row);
    }
    return result;
}

inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline void write_campaign_csv(std::ostream& os, const CampaignResult& r) {
    os << "T,gamma,empirical_var,std_err,theory_finite,theory_asymptotic,theory_limit\n";
    for (const auto& row : r.rows)
        os << format_double(row.T) << ',' << format_double(row.gamma) << ',' << format_double(row.empirical_variance)
           << ',' << format_double(row.standard_error) << ',' << format_double(row.theory_finite) << ','
           << format_double(row.theory_asymptotic) << ',' << format_double(row.theory_limit) << '\n';
}

}  // namespace mixspec
