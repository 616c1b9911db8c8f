#pragma once

// Uniform linear array fed by sums of sinusoids: snapshot synthesis, sample covariance,
// band-integrated Capon spectrum and the DoA mean-squared-error study.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <fftw3.h>

#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/montecarlo.hpp"
#include "mixspec/random.hpp"
#include "mixspec/signal_models.hpp"
#include "mixspec/spectra.hpp"

namespace mixspec {

struct ArrayGeometry {
    int sensors = 10;
    double spacing = 1.0;
    double speed = 1.0;

    ArrayGeometry() = default;
    ArrayGeometry(int m, double d, double c = 1.0) : sensors(m), spacing(d), speed(c) {
        require(m >= 2, "an array needs at least two sensors");
        require(std::isfinite(d) && d > 0.0, "sensor spacing must be positive");
        require(std::isfinite(c) && c > 0.0, "propagation speed must be positive");
    }

    /// Spacing 0.99 c / (2 nu_max): just below half a wavelength at the top of the band.
    static ArrayGeometry half_wavelength(int m, double nu_max, double c = 1.0) {
        require(std::isfinite(nu_max) && nu_max > 0.0, "highest frequency must be positive");
        return ArrayGeometry(m, 0.99 * c / (2.0 * nu_max), c);
    }
};

inline double sin_degrees(double angle_deg) { return std::sin(angle_deg * std::numbers::pi / 180.0); }

/// a_m = exp(-i 2 pi nu m d sin(angle) / c), m = 0..M-1.
inline Eigen::VectorXcd steering_vector(const ArrayGeometry& g, double angle_deg, double freq) {
    Eigen::VectorXcd a(g.sensors);
    const double delay = g.spacing * sin_degrees(angle_deg) / g.speed;
    for (int m = 0; m < g.sensors; ++m) a(m) = turn_phase(-freq * m * delay);
    return a;
}

struct ArraySource {
    double angle_deg = 0.0;
    SingularProcessSpec spec;
};

struct ArrayScenario {
    ArrayGeometry geometry;
    std::vector<ArraySource> sources;
    double snr_db = 10.0;
    std::size_t snapshots = 1000;
    double snapshot_dt = 1.0;
    std::uint64_t master_seed = 1;
    bool allow_aliasing = false;
    /// Overrides the SNR-derived noise variance when set.
    std::optional<double> noise_variance;
};

/// sigma^2 = mean source power / 10^(snr/10).
inline double scenario_noise_variance(const ArrayScenario& s) {
    if (s.noise_variance) {
        require(std::isfinite(*s.noise_variance) && *s.noise_variance >= 0.0, "noise variance must be nonnegative");
        return *s.noise_variance;
    }
    require(!s.sources.empty(), "scenario has no sources");
    double p = 0.0;
    for (const auto& src : s.sources)
        for (double q : src.spec.powers) p += q;
    p /= static_cast<double>(s.sources.size());
    return p / std::pow(10.0, s.snr_db / 10.0);
}

namespace detail {

inline void validate_scenario(const ArrayScenario& s) {
    require(s.snapshots >= 1, "need at least one snapshot");
    require(std::isfinite(s.snapshot_dt) && s.snapshot_dt > 0.0, "snapshot interval must be positive");
    const double d = s.geometry.spacing / s.geometry.speed;
    for (const auto& src : s.sources) {
        require(std::isfinite(src.angle_deg) && src.angle_deg > -90.0 && src.angle_deg < 90.0,
                "source angles must lie in (-90, 90) degrees");
        if (s.allow_aliasing) continue;
        for (double f : src.spec.freqs)
            if (std::fabs(f) * d > 0.5) throw InvalidArgument("sensor spacing aliases the source band");
    }
}

inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

// Frequencies on f0 + j * spacing with integer j, and a period L = 1 / (spacing dt) that is an
// integer, allow synthesis by one inverse FFT per sensor.
struct UniformGrid {
    double f0 = 0.0;
    std::int64_t period = 0;
    std::vector<std::int64_t> index;
};

inline std::optional<UniformGrid> detect_uniform_grid(std::span<const double> freqs, double dt) {
    if (freqs.size() < 2) return std::nullopt;
    std::vector<double> sorted(freqs.begin(), freqs.end());
    std::sort(sorted.begin(), sorted.end());
    double spacing = std::numeric_limits<double>::infinity();
    for (std::size_t k = 1; k < sorted.size(); ++k) spacing = std::min(spacing, sorted[k] - sorted[k - 1]);
    const double Ld = 1.0 / (spacing * dt);
    const double L = std::nearbyint(Ld);
    if (!(L >= 1.0) || std::fabs(Ld - L) > 1e-6 * L || L > (1 << 24)) return std::nullopt;
    UniformGrid g;
    g.f0 = sorted.front();
    g.period = static_cast<std::int64_t>(L);
    const double step = 1.0 / (L * dt);
    for (double f : freqs) {
        const double j = (f - g.f0) / step;
        const double jr = std::nearbyint(j);
        if (std::fabs(j - jr) > 1e-6 || jr < 0 || jr >= L) return std::nullopt;
        g.index.push_back(static_cast<std::int64_t>(jr));
    }
    return g;
}

// Adds sum_k c(m, k) exp(i 2 pi f_k t dt) to row m of X for t = 0..N-1.
inline void add_tones(Eigen::MatrixXcd& X, std::span<const double> freqs, const Eigen::MatrixXcd& coeff, double dt) {
    const Eigen::Index M = X.rows(), N = X.cols();
    if (auto grid = detect_uniform_grid(freqs, dt)) {
        const std::int64_t L = grid->period;
        std::vector<std::complex<double>> buf(static_cast<std::size_t>(L));
        fftw_plan plan;
        {
            std::lock_guard lock(fftw_planner_mutex());
            plan = fftw_plan_dft_1d(static_cast<int>(L), reinterpret_cast<fftw_complex*>(buf.data()),
                                    reinterpret_cast<fftw_complex*>(buf.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
        }
        std::vector<std::complex<double>> carrier(static_cast<std::size_t>(N));
        for (Eigen::Index t = 0; t < N; ++t) carrier[t] = turn_phase(grid->f0 * static_cast<double>(t) * dt);
        for (Eigen::Index m = 0; m < M; ++m) {
            std::fill(buf.begin(), buf.end(), std::complex<double>{0.0, 0.0});
            for (std::size_t k = 0; k < freqs.size(); ++k) buf[grid->index[k]] += coeff(m, static_cast<Eigen::Index>(k));
            fftw_execute_dft(plan, reinterpret_cast<fftw_complex*>(buf.data()), reinterpret_cast<fftw_complex*>(buf.data()));
            for (Eigen::Index t = 0; t < N; ++t) X(m, t) += carrier[t] * buf[static_cast<std::size_t>(t % L)];
        }
        std::lock_guard lock(fftw_planner_mutex());
        fftw_destroy_plan(plan);
        return;
    }
    std::vector<std::complex<double>> tone(static_cast<std::size_t>(N));
    for (std::size_t k = 0; k < freqs.size(); ++k) {
        for (Eigen::Index t = 0; t < N; ++t) tone[t] = turn_phase(freqs[k] * static_cast<double>(t) * dt);
        for (Eigen::Index m = 0; m < M; ++m) {
            const std::complex<double> c = coeff(m, static_cast<Eigen::Index>(k));
            for (Eigen::Index t = 0; t < N; ++t) X(m, t) += c * tone[t];
        }
    }
}

}  // namespace detail

/// Snapshots s[t] = sum_sources sum_k z_k a(angle, theta_k) exp(i 2 pi theta_k t dt) + w[t].
/// `noise` is an M x N matrix of unit-variance circular noise, or empty for a noiseless array.
inline Eigen::MatrixXcd synthesize_snapshots(const ArrayScenario& s, std::span<const Realization> realizations,
                                             const Eigen::MatrixXcd* noise = nullptr) {
    detail::validate_scenario(s);
    require(realizations.size() == s.sources.size(), "one realization per source is required");
    const Eigen::Index M = s.geometry.sensors, N = static_cast<Eigen::Index>(s.snapshots);
    Eigen::MatrixXcd X = Eigen::MatrixXcd::Zero(M, N);
    for (std::size_t i = 0; i < s.sources.size(); ++i) {
        const auto& src = s.sources[i];
        const auto& z = realizations[i].amplitudes;
        require(z.size() == src.spec.size(), "realization does not match its source");
        Eigen::MatrixXcd coeff(M, static_cast<Eigen::Index>(z.size()));
        for (std::size_t k = 0; k < z.size(); ++k)
            coeff.col(static_cast<Eigen::Index>(k)) = z[k] * steering_vector(s.geometry, src.angle_deg, src.spec.freqs[k]);
        detail::add_tones(X, src.spec.freqs, coeff, s.snapshot_dt);
    }
    if (noise) {
        require(noise->rows() == M && noise->cols() >= N, "noise matrix too small");
        X += std::sqrt(scenario_noise_variance(s)) * noise->leftCols(N);
    }
    return X;
}

/// M x N circular Gaussian noise with unit variance per entry, drawn column by column.
inline Eigen::MatrixXcd draw_unit_noise(int sensors, std::size_t snapshots, RandomStream& rng) {
    Eigen::MatrixXcd W(sensors, static_cast<Eigen::Index>(snapshots));
    for (Eigen::Index t = 0; t < W.cols(); ++t)
        for (Eigen::Index m = 0; m < W.rows(); ++m) W(m, t) = rng.complex_normal(1.0);
    return W;
}

/// Draws amplitudes and noise from the scenario seed for one run.
inline Eigen::MatrixXcd synthesize_snapshots(const ArrayScenario& s, std::uint64_t run_index = 0) {
    std::vector<Realization> reals;
    for (std::size_t i = 0; i < s.sources.size(); ++i) {
        RandomStream rng(s.master_seed, run_index, 16 + i);
        reals.push_back(draw_amplitudes(s.sources[i].spec, rng));
    }
    RandomStream noise_rng(s.master_seed, run_index, 1);
    const Eigen::MatrixXcd W = draw_unit_noise(s.geometry.sensors, s.snapshots, noise_rng);
    return synthesize_snapshots(s, reals, &W);
}

/// (1/N) sum_t s[t] s[t]^H.
inline Eigen::MatrixXcd sample_covariance(const Eigen::MatrixXcd& X) {
    require(X.cols() >= 1, "need at least one snapshot");
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(X.rows(), X.rows());
    R.selfadjointView<Eigen::Lower>().rankUpdate(X, 1.0 / static_cast<double>(X.cols()));
    return R.selfadjointView<Eigen::Lower>();
}

/// sum_sources sum_k alpha_k^2 a(theta_k) a(theta_k)^H + sigma^2 I.
inline Eigen::MatrixXcd exact_array_covariance(const ArrayScenario& s) {
    const int M = s.geometry.sensors;
    Eigen::MatrixXcd R = Eigen::MatrixXcd::Zero(M, M);
    for (const auto& src : s.sources)
        for (std::size_t k = 0; k < src.spec.size(); ++k) {
            const Eigen::VectorXcd a = steering_vector(s.geometry, src.angle_deg, src.spec.freqs[k]);
            R.noalias() += src.spec.powers[k] * a * a.adjoint();
        }
    R.diagonal().array() += scenario_noise_variance(s);
    return R;
}

/// int Phi(nu) a(nu) a(nu)^H dnu for a source with a density, entry (m, m') = r(-(m - m') d sin / c).
inline Eigen::MatrixXcd density_array_covariance(const ArrayGeometry& g, double angle_deg, const SpectralDensity& d,
                                                 const QuadratureOptions& opt = {}) {
    const int M = g.sensors;
    const MixedSpectrum spec = MixedSpectrum::density_only(d);
    const double delay = g.spacing * sin_degrees(angle_deg) / g.speed;
    std::vector<std::complex<double>> lag(static_cast<std::size_t>(M));
    for (int k = 0; k < M; ++k) lag[k] = covariance_function(spec, -k * delay, opt);
    Eigen::MatrixXcd R(M, M);
    for (int m = 0; m < M; ++m)
        for (int q = 0; q < M; ++q) R(m, q) = m >= q ? lag[m - q] : std::conj(lag[q - m]);
    return R;
}

struct SpatialSpectrum {
    std::vector<double> angles_deg;
    std::vector<double> values;
};

/// Open grid over (-90, 90) degrees.
inline std::vector<double> default_angle_grid(double step_deg = 0.5) {
    require(step_deg > 0.0 && step_deg < 90.0, "angle step must lie in (0, 90)");
    std::vector<double> g;
    const int n = static_cast<int>(std::floor(90.0 / step_deg - 1e-9));
    for (int i = -n; i <= n; ++i) g.push_back(i * step_deg);
    return g;
}

struct CaponOptions {
    bool diagonal_loading = true;
    double loading = 1e-8;
    double max_condition = 1e12;
};

/// P(angle) = (1/J) sum_j 1 / (a(angle, nu_j)^H R^{-1} a(angle, nu_j)) over J band midpoints.
inline SpatialSpectrum capon_integrated(const Eigen::MatrixXcd& R, const ArrayGeometry& g, const Band& band,
                                        int freq_points, const std::vector<double>& angle_grid,
                                        const CaponOptions& opt = {}) {
    require(R.rows() == g.sensors && R.cols() == g.sensors, "covariance size does not match the array");
    require(freq_points >= 1, "need at least one frequency point");
    require(R.allFinite(), "covariance has non-finite entries");
    const Eigen::Index M = R.rows();
    Eigen::MatrixXcd Rh = 0.5 * (R + R.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> eig(Rh, Eigen::EigenvaluesOnly);
    const double lmax = eig.eigenvalues().maxCoeff(), lmin = eig.eigenvalues().minCoeff();
    if (!(lmax > 0.0)) throw NumericalFailure("covariance is not positive definite", lmin);
    if (!(lmin > 0.0) || lmax / lmin > opt.max_condition) {
        if (!opt.diagonal_loading) throw NumericalFailure("covariance is numerically singular", lmax / std::max(lmin, 0.0));
        Rh.diagonal().array() += opt.loading * Rh.trace().real() / static_cast<double>(M);
    }
    const Eigen::LDLT<Eigen::MatrixXcd> ldlt(Rh);
    if (ldlt.info() != Eigen::Success) throw NumericalFailure("covariance factorization failed", lmin);
    const Eigen::MatrixXcd Rinv = ldlt.solve(Eigen::MatrixXcd::Identity(M, M));

    SpatialSpectrum out;
    out.angles_deg = angle_grid;
    out.values.reserve(angle_grid.size());
    for (double ang : angle_grid) {
        double acc = 0.0;
        for (int j = 0; j < freq_points; ++j) {
            const double nu = band.lo() + band.bandwidth * (j + 0.5) / freq_points;
            const Eigen::VectorXcd a = steering_vector(g, ang, nu);
            const double q = (a.adjoint() * Rinv * a)(0, 0).real();
            if (!(q > 0.0)) throw NumericalFailure("Capon denominator is not positive", q);
            acc += 1.0 / q;
        }
        out.values.push_back(acc / freq_points);
    }
    return out;
}

// ---------------------------------------------------------------------------------------------
// DoA mean-squared-error study

struct DoaConfig {
    Band band{0.25, 1e-3};
    std::vector<double> angles_deg{-5.0, 10.0};
    int sensors = 10;
    double snr_db = 10.0;
    double T = 5e4;  ///< nominal number of snapshots
    double snapshot_dt = 1.0;
    std::size_t runs = 50;
    std::vector<double> gamma_grid{0.5, 1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0, 4.5, 5.0};
    std::vector<AmplitudeLaw> laws{AmplitudeLaw::fixed_magnitude(), AmplitudeLaw::gaussian()};
    std::int64_t reference_oversample = 4;
    int freq_points = 32;
    double angle_step_deg = 0.5;
    std::uint64_t master_seed = 1;
    unsigned workers = 1;
};

struct DoaCurve {
    std::string law;  ///< "reference" for the density surrogate
    double gamma = 0.0;
    std::int64_t n = 0;
    std::size_t snapshots = 0;
    std::vector<double> mse;  ///< per angle, unnormalized
    double peak_normalized = 0.0;
};

struct DoaResult {
    std::vector<double> angles_deg;
    double normalizer = 0.0;  ///< largest per-angle MSE of the reference
    std::vector<DoaCurve> curves;
};

namespace detail {

struct DoaSetup {
    std::string law;
    double gamma;
    std::int64_t n;
    ArrayScenario scenario;
    std::vector<double> reference;
};

inline ArrayScenario doa_scenario(const DoaConfig& c, const SpectralDensity& flat, std::int64_t n, AmplitudeLaw law,
                                  std::size_t snapshots) {
    ArrayScenario s;
    s.geometry = ArrayGeometry::half_wavelength(c.sensors, c.band.hi());
    s.snr_db = c.snr_db;
    s.snapshots = snapshots;
    s.snapshot_dt = c.snapshot_dt;
    s.master_seed = c.master_seed;
    const SingularProcessSpec grid = build_approximation(flat, n, law);
    const double shift = c.band.bandwidth / (2.0 * static_cast<double>(n));
    for (std::size_t i = 0; i < c.angles_deg.size(); ++i)
        s.sources.push_back({c.angles_deg[i], i % 2 == 0 ? grid : shift_grid(grid, shift)});
    return s;
}

}  // namespace detail

/// For the density surrogate and every (gamma, law): per-angle MSE of the band-integrated Capon
/// spectrum over `runs` runs, against the spectrum of that configuration's exact array covariance.
inline DoaResult doa_mse_experiment(const DoaConfig& c) {
    require(c.runs >= 1, "need at least one run");
    require(!c.angles_deg.empty(), "need at least one source");
    require(std::isfinite(c.T) && c.T >= 1.0, "snapshot count must be at least one");
    const SpectralDensity flat = flat_band_density(c.band, 1.0);
    const double B = c.band.bandwidth;
    const std::vector<double> angles = default_angle_grid(c.angle_step_deg);

    std::vector<detail::DoaSetup> setups;
    {
        const std::int64_t n_ref = surrogate_size(flat, Duration(c.T), {c.reference_oversample, 1});
        const auto snaps = static_cast<std::size_t>(std::llround(c.T));
        setups.push_back({"reference", B * c.T * c.snapshot_dt / static_cast<double>(n_ref), n_ref,
                          detail::doa_scenario(c, flat, n_ref, AmplitudeLaw::gaussian(), snaps), {}});
    }
    for (const auto& law : c.laws)
        for (double gamma : c.gamma_grid) {
            const ApproxPoint pt = approx_point(B, gamma, {ApproxRule::Kind::fixed_T, c.T * c.snapshot_dt});
            const auto snaps = static_cast<std::size_t>(std::max(1LL, std::llround(pt.T / c.snapshot_dt)));
            setups.push_back({to_string(law.kind), gamma, pt.n, detail::doa_scenario(c, flat, pt.n, law, snaps), {}});
        }
    std::size_t max_snaps = 0;
    for (auto& s : setups) {
        const Eigen::MatrixXcd R = exact_array_covariance(s.scenario);
        s.reference = capon_integrated(R, s.scenario.geometry, c.band, c.freq_points, angles).values;
        max_snaps = std::max(max_snaps, s.scenario.snapshots);
    }

    // Per run: squared errors of every setup. Noise is shared by all setups of a run.
    using Errors = std::vector<std::vector<double>>;
    const auto per_run = parallel_map<Errors>(c.runs, c.workers, [&](std::size_t run) {
        RandomStream noise_rng(c.master_seed, run, 1);
        const Eigen::MatrixXcd W = draw_unit_noise(c.sensors, max_snaps, noise_rng);
        Errors err;
        for (std::size_t si = 0; si < setups.size(); ++si) {
            const auto& s = setups[si];
            std::vector<Realization> reals;
            for (std::size_t i = 0; i < s.scenario.sources.size(); ++i) {
                RandomStream rng(c.master_seed, run, 16 + 64 * si + i);
                reals.push_back(draw_amplitudes(s.scenario.sources[i].spec, rng));
            }
            const Eigen::MatrixXcd X = synthesize_snapshots(s.scenario, reals, &W);
            const auto P = capon_integrated(sample_covariance(X), s.scenario.geometry, c.band, c.freq_points, angles);
            std::vector<double> e(angles.size());
            for (std::size_t a = 0; a < angles.size(); ++a) {
                const double d = P.values[a] - s.reference[a];
                e[a] = d * d;
            }
            err.push_back(std::move(e));
        }
        return err;
    });

    DoaResult out;
    out.angles_deg = angles;
    for (std::size_t si = 0; si < setups.size(); ++si) {
        DoaCurve curve{setups[si].law, setups[si].gamma, setups[si].n, setups[si].scenario.snapshots,
                       std::vector<double>(angles.size(), 0.0), 0.0};
        for (const auto& run : per_run)
            for (std::size_t a = 0; a < angles.size(); ++a) curve.mse[a] += run[si][a];
        for (double& v : curve.mse) v /= static_cast<double>(c.runs);
        out.curves.push_back(std::move(curve));
    }
    out.normalizer = *std::max_element(out.curves.front().mse.begin(), out.curves.front().mse.end());
    if (!(out.normalizer > 0.0)) throw NumericalFailure("reference MSE vanished", out.normalizer);
    for (auto& curve : out.curves)
        curve.peak_normalized = *std::max_element(curve.mse.begin(), curve.mse.end()) / out.normalizer;
    return out;
}

inline void write_doa_csv(std::ostream& os, const DoaResult& r) {
    os << "gamma,law,angle_deg,mse_normalized\n";
    for (const auto& c : r.curves)
        for (std::size_t a = 0; a < r.angles_deg.size(); ++a)
            os << format_double(c.gamma) << ',' << c.law << ',' << format_double(r.angles_deg[a]) << ','
               << format_double(c.mse[a] / r.normalizer) << '\n';
}

}  // namespace mixspec
