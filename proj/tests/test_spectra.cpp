#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <gtest/gtest.h>

#include "mixspec/signal_models.hpp"
#include "mixspec/spectra.hpp"

using namespace mixspec;
using std::numbers::pi;

namespace {

std::complex<double> expi(double x) { return std::polar(1.0, 2 * pi * x); }

double sinc_direct(double x) { return x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x); }

SpectralDensity triangle(Band b) {
    return table_density(b, {{b.lo(), 0.0}, {b.center, 2.0 / b.bandwidth}, {b.hi(), 0.0}});
}

MixedSpectrum random_spectrum(std::mt19937_64& gen) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const Band b(u(gen) * 2 - 1, 0.01 + u(gen));
    std::optional<SpectralDensity> d;
    if (u(gen) < 0.5) d = flat_band_density(b, 0.1 + u(gen));
    else d = triangle(b);
    std::vector<PointMass> m;
    const int count = static_cast<int>(u(gen) * 4);
    for (int i = 0; i < count; ++i) m.push_back({b.lo() + b.bandwidth * (0.1 + 0.8 * u(gen)), 0.1 + u(gen), 1 + u(gen)});
    return MixedSpectrum(d, m);
}

}  // namespace

TEST(Band, Validation) {
    EXPECT_THROW(Band(0.0, 0.0), InvalidArgument);
    EXPECT_THROW(Band(NAN, 1.0), InvalidArgument);
    const Band b(1.0, 0.2);
    EXPECT_DOUBLE_EQ(b.lo(), 0.9);
    EXPECT_DOUBLE_EQ(b.hi(), 1.1);
}

TEST(FlatDensity, LevelPowerAndEnergy) {
    const auto d = flat_band_density(Band(1.0, 1e-2), 1.0);
    EXPECT_DOUBLE_EQ(d(1.0), 100.0);
    EXPECT_EQ(d(1.2), 0.0);
    EXPECT_DOUBLE_EQ(density_power(d), 1.0);
    EXPECT_NEAR(density_energy(MixedSpectrum::density_only(d)), 100.0, 1e-10);
    EXPECT_THROW(flat_band_density(Band(1.0, 1e-2), 0.0), InvalidArgument);
}

TEST(TableDensity, TriangleEnergyMatchesAnalytic) {
    const Band b(0.3, 0.05);
    const auto d = triangle(b);
    EXPECT_NEAR(density_power(d), 1.0, 1e-12);
    EXPECT_NEAR(density_energy(MixedSpectrum::density_only(d)), 4.0 / (3.0 * b.bandwidth), 1e-9);
}

TEST(TableDensity, Validation) {
    const Band b(0.0, 1.0);
    EXPECT_THROW(table_density(b, {{0.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(table_density(b, {{0.1, 1.0}, {0.0, 1.0}}), InvalidArgument);
    EXPECT_THROW(table_density(b, {{0.0, -1.0}, {0.1, 1.0}}), InvalidArgument);
    EXPECT_THROW(table_density(b, {{0.0, 1.0}, {0.9, 1.0}}), InvalidArgument);
}

TEST(MixedSpectrum, Validation) {
    const auto d = flat_band_density(Band(0.0, 1.0), 1.0);
    EXPECT_THROW(MixedSpectrum(d, {{0.7, 1.0, 2.0}}), InvalidArgument);
    EXPECT_THROW(MixedSpectrum(d, {{0.1, 1.0, 2.0}, {0.1, 2.0, 2.0}}), InvalidArgument);
    EXPECT_THROW(MixedSpectrum(d, {{0.1, 0.0, 2.0}}), InvalidArgument);
    EXPECT_THROW(MixedSpectrum(d, {{0.1, 1.0, 0.5}}), InvalidArgument);
    EXPECT_NO_THROW(MixedSpectrum(d, {{0.1, 1.0, 1.0}, {0.2, 1.0, 3.0}}));
}

TEST(Continuity, JumpsAreDetected) {
    const auto d = flat_band_density(Band(0.0, 1.0), 1.0);
    EXPECT_TRUE(d.continuous_at(0.1));
    EXPECT_FALSE(d.continuous_at(0.5));
    EXPECT_FALSE(d.continuous_at(-0.5));
    const auto t = triangle(Band(0.0, 1.0));
    EXPECT_TRUE(t.continuous_at(0.0));
    EXPECT_TRUE(t.continuous_at(0.25));
}

TEST(Covariance, FlatBandClosedForm) {
    const Band b(1.0, 1e-2);
    const auto spec = MixedSpectrum::density_only(flat_band_density(b, 1.0));
    for (double tau : {0.0, 0.37, 1.0, 10.0, 99.5, 1000.0, -42.0}) {
        const auto exact = expi(b.center * tau) * sinc_direct(b.bandwidth * tau);
        EXPECT_NEAR(std::abs(covariance_function(spec, tau) - exact), 0.0, 1e-9) << tau;
    }
}

TEST(Covariance, SingleMassAndZeroLag) {
    const auto spec = MixedSpectrum::lines({{0.3, 2.0, 2.0}});
    EXPECT_NEAR(std::abs(covariance_function(spec, 1.0) - 2.0 * expi(0.3)), 0.0, 1e-15);
    std::mt19937_64 gen(21);
    for (int i = 0; i < 20; ++i) {
        const auto s = random_spectrum(gen);
        const auto r0 = covariance_function(s, 0.0);
        EXPECT_NEAR(r0.real(), total_power(s), 1e-9);
        EXPECT_EQ(r0.imag(), 0.0);
    }
}

TEST(Covariance, HermitianAndBoundedByZeroLag) {
    std::mt19937_64 gen(22);
    std::uniform_real_distribution<double> lag(-50.0, 50.0);
    for (int i = 0; i < 100; ++i) {
        const auto s = random_spectrum(gen);
        const double tau = lag(gen);
        const auto a = covariance_function(s, tau), b = covariance_function(s, -tau);
        EXPECT_NEAR(std::abs(a - std::conj(b)), 0.0, 1e-9 * (1 + std::abs(a)));
        EXPECT_LE(std::abs(a), covariance_function(s, 0.0).real() * (1 + 1e-9));
    }
}

TEST(Covariance, GridSpectrumIsRiemannSum) {
    const Band b(1.0, 1e-2);
    const auto d = triangle(b);
    const auto grid = build_approximation(d, 64, AmplitudeLaw::gaussian());
    const auto spec = to_mixed_spectrum(grid);
    for (double tau : {0.0, 3.3, 70.0}) {
        std::complex<double> sum{0.0, 0.0};
        for (int j = 0; j < 64; ++j) {
            const double theta = b.center + b.bandwidth * (j - 32) / 64.0;
            sum += b.bandwidth / 64.0 * d(theta) * expi(theta * tau);
        }
        EXPECT_NEAR(std::abs(covariance_function(spec, tau) - sum), 0.0, 1e-13);
    }
}

TEST(RelativeError, IdenticalIsZeroAndMatchesClosedFormOracle) {
    const Band b(1.0, 1e-2);
    const auto flat = MixedSpectrum::density_only(flat_band_density(b, 1.0));
    EXPECT_EQ(relative_covariance_error(flat, flat, 100.0, 201), 0.0);

    // Oracle: closed forms for both covariances, same trapezoid rule.
    for (int n : {10, 100}) {
        const auto grid = to_mixed_spectrum(build_approximation(*flat.density(), n, AmplitudeLaw::fixed_magnitude()));
        const int G = 2001;
        double num = 0, den = 0;
        for (int j = 0; j < G; ++j) {
            const double t = 100.0 * j / (G - 1), w = (j == 0 || j == G - 1) ? 0.5 : 1.0;
            const auto ra = expi(b.center * t) * sinc_direct(b.bandwidth * t);
            std::complex<double> rs{0, 0};
            for (int k = 0; k < n; ++k) rs += expi((b.center + b.bandwidth * (k - n / 2.0) / n) * t) / double(n);
            num += w * std::norm(ra - rs);
            den += w * std::norm(ra);
        }
        EXPECT_NEAR(relative_covariance_error(flat, grid, 100.0, G), std::sqrt(num / den), 1e-8) << n;
    }
    EXPECT_THROW(relative_covariance_error(flat, flat, 0.0, 10), InvalidArgument);
    EXPECT_THROW(relative_covariance_error(flat, flat, 1.0, 1), InvalidArgument);
}

TEST(RelativeError, DecreasesWithGridRefinement) {
    const auto target = MixedSpectrum::density_only(triangle(Band(1.0, 1e-2)));
    const auto e100 = relative_covariance_error(
        target, to_mixed_spectrum(build_approximation(*target.density(), 100, AmplitudeLaw::gaussian())), 50.0, 501);
    const auto e1000 = relative_covariance_error(
        target, to_mixed_spectrum(build_approximation(*target.density(), 1000, AmplitudeLaw::gaussian())), 50.0, 501);
    EXPECT_LT(e1000, e100);
}
