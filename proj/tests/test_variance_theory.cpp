#include <cmath>
#include <complex>
#include <functional>
#include <numbers>
#include <vector>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <gtest/gtest.h>

#include "mixspec/signal_models.hpp"
#include "mixspec/variance_theory.hpp"

using namespace mixspec;
using std::numbers::pi;
using cfun = std::function<std::complex<double>(double)>;

namespace {

double sinc_direct(double x) { return x == 0.0 ? 1.0 : std::sin(pi * x) / (pi * x); }

// Time-domain oracle: (1/T^2) int_{-T}^{T} (T - |u|) r_x(u) conj(r_y(u)) du, integrated panel by
// panel with a fixed Gauss-Kronrod rule. Independent of the frequency-domain code under test.
double time_domain_variance(const cfun& rx, const cfun& ry, double T, int panels) {
    using gk = boost::math::quadrature::gauss_kronrod<double, 61>;
    auto f = [&](double u) { return (T - u) * std::real(rx(u) * std::conj(ry(u))); };
    double s = 0.0;
    for (int p = 0; p < panels; ++p) s += gk::integrate(f, T * p / panels, T * (p + 1) / panels, 0);
    return 2.0 * s / (T * T);
}

cfun flat_cov(double center, double B, double power) {
    return [=](double u) { return power * sinc_direct(B * u) * std::polar(1.0, 2 * pi * center * u); };
}

cfun triangle_cov(double center, double B) {
    return [=](double u) {
        const double s = sinc_direct(B * u / 2);
        return s * s * std::polar(1.0, 2 * pi * center * u);
    };
}

cfun line_cov(double f, double p) {
    return [=](double u) { return p * std::polar(1.0, 2 * pi * f * u); };
}

cfun sum(cfun a, cfun b) {
    return [=](double u) { return a(u) + b(u); };
}

SpectralDensity triangle(Band b) {
    return table_density(b, {{b.lo(), 0.0}, {b.center, 2.0 / b.bandwidth}, {b.hi(), 0.0}});
}

}  // namespace

TEST(AutocovVariance, SingleMass) {
    for (double T : {0.5, 10.0, 1e4}) {
        EXPECT_NEAR(autocov_variance(MixedSpectrum::lines({{0.2, 1.0, 2.0}}), Duration(T)), 1.0, 1e-14);
        EXPECT_EQ(autocov_variance(MixedSpectrum::lines({{0.2, 1.0, 1.0}}), Duration(T)), 0.0);
    }
}

TEST(AutocovVariance, IntegerGammaGridIsExactlyZero) {
    const auto d = flat_band_density(Band(1.0, 1e-2), 1.0);
    for (int gamma : {1, 2, 3}) {
        const int n = 100;
        const auto lines = to_mixed_spectrum(build_approximation(d, n, AmplitudeLaw::fixed_magnitude()));
        double p2 = 0.0;
        for (const auto& m : lines.masses()) p2 += m.power * m.power;
        const double T = gamma * n / 1e-2;
        EXPECT_LT(autocov_variance(lines, Duration(T)), 1e-12 * p2) << gamma;
    }
}

TEST(AutocovVariance, FlatDensityMatchesTimeDomainOracle) {
    const double c = 1.0, B = 1e-2;
    const auto spec = MixedSpectrum::density_only(flat_band_density(Band(c, B), 1.0));
    for (double T : {1e2, 1e3, 1e4}) {
        const double oracle = time_domain_variance(flat_cov(c, B, 1.0), flat_cov(c, B, 1.0), T, 400);
        EXPECT_NEAR(autocov_variance(spec, Duration(T)), oracle, 1e-8 * oracle) << T;
    }
}

TEST(AutocovVariance, TriangleWithMassMatchesTimeDomainOracle) {
    const double c = 0.5, B = 2e-2, T = 700.0;
    const double f0 = c + 0.0031, p0 = 0.7, kappa = 1.4;
    const MixedSpectrum spec(triangle(Band(c, B)), {{f0, p0, kappa}});
    const cfun r = sum(triangle_cov(c, B), line_cov(f0, p0));
    const double oracle = time_domain_variance(r, r, T, 600) + (kappa - 2.0) * p0 * p0;
    EXPECT_NEAR(autocov_variance(spec, Duration(T)), oracle, 1e-8);
}

TEST(CrosscovVariance, SharedAndNullSeparatedMasses) {
    const double T = 50.0;
    const auto x = MixedSpectrum::lines({{0.3, 1.0, 1.0}});
    EXPECT_NEAR(crosscov_variance(x, MixedSpectrum::lines({{0.3, 1.0, 2.0}}), Duration(T)), 1.0, 1e-14);
    for (int m : {1, 2, -5})
        EXPECT_NEAR(crosscov_variance(x, MixedSpectrum::lines({{0.3 + m / T, 1.0, 2.0}}), Duration(T)), 0.0, 1e-20);
}

TEST(CrosscovVariance, MixedSpectraMatchTimeDomainOracle) {
    const double T = 2000.0;
    const MixedSpectrum x(flat_band_density(Band(1.0, 1e-2), 0.5), {{1.0021, 1.0, 2.0}});
    const MixedSpectrum y(triangle(Band(1.001, 8e-3)), {{0.9987, 0.3, 1.0}, {1.0021 + 0.37 / T, 2.0, 1.0}});
    const cfun rx = sum(flat_cov(1.0, 1e-2, 0.5), line_cov(1.0021, 1.0));
    const cfun ry = sum(triangle_cov(1.001, 8e-3), sum(line_cov(0.9987, 0.3), line_cov(1.0021 + 0.37 / T, 2.0)));
    const double oracle = time_domain_variance(rx, ry, T, 800);
    EXPECT_NEAR(crosscov_variance(x, y, Duration(T)), oracle, 1e-8 * oracle);
    EXPECT_NEAR(crosscov_variance(y, x, Duration(T)), crosscov_variance(x, y, Duration(T)), 1e-12 * oracle);
}

TEST(Asymptotic, AutocovExamples) {
    const Band b(1.0, 1e-2);
    const auto flat = flat_band_density(b, 1.0);
    EXPECT_NEAR(autocov_variance_asymptotic(MixedSpectrum::density_only(flat), Duration(1e3)), 0.1, 1e-12);
    for (double T : {1e2, 1e4, 1e5}) {
        const MixedSpectrum g(flat, {{1.0012345, 1.0, 2.0}});
        const MixedSpectrum f(flat, {{1.0012345, 1.0, 1.0}});
        EXPECT_NEAR(autocov_variance_asymptotic(g, Duration(T)), (300.0 + T) / T, 1e-12);
        EXPECT_NEAR(autocov_variance_asymptotic(f, Duration(T)), 300.0 / T, 1e-12);
    }
    const MixedSpectrum g(flat, {{1.0012345, 1.0, 2.0}});
    const MixedSpectrum f(flat, {{1.0012345, 1.0, 1.0}});
    EXPECT_NEAR(autocov_variance(g, Duration(1e5)), autocov_variance_asymptotic(g, Duration(1e5)),
                0.01 * autocov_variance_asymptotic(g, Duration(1e5)));
    EXPECT_NEAR(autocov_variance(f, Duration(1e5)), autocov_variance_asymptotic(f, Duration(1e5)),
                0.01 * autocov_variance_asymptotic(f, Duration(1e5)));
}

TEST(Asymptotic, RejectsMassOnDensityJump) {
    const auto flat = flat_band_density(Band(0.0, 1.0), 1.0);
    const MixedSpectrum s(flat, {{0.5, 1.0, 2.0}});
    EXPECT_THROW(autocov_variance_asymptotic(s, Duration(10.0)), InvalidArgument);
    EXPECT_NO_THROW(autocov_variance(s, Duration(10.0)));
}

TEST(Asymptotic, DensityOnlyGapShrinksWithT) {
    const auto spec = MixedSpectrum::density_only(triangle(Band(1.0, 1e-2)));
    double previous = INFINITY;
    for (double T : {1e2, 1e3, 1e4, 1e5}) {
        const double gap = std::fabs(T * autocov_variance(spec, Duration(T)) - T * autocov_variance_asymptotic(spec, Duration(T)));
        EXPECT_LT(gap, previous) << T;
        previous = gap;
    }
}

TEST(Limits, AutocovAndDichotomy) {
    EXPECT_EQ(autocov_variance_limit(MixedSpectrum::lines({{0.1, 1.0, 2.0}})), 1.0);
    EXPECT_EQ(autocov_variance_limit(MixedSpectrum::lines({{0.1, 1.0, 1.0}})), 0.0);
    EXPECT_EQ(autocov_variance_limit(MixedSpectrum::lines({{0.1, 1.0, 1.0}, {0.2, 2.0, 3.0}})), 8.0);
    EXPECT_GT(autocov_variance_limit(MixedSpectrum::lines({{0.1, 1.0, 1.0}, {0.2, 2.0, 1.0001}})), 0.0);
}

TEST(Limits, Crosscov) {
    const auto x = MixedSpectrum::lines({{0.1, 1.0, 2.0}, {0.2, 3.0, 2.0}});
    EXPECT_EQ(crosscov_variance_limit(x, MixedSpectrum::lines({{0.15, 1.0, 2.0}})), 0.0);
    EXPECT_EQ(crosscov_variance_limit(MixedSpectrum::lines({{0.1, 1.0, 2.0}}), MixedSpectrum::lines({{0.1, 1.0, 1.0}})), 1.0);
    // Frequencies equal up to rounding count as shared.
    EXPECT_EQ(crosscov_variance_limit(x, MixedSpectrum::lines({{0.1 + 1e-17, 2.0, 1.0}, {0.2 * (1 + 1e-13), 1.0, 1.0}})),
              2.0 + 3.0);
}

TEST(Asymptotic, CrosscovSharedMassScenario) {
    const Band b(1.0, 1e-2);
    const MixedSpectrum x(flat_band_density(b, 0.01), {{1.0021, 1.0, 2.0}});
    const auto y = MixedSpectrum::lines({{1.0021, 1.0, 2.0}, {0.9981, 1.0, 2.0}});
    const double T = 1e4;
    // Both y masses sit on the unit-level x density; one is shared.
    const double expected = (2.0 + T) / T;
    EXPECT_NEAR(crosscov_variance_asymptotic(x, y, Duration(T)), expected, 1e-12);
    EXPECT_EQ(crosscov_variance_limit(x, y), 1.0);
    EXPECT_NEAR(crosscov_variance_asymptotic(y, x, Duration(T)), expected, 1e-12);
}

TEST(ApproximationAsymptote, Examples) {
    const ResolutionProduct g07(0.7), g3(3.0), g15(1.5);
    EXPECT_NEAR(approximation_variance_asymptote(2.0, g07, 123.0), 123.0, 1e-12);
    EXPECT_EQ(approximation_variance_asymptote(1.0, g3, 100.0), 0.0);
    EXPECT_NEAR(approximation_variance_asymptote(1.5, g15, 100.0), (0.5 * 1.5 + 1.0 / 6.0) * 100.0, 1e-12);
    EXPECT_THROW(approximation_variance_asymptote(0.5, g3, 1.0), InvalidArgument);
}

TEST(ApproximationAsymptote, MatchesFiniteTGridVariance) {
    const Band b(1.0, 1e-2);
    const auto d = flat_band_density(b, 1.0);
    const int n = 2000;
    const double gamma = 1.5, T = gamma * n / b.bandwidth;
    const auto lines = to_mixed_spectrum(build_approximation(d, n, AmplitudeLaw::two_point(1.5)));
    const double target = approximation_variance_asymptote(1.5, ResolutionProduct(gamma), 100.0);
    EXPECT_NEAR(T * autocov_variance(lines, Duration(T)), target, 0.03 * target);
}

TEST(FrequencyVaryingKurtosis, ReducesAndAverages) {
    const Band b(1.0, 1e-2);
    const auto d = flat_band_density(b, 1.0);
    const ResolutionProduct g(1.3);
    EXPECT_NEAR(frequency_varying_kurtosis_asymptote([](double) { return 2.0; }, g, d),
                approximation_variance_asymptote(2.0, g, 100.0), 1e-9);
    EXPECT_NEAR(frequency_varying_kurtosis_asymptote([](double) { return 1.0; }, g, d), rho(g) * 100.0, 1e-9);
    const double mid = b.center;
    const std::vector<double> jump{mid};
    const double step = frequency_varying_kurtosis_asymptote([&](double t) { return t < mid ? 1.0 : 2.0; }, g, d, jump);
    const double mean = 0.5 * (approximation_variance_asymptote(1.0, g, 100.0) + approximation_variance_asymptote(2.0, g, 100.0));
    EXPECT_NEAR(step, mean, 1e-9);
}

TEST(GridConvergence, GridVarianceApproachesDensityVariance) {
    const Band b(1.0, 1e-2);
    const auto d = triangle(b);
    const double T = 300.0;
    const double target = autocov_variance(MixedSpectrum::density_only(d), Duration(T));
    double previous = INFINITY;
    for (int n : {4, 16, 64, 256, 1024}) {
        const auto gauss = to_mixed_spectrum(build_approximation(d, n, AmplitudeLaw::gaussian()));
        const double diff = std::fabs(autocov_variance(gauss, Duration(T)) - target);
        EXPECT_LT(diff, previous) << n;
        previous = diff;
        // Fourth-moment term of the fixed-magnitude grid is bounded by (B^2 / n) max Phi^2.
        const auto fixed = to_mixed_spectrum(build_approximation(d, n, AmplitudeLaw::fixed_magnitude()));
        double a = 0.0;
        for (const auto& m : fixed.masses()) a += m.power * m.power;
        EXPECT_LE(a, b.bandwidth * b.bandwidth / n * std::pow(2.0 / b.bandwidth, 2) * (1 + 1e-12));
    }
    EXPECT_LT(previous, 1e-3 * target);
}

TEST(Report, FieldsAreConsistent) {
    const MixedSpectrum s(flat_band_density(Band(1.0, 1e-2), 1.0), {{1.0012345, 1.0, 2.0}});
    const auto r = autocov_report(s, Duration(1e3));
    EXPECT_EQ(r.T, 1e3);
    EXPECT_GE(r.finite_sample, 0.0);
    EXPECT_GE(r.asymptotic_surrogate, 0.0);
    EXPECT_EQ(r.limit, 1.0);
    EXPECT_LE(r.limit, r.finite_sample + 1e-9);
}
