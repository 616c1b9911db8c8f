#pragma once

// Time-averaged covariance estimates of sums of sinusoids, evaluated in closed form.

#include <complex>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "mixspec/errors.hpp"
#include "mixspec/fejer.hpp"
#include "mixspec/signal_models.hpp"

namespace mixspec {

struct EstimatorConfig {
    Duration T{1.0};
    double tau = 0.0;
    /// Start of the averaging window [t0, t0 + T].
    double t0 = 0.0;
};

/// D_T(nu) = (1/T) int_0^T exp(i 2 pi nu t) dt = exp(i pi nu T) sinc(nu T).
inline std::complex<double> time_average_kernel(double nu, Duration T) {
    const double x = nu * T.value();
    return half_turn_phase(x) * sinc(x);
}

namespace detail {

inline std::complex<double> estimator_weight(double fk, double fl, const EstimatorConfig& cfg) {
    const double d = fk - fl;
    std::complex<double> w = turn_phase(fl * cfg.tau) * time_average_kernel(d, cfg.T);
    if (cfg.t0 != 0.0) w *= turn_phase(d * cfg.t0);
    return w;
}

}  // namespace detail

/// Matrix K with r_xy = sum_{k,l} z_k^x conj(z_l^y) K_{kl}, precomputed once per
/// (frequencies, T, tau) and reused across trials.
class EstimatorKernel {
public:
    EstimatorKernel(std::span<const double> fx, std::span<const double> fy, const EstimatorConfig& cfg)
        : K_(static_cast<Eigen::Index>(fx.size()), static_cast<Eigen::Index>(fy.size())) {
        for (std::size_t k = 0; k < fx.size(); ++k)
            for (std::size_t l = 0; l < fy.size(); ++l)
                K_(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = detail::estimator_weight(fx[k], fy[l], cfg);
    }

    std::complex<double> apply(std::span<const std::complex<double>> zx, std::span<const std::complex<double>> zy) const {
        require(zx.size() == static_cast<std::size_t>(K_.rows()) && zy.size() == static_cast<std::size_t>(K_.cols()),
                "amplitude count does not match the kernel");
        const Eigen::Map<const Eigen::VectorXcd> x(zx.data(), K_.rows());
        const Eigen::Map<const Eigen::VectorXcd> y(zy.data(), K_.cols());
        const Eigen::VectorXcd ky = K_ * y.conjugate();
        return x.transpose() * ky;
    }

    const Eigen::MatrixXcd& matrix() const noexcept { return K_; }

private:
    Eigen::MatrixXcd K_;
};

/// (1/T) int_{t0}^{t0+T} x(t) conj(y(t - tau)) dt for x, y sums of sinusoids.
inline std::complex<double> crosscov_estimate(const Realization& rx, const Realization& ry, const EstimatorConfig& cfg) {
    require(rx.spec && ry.spec, "realization without spec");
    require(rx.amplitudes.size() == rx.spec->size() && ry.amplitudes.size() == ry.spec->size(),
            "realization length does not match its spec");
    std::complex<double> sum{0.0, 0.0};
    for (std::size_t k = 0; k < rx.amplitudes.size(); ++k) {
        std::complex<double> row{0.0, 0.0};
        for (std::size_t l = 0; l < ry.amplitudes.size(); ++l)
            row += std::conj(ry.amplitudes[l]) * detail::estimator_weight(rx.spec->freqs[k], ry.spec->freqs[l], cfg);
        sum += rx.amplitudes[k] * row;
    }
    return sum;
}

inline std::complex<double> autocov_estimate(const Realization& r, const EstimatorConfig& cfg) {
    return crosscov_estimate(r, r, cfg);
}

/// (1/N') sum_m x[m] conj(y[m - tau_index]) over the N' = N - tau_index valid indices.
inline std::complex<double> discretized_estimate(std::span<const std::complex<double>> x,
                                                 std::span<const std::complex<double>> y, double dt, long tau_index) {
    require(x.size() == y.size(), "sequences must have equal length");
    require(std::isfinite(dt) && dt > 0.0, "sample interval must be positive");
    require(tau_index >= 0 && static_cast<std::size_t>(tau_index) < x.size(), "lag index out of range");
    const std::size_t lag = static_cast<std::size_t>(tau_index);
    std::complex<double> s{0.0, 0.0};
    for (std::size_t m = lag; m < x.size(); ++m) s += x[m] * std::conj(y[m - lag]);
    return s / static_cast<double>(x.size() - lag);
}

}  // namespace mixspec
