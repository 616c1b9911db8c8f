#pragma once

// Globally adaptive Gauss-Kronrod integration over a set of breakpoints.
// Node and weight tables come from Boost.Math; the panel bookkeeping lives here so
// that both an absolute and a relative target can be enforced and failures surfaced.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <queue>
#include <span>
#include <vector>

#include <boost/math/quadrature/gauss.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "mixspec/errors.hpp"

namespace mixspec {

struct QuadratureOptions {
    double abs_tol = 1e-10;
    double rel_tol = 1e-10;
    /// Bisections allowed beyond the initial panels.
    int max_subdivisions = 20000;
};

template <class Value>
struct QuadratureResult {
    Value value{};
    double error = 0.0;
    int evaluations = 0;
};

namespace detail {

template <class Value>
struct Panel {
    double a, b;
    Value value;
    double error;
    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class Value, class F>
Panel<Value> gauss_kronrod_31(F& f, double a, double b) {
    using kronrod = boost::math::quadrature::gauss_kronrod<double, 31>;
    using gauss = boost::math::quadrature::gauss<double, 15>;
    const auto& x = kronrod::abscissa();
    const auto& wk = kronrod::weights();
    const auto& wg = gauss::weights();

    const double mid = 0.5 * (a + b);
    const double half = 0.5 * (b - a);
    const Value f0 = f(mid);
    Value k = f0 * wk[0];
    Value g = f0 * wg[0];
    double l1 = std::abs(f0) * wk[0];
    for (std::size_t i = 1; i < x.size(); ++i) {
        const Value fp = f(mid + half * x[i]);
        const Value fm = f(mid - half * x[i]);
        k += (fp + fm) * wk[i];
        l1 += (std::abs(fp) + std::abs(fm)) * wk[i];
        if (i % 2 == 0) g += (fp + fm) * wg[i / 2];
    }
    const double roundoff = 50.0 * std::numeric_limits<double>::epsilon() * l1 * half;
    return {a, b, k * half, std::max(std::abs((k - g) * half), roundoff)};
}

}  // namespace detail

/// Integrates f over [a, b], starting from panels split at every breakpoint inside (a, b).
/// Throws NumericalFailure when the error estimate stays above max(abs_tol, rel_tol |I|).
template <class F>
auto integrate(F&& f, double a, double b, std::span<const double> breakpoints = {},
               const QuadratureOptions& opt = {}) -> QuadratureResult<decltype(f(0.0))> {
    using Value = decltype(f(0.0));
    require(std::isfinite(a) && std::isfinite(b), "integration limits must be finite");
    QuadratureResult<Value> out;
    if (a == b) return out;
    if (b < a) {
        auto r = integrate(f, b, a, breakpoints, opt);
        r.value = -r.value;
        return r;
    }

    std::vector<double> edges{a};
    for (double p : breakpoints)
        if (p > a && p < b) edges.push_back(p);
    edges.push_back(b);
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());

    std::priority_queue<detail::Panel<Value>> panels;
    Value total{};
    double error = 0.0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        auto p = detail::gauss_kronrod_31<Value>(f, edges[i], edges[i + 1]);
        total += p.value;
        error += p.error;
        panels.push(p);
    }
    out.evaluations = static_cast<int>(31 * panels.size());

    auto target = [&] { return std::max(opt.abs_tol, opt.rel_tol * std::abs(total)); };
    int splits = 0;
    while (error > target() && splits < opt.max_subdivisions) {
        const auto worst = panels.top();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b)) break;
        panels.pop();
        const auto left = detail::gauss_kronrod_31<Value>(f, worst.a, mid);
        const auto right = detail::gauss_kronrod_31<Value>(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        panels.push(left);
        panels.push(right);
        out.evaluations += 62;
        ++splits;
    }

    // Re-sum to shed the drift of the incremental updates.
    total = Value{};
    error = 0.0;
    while (!panels.empty()) {
        total += panels.top().value;
        error += panels.top().error;
        panels.pop();
    }
    out.value = total;
    out.error = error;
    if (error > target()) throw NumericalFailure("adaptive quadrature did not converge", error);
    return out;
}

}  // namespace mixspec
