#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>

#include "simex/vector_ops.hpp"

namespace simex {

struct ReferenceStats {
    std::size_t accepted = 0;
    std::size_t rejected = 0;
    std::size_t evaluations = 0;
};

/// Dormand-Prince 5(4) with PI step-size control (Hairer-Wanner style), used
/// as a high-accuracy reference. Returns the state at t_end.
template <Scalar S>
Vector<S> reference_solve(const std::function<Vector<S>(std::span<const S>, double)>& rhs, std::span<const S> y0,
                          double t0, double t_end, double rtol, double atol, ReferenceStats* stats = nullptr,
                          std::size_t max_steps = 10'000'000) {
    if (!(t_end > t0)) throw std::invalid_argument("reference_solve: t_end must exceed t0");
    if (!(rtol > 0.0) || !(atol > 0.0)) throw std::invalid_argument("reference_solve: tolerances must be positive");

    static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                            a65 = -5103.0 / 18656;
    static constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784,
                            a76 = 11.0 / 84;
    // Fifth-order weights minus embedded fourth-order weights.
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                            e6 = 22.0 / 525, e7 = -1.0 / 40;

    const std::size_t n = y0.size();
    ReferenceStats st;
    auto f = [&](std::span<const S> y, double t) {
        ++st.evaluations;
        auto v = rhs(y, t);
        require_same_size(v.size(), n, "reference_solve");
        return v;
    };

    Vector<S> y(y0.begin(), y0.end()), tmp(n), ynew(n);
    double t = t0;
    Vector<S> k1 = f(y, t);

    auto err_norm = [&](const Vector<S>& a, const Vector<S>& b, const Vector<S>& e) {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = atol + rtol * std::max(abs_value(a[i]), abs_value(b[i]));
            const double q = abs_value(e[i]) / sc;
            acc += q * q;
        }
        return n ? std::sqrt(acc / static_cast<double>(n)) : 0.0;
    };

    // Initial step guess from the derivative scale.
    double h;
    {
        double d0 = 0.0, d1 = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double sc = atol + rtol * abs_value(y[i]);
            d0 = std::max(d0, abs_value(y[i]) / sc);
            d1 = std::max(d1, abs_value(k1[i]) / sc);
        }
        h = (d0 < 1e-5 || d1 < 1e-5) ? 1e-6 : 0.01 * d0 / d1;
        h = std::min(h, t_end - t0);
    }

    constexpr double safety = 0.9, fac_min = 0.2, fac_max = 10.0, beta = 0.04;
    constexpr double alpha = 0.2 - beta * 0.75;
    double err_prev = 1e-4;
    bool rejected_last = false;

    for (std::size_t step = 0; t < t_end; ++step) {
        if (step >= max_steps) throw SolverError("reference_solve: step limit reached");
        if (t + 1.01 * h >= t_end) h = t_end - t;
        if (h <= 1e-14 * std::max(1.0, std::abs(t))) throw SolverError("reference_solve: step size underflow");

        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        const auto k2 = f(tmp, t + c2 * h);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        const auto k3 = f(tmp, t + c3 * h);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        const auto k4 = f(tmp, t + c4 * h);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        const auto k5 = f(tmp, t + c5 * h);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        const auto k6 = f(tmp, t + h);
        for (std::size_t i = 0; i < n; ++i)
            ynew[i] = y[i] + h * (a71 * k1[i] + a73 * k3[i] + a74 * k4[i] + a75 * k5[i] + a76 * k6[i]);
        const auto k7 = f(ynew, t + h);

        Vector<S> e(n);
        for (std::size_t i = 0; i < n; ++i)
            e[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double err = err_norm(y, ynew, e);

        if (err <= 1.0) {
            t = (h == t_end - t) ? t_end : t + h;
            y = ynew;
            k1 = k7;  // first-same-as-last
            ++st.accepted;
            double fac = err == 0.0 ? fac_max : safety * std::pow(err, -alpha) * std::pow(err_prev, beta);
            fac = std::clamp(fac, fac_min, fac_max);
            if (rejected_last) fac = std::min(fac, 1.0);
            err_prev = std::max(err, 1e-4);
            rejected_last = false;
            h *= fac;
        } else {
            ++st.rejected;
            rejected_last = true;
            h *= std::max(fac_min, safety * std::pow(err, -alpha));
        }
    }
    if (stats) *stats = st;
    return y;
}

}  // namespace simex
