#pragma once

#include <cmath>
#include <cstddef>
#include <span>

#include "simex/ilu.hpp"
#include "simex/sparse.hpp"

namespace simex {

/// Preconditioned conjugate gradient squared. Runs exactly `iterations`
/// steps from `x0` with no tolerance test; the only early exit is a residual
/// that has already reached roundoff level. A vanishing inner product with a
/// residual above roundoff throws SolverError (breakdown).
template <Scalar S>
Vector<S> cgs_solve(const SparseMatrix<S>& a, const IluFactors<S>& precond, std::span<const S> b, std::span<const S> x0,
                    int iterations) {
    if (iterations < 1) throw std::invalid_argument("cgs_solve: iteration count must be >= 1");
    const std::size_t n = a.size();
    require_same_size(b.size(), n, "cgs_solve");
    require_same_size(x0.size(), n, "cgs_solve");

    Vector<S> x(x0.begin(), x0.end());
    Vector<S> r(n);
    {
        auto ax = a * std::span<const S>(x);
        for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - ax[i];
    }
    const double bnorm = norm2<S>(b);
    const double roundoff = 1e-14 * std::max(bnorm, norm2<S>(std::span<const S>(x)));
    if (norm2<S>(std::span<const S>(r)) <= roundoff) return x;

    const Vector<S> r_shadow = r;
    Vector<S> u(n), p(n), q(n), tmp(n);
    S rho_prev{};
    for (int it = 0; it < iterations; ++it) {
        const double rnorm = norm2<S>(std::span<const S>(r));
        if (rnorm <= roundoff) break;
        const S rho = dot<S>(r_shadow, r);
        if (std::abs(rho) <= 1e-30 * norm2<S>(r_shadow) * rnorm) throw SolverError("cgs_solve: breakdown (rho = 0)");
        if (it == 0) {
            u = r;
            p = u;
        } else {
            const S beta = rho / rho_prev;
            for (std::size_t i = 0; i < n; ++i) {
                u[i] = r[i] + beta * q[i];
                p[i] = u[i] + beta * (q[i] + beta * p[i]);
            }
        }
        const auto p_hat = ilu_apply(precond, std::span<const S>(p));
        const auto v_hat = a * std::span<const S>(p_hat);
        const S sigma = dot<S>(r_shadow, v_hat);
        if (sigma == S{}) throw SolverError("cgs_solve: breakdown (sigma = 0)");
        const S alpha = rho / sigma;
        for (std::size_t i = 0; i < n; ++i) {
            q[i] = u[i] - alpha * v_hat[i];
            tmp[i] = u[i] + q[i];
        }
        const auto u_hat = ilu_apply(precond, std::span<const S>(tmp));
        const auto q_hat = a * std::span<const S>(u_hat);
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += alpha * u_hat[i];
            r[i] -= alpha * q_hat[i];
        }
        rho_prev = rho;
    }
    return x;
}

}  // namespace simex
