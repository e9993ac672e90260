#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <span>
#include <stdexcept>
#include <vector>

#include "simex/stencils.hpp"
#include "simex/system.hpp"

namespace simex {

/// Closed-form exact solutions and the partial derivatives used to build
/// forcing terms.
namespace exact {

/// u(x, t) = sin(x) sin(3x - 6 pi t)
struct Wave1d {
    static double theta(double x, double t) { return 3.0 * x - 6.0 * std::numbers::pi * t; }
    static double u(double x, double t) { return std::sin(x) * std::sin(theta(x, t)); }
    static double u_t(double x, double t) { return -6.0 * std::numbers::pi * std::sin(x) * std::cos(theta(x, t)); }
    static double u_x(double x, double t) {
        const double th = theta(x, t);
        return std::cos(x) * std::sin(th) + 3.0 * std::sin(x) * std::cos(th);
    }
    static double u_xx(double x, double t) {
        const double th = theta(x, t);
        return -10.0 * std::sin(x) * std::sin(th) + 6.0 * std::cos(x) * std::cos(th);
    }
    /// Forcing of u_t = u_xx + phi.
    static double heat_forcing(double x, double t) { return u_t(x, t) - u_xx(x, t); }
    /// Forcing of u_t + u u_x = u_xx + (1.1 - u^2) u + psi.
    static double nonlinear_forcing(double x, double t) {
        const double v = u(x, t);
        return u_t(x, t) + v * u_x(x, t) - u_xx(x, t) - (1.1 - v * v) * v;
    }
};

/// u(x1, x2, t) = exp(-sin(t - 4 x1 - 2 x2))
struct Wave2d {
    static constexpr double v1 = 0.5;
    static constexpr double v2 = 0.86602540378443864676;  // sqrt(3)/2
    static constexpr double diffusion = 0.3;

    static double phase(double x1, double x2, double t) { return t - 4.0 * x1 - 2.0 * x2; }
    static double u(double x1, double x2, double t) { return std::exp(-std::sin(phase(x1, x2, t))); }
    static double u_t(double x1, double x2, double t) { return -std::cos(phase(x1, x2, t)) * u(x1, x2, t); }
    static double u_x1(double x1, double x2, double t) { return 4.0 * std::cos(phase(x1, x2, t)) * u(x1, x2, t); }
    static double u_x2(double x1, double x2, double t) { return 2.0 * std::cos(phase(x1, x2, t)) * u(x1, x2, t); }
    static double laplacian(double x1, double x2, double t) {
        const double p = phase(x1, x2, t);
        const double c = std::cos(p);
        return 20.0 * (std::sin(p) + c * c) * u(x1, x2, t);
    }
    /// Forcing of u_t + v . grad u = 0.3 lap u + psi.
    static double forcing(double x1, double x2, double t) {
        return u_t(x1, x2, t) + v1 * u_x1(x1, x2, t) + v2 * u_x2(x1, x2, t) - diffusion * laplacian(x1, x2, t);
    }
};

}  // namespace exact

/// Interior nodes x_j = j pi / N, j = 1..N-1.
inline std::vector<double> interior_nodes(std::size_t n) {
    std::vector<double> x(n - 1);
    for (std::size_t j = 1; j < n; ++j) x[j - 1] = static_cast<double>(j) * std::numbers::pi / static_cast<double>(n);
    return x;
}

/// Periodic nodes x_i = i pi / N, i = 0..N-1.
inline std::vector<double> periodic_nodes(std::size_t n) {
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = static_cast<double>(i) * std::numbers::pi / static_cast<double>(n);
    return x;
}

/// Forced heat equation u_t = u_xx + phi on (0, pi) with zero Dirichlet
/// data: f = L y implicit, f_hat = phi(t) explicit. Dimension N - 1.
inline DecomposedSystem<double> forced_heat_1d(std::size_t n) {
    if (n < 3) throw std::invalid_argument("forced_heat_1d: N must be >= 3");
    const double dx = std::numbers::pi / static_cast<double>(n);
    auto x = std::make_shared<std::vector<double>>(interior_nodes(n));
    auto sys = linear_implicit_system<double>(
        "forced_heat_1d", build_stencil(StencilKind::laplacian1d_o2_dirichlet, n, dx),
        [x](std::span<const double>, double t) {
            Vector<double> phi(x->size());
            for (std::size_t j = 0; j < x->size(); ++j) phi[j] = exact::Wave1d::heat_forcing((*x)[j], t);
            return phi;
        });
    sys.exact_solution = [x](double t) {
        Vector<double> u(x->size());
        for (std::size_t j = 0; j < x->size(); ++j) u[j] = exact::Wave1d::u((*x)[j], t);
        return u;
    };
    return sys;
}

/// Nonlinear advection-reaction-diffusion u_t + u u_x = u_xx + (1.1 - u^2) u + psi
/// with everything except the forcing treated implicitly. Dimension N - 1.
inline DecomposedSystem<double> adv_reac_diff_1d(std::size_t n) {
    if (n < 3) throw std::invalid_argument("adv_reac_diff_1d: N must be >= 3");
    const double dx = std::numbers::pi / static_cast<double>(n);
    auto x = std::make_shared<std::vector<double>>(interior_nodes(n));
    auto lap = std::make_shared<SparseMatrix<double>>(build_stencil(StencilKind::laplacian1d_o2_dirichlet, n, dx));
    auto adv = std::make_shared<SparseMatrix<double>>(build_stencil(StencilKind::advection1d_o2_centered_dirichlet, n, dx));

    DecomposedSystem<double> sys;
    sys.name = "adv_reac_diff_1d";
    sys.dim = n - 1;
    sys.f_impl = [lap, adv](std::span<const double> y, double) {
        auto ly = (*lap) * y;
        const auto dy = (*adv) * y;
        for (std::size_t j = 0; j < y.size(); ++j) ly[j] += -y[j] * dy[j] + (1.1 - y[j] * y[j]) * y[j];
        return ly;
    };
    sys.f_expl = [x](std::span<const double>, double t) {
        Vector<double> psi(x->size());
        for (std::size_t j = 0; j < x->size(); ++j) psi[j] = exact::Wave1d::nonlinear_forcing((*x)[j], t);
        return psi;
    };
    sys.jacobian_impl = [lap, adv](std::span<const double> y, double) {
        const auto m = static_cast<Eigen::Index>(y.size());
        DenseMatrix<double> j = DenseMatrix<double>::Zero(m, m);
        const auto dy = (*adv) * y;
        for (std::size_t i = 0; i < y.size(); ++i) {
            const auto ii = static_cast<Eigen::Index>(i);
            auto lc = lap->row_cols(i);
            auto lv = lap->row_values(i);
            for (std::size_t k = 0; k < lc.size(); ++k) j(ii, static_cast<Eigen::Index>(lc[k])) += lv[k];
            auto ac = adv->row_cols(i);
            auto av = adv->row_values(i);
            for (std::size_t k = 0; k < ac.size(); ++k) j(ii, static_cast<Eigen::Index>(ac[k])) -= y[i] * av[k];
            j(ii, ii) += -dy[i] + 1.1 - 3.0 * y[i] * y[i];
        }
        return j;
    };
    sys.exact_solution = [x](double t) {
        Vector<double> u(x->size());
        for (std::size_t j = 0; j < x->size(); ++j) u[j] = exact::Wave1d::u((*x)[j], t);
        return u;
    };
    return sys;
}

/// A_N = -(dx^2 / 8) * (5-point Laplacian) on the (N-1)^2 interior nodes of
/// [0, pi]^2 with zero Dirichlet closure, dx = pi / N. Eigenvalues lie in (0, 1).
inline SparseMatrix<double> model_matrix(std::size_t n) {
    if (n < 4) throw std::invalid_argument("model_matrix: N must be >= 4");
    const double dx = std::numbers::pi / static_cast<double>(n);
    return build_stencil(StencilKind::laplacian2d_o2_5pt_dirichlet, n, dx).scaled(-dx * dx / 8.0);
}

/// z corresponding to an eigenvalue lambda of the unscaled Laplacian: z = 8 lambda / dx^2.
inline double z_from_lambda(double lambda, std::size_t n) {
    const double dx = std::numbers::pi / static_cast<double>(n);
    return 8.0 * lambda / (dx * dx);
}

/// dy/dt = z A_N y, all implicit, over the complex field.
inline DecomposedSystem<complex> model_2d(complex z, std::size_t n) {
    const auto a = model_matrix(n);
    auto sys = linear_implicit_system<complex>("model_2d", a.cast<complex>().scaled(z),
                                               [dim = a.size()](std::span<const complex>, double) {
                                                   return Vector<complex>(dim, complex{});
                                               });
    sys.grid_side = n - 1;
    return sys;
}

/// Periodic advection-diffusion u_t + v . grad u = 0.3 lap u + psi on [0, pi]^2
/// with fourth-order stencils: diffusion implicit, advection and forcing
/// explicit. Dimension N^2.
inline DecomposedSystem<double> adv_diff_2d(std::size_t n) {
    if (n < 8) throw std::invalid_argument("adv_diff_2d: N must be >= 8");
    const double dx = std::numbers::pi / static_cast<double>(n);
    auto nodes = std::make_shared<std::vector<double>>(periodic_nodes(n));
    const auto dx1 = build_stencil(StencilKind::gradient2d_o4_periodic, n, dx, 0);
    const auto dx2 = build_stencil(StencilKind::gradient2d_o4_periodic, n, dx, 1);
    auto adv = std::make_shared<SparseMatrix<double>>(dx1.scaled(-exact::Wave2d::v1) + dx2.scaled(-exact::Wave2d::v2));
    auto forcing = [nodes, n](double t) {
        Vector<double> psi(n * n);
        for (std::size_t i2 = 0; i2 < n; ++i2)
            for (std::size_t i1 = 0; i1 < n; ++i1) psi[grid_index(i1, i2, n)] = exact::Wave2d::forcing((*nodes)[i1], (*nodes)[i2], t);
        return psi;
    };
    auto sys = linear_implicit_system<double>(
        "adv_diff_2d",
        build_stencil(StencilKind::laplacian2d_o4_cross9_periodic, n, dx).scaled(exact::Wave2d::diffusion),
        [adv, forcing](std::span<const double> y, double t) {
            auto out = (*adv) * y;
            const auto psi = forcing(t);
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += psi[i];
            return out;
        });
    sys.exact_solution = [nodes, n](double t) {
        Vector<double> u(n * n);
        for (std::size_t i2 = 0; i2 < n; ++i2)
            for (std::size_t i1 = 0; i1 < n; ++i1) u[grid_index(i1, i2, n)] = exact::Wave2d::u((*nodes)[i1], (*nodes)[i2], t);
        return u;
    };
    sys.grid_side = n;
    return sys;
}

/// sqrt(dx^2 * sum e_i^2) on a 2D grid with spacing pi / N.
inline double discrete_l2_error(std::span<const double> a, std::span<const double> b, std::size_t n) {
    require_same_size(a.size(), b.size(), "discrete_l2_error");
    const double dx = std::numbers::pi / static_cast<double>(n);
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
    return std::sqrt(dx * dx * acc);
}

}  // namespace simex
