#pragma once

#include <array>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "simex/sparse.hpp"

namespace simex {

enum class StencilKind {
    laplacian1d_o2_dirichlet,
    advection1d_o2_centered_dirichlet,
    laplacian2d_o2_5pt_periodic,
    laplacian2d_o2_5pt_dirichlet,
    laplacian2d_o4_cross9_periodic,
    gradient2d_o4_periodic,
};

/// Node index of (i1, i2) in the natural ordering: x1 varies fastest.
inline std::size_t grid_index(std::size_t i1, std::size_t i2, std::size_t n) { return i2 * n + i1; }

namespace detail {

inline std::size_t wrap(long i, long n) { return static_cast<std::size_t>(((i % n) + n) % n); }

inline SparseMatrix<double> periodic_2d(std::size_t n, const std::vector<std::pair<long, double>>& line, int axis,
                                        bool both_axes) {
    std::vector<SparseMatrix<double>::Triplet> t;
    const long ln = static_cast<long>(n);
    for (long i2 = 0; i2 < ln; ++i2)
        for (long i1 = 0; i1 < ln; ++i1) {
            const auto row = grid_index(static_cast<std::size_t>(i1), static_cast<std::size_t>(i2), n);
            for (auto [off, w] : line) {
                if (both_axes || axis == 0) t.push_back({row, grid_index(wrap(i1 + off, ln), static_cast<std::size_t>(i2), n), w});
                if (both_axes || axis == 1) t.push_back({row, grid_index(static_cast<std::size_t>(i1), wrap(i2 + off, ln), n), w});
            }
        }
    return SparseMatrix<double>(n * n, std::move(t));
}

}  // namespace detail

/// Scaled finite-difference differentiation matrix on a uniform grid.
///
/// 1D Dirichlet kinds act on the n-1 interior nodes of an n-interval grid.
/// The 2D Dirichlet Laplacian acts on the (n-1)^2 interior nodes; periodic
/// kinds act on n^2 nodes with wrapped indices. `axis` selects the derivative
/// direction of `gradient2d_o4_periodic` (0 = x1, 1 = x2).
inline SparseMatrix<double> build_stencil(StencilKind kind, std::size_t n, double dx, int axis = 0) {
    if (!(dx > 0.0)) throw std::invalid_argument("build_stencil: spacing must be positive");
    const bool fourth = kind == StencilKind::laplacian2d_o4_cross9_periodic || kind == StencilKind::gradient2d_o4_periodic;
    if (n < (fourth ? 5u : 3u)) throw std::invalid_argument("build_stencil: grid size " + std::to_string(n) + " too small for stencil");
    if (axis != 0 && axis != 1) throw std::invalid_argument("build_stencil: axis must be 0 or 1");

    using T = SparseMatrix<double>::Triplet;
    const double h2 = dx * dx;
    switch (kind) {
        case StencilKind::laplacian1d_o2_dirichlet:
        case StencilKind::advection1d_o2_centered_dirichlet: {
            const std::size_t m = n - 1;
            const bool lap = kind == StencilKind::laplacian1d_o2_dirichlet;
            const double lo = lap ? 1.0 / h2 : -0.5 / dx;
            const double mid = lap ? -2.0 / h2 : 0.0;
            const double hi = lap ? 1.0 / h2 : 0.5 / dx;
            std::vector<T> t;
            for (std::size_t i = 0; i < m; ++i) {
                if (i > 0) t.push_back({i, i - 1, lo});
                if (lap) t.push_back({i, i, mid});
                if (i + 1 < m) t.push_back({i, i + 1, hi});
            }
            return SparseMatrix<double>(m, std::move(t));
        }
        case StencilKind::laplacian2d_o2_5pt_periodic:
            return detail::periodic_2d(n, {{-1, 1.0 / h2}, {0, -2.0 / h2}, {1, 1.0 / h2}}, 0, true);
        case StencilKind::laplacian2d_o2_5pt_dirichlet: {
            const std::size_t m = n - 1;
            std::vector<T> t;
            for (std::size_t i2 = 0; i2 < m; ++i2)
                for (std::size_t i1 = 0; i1 < m; ++i1) {
                    const auto row = grid_index(i1, i2, m);
                    t.push_back({row, row, -4.0 / h2});
                    if (i1 > 0) t.push_back({row, grid_index(i1 - 1, i2, m), 1.0 / h2});
                    if (i1 + 1 < m) t.push_back({row, grid_index(i1 + 1, i2, m), 1.0 / h2});
                    if (i2 > 0) t.push_back({row, grid_index(i1, i2 - 1, m), 1.0 / h2});
                    if (i2 + 1 < m) t.push_back({row, grid_index(i1, i2 + 1, m), 1.0 / h2});
                }
            return SparseMatrix<double>(m * m, std::move(t));
        }
        case StencilKind::laplacian2d_o4_cross9_periodic:
            return detail::periodic_2d(n,
                                       {{-2, -1.0 / (12 * h2)},
                                        {-1, 16.0 / (12 * h2)},
                                        {0, -30.0 / (12 * h2)},
                                        {1, 16.0 / (12 * h2)},
                                        {2, -1.0 / (12 * h2)}},
                                       0, true);
        case StencilKind::gradient2d_o4_periodic:
            return detail::periodic_2d(n,
                                       {{-2, 1.0 / (12 * dx)}, {-1, -8.0 / (12 * dx)}, {1, 8.0 / (12 * dx)}, {2, -1.0 / (12 * dx)}},
                                       axis, false);
    }
    throw std::invalid_argument("build_stencil: unsupported kind");
}

}  // namespace simex
