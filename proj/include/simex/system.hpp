#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>

#include <Eigen/Dense>

#include "simex/sparse.hpp"

namespace simex {

template <Scalar S>
using DenseMatrix = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;

/// dy/dt = f_expl(y, t) + f_impl(y, t), with f_impl treated implicitly.
template <Scalar S>
struct DecomposedSystem {
    using Rhs = std::function<Vector<S>(std::span<const S>, double)>;
    using Jacobian = std::function<DenseMatrix<S>(std::span<const S>, double)>;

    std::string name;
    std::size_t dim = 0;
    Rhs f_impl;
    Rhs f_expl;
    /// When set, f_impl(y, t) == implicit_matrix * y for all y and t.
    std::optional<SparseMatrix<S>> implicit_matrix;
    /// Exact Jacobian of f_impl; may be empty.
    Jacobian jacobian_impl;
    /// Analytic state at time t; may be empty.
    std::function<Vector<S>(double)> exact_solution;
    /// Side length when the state is an n-by-n grid in natural ordering, else 0.
    std::size_t grid_side = 0;

    bool has_linear_implicit_part() const { return implicit_matrix.has_value(); }
    bool has_jacobian() const { return static_cast<bool>(jacobian_impl) || implicit_matrix.has_value(); }

    /// Dense Jacobian of f_impl, from the analytic callback or the matrix.
    DenseMatrix<S> jacobian(std::span<const S> y, double t) const {
        if (jacobian_impl) return jacobian_impl(y, t);
        if (!implicit_matrix) throw std::logic_error(name + ": no Jacobian available");
        const auto& m = *implicit_matrix;
        DenseMatrix<S> j = DenseMatrix<S>::Zero(static_cast<Eigen::Index>(dim), static_cast<Eigen::Index>(dim));
        for (std::size_t i = 0; i < dim; ++i) {
            auto cols = m.row_cols(i);
            auto vals = m.row_values(i);
            for (std::size_t k = 0; k < cols.size(); ++k)
                j(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(cols[k])) += vals[k];
        }
        return j;
    }
};

/// System built from a linear implicit operator and an explicit callback.
template <Scalar S>
DecomposedSystem<S> linear_implicit_system(std::string name, SparseMatrix<S> implicit_matrix,
                                           typename DecomposedSystem<S>::Rhs f_expl) {
    DecomposedSystem<S> sys;
    sys.name = std::move(name);
    sys.dim = implicit_matrix.size();
    sys.implicit_matrix = std::move(implicit_matrix);
    auto mat = std::make_shared<SparseMatrix<S>>(*sys.implicit_matrix);
    sys.f_impl = [mat](std::span<const S> y, double) { return (*mat) * y; };
    sys.f_expl = std::move(f_expl);
    return sys;
}

}  // namespace simex
