#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "simex/sparse.hpp"

namespace simex {

template <Scalar S>
struct TridiagonalMatrix {
    std::vector<S> sub;    // sub[i] multiplies x[i-1]; sub[0] unused
    std::vector<S> main;
    std::vector<S> super;  // super[i] multiplies x[i+1]; super[n-1] unused

    std::size_t size() const { return main.size(); }

    static TridiagonalMatrix from_sparse(const SparseMatrix<S>& a) {
        const std::size_t n = a.size();
        TridiagonalMatrix t{std::vector<S>(n), std::vector<S>(n), std::vector<S>(n)};
        for (std::size_t i = 0; i < n; ++i) {
            if (i > 0) t.sub[i] = a.at(i, i - 1);
            t.main[i] = a.at(i, i);
            if (i + 1 < n) t.super[i] = a.at(i, i + 1);
        }
        return t;
    }
};

/// Thomas algorithm without pivoting.
template <Scalar S>
Vector<S> tridiagonal_solve(const TridiagonalMatrix<S>& t, std::span<const S> rhs) {
    const std::size_t n = t.size();
    require_same_size(rhs.size(), n, "tridiagonal_solve");
    Vector<S> cp(n), x(n);
    if (n == 0) return x;
    S piv = t.main[0];
    if (piv == S{}) throw SolverError("tridiagonal_solve: zero pivot at row 0");
    cp[0] = t.super[0] / piv;
    x[0] = rhs[0] / piv;
    for (std::size_t i = 1; i < n; ++i) {
        piv = t.main[i] - t.sub[i] * cp[i - 1];
        if (piv == S{}) throw SolverError("tridiagonal_solve: zero pivot at row " + std::to_string(i));
        cp[i] = (i + 1 < n) ? t.super[i] / piv : S{};
        x[i] = (rhs[i] - t.sub[i] * x[i - 1]) / piv;
    }
    for (std::size_t i = n - 1; i-- > 0;) x[i] -= cp[i] * x[i + 1];
    return x;
}

namespace detail {

template <Scalar S>
Vector<S> checked_diagonal(const SparseMatrix<S>& h, const char* who) {
    auto d = h.diagonal();
    for (std::size_t i = 0; i < d.size(); ++i)
        if (d[i] == S{}) throw SolverError(std::string(who) + ": zero diagonal entry at row " + std::to_string(i));
    return d;
}

}  // namespace detail

/// One Jacobi update x <- D^{-1}(r - R x) for the splitting H = D + R.
template <Scalar S>
Vector<S> jacobi_sweep(const SparseMatrix<S>& h, std::span<const S> r, std::span<const S> x) {
    const std::size_t n = h.size();
    require_same_size(r.size(), n, "jacobi_sweep");
    require_same_size(x.size(), n, "jacobi_sweep");
    Vector<S> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto cols = h.row_cols(i);
        auto vals = h.row_values(i);
        S acc = r[i];
        S diag{};
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i) diag = vals[k];
            else acc -= vals[k] * x[cols[k]];
        }
        if (diag == S{}) throw SolverError("jacobi_sweep: zero diagonal entry at row " + std::to_string(i));
        out[i] = acc / diag;
    }
    return out;
}

/// One forward Gauss-Seidel sweep; for omega != 1 the whole sweep is relaxed,
/// x <- x + omega (x_gs - x).
template <Scalar S>
Vector<S> gs_sweep(const SparseMatrix<S>& h, std::span<const S> r, std::span<const S> x, double omega = 1.0) {
    const std::size_t n = h.size();
    require_same_size(r.size(), n, "gs_sweep");
    require_same_size(x.size(), n, "gs_sweep");
    Vector<S> gs(x.begin(), x.end());
    for (std::size_t i = 0; i < n; ++i) {
        auto cols = h.row_cols(i);
        auto vals = h.row_values(i);
        S acc = r[i];
        S diag{};
        for (std::size_t k = 0; k < cols.size(); ++k) {
            if (cols[k] == i) diag = vals[k];
            else acc -= vals[k] * gs[cols[k]];
        }
        if (diag == S{}) throw SolverError("gs_sweep: zero diagonal entry at row " + std::to_string(i));
        gs[i] = acc / diag;
    }
    if (omega != 1.0)
        for (std::size_t i = 0; i < n; ++i) gs[i] = x[i] + omega * (gs[i] - x[i]);
    return gs;
}

/// Exchanges the two Cartesian directions of an n-by-n grid in natural
/// ordering (the transpose permutation). Applying it twice is the identity.
class GridPermutation {
public:
    explicit GridPermutation(std::size_t side) : side_(side), map_(side * side) {
        for (std::size_t i2 = 0; i2 < side; ++i2)
            for (std::size_t i1 = 0; i1 < side; ++i1) map_[i2 * side + i1] = i1 * side + i2;
    }

    /// The trivial ordering on n unknowns (side() == 0).
    static GridPermutation identity(std::size_t n) {
        GridPermutation p(0);
        p.map_.resize(n);
        for (std::size_t i = 0; i < n; ++i) p.map_[i] = i;
        return p;
    }

    std::size_t side() const { return side_; }
    std::size_t size() const { return map_.size(); }
    std::span<const std::size_t> map() const { return map_; }

    /// y[perm(i)] = x[i]
    template <Scalar S>
    Vector<S> apply(std::span<const S> x) const {
        require_same_size(x.size(), map_.size(), "GridPermutation::apply");
        Vector<S> y(x.size());
        for (std::size_t i = 0; i < x.size(); ++i) y[map_[i]] = x[i];
        return y;
    }

private:
    std::size_t side_;
    std::vector<std::size_t> map_;
};

/// Precomputed pieces of the alternate-direction tridiagonal iteration:
/// H and its transposed-ordering copy, each with its tridiagonal part T.
template <Scalar S>
struct AtsSplitting {
    SparseMatrix<S> h;
    SparseMatrix<S> h_perm;
    TridiagonalMatrix<S> t;
    TridiagonalMatrix<S> t_perm;
    GridPermutation perm;

    AtsSplitting(const SparseMatrix<S>& h_in, const GridPermutation& p)
        : h(h_in),
          h_perm(h_in.permuted(p.map())),
          t(TridiagonalMatrix<S>::from_sparse(h_in)),
          t_perm(TridiagonalMatrix<S>::from_sparse(h_perm)),
          perm(p) {
        require_same_size(h_in.size(), p.size(), "AtsSplitting");
    }
};

namespace detail {

// Solves T x_new = E x + r with E = T - H, i.e. x_new = x + T^{-1}(r - H x).
template <Scalar S>
Vector<S> tridiagonal_half_step(const SparseMatrix<S>& h, const TridiagonalMatrix<S>& t, std::span<const S> r,
                                std::span<const S> x) {
    auto hx = h * x;
    Vector<S> rhs(x.size());
    // E x + r = T x - H x + r
    for (std::size_t i = 0; i < x.size(); ++i) {
        S tx = t.main[i] * x[i];
        if (i > 0) tx += t.sub[i] * x[i - 1];
        if (i + 1 < x.size()) tx += t.super[i] * x[i + 1];
        rhs[i] = tx - hx[i] + r[i];
    }
    return tridiagonal_solve(t, std::span<const S>(rhs));
}

}  // namespace detail

/// One ATS iteration: a tridiagonal half-step in natural ordering followed by
/// one in the transposed ordering.
template <Scalar S>
Vector<S> ats_iteration(const AtsSplitting<S>& ats, std::span<const S> r, std::span<const S> x) {
    auto half = detail::tridiagonal_half_step(ats.h, ats.t, r, x);
    auto half_p = ats.perm.template apply<S>(half);
    auto r_p = ats.perm.template apply<S>(r);
    auto next_p = detail::tridiagonal_half_step(ats.h_perm, ats.t_perm, std::span<const S>(r_p), std::span<const S>(half_p));
    return ats.perm.template apply<S>(next_p);  // the permutation is an involution
}

template <Scalar S>
Vector<S> ats_iteration(const SparseMatrix<S>& h, const GridPermutation& perm, std::span<const S> r, std::span<const S> x) {
    return ats_iteration(AtsSplitting<S>(h, perm), r, x);
}

}  // namespace simex
