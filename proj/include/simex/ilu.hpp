#pragma once

#include <cstddef>
#include <functional>
#include <queue>
#include <span>
#include <vector>

#include "simex/sparse.hpp"

namespace simex {

/// Incomplete LU factors. L is unit lower triangular (only the strict part is
/// stored); U is upper triangular with its diagonal kept separately.
template <Scalar S>
struct IluFactors {
    struct Row {
        std::vector<std::size_t> cols;
        std::vector<S> vals;
    };

    std::size_t n = 0;
    double droptol = 0.0;
    std::vector<Row> lower;  // strict lower part of L, columns ascending
    std::vector<Row> upper;  // strict upper part of U, columns ascending
    std::vector<S> diag;     // diagonal of U

    /// Nonzero count of L including its unit diagonal.
    std::size_t nnz_l() const {
        std::size_t c = n;
        for (const auto& r : lower) c += r.cols.size();
        return c;
    }
    /// Nonzero count of U including its diagonal.
    std::size_t nnz_u() const {
        std::size_t c = n;
        for (const auto& r : upper) c += r.cols.size();
        return c;
    }
};

/// Row-wise (IKJ) incomplete elimination with a pivot-relative drop rule:
/// a multiplier l_ik is dropped when |l_ik| < droptol, and an entry u_ij of
/// the finished row when |u_ij| < droptol * |u_ii|. With droptol = 0 nothing
/// is dropped and the factorization is the exact LU without pivoting.
template <Scalar S>
IluFactors<S> ilu_factor(const SparseMatrix<S>& h, double droptol) {
    if (droptol < 0.0) throw std::invalid_argument("ilu_factor: droptol must be nonnegative");
    const std::size_t n = h.size();
    IluFactors<S> f;
    f.n = n;
    f.droptol = droptol;
    f.lower.resize(n);
    f.upper.resize(n);
    f.diag.resize(n);

    std::vector<S> w(n, S{});
    std::vector<char> marked(n, 0);
    std::vector<std::size_t> touched;
    std::vector<std::size_t> upper_cols;
    std::priority_queue<std::size_t, std::vector<std::size_t>, std::greater<>> lower_cols;

    auto touch = [&](std::size_t j, std::size_t i) {
        if (marked[j]) return;
        marked[j] = 1;
        w[j] = S{};
        touched.push_back(j);
        if (j < i) lower_cols.push(j);
        else if (j > i) upper_cols.push_back(j);
    };

    for (std::size_t i = 0; i < n; ++i) {
        touched.clear();
        upper_cols.clear();
        touch(i, i);
        auto cols = h.row_cols(i);
        auto vals = h.row_values(i);
        for (std::size_t k = 0; k < cols.size(); ++k) {
            touch(cols[k], i);
            w[cols[k]] += vals[k];
        }

        auto& lrow = f.lower[i];
        while (!lower_cols.empty()) {
            const std::size_t k = lower_cols.top();
            lower_cols.pop();
            const S l = w[k] / f.diag[k];
            if (droptol > 0.0 && std::abs(l) < droptol) continue;
            lrow.cols.push_back(k);
            lrow.vals.push_back(l);
            const auto& urow = f.upper[k];
            for (std::size_t m = 0; m < urow.cols.size(); ++m) {
                const std::size_t j = urow.cols[m];
                touch(j, i);
                w[j] -= l * urow.vals[m];
            }
        }

        const S piv = w[i];
        if (piv == S{}) throw SolverError("ilu_factor: zero pivot at row " + std::to_string(i));
        f.diag[i] = piv;
        std::sort(upper_cols.begin(), upper_cols.end());
        auto& urow = f.upper[i];
        const double keep = droptol * std::abs(piv);
        for (std::size_t j : upper_cols) {
            if (droptol > 0.0 && std::abs(w[j]) < keep) continue;
            urow.cols.push_back(j);
            urow.vals.push_back(w[j]);
        }
        for (std::size_t j : touched) {
            marked[j] = 0;
            w[j] = S{};
        }
    }
    return f;
}

/// Forward then backward substitution with the incomplete factors.
template <Scalar S>
Vector<S> ilu_apply(const IluFactors<S>& f, std::span<const S> r) {
    require_same_size(r.size(), f.n, "ilu_apply");
    Vector<S> x(r.begin(), r.end());
    for (std::size_t i = 0; i < f.n; ++i) {
        const auto& row = f.lower[i];
        S acc = x[i];
        for (std::size_t k = 0; k < row.cols.size(); ++k) acc -= row.vals[k] * x[row.cols[k]];
        x[i] = acc;
    }
    for (std::size_t i = f.n; i-- > 0;) {
        const auto& row = f.upper[i];
        S acc = x[i];
        for (std::size_t k = 0; k < row.cols.size(); ++k) acc -= row.vals[k] * x[row.cols[k]];
        x[i] = acc / f.diag[i];
    }
    return x;
}

}  // namespace simex
