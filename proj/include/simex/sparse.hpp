#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "simex/vector_ops.hpp"

namespace simex {

/// Row-compressed sparse matrix. Column indices are sorted within each row.
template <Scalar S>
class SparseMatrix {
public:
    struct Triplet {
        std::size_t row;
        std::size_t col;
        S value;
    };

    SparseMatrix() = default;

    /// Assembles from triplets; duplicates are summed, explicit zeros kept.
    SparseMatrix(std::size_t n, std::vector<Triplet> triplets) : n_(n), row_ptr_(n + 1, 0) {
        std::sort(triplets.begin(), triplets.end(), [](const Triplet& a, const Triplet& b) {
            return std::tie(a.row, a.col) < std::tie(b.row, b.col);
        });
        std::size_t last_row = 0;
        for (const auto& t : triplets) {
            if (t.row >= n || t.col >= n) throw std::out_of_range("SparseMatrix: triplet index out of range");
            if (!cols_.empty() && last_row == t.row && cols_.back() == t.col) {
                values_.back() += t.value;
                continue;
            }
            cols_.push_back(t.col);
            values_.push_back(t.value);
            last_row = t.row;
            ++row_ptr_[t.row + 1];
        }
        for (std::size_t i = 0; i < n; ++i) row_ptr_[i + 1] += row_ptr_[i];
    }

    static SparseMatrix identity(std::size_t n) {
        std::vector<Triplet> t;
        t.reserve(n);
        for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, S(1)});
        return SparseMatrix(n, std::move(t));
    }

    std::size_t size() const { return n_; }
    std::size_t nnz() const { return values_.size(); }

    std::span<const std::size_t> row_cols(std::size_t i) const {
        return {cols_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }
    std::span<const S> row_values(std::size_t i) const {
        return {values_.data() + row_ptr_[i], row_ptr_[i + 1] - row_ptr_[i]};
    }

    S at(std::size_t i, std::size_t j) const {
        auto cols = row_cols(i);
        auto it = std::lower_bound(cols.begin(), cols.end(), j);
        if (it == cols.end() || *it != j) return S{};
        return row_values(i)[static_cast<std::size_t>(it - cols.begin())];
    }

    Vector<S> diagonal() const {
        Vector<S> d(n_, S{});
        for (std::size_t i = 0; i < n_; ++i) d[i] = at(i, i);
        return d;
    }

    void multiply(std::span<const S> x, std::span<S> y) const {
        require_same_size(x.size(), n_, "SparseMatrix::multiply");
        for (std::size_t i = 0; i < n_; ++i) {
            S acc{};
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) acc += values_[k] * x[cols_[k]];
            y[i] = acc;
        }
    }

    Vector<S> operator*(std::span<const S> x) const {
        Vector<S> y(n_);
        multiply(x, y);
        return y;
    }

    /// Returns alpha*I + beta*this.
    SparseMatrix shifted(S alpha, S beta) const {
        std::vector<Triplet> t;
        t.reserve(nnz() + n_);
        for (std::size_t i = 0; i < n_; ++i) {
            t.push_back({i, i, alpha});
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, cols_[k], beta * values_[k]});
        }
        return SparseMatrix(n_, std::move(t));
    }

    SparseMatrix scaled(S a) const {
        SparseMatrix out = *this;
        for (auto& v : out.values_) v *= a;
        return out;
    }

    SparseMatrix operator+(const SparseMatrix& other) const {
        require_same_size(n_, other.n_, "SparseMatrix::operator+");
        std::vector<Triplet> t = triplets();
        auto o = other.triplets();
        t.insert(t.end(), o.begin(), o.end());
        return SparseMatrix(n_, std::move(t));
    }

    template <Scalar T>
    SparseMatrix<T> cast() const {
        std::vector<typename SparseMatrix<T>::Triplet> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, cols_[k], T(values_[k])});
        return SparseMatrix<T>(n_, std::move(t));
    }

    std::vector<Triplet> triplets() const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({i, cols_[k], values_[k]});
        return t;
    }

    /// Permuted copy P A P^T where `perm[i]` is the new index of old index i.
    SparseMatrix permuted(std::span<const std::size_t> perm) const {
        std::vector<Triplet> t;
        t.reserve(nnz());
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t k = row_ptr_[i]; k < row_ptr_[i + 1]; ++k) t.push_back({perm[i], perm[cols_[k]], values_[k]});
        return SparseMatrix(n_, std::move(t));
    }

    bool structurally_symmetric() const {
        for (std::size_t i = 0; i < n_; ++i)
            for (std::size_t j : row_cols(i)) {
                auto cj = row_cols(j);
                if (!std::binary_search(cj.begin(), cj.end(), i)) return false;
            }
        return true;
    }

private:
    std::size_t n_ = 0;
    std::vector<std::size_t> row_ptr_{0};
    std::vector<std::size_t> cols_;
    std::vector<S> values_;
};

/// Power iteration with a seeded uniform random start; returns the Rayleigh
/// quotient |x^H A x| / x^H x after `iters` normalized products.
template <Scalar S>
double spectral_radius_estimate(const SparseMatrix<S>& a, int iters, std::uint64_t seed) {
    const std::size_t n = a.size();
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector<S> x(n), y(n);
    for (auto& v : x) v = S(dist(gen));
    double estimate = 0.0;
    for (int k = 0; k < iters; ++k) {
        const double nx = norm2<S>(x);
        if (nx == 0.0) return 0.0;
        for (auto& v : x) v /= nx;
        a.multiply(x, y);
        estimate = std::abs(dot<S>(x, y));
        std::swap(x, y);
    }
    return estimate;
}

}  // namespace simex
