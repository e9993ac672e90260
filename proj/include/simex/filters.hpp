#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "simex/cgs.hpp"
#include "simex/ilu.hpp"
#include "simex/relaxation.hpp"
#include "simex/system.hpp"

namespace simex {

template <Scalar S>
class StageCache;

/// Everything that defines the implicit stage equation
///     eta - h_gamma * (f(y_n + eta, t) - k1) = r.
template <Scalar S>
struct StageContext {
    const DecomposedSystem<S>& system;
    std::span<const S> y_n;
    std::span<const S> k1;  // f_impl(y_n, t_n)
    double h_gamma = 0.0;
    double t = 0.0;         // stage time t_n + c_i h
    StageCache<S>* cache = nullptr;
};

/// Stage matrices and factorizations for one (system, h*gamma) pair. ESDIRK
/// keeps H = I - h*gamma*J fixed across the stages of a step, and a fixed-step
/// driver keeps it fixed across steps, so the cache is rebuilt only when the
/// key changes. One cache per trajectory; never shared between threads.
template <Scalar S>
class StageCache {
public:
    const SparseMatrix<S>& stage_matrix(const DecomposedSystem<S>& sys, double h_gamma) {
        sync(sys, h_gamma);
        if (!h_) {
            if (!sys.implicit_matrix)
                throw std::logic_error("stage matrix requires a linear implicit part (" + sys.name + ")");
            h_ = sys.implicit_matrix->shifted(S(1), S(-h_gamma));
        }
        return *h_;
    }

    const IluFactors<S>& ilu(const DecomposedSystem<S>& sys, double h_gamma, double droptol) {
        const auto& h = stage_matrix(sys, h_gamma);
        auto it = ilu_.find(droptol);
        if (it == ilu_.end()) it = ilu_.emplace(droptol, ilu_factor(h, droptol)).first;
        return it->second;
    }

    const AtsSplitting<S>& ats(const DecomposedSystem<S>& sys, double h_gamma) {
        const auto& h = stage_matrix(sys, h_gamma);
        if (!ats_) {
            // Without a 2D grid both half-steps use the natural ordering.
            if (sys.grid_side == 0) ats_.emplace(h, GridPermutation::identity(h.size()));
            else ats_.emplace(h, GridPermutation(sys.grid_side));
        }
        return *ats_;
    }

private:
    void sync(const DecomposedSystem<S>& sys, double h_gamma) {
        if (sys_ == &sys && h_gamma_ == h_gamma) return;
        sys_ = &sys;
        h_gamma_ = h_gamma;
        h_.reset();
        ilu_.clear();
        ats_.reset();
    }

    const DecomposedSystem<S>* sys_ = nullptr;
    double h_gamma_ = std::numeric_limits<double>::quiet_NaN();
    std::optional<SparseMatrix<S>> h_;
    std::map<double, IluFactors<S>> ilu_;
    std::optional<AtsSplitting<S>> ats_;
};

/// Residual of the implicit stage equation at eta.
template <Scalar S>
Vector<S> implicit_residual(const StageContext<S>& ctx, std::span<const S> r, std::span<const S> eta) {
    const std::size_t n = eta.size();
    Vector<S> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = ctx.y_n[i] + eta[i];
    const auto fy = ctx.system.f_impl(y, ctx.t);
    Vector<S> res(n);
    for (std::size_t i = 0; i < n; ++i) res[i] = eta[i] - ctx.h_gamma * (fy[i] - ctx.k1[i]) - r[i];
    return res;
}

template <Scalar S>
double implicit_residual_norm(const StageContext<S>& ctx, std::span<const S> r, std::span<const S> eta) {
    const auto res = implicit_residual(ctx, r, eta);
    return norm_inf<S>(res);
}

/// An implicit-step filter: a fixed-effort map r -> eta approximating the
/// stage equation. Immutable; evaluation is a pure function of its inputs.
template <Scalar S>
class Filter {
public:
    using Eval = std::function<Vector<S>(const StageContext<S>&, std::span<const S>)>;

    Filter(std::string name, bool linear, Eval eval) : name_(std::move(name)), linear_(linear), eval_(std::move(eval)) {}

    const std::string& name() const { return name_; }
    bool is_linear() const { return linear_; }

    Vector<S> operator()(const StageContext<S>& ctx, std::span<const S> r) const {
        require_same_size(r.size(), ctx.system.dim, "Filter");
        if (ctx.cache) return eval_(ctx, r);
        StageCache<S> local;
        StageContext<S> with_cache{ctx.system, ctx.y_n, ctx.k1, ctx.h_gamma, ctx.t, &local};
        return eval_(with_cache, r);
    }

private:
    std::string name_;
    bool linear_;
    Eval eval_;
};

namespace detail {

inline std::string format_number(double v) {
    std::ostringstream os;
    os << v;
    return os.str();
}

template <Scalar S>
Vector<S> dense_solve(const DenseMatrix<S>& m, std::span<const S> rhs) {
    Eigen::PartialPivLU<DenseMatrix<S>> lu(m);
    const auto& packed = lu.matrixLU();
    for (Eigen::Index i = 0; i < packed.rows(); ++i)
        if (packed(i, i) == S{}) throw SolverError("singular Newton matrix");
    Eigen::Matrix<S, Eigen::Dynamic, 1> b(static_cast<Eigen::Index>(rhs.size()));
    for (std::size_t i = 0; i < rhs.size(); ++i) b(static_cast<Eigen::Index>(i)) = rhs[i];
    Eigen::Matrix<S, Eigen::Dynamic, 1> x = lu.solve(b);
    return Vector<S>(x.data(), x.data() + x.size());
}

// Solves (I - h_gamma * Df(y_n + eta)) delta = rhs.
template <Scalar S>
Vector<S> newton_correction(const StageContext<S>& ctx, std::span<const S> eta, std::span<const S> rhs) {
    if (ctx.system.implicit_matrix) {
        const auto& lu = ctx.cache->ilu(ctx.system, ctx.h_gamma, 0.0);
        return ilu_apply(lu, rhs);
    }
    if (!ctx.system.jacobian_impl) throw std::logic_error("Newton filter requires an exact Jacobian (" + ctx.system.name + ")");
    const std::size_t n = eta.size();
    Vector<S> y(n);
    for (std::size_t i = 0; i < n; ++i) y[i] = ctx.y_n[i] + eta[i];
    DenseMatrix<S> m = -ctx.h_gamma * ctx.system.jacobian_impl(y, ctx.t);
    m.diagonal().array() += S(1);
    return dense_solve<S>(m, rhs);
}

}  // namespace detail

/// The identity filter, eta = r.
template <Scalar S>
Filter<S> default_filter() {
    return Filter<S>("default", true, [](const StageContext<S>&, std::span<const S> r) { return Vector<S>(r.begin(), r.end()); });
}

/// N Jacobi sweeps on H eta = r starting from eta = r.
template <Scalar S>
Filter<S> jacobi_filter(int iterations) {
    if (iterations < 0) throw std::invalid_argument("jacobi_filter: iterations must be >= 0");
    return Filter<S>("jacobi(" + std::to_string(iterations) + ")", true,
                     [iterations](const StageContext<S>& ctx, std::span<const S> r) {
                         Vector<S> eta(r.begin(), r.end());
                         if (iterations == 0) return eta;
                         const auto& h = ctx.cache->stage_matrix(ctx.system, ctx.h_gamma);
                         for (int i = 0; i < iterations; ++i) eta = jacobi_sweep<S>(h, r, eta);
                         return eta;
                     });
}

/// k Gauss-Seidel sweeps from eta = r; omega < 1 gives the under-relaxed
/// variant.
template <Scalar S>
Filter<S> gs_filter(int iterations, double omega = 1.0) {
    if (iterations < 0) throw std::invalid_argument("gs_filter: iterations must be >= 0");
    if (!(omega > 0.0 && omega < 2.0)) throw std::invalid_argument("gs_filter: omega must lie in (0, 2)");
    std::string name = "gs(" + std::to_string(iterations);
    if (omega != 1.0) name += "," + detail::format_number(omega);
    name += ")";
    return Filter<S>(std::move(name), true, [iterations, omega](const StageContext<S>& ctx, std::span<const S> r) {
        Vector<S> eta(r.begin(), r.end());
        if (iterations == 0) return eta;
        const auto& h = ctx.cache->stage_matrix(ctx.system, ctx.h_gamma);
        for (int i = 0; i < iterations; ++i) eta = gs_sweep<S>(h, r, eta, omega);
        return eta;
    });
}

/// m alternate-direction tridiagonal iterations from eta = r.
template <Scalar S>
Filter<S> ats_filter(int iterations) {
    if (iterations < 1) throw std::invalid_argument("ats_filter: iterations must be >= 1");
    return Filter<S>("ats(" + std::to_string(iterations) + ")", true,
                     [iterations](const StageContext<S>& ctx, std::span<const S> r) {
                         const auto& ats = ctx.cache->ats(ctx.system, ctx.h_gamma);
                         Vector<S> eta(r.begin(), r.end());
                         for (int i = 0; i < iterations; ++i) eta = ats_iteration<S>(ats, r, eta);
                         return eta;
                     });
}

/// One incomplete-LU solve of H eta = r.
template <Scalar S>
Filter<S> ilu_filter(double droptol) {
    if (droptol < 0.0) throw std::invalid_argument("ilu_filter: droptol must be >= 0");
    return Filter<S>("ilu(" + detail::format_number(droptol) + ")", true,
                     [droptol](const StageContext<S>& ctx, std::span<const S> r) {
                         return ilu_apply(ctx.cache->ilu(ctx.system, ctx.h_gamma, droptol), r);
                     });
}

/// p ILU-preconditioned CGS iterations on H eta = r starting from eta = r.
template <Scalar S>
Filter<S> cgs_filter(int iterations, double droptol) {
    if (iterations < 1) throw std::invalid_argument("cgs_filter: iterations must be >= 1");
    return Filter<S>("cgs(" + std::to_string(iterations) + "," + detail::format_number(droptol) + ")", false,
                     [iterations, droptol](const StageContext<S>& ctx, std::span<const S> r) {
                         const auto& h = ctx.cache->stage_matrix(ctx.system, ctx.h_gamma);
                         const auto& m = ctx.cache->ilu(ctx.system, ctx.h_gamma, droptol);
                         return cgs_solve<S>(h, m, r, r, iterations);
                     });
}

/// N Newton iterations on the stage equation from eta = r with the exact
/// Jacobian and a direct solve.
template <Scalar S>
Filter<S> newton_filter(int iterations) {
    if (iterations < 0) throw std::invalid_argument("newton_filter: iterations must be >= 0");
    return Filter<S>("newton(" + std::to_string(iterations) + ")", false,
                     [iterations](const StageContext<S>& ctx, std::span<const S> r) {
                         Vector<S> eta(r.begin(), r.end());
                         for (int i = 0; i < iterations; ++i) {
                             const auto res = implicit_residual<S>(ctx, r, eta);
                             const auto delta = detail::newton_correction<S>(ctx, eta, res);
                             for (std::size_t k = 0; k < eta.size(); ++k) eta[k] -= delta[k];
                         }
                         return eta;
                     });
}

/// Solves the stage equation to roundoff: a direct sparse LU for linear
/// implicit parts, Newton iteration (at most 50 steps) otherwise.
template <Scalar S>
Filter<S> exact_filter() {
    return Filter<S>("exact", false, [](const StageContext<S>& ctx, std::span<const S> r) {
        if (ctx.system.implicit_matrix) {
            const auto& lu = ctx.cache->ilu(ctx.system, ctx.h_gamma, 0.0);
            auto eta = ilu_apply(lu, r);
            // One step of iterative refinement.
            const auto& h = ctx.cache->stage_matrix(ctx.system, ctx.h_gamma);
            auto he = h * std::span<const S>(eta);
            Vector<S> res(eta.size());
            for (std::size_t i = 0; i < eta.size(); ++i) res[i] = r[i] - he[i];
            const auto corr = ilu_apply(lu, std::span<const S>(res));
            for (std::size_t i = 0; i < eta.size(); ++i) eta[i] += corr[i];
            return eta;
        }
        constexpr int max_iterations = 50;
        const double scale = std::max(norm_inf<S>(r), std::numeric_limits<double>::min());
        Vector<S> eta(r.begin(), r.end());
        double previous = std::numeric_limits<double>::infinity();
        for (int it = 0; it < max_iterations; ++it) {
            const auto res = implicit_residual<S>(ctx, r, eta);
            const double rn = norm_inf<S>(res);
            if (rn <= 1e-14 * scale) return eta;
            // Accept a stagnated iterate once it is far below the required level.
            if (rn <= 1e-12 * scale && rn >= 0.5 * previous) return eta;
            previous = rn;
            const auto delta = detail::newton_correction<S>(ctx, eta, res);
            for (std::size_t k = 0; k < eta.size(); ++k) eta[k] -= delta[k];
        }
        const auto res = implicit_residual<S>(ctx, r, eta);
        if (norm_inf<S>(res) <= 1e-12 * scale) return eta;
        throw SolverError("exact filter: Newton iteration did not converge in 50 iterations");
    });
}

/// Columns of the matrix of a linear filter, obtained by applying it to the
/// unit basis vectors.
template <Scalar S>
DenseMatrix<S> filter_as_matrix(const Filter<S>& f, const StageContext<S>& ctx) {
    const std::size_t n = ctx.system.dim;
    if (n > 2500) throw std::invalid_argument("filter_as_matrix: dimension above 2500");
    StageCache<S> local;
    StageContext<S> c{ctx.system, ctx.y_n, ctx.k1, ctx.h_gamma, ctx.t, ctx.cache ? ctx.cache : &local};
    DenseMatrix<S> m(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    Vector<S> e(n, S{});
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = S(1);
        const auto col = f(c, std::span<const S>(e));
        for (std::size_t i = 0; i < n; ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
        e[j] = S{};
    }
    return m;
}

struct NonsingularityMargin {
    double lhs = 0.0;  // ||F - (I - h_gamma A)^{-1}||_2
    double rhs = 0.0;  // ||I - h_gamma A||_2^{-1}
    bool certified() const { return lhs < rhs; }
};

/// Both sides of the sufficient condition for a linear filter matrix F to be
/// nonsingular: ||F - (I - h_gamma A)^{-1}|| < ||I - h_gamma A||^{-1}.
template <Scalar S>
NonsingularityMargin nonsingularity_margin(const DenseMatrix<S>& f, const DenseMatrix<S>& a, double h_gamma) {
    const auto n = a.rows();
    DenseMatrix<S> m = DenseMatrix<S>::Identity(n, n) - S(h_gamma) * a;
    Eigen::FullPivLU<DenseMatrix<S>> lu(m);
    if (!lu.isInvertible()) throw SolverError("nonsingularity_margin: I - h*gamma*A is singular");
    const DenseMatrix<S> m_inv = lu.inverse();
    auto norm2_op = [](const DenseMatrix<S>& x) {
        Eigen::JacobiSVD<DenseMatrix<S>> svd(x);
        return svd.singularValues()(0);
    };
    return {norm2_op(f - m_inv), 1.0 / norm2_op(m)};
}

/// Ordered candidates tried at the first implicit stage of a step until the
/// stabilization criterion accepts one.
template <Scalar S>
struct FilterSequence {
    using Criterion = std::function<bool(const StageContext<S>&, std::span<const S> r, std::span<const S> eta)>;
    std::vector<Filter<S>> filters;
    Criterion criterion;
};

/// Accepts eta when the stage-equation residual is at most `tol` (inf-norm).
template <Scalar S>
typename FilterSequence<S>::Criterion residual_criterion(double tol) {
    return [tol](const StageContext<S>& ctx, std::span<const S> r, std::span<const S> eta) {
        return implicit_residual_norm<S>(ctx, r, eta) <= tol;
    };
}

template <Scalar S>
struct Selection {
    std::size_t index = 0;  // 0-based position in the sequence
    Vector<S> eta;
    bool exhausted = false;  // no candidate met the criterion; the last one is returned
};

template <Scalar S>
Selection<S> select_filter(const FilterSequence<S>& seq, const StageContext<S>& ctx, std::span<const S> r) {
    if (seq.filters.empty()) throw std::invalid_argument("select_filter: empty filter sequence");
    for (std::size_t m = 0; m < seq.filters.size(); ++m) {
        auto eta = seq.filters[m](ctx, r);
        if (!seq.criterion || seq.criterion(ctx, r, eta)) return {m, std::move(eta), false};
        if (m + 1 == seq.filters.size()) return {m, std::move(eta), true};
    }
    return {};
}

}  // namespace simex
