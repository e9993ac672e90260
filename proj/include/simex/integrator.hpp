#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "simex/filters.hpp"
#include "simex/tableau.hpp"

namespace simex {

/// Optional per-step instrumentation filled by the steppers.
struct StepDiagnostics {
    std::vector<std::string> stage_filters;  // filter name used at stages 2..s
    std::vector<double> stage_residuals;     // inf-norm implicit-equation residual at stages 2..s
    bool record_residuals = false;
};

namespace detail {

template <Scalar S>
void check_step_inputs(const ImexTableau& tab, const DecomposedSystem<S>& sys, std::span<const S> y, double h) {
    require_same_size(y.size(), sys.dim, "step");
    if (!(h > 0.0)) throw std::invalid_argument("step size must be positive");
    if (tab.s < 2) throw std::invalid_argument("tableau needs at least two stages");
}

// Accumulates d = h * sum_{j<i} (a_ij k_j + ahat_ij khat_j).
template <Scalar S>
Vector<S> stage_offset(const ImexTableau& tab, std::size_t i, const std::vector<Vector<S>>& k,
                       const std::vector<Vector<S>>& kh, double h, std::size_t n) {
    Vector<S> d(n, S{});
    for (std::size_t j = 0; j < i; ++j) {
        const double a = h * tab.impl(i, j);
        const double ah = h * tab.expl(i, j);
        if (a != 0.0)
            for (std::size_t m = 0; m < n; ++m) d[m] += a * k[j][m];
        if (ah != 0.0)
            for (std::size_t m = 0; m < n; ++m) d[m] += ah * kh[j][m];
    }
    return d;
}

template <Scalar S>
Vector<S> combine(const ImexTableau& tab, std::span<const S> y, const std::vector<Vector<S>>& k,
                  const std::vector<Vector<S>>& kh, double h) {
    Vector<S> out(y.begin(), y.end());
    for (std::size_t j = 0; j < tab.s; ++j) {
        const double w = h * tab.b[j];
        if (w == 0.0) continue;
        for (std::size_t m = 0; m < out.size(); ++m) out[m] += w * (k[j][m] + kh[j][m]);
    }
    return out;
}

/// SIMEX step with a stage-to-filter map. simex_rk_step always passes a
/// constant map; harnesses may pass a varying one to study what breaks.
template <Scalar S>
Vector<S> simex_rk_step_staged(const ImexTableau& tab, const DecomposedSystem<S>& sys,
                               const std::function<const Filter<S>&(std::size_t stage)>& filter_at, std::span<const S> y,
                               double t, double h, StageCache<S>* cache = nullptr, StepDiagnostics* diag = nullptr) {
    check_step_inputs(tab, sys, y, h);
    StageCache<S> local;
    if (!cache) cache = &local;
    const std::size_t n = sys.dim;
    const double hg = h * tab.gamma;
    std::vector<Vector<S>> k(tab.s), kh(tab.s);
    k[0] = sys.f_impl(y, t);
    kh[0] = sys.f_expl(y, t);
    Vector<S> xi(n);
    for (std::size_t i = 1; i < tab.s; ++i) {
        const double ti = t + tab.c[i] * h;
        const auto d = stage_offset<S>(tab, i, k, kh, h, n);
        Vector<S> r(n);
        for (std::size_t m = 0; m < n; ++m) r[m] = d[m] + hg * k[0][m];
        const StageContext<S> ctx{sys, y, k[0], hg, ti, cache};
        const Filter<S>& f = filter_at(i);
        const auto eta = f(ctx, r);
        if (diag) {
            diag->stage_filters.push_back(f.name());
            if (diag->record_residuals) diag->stage_residuals.push_back(implicit_residual_norm<S>(ctx, r, eta));
        }
        k[i].resize(n);
        for (std::size_t m = 0; m < n; ++m) {
            k[i][m] = (eta[m] - d[m]) / hg;
            xi[m] = y[m] + eta[m];
        }
        const auto fi = sys.f_impl(xi, ti);
        const auto fe = sys.f_expl(xi, ti);
        kh[i].resize(n);
        for (std::size_t m = 0; m < n; ++m) kh[i][m] = fe[m] + fi[m] - k[i][m];
    }
    return combine<S>(tab, y, k, kh, h);
}

}  // namespace detail

/// One IMEX-RK step. `solver` approximates the implicit stage equation; the
/// stage derivatives are then evaluated at the returned stage value.
template <Scalar S>
Vector<S> imex_rk_step(const ImexTableau& tab, const DecomposedSystem<S>& sys, const Filter<S>& solver,
                       std::span<const S> y, double t, double h, StageCache<S>* cache = nullptr,
                       StepDiagnostics* diag = nullptr) {
    detail::check_step_inputs(tab, sys, y, h);
    StageCache<S> local;
    if (!cache) cache = &local;
    const std::size_t n = sys.dim;
    const double hg = h * tab.gamma;
    std::vector<Vector<S>> k(tab.s), kh(tab.s);
    k[0] = sys.f_impl(y, t);
    kh[0] = sys.f_expl(y, t);
    Vector<S> xi(n);
    for (std::size_t i = 1; i < tab.s; ++i) {
        const double ti = t + tab.c[i] * h;
        const auto d = detail::stage_offset<S>(tab, i, k, kh, h, n);
        Vector<S> r(n);
        for (std::size_t m = 0; m < n; ++m) r[m] = d[m] + hg * k[0][m];
        const StageContext<S> ctx{sys, y, k[0], hg, ti, cache};
        const auto eta = solver(ctx, r);
        if (diag) {
            diag->stage_filters.push_back(solver.name());
            if (diag->record_residuals) diag->stage_residuals.push_back(implicit_residual_norm<S>(ctx, r, eta));
        }
        for (std::size_t m = 0; m < n; ++m) xi[m] = y[m] + eta[m];
        k[i] = sys.f_impl(xi, ti);
        kh[i] = sys.f_expl(xi, ti);
    }
    return detail::combine<S>(tab, y, k, kh, h);
}

/// One SIMEX-RK step: the filter output is taken as the exact stage solution
/// of the residual-balanced split, and the residual moves to the explicit side.
template <Scalar S>
Vector<S> simex_rk_step(const ImexTableau& tab, const DecomposedSystem<S>& sys, const Filter<S>& filter,
                        std::span<const S> y, double t, double h, StageCache<S>* cache = nullptr,
                        StepDiagnostics* diag = nullptr) {
    return detail::simex_rk_step_staged<S>(
        tab, sys, [&filter](std::size_t) -> const Filter<S>& { return filter; }, y, t, h, cache, diag);
}

template <Scalar S>
struct SelectedStep {
    Vector<S> y;
    std::size_t selected = 0;  // 0-based index into the sequence
    bool exhausted = false;
};

/// SIMEX step whose filter is chosen from `seq` at the first implicit stage
/// and then reused for the remaining stages.
template <Scalar S>
SelectedStep<S> simex_rk_step_with_selection(const ImexTableau& tab, const DecomposedSystem<S>& sys,
                                             const FilterSequence<S>& seq, std::span<const S> y, double t, double h,
                                             StageCache<S>* cache = nullptr) {
    detail::check_step_inputs(tab, sys, y, h);
    StageCache<S> local;
    if (!cache) cache = &local;
    const std::size_t n = sys.dim;
    const double hg = h * tab.gamma;

    // Run the selection on the stage-2 right-hand side, then hand the chosen
    // filter to the ordinary stepper. Re-evaluating stage 2 with the chosen
    // filter gives the same eta because filters are deterministic.
    const auto k1 = sys.f_impl(y, t);
    const auto kh1 = sys.f_expl(y, t);
    Vector<S> r(n);
    for (std::size_t m = 0; m < n; ++m) r[m] = h * (tab.impl(1, 0) * k1[m] + tab.expl(1, 0) * kh1[m]) + hg * k1[m];
    const StageContext<S> ctx{sys, y, k1, hg, t + tab.c[1] * h, cache};
    const auto sel = select_filter<S>(seq, ctx, r);
    SelectedStep<S> out;
    out.selected = sel.index;
    out.exhausted = sel.exhausted;
    out.y = simex_rk_step<S>(tab, sys, seq.filters[sel.index], y, t, h, cache);
    return out;
}

enum class TraceStatus { completed, unstable, solver_failure };

inline const char* to_string(TraceStatus s) {
    switch (s) {
        case TraceStatus::completed: return "completed";
        case TraceStatus::unstable: return "unstable";
        case TraceStatus::solver_failure: return "solver_failure";
    }
    return "unknown";
}

template <Scalar S>
struct IntegrationTrace {
    std::vector<double> times;
    std::vector<Vector<S>> states;
    TraceStatus status = TraceStatus::completed;
    std::size_t step_count = 0;    // steps taken successfully
    std::size_t unstable_step = 0; // 1-based step that tripped the guard
    std::string message;

    const Vector<S>& final_state() const { return states.back(); }
};

template <Scalar S>
using Stepper = std::function<Vector<S>(std::span<const S> y, double t, double h, std::size_t step_index)>;

struct IntegrateOptions {
    double guard = 1e3;
    std::size_t store_every = 0;  // 0: keep only the initial and final states
};

/// Number of fixed steps covering [t0, t_end]; throws unless it is an integer.
inline std::size_t fixed_step_count(double t0, double t_end, double h) {
    if (!(h > 0.0) || !(t_end > t0)) throw std::invalid_argument("integrate: need h > 0 and t_end > t0");
    const double q = (t_end - t0) / h;
    const double n = std::round(q);
    if (n < 1.0 || std::abs(q - n) > 1e-9 * std::max(1.0, q))
        throw std::invalid_argument("integrate: (t_end - t0) / h must be a positive integer");
    return static_cast<std::size_t>(n);
}

/// Fixed-step driver with an instability guard on every component.
template <Scalar S>
IntegrationTrace<S> integrate(const Stepper<S>& step, std::span<const S> y0, double t0, double t_end, double h,
                              IntegrateOptions opts = {}) {
    const std::size_t steps = fixed_step_count(t0, t_end, h);
    IntegrationTrace<S> trace;
    trace.times.push_back(t0);
    trace.states.emplace_back(y0.begin(), y0.end());
    Vector<S> y(y0.begin(), y0.end());
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = t0 + static_cast<double>(n) * h;
        try {
            y = step(y, t, h, n);
        } catch (const SolverError& e) {
            trace.status = TraceStatus::solver_failure;
            trace.message = e.what();
            trace.unstable_step = n + 1;
            break;
        }
        const double t_next = (n + 1 == steps) ? t_end : t0 + static_cast<double>(n + 1) * h;
        bool blown = false;
        for (const auto& v : y)
            if (!(abs_value(v) <= opts.guard)) {
                blown = true;
                break;
            }
        trace.step_count = n + 1;
        if (blown) {
            trace.status = TraceStatus::unstable;
            trace.unstable_step = n + 1;
            trace.times.push_back(t_next);
            trace.states.push_back(y);
            return trace;
        }
        const bool last = n + 1 == steps;
        if (last || (opts.store_every && (n + 1) % opts.store_every == 0)) {
            trace.times.push_back(t_next);
            trace.states.push_back(y);
        }
    }
    return trace;
}

}  // namespace simex
