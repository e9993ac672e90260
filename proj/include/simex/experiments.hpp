#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "simex/convergence.hpp"
#include "simex/filter_spec.hpp"
#include "simex/integrator.hpp"
#include "simex/problems.hpp"
#include "simex/reference.hpp"
#include "simex/stability.hpp"
#include "simex/tableau.hpp"

namespace simex {

struct ConvergeConfig {
    std::string tableau = "ark548";
    std::vector<std::string> methods{"simex", "imex"};
    std::vector<std::string> filters;  // empty: command default
    std::vector<double> h{0.1, 0.05, 0.025, 0.0125, 0.00625};
    std::size_t grid_n = 10;
    double t_end = 1.0;
    double guard = 1e3;
    double reference_tol = 1e-12;
    std::size_t fit_points = 3;
    unsigned jobs = 1;
};

namespace detail {

inline Vector<double> reference_state(const DecomposedSystem<double>& sys, double t_end, double tol) {
    const auto y0 = sys.exact_solution(0.0);
    auto rhs = [&sys](std::span<const double> y, double t) {
        auto a = sys.f_impl(y, t);
        const auto b = sys.f_expl(y, t);
        for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
        return a;
    };
    return reference_solve<double>(rhs, y0, 0.0, t_end, tol, tol);
}

using StepperFactory = std::function<Stepper<double>(StageCache<double>&)>;

struct Cell {
    std::size_t record;
    double h;
    StepperFactory make;
};

inline std::vector<ConvergenceRecord> run_cells(std::vector<ConvergenceRecord> recs, const std::vector<Cell>& cells,
                                                const DecomposedSystem<double>& sys, const Vector<double>& reference,
                                                const ConvergeConfig& cfg) {
    const auto y0 = sys.exact_solution(0.0);
    std::vector<ConvergencePoint> results(cells.size());
    parallel_for(cells.size(), cfg.jobs, [&](std::size_t c) {
        StageCache<double> cache;
        const auto start = std::chrono::steady_clock::now();
        const auto trace = integrate<double>(cells[c].make(cache), y0, 0.0, cfg.t_end, cells[c].h, {cfg.guard, 0});
        ConvergencePoint p;
        p.h = cells[c].h;
        p.status = trace.status;
        if (trace.status == TraceStatus::completed) p.error = max_abs_diff<double>(trace.final_state(), reference);
        p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        results[c] = p;
    });
    for (std::size_t c = 0; c < cells.size(); ++c) recs[cells[c].record].points.push_back(results[c]);
    for (auto& r : recs) {
        r.fit_points = cfg.fit_points;
        refit(r);
    }
    return recs;
}

inline std::vector<ConvergenceRecord> converge_family(const DecomposedSystem<double>& sys, const ConvergeConfig& cfg,
                                                      const std::vector<std::string>& filters) {
    const auto tab = tableau_by_name(cfg.tableau);
    const auto reference = reference_state(sys, cfg.t_end, cfg.reference_tol);
    std::vector<ConvergenceRecord> recs;
    std::vector<Cell> cells;
    for (const auto& method : cfg.methods) {
        if (method != "simex" && method != "imex") throw std::invalid_argument("unknown method '" + method + "'");
        for (const auto& fname : filters) {
            const auto filter = make_filter<double>(fname);
            recs.push_back({method, tab.name, filter.name(), {}, std::nullopt, cfg.fit_points});
            const bool simex = method == "simex";
            for (double h : cfg.h)
                cells.push_back({recs.size() - 1, h, [&sys, tab, filter, simex](StageCache<double>& cache) -> Stepper<double> {
                                     return [&sys, tab, filter, simex, &cache](std::span<const double> y, double t, double h, std::size_t) {
                                         return simex ? simex_rk_step<double>(tab, sys, filter, y, t, h, &cache)
                                                      : imex_rk_step<double>(tab, sys, filter, y, t, h, &cache);
                                     };
                                 }});
        }
    }
    return run_cells(std::move(recs), cells, sys, reference, cfg);
}

}  // namespace detail

/// Forced heat equation, Jacobi filter family.
inline std::vector<ConvergenceRecord> converge_heat(const ConvergeConfig& cfg) {
    const auto sys = forced_heat_1d(cfg.grid_n);
    const std::vector<std::string> def{"jacobi(0)", "jacobi(1)", "jacobi(2)", "jacobi(3)"};
    return detail::converge_family(sys, cfg, cfg.filters.empty() ? def : cfg.filters);
}

/// Nonlinear advection-reaction-diffusion, Newton filter family.
inline std::vector<ConvergenceRecord> converge_nonlinear(const ConvergeConfig& cfg) {
    const auto sys = adv_reac_diff_1d(cfg.grid_n);
    const std::vector<std::string> def{"newton(0)", "newton(1)", "newton(2)", "newton(3)"};
    return detail::converge_family(sys, cfg, cfg.filters.empty() ? def : cfg.filters);
}

/// Filter alternation on the heat problem. Record "bad" switches filters
/// between RK stages (first filter at even 1-based stage index, second at odd);
/// "ok" switches between steps (first filter at even step index). The exact
/// filter serves as control. `cfg.filters` may name the two alternated filters.
inline std::vector<ConvergenceRecord> converge_alternation(const ConvergeConfig& cfg) {
    const auto sys = forced_heat_1d(cfg.grid_n);
    const auto tab = tableau_by_name(cfg.tableau);
    const auto reference = detail::reference_state(sys, cfg.t_end, cfg.reference_tol);
    std::vector<std::string> pair = cfg.filters.empty() ? std::vector<std::string>{"jacobi(2)", "jacobi(3)"} : cfg.filters;
    if (pair.size() != 2) throw std::invalid_argument("converge-alternation needs exactly two filters");
    const auto fa = make_filter<double>(pair[0]);
    const auto fb = make_filter<double>(pair[1]);
    const auto fx = exact_filter<double>();
    const std::string tag = fa.name() + "/" + fb.name();

    std::vector<ConvergenceRecord> recs{{"simex", tab.name, "bad:stage-alternating " + tag, {}, std::nullopt, cfg.fit_points},
                                        {"simex", tab.name, "ok:step-alternating " + tag, {}, std::nullopt, cfg.fit_points},
                                        {"simex", tab.name, "control:exact", {}, std::nullopt, cfg.fit_points}};
    std::vector<detail::Cell> cells;
    for (double h : cfg.h) {
        cells.push_back({0, h, [&sys, tab, fa, fb](StageCache<double>& cache) -> Stepper<double> {
                             return [&sys, tab, fa, fb, &cache](std::span<const double> y, double t, double h, std::size_t) {
                                 return detail::simex_rk_step_staged<double>(
                                     tab, sys,
                                     [&fa, &fb](std::size_t stage) -> const Filter<double>& { return (stage + 1) % 2 == 0 ? fa : fb; },
                                     y, t, h, &cache);
                             };
                         }});
        cells.push_back({1, h, [&sys, tab, fa, fb](StageCache<double>& cache) -> Stepper<double> {
                             return [&sys, tab, fa, fb, &cache](std::span<const double> y, double t, double h, std::size_t n) {
                                 return simex_rk_step<double>(tab, sys, n % 2 == 0 ? fa : fb, y, t, h, &cache);
                             };
                         }});
        cells.push_back({2, h, [&sys, tab, fx](StageCache<double>& cache) -> Stepper<double> {
                             return [&sys, tab, fx, &cache](std::span<const double> y, double t, double h, std::size_t) {
                                 return simex_rk_step<double>(tab, sys, fx, y, t, h, &cache);
                             };
                         }});
    }
    return detail::run_cells(std::move(recs), cells, sys, reference, cfg);
}

struct Pde2dConfig {
    std::string tableau = "ark436";
    std::vector<std::string> methods{"simex", "imex"};
    std::vector<std::string> filters{"gs(0)", "gs(1)", "gs(2)", "gs(3)", "gs(4)", "gs(5)",
                                     "gs(6)", "gs(7)", "cgs(1,0.02)", "cgs(2,0.02)"};
    std::vector<int> grid_j{1, 2, 3, 4, 5};
    double t_end = 1.0;
    double guard = 1e3;
    std::size_t fit_points = 3;
    unsigned jobs = 1;
};

struct Pde2dResult {
    std::vector<ConvergenceRecord> records;  // one per (method, filter)
    std::vector<ConvergenceRecord> best;     // per method: cheapest completed filter per grid
    std::vector<std::string> best_filter_names;  // "method j filter" lines
    double ilu_fill_ratio = 0.0;  // (nnz(L)+nnz(U)) / (9 N^2) at the finest grid, droptol 0.02
    std::size_t finest_n = 0;
};

/// Grid size N_j = 5 * 2^j with h_j = 1/N_j and dx_j = pi/N_j.
inline std::size_t pde2d_grid_n(int j) {
    if (j < 0 || j > 10) throw std::invalid_argument("grid index out of range");
    return static_cast<std::size_t>(5) << j;
}

/// Space-time refinement of the periodic advection-diffusion problem. The
/// "best" filter at a grid is the first completed one in the configured
/// filter order, which is listed from cheapest to most expensive.
inline Pde2dResult pde2d(const Pde2dConfig& cfg) {
    const auto tab = tableau_by_name(cfg.tableau);
    std::vector<DecomposedSystem<double>> systems;
    for (int j : cfg.grid_j) systems.push_back(adv_diff_2d(pde2d_grid_n(j)));

    Pde2dResult out;
    struct Job {
        std::size_t record, grid;
    };
    std::vector<Job> jobs;
    std::vector<Filter<double>> filters;
    for (const auto& f : cfg.filters) filters.push_back(make_filter<double>(f));
    for (const auto& m : cfg.methods) {
        if (m != "simex" && m != "imex") throw std::invalid_argument("unknown method '" + m + "'");
        for (const auto& f : filters) {
            out.records.push_back({m, tab.name, f.name(), {}, std::nullopt, cfg.fit_points});
            for (std::size_t g = 0; g < systems.size(); ++g) jobs.push_back({out.records.size() - 1, g});
        }
    }
    std::vector<ConvergencePoint> pts(jobs.size());
    parallel_for(jobs.size(), cfg.jobs, [&](std::size_t k) {
        const auto& rec = out.records[jobs[k].record];
        const auto& sys = systems[jobs[k].grid];
        const int j = cfg.grid_j[jobs[k].grid];
        const std::size_t n = pde2d_grid_n(j);
        const double h = 1.0 / static_cast<double>(n);
        const auto& filter = filters[jobs[k].record % filters.size()];
        const bool simex = rec.method == "simex";
        StageCache<double> cache;
        Stepper<double> step = [&](std::span<const double> y, double t, double hh, std::size_t) {
            return simex ? simex_rk_step<double>(tab, sys, filter, y, t, hh, &cache)
                         : imex_rk_step<double>(tab, sys, filter, y, t, hh, &cache);
        };
        const auto start = std::chrono::steady_clock::now();
        const auto y0 = sys.exact_solution(0.0);
        const auto trace = integrate<double>(step, y0, 0.0, cfg.t_end, h, {cfg.guard, 0});
        ConvergencePoint p;
        p.h = h;
        p.grid_j = j;
        p.status = trace.status;
        p.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        if (trace.status == TraceStatus::completed)
            p.error = discrete_l2_error(trace.final_state(), sys.exact_solution(cfg.t_end), n);
        pts[k] = p;
    });
    for (std::size_t k = 0; k < jobs.size(); ++k) out.records[jobs[k].record].points.push_back(pts[k]);
    for (auto& r : out.records) refit(r);

    for (const auto& m : cfg.methods) {
        ConvergenceRecord best{m, tab.name, "best", {}, std::nullopt, cfg.fit_points};
        for (std::size_t g = 0; g < systems.size(); ++g) {
            for (const auto& r : out.records) {
                if (r.method != m) continue;
                const auto& p = r.points[g];
                if (p.status != TraceStatus::completed) continue;
                best.points.push_back(p);
                out.best_filter_names.push_back(m + " j=" + std::to_string(p.grid_j) + " " + r.filter);
                break;
            }
        }
        refit(best);
        out.best.push_back(best);
    }

    if (!systems.empty()) {
        std::size_t gi = 0;
        for (std::size_t g = 1; g < cfg.grid_j.size(); ++g)
            if (cfg.grid_j[g] > cfg.grid_j[gi]) gi = g;
        const std::size_t n = pde2d_grid_n(cfg.grid_j[gi]);
        StageCache<double> cache;
        const auto& hm = cache.stage_matrix(systems[gi], tab.gamma / static_cast<double>(n));
        const auto f = ilu_factor(hm, 0.02);
        out.ilu_fill_ratio = static_cast<double>(f.nnz_l() + f.nnz_u()) / (9.0 * static_cast<double>(n * n));
        out.finest_n = n;
    }
    return out;
}

struct TableauCheckLine {
    std::string tableau;
    double gamma;
    std::vector<TableauViolation> violations;
    OrderResiduals residuals;
    int checked_order;
    bool ok;
};

/// validate plus order conditions up to min(declared order, 3) for each tableau.
inline std::vector<TableauCheckLine> tableau_check(const std::vector<ImexTableau>& tabs = shipped_tableaus()) {
    std::vector<TableauCheckLine> out;
    for (const auto& t : tabs) {
        TableauCheckLine l;
        l.tableau = t.name;
        l.gamma = t.gamma;
        l.violations = validate(t);
        l.checked_order = std::min(t.declared_order, 3);
        l.residuals = order_conditions_residual(t, l.checked_order);
        l.ok = l.violations.empty() && l.residuals.max_abs(l.checked_order) <= 1e-12;
        out.push_back(std::move(l));
    }
    return out;
}

}  // namespace simex
