// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <functional>
#include <iostream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simex/simex.hpp"

using namespace simex;

namespace {

struct Outcome {
    bool pass = true;
    std::string detail;
};

class Report {
public:
    void check(bool ok, const std::string& what) {
        pass_ = pass_ && ok;
        if (!ok) failures_.push_back(what);
    }
    void note(const std::string& s) { notes_.push_back(s); }
    Outcome outcome() const {
        std::string d;
        for (const auto& n : notes_) d += (d.empty() ? "" : "; ") + n;
        if (!failures_.empty()) {
            d += " | failed:";
            for (const auto& f : failures_) d += " [" + f + "]";
        }
        return {pass_, d};
    }

private:
    bool pass_ = true;
    std::vector<std::string> notes_, failures_;
};

std::string fmt(double v, int prec = 3) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string sci(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2e", v);
    return buf;
}

bool in(double v, double lo, double hi) { return v >= lo && v <= hi; }

const ConvergenceRecord& find(const std::vector<ConvergenceRecord>& recs, const std::string& method, const std::string& filter) {
    for (const auto& r : recs)
        if (r.method == method && r.filter == filter) return r;
    throw std::runtime_error("missing record " + method + " " + filter);
}

double slope_of(const ConvergenceRecord& r) { return r.slope ? *r.slope : std::nan(""); }

std::vector<double> heat_h_grid() {
    std::vector<double> h;
    for (int m = 0; m <= 4; ++m) h.push_back(0.1 * std::pow(2.0, -m));
    return h;
}

// 1. SIMEX with the exact filter against IMEX with a converged stage solver.
Outcome criterion1(unsigned) {
    Report rep;
    double worst = 0.0;
    std::size_t steps = 0;
    for (const auto& sys : {forced_heat_1d(10), adv_reac_diff_1d(10)})
        for (const auto& tab : shipped_tableaus()) {
            std::mt19937_64 g(2024);
            std::uniform_real_distribution<double> uh(0.005, 0.1), ut(0.0, 1.0), pert(-0.1, 0.1);
            StageCache<double> cache;
            for (int k = 0; k < 100; ++k) {
                const double t = ut(g), h = uh(g);
                auto y = sys.exact_solution(t);
                for (auto& v : y) v += pert(g);
                const auto a = simex_rk_step<double>(tab, sys, exact_filter<double>(), y, t, h, &cache);
                const auto b = imex_rk_step<double>(tab, sys, exact_filter<double>(), y, t, h, &cache);
                worst = std::max(worst, max_abs_diff<double>(a, b) / (1.0 + norm_inf<double>(y)));
                ++steps;
            }
        }
    rep.note(std::to_string(steps) + " steps, max ||simex-imex||/(1+||y||) = " + sci(worst));
    rep.check(worst <= 1e-12, "deviation above 1e-12");
    return rep.outcome();
}

// 2. Heat problem, SIMEX-ARK548 with jacobi(0..3).
Outcome criterion2(unsigned jobs) {
    Report rep;
    ConvergeConfig cfg;
    cfg.methods = {"simex"};
    cfg.h = heat_h_grid();
    cfg.jobs = jobs;
    const auto recs = converge_heat(cfg);
    std::string slopes;
    for (int n = 0; n <= 3; ++n) {
        const auto& r = find(recs, "simex", "jacobi(" + std::to_string(n) + ")");
        const double s = slope_of(r);
        slopes += (n ? " " : "") + fmt(s);
        rep.check(r.all_completed(), r.filter + " did not complete");
        rep.check(in(s, 4.7, 5.3), r.filter + " slope " + fmt(s));
    }
    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < cfg.h.size(); ++i) {
        double lo = INFINITY, hi = 0.0;
        for (const auto& r : recs) {
            lo = std::min(lo, r.points[i].error);
            hi = std::max(hi, r.points[i].error);
        }
        worst_ratio = std::max(worst_ratio, hi / lo);
    }
    rep.note("slopes jacobi(0..3) = " + slopes + ", max error ratio across filters = " + fmt(worst_ratio));
    rep.check(worst_ratio <= 2.0, "error-curve ratio " + fmt(worst_ratio));
    return rep.outcome();
}

// 3. Heat problem, IMEX-ARK548 order loss with few Jacobi sweeps.
Outcome criterion3(unsigned jobs) {
    Report rep;
    ConvergeConfig cfg;
    cfg.methods = {"imex"};
    cfg.filters = {"jacobi(0)", "jacobi(1)", "jacobi(3)"};
    cfg.h = heat_h_grid();
    cfg.jobs = jobs;
    const auto recs = converge_heat(cfg);
    const double s0 = slope_of(find(recs, "imex", "jacobi(0)"));
    const double s1 = slope_of(find(recs, "imex", "jacobi(1)"));
    const double s3 = slope_of(find(recs, "imex", "jacobi(3)"));
    rep.note("imex slopes jacobi(0) = " + fmt(s0) + ", jacobi(1) = " + fmt(s1) + ", jacobi(3) = " + fmt(s3));
    rep.check(in(s3, 4.7, 5.3), "jacobi(3) slope " + fmt(s3));
    rep.check(s0 <= 4.0, "jacobi(0) slope " + fmt(s0));
    rep.check(s1 <= 4.0, "jacobi(1) slope " + fmt(s1));
    return rep.outcome();
}

// 4. Nonlinear problem with Newton filters.
Outcome criterion4(unsigned jobs) {
    Report rep;
    ConvergeConfig cfg;
    cfg.h = heat_h_grid();
    cfg.jobs = jobs;
    const auto recs = converge_nonlinear(cfg);
    std::string slopes;
    for (int n = 0; n <= 3; ++n) {
        const auto& r = find(recs, "simex", "newton(" + std::to_string(n) + ")");
        const double s = slope_of(r);
        slopes += (n ? " " : "") + fmt(s);
        rep.check(in(s, 4.7, 5.3), "simex " + r.filter + " slope " + fmt(s));
    }
    const double i3 = slope_of(find(recs, "imex", "newton(3)"));
    const double i2 = slope_of(find(recs, "imex", "newton(2)"));
    rep.note("simex newton(0..3) = " + slopes + ", imex newton(3) = " + fmt(i3) + ", imex newton(2) = " + fmt(i2));
    rep.check(in(i3, 4.7, 5.3), "imex newton(3) slope " + fmt(i3));
    rep.check(in(i2, 3.5, 4.7), "imex newton(2) slope " + fmt(i2) + " outside [3.5, 4.7]");
    return rep.outcome();
}

// 5. Alternating filters within a step versus between steps.
Outcome criterion5(unsigned jobs) {
    Report rep;
    ConvergeConfig cfg;
    cfg.h = heat_h_grid();
    cfg.jobs = jobs;
    const auto recs = converge_alternation(cfg);
    const double bad = slope_of(recs[0]);
    const double ok = slope_of(recs[1]);
    rep.note("stage-alternating slope = " + fmt(bad) + ", step-alternating slope = " + fmt(ok) + ", exact control = " +
             fmt(slope_of(recs[2])));
    rep.check(in(bad, 3.7, 4.3), "stage-alternating slope " + fmt(bad) + " outside [3.7, 4.3]");
    rep.check(in(ok, 4.7, 5.3), "step-alternating slope " + fmt(ok));
    return rep.outcome();
}

// 6. Spectrum of the model matrix.
Outcome criterion6(unsigned) {
    Report rep;
    const double l50 = spectral_radius_estimate(model_matrix(50), 20000, 1);
    rep.note("lambda_max(A_50) ~ " + fmt(l50, 5));
    rep.check(std::abs(l50 - 0.999) <= 5e-4, "lambda_max(A_50) = " + fmt(l50, 5));
    std::vector<double> ln, lg;
    for (std::size_t n : {25, 50, 100}) {
        const double l = spectral_radius_estimate(model_matrix(n), 40000, 1);
        ln.push_back(std::log(static_cast<double>(n)));
        lg.push_back(std::log(1.0 - l));
    }
    const double mx = (ln[0] + ln[1] + ln[2]) / 3, my = (lg[0] + lg[1] + lg[2]) / 3;
    double sxy = 0, sxx = 0;
    for (int i = 0; i < 3; ++i) {
        sxy += (ln[i] - mx) * (lg[i] - my);
        sxx += (ln[i] - mx) * (ln[i] - mx);
    }
    const double slope = sxy / sxx;
    rep.note("slope of log(1 - lambda_max) vs log N = " + fmt(slope));
    rep.check(std::abs(slope + 2.0) <= 0.3, "gap slope " + fmt(slope));
    return rep.outcome();
}

// 7. Axis scans of the amplification factor, N = 50, 30 steps.
Outcome criterion7(unsigned) {
    Report rep;
    const double level = 1.0 + 1e-6;
    const std::uint64_t seed = 1;
    auto setup = [&](const ImexTableau& t, Filter<complex> f) {
        return AmplificationSetup{t, std::move(f), 50, 30, 1e3, AmpNorm::two, level};
    };

    const auto ilu = setup(ark436(), ilu_filter<complex>(0.02));
    const auto re = stable_extent_geometric(ilu, Axis::real, -1.0, 1.0, 1e4, 1.25, seed, 1e-3);
    const double crossing = re.crossed ? -re.extent : -INFINITY;
    rep.note("ark436+ilu(0.02) real crossing " + (re.crossed ? fmt(crossing, 1) : std::string("none")));
    rep.check(re.crossed && in(crossing, -708.0, -580.0), "ilu real crossing outside [-708, -580]");

    const auto im = stable_extent(ilu, Axis::imaginary, 1.0, 0.5, 16.0, seed, 1e-3);
    rep.note("ark436+ilu(0.02) imaginary stable to " + fmt(im.extent, 2));
    rep.check(!im.crossed, "ilu imaginary axis unstable at |z| = " + fmt(im.extent, 2) + " < 16");

    for (double omega : {1.0, 0.9}) {
        const auto gs = setup(ark436(), gs_filter<complex>(5, omega));
        const auto e = stable_extent(gs, Axis::imaginary, 1.0, 0.5, 35.0, seed, 1e-3);
        rep.note(gs.filter.name() + " imaginary stable to " + fmt(e.extent, 2));
        rep.check(!e.crossed, gs.filter.name() + " imaginary axis unstable at |z| = " + fmt(e.extent, 2) + " < 35");
    }

    const auto cn = setup(cnh(), exact_filter<complex>());
    const auto a = stable_extent_geometric(cn, Axis::real, -1.0, 1.0, 1e5, 1.25, seed, 1e-3);
    rep.note("cnh+exact real axis: " + std::string(a.crossed ? "crossing at -" + fmt(a.extent, 1) : "no crossing") +
             ", max amplification " + fmt(a.max_amplification, 6));
    rep.check(!a.crossed, "cnh+exact crossed the real axis");
    return rep.outcome();
}

// 8. Space-time refinement on the periodic advection-diffusion problem.
Outcome criterion8(unsigned jobs) {
    Report rep;
    Pde2dConfig cfg;
    cfg.methods = {"simex"};
    cfg.jobs = jobs;
    const auto res = pde2d(cfg);
    const double best = res.best.empty() ? std::nan("") : slope_of(res.best[0]);
    rep.note("best-filter slope = " + fmt(best));
    rep.check(in(best, 3.7, 4.3), "best-filter slope " + fmt(best));

    const auto& gs0 = find(res.records, "simex", "gs(0)");
    const bool gs0_ok = !gs0.points.empty() && gs0.points.front().grid_j == 1 && gs0.points.front().status == TraceStatus::completed;
    rep.check(gs0_ok, "gs(0) not stable at j = 1");

    std::set<std::string> tripped;
    for (const auto& r : res.records)
        for (const auto& p : r.points)
            if (p.grid_j >= 4 && p.status == TraceStatus::unstable) tripped.insert(r.filter + "@j" + std::to_string(p.grid_j));
    std::string list;
    for (const auto& t : tripped) list += (list.empty() ? "" : ",") + t;
    rep.note("guard trips at j>=4: " + (list.empty() ? std::string("none") : list));
    rep.check(!tripped.empty(), "no guard trip at j >= 4");

    rep.note("ILU fill ratio at N=" + std::to_string(res.finest_n) + " = " + fmt(res.ilu_fill_ratio, 4));
    rep.check(res.ilu_fill_ratio <= 1.3, "ILU fill ratio " + fmt(res.ilu_fill_ratio, 4));
    return rep.outcome();
}

// 9. Property checks across modules.
double loglog(const std::vector<double>& x, const std::vector<double>& y) {
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += std::log(x[i]);
        my += std::log(y[i]);
    }
    mx /= static_cast<double>(x.size());
    my /= static_cast<double>(y.size());
    double sxy = 0, sxx = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (std::log(x[i]) - mx) * (std::log(y[i]) - my);
        sxx += (std::log(x[i]) - mx) * (std::log(x[i]) - mx);
    }
    return sxy / sxx;
}

Outcome criterion9(unsigned) {
    Report rep;

    for (const auto& l : tableau_check()) rep.check(l.ok, "tableau " + l.tableau);

    std::vector<Filter<double>> linear{default_filter<double>(), jacobi_filter<double>(0), jacobi_filter<double>(3),
                                       gs_filter<double>(5),     gs_filter<double>(5, 0.9), ats_filter<double>(2),
                                       ilu_filter<double>(0.02)};
    std::vector<Filter<double>> all = linear;
    for (auto f : {cgs_filter<double>(2, 0.02), newton_filter<double>(2), exact_filter<double>()}) all.push_back(f);

    // Matrix-based filters need a linear implicit part; the nonlinear system gets the Newton family.
    const std::vector<Filter<double>> nonlinear{newton_filter<double>(0), newton_filter<double>(2), exact_filter<double>()};
    int filter_checks = 0;
    for (const auto& sys : {forced_heat_1d(10), adv_reac_diff_1d(10)}) {
        std::mt19937_64 g(5);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::vector<double> y(sys.dim), r(sys.dim), zero(sys.dim, 0.0);
        for (auto& v : y) v = u(g);
        for (auto& v : r) v = u(g);
        const auto k1 = sys.f_impl(y, 0.3);
        for (const auto& f : sys.has_linear_implicit_part() ? all : nonlinear) {
            StageCache<double> cache;
            const StageContext<double> ctx{sys, y, k1, 0.05 * ark548().gamma, 0.3, &cache};
            const auto z = f(ctx, zero);
            rep.check(norm_inf<double>(z) == 0.0, "F(0) != 0 for " + f.name() + " on " + sys.name);
            const auto a = f(ctx, r);
            const auto b = f(ctx, r);
            rep.check(std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0, "nondeterministic " + f.name());
            ++filter_checks;
        }
    }

    int certified = 0;
    for (double h : {0.1, 0.05, 0.0125}) {
        const auto sys = forced_heat_1d(10);
        const double hg = h * ark548().gamma;
        std::vector<double> y(9, 0.1), r1(9), r2(9), comb(9);
        std::mt19937_64 g(9);
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        for (std::size_t i = 0; i < 9; ++i) {
            r1[i] = u(g);
            r2[i] = u(g);
            comb[i] = 0.7 * r1[i] - 1.3 * r2[i];
        }
        const auto k1 = sys.f_impl(y, 0.0);
        const auto a = sys.jacobian(y, 0.0);
        for (const auto& f : linear) {
            StageCache<double> cache;
            const StageContext<double> ctx{sys, y, k1, hg, 0.0, &cache};
            const auto fc = f(ctx, comb), f1 = f(ctx, r1), f2 = f(ctx, r2);
            double dev = 0.0;
            for (std::size_t i = 0; i < 9; ++i) dev = std::max(dev, std::abs(fc[i] - (0.7 * f1[i] - 1.3 * f2[i])));
            rep.check(dev < 1e-12, "linearity " + f.name());
            const auto margin = nonsingularity_margin<double>(filter_as_matrix(f, ctx), a, hg);
            rep.check(margin.certified(), "margin not certified for " + f.name() + " h=" + fmt(h, 4));
            certified += margin.certified();
        }
    }

    double forcing = 0.0;
    {
        std::mt19937_64 g(11);
        std::uniform_real_distribution<double> ux(0.0, std::numbers::pi), ut(0.0, 1.0);
        const double d = 1e-3;
        auto d1 = [d](const std::function<double(double)>& f, double x) {
            return (-f(x + 2 * d) + 8 * f(x + d) - 8 * f(x - d) + f(x - 2 * d)) / (12 * d);
        };
        auto d2 = [d](const std::function<double(double)>& f, double x) {
            return (-f(x + 2 * d) + 16 * f(x + d) - 30 * f(x) + 16 * f(x - d) - f(x - 2 * d)) / (12 * d * d);
        };
        using W1 = exact::Wave1d;
        using W2 = exact::Wave2d;
        for (int k = 0; k < 20; ++k) {
            const double x = ux(g), x2 = ux(g), t = ut(g);
            const double u = W1::u(x, t);
            const double u_t = d1([&](double s) { return W1::u(x, s); }, t);
            const double u_x = d1([&](double s) { return W1::u(s, t); }, x);
            const double u_xx = d2([&](double s) { return W1::u(s, t); }, x);
            forcing = std::max(forcing, std::abs(u_t - u_xx - W1::heat_forcing(x, t)));
            forcing = std::max(forcing, std::abs(u_t + u * u_x - u_xx - (1.1 - u * u) * u - W1::nonlinear_forcing(x, t)));
            const double v_t = d1([&](double s) { return W2::u(x, x2, s); }, t);
            const double v_1 = d1([&](double s) { return W2::u(s, x2, t); }, x);
            const double v_2 = d1([&](double s) { return W2::u(x, s, t); }, x2);
            const double lap = d2([&](double s) { return W2::u(s, x2, t); }, x) + d2([&](double s) { return W2::u(x, s, t); }, x2);
            forcing = std::max(forcing, std::abs(v_t + W2::v1 * v_1 + W2::v2 * v_2 - W2::diffusion * lap - W2::forcing(x, x2, t)));
        }
    }
    rep.check(forcing < 1e-6, "forcing residual " + sci(forcing));

    struct StencilCase {
        StencilKind kind;
        double order;
        const char* name;
    };
    std::string orders;
    for (const auto& c : {StencilCase{StencilKind::laplacian2d_o2_5pt_periodic, 2, "5pt"},
                          StencilCase{StencilKind::laplacian2d_o4_cross9_periodic, 4, "cross9"},
                          StencilCase{StencilKind::gradient2d_o4_periodic, 4, "grad4"}}) {
        std::vector<double> hs, errs;
        for (std::size_t n : {16, 32, 64}) {
            const double dx = std::numbers::pi / static_cast<double>(n);
            const auto op = build_stencil(c.kind, n, dx, 0);
            std::vector<double> u(n * n), want(n * n);
            for (std::size_t j = 0; j < n; ++j)
                for (std::size_t i = 0; i < n; ++i) {
                    const double x1 = static_cast<double>(i) * dx, x2 = static_cast<double>(j) * dx;
                    u[grid_index(i, j, n)] = std::sin(2 * x1) * std::cos(2 * x2);
                    want[grid_index(i, j, n)] = c.kind == StencilKind::gradient2d_o4_periodic ? 2 * std::cos(2 * x1) * std::cos(2 * x2)
                                                                                             : -8 * std::sin(2 * x1) * std::cos(2 * x2);
                }
            hs.push_back(dx);
            errs.push_back(max_abs_diff<double>(op * std::span<const double>(u), want));
        }
        const double s = loglog(hs, errs);
        orders += std::string(orders.empty() ? "" : " ") + c.name + "=" + fmt(s, 2);
        rep.check(std::abs(s - c.order) <= 0.3, std::string("stencil order ") + c.name + " " + fmt(s, 2));
    }

    double conj_dev = 0.0;
    for (const auto& f : {gs_filter<complex>(5), ilu_filter<complex>(0.02), default_filter<complex>()}) {
        AmplificationSetup s{ark436(), f, 12, 30};
        for (const auto z : {complex(-40.0, 25.0), complex(-3.0, 7.0), complex(-600.0, 300.0)})
            conj_dev = std::max(conj_dev, std::abs(amplification(s, z, 3) - amplification(s, std::conj(z), 3)));
    }
    rep.check(conj_dev <= 1e-10, "conjugate symmetry " + sci(conj_dev));

    rep.note("tableaus ok; " + std::to_string(filter_checks) + " filter F(0)/determinism checks; " + std::to_string(certified) +
             " margin certificates; forcing residual " + sci(forcing) + "; stencil orders " + orders +
             "; conjugate deviation " + sci(conj_dev));
    return rep.outcome();
}

struct Criterion {
    int id;
    double budget_seconds;
    std::function<Outcome(unsigned)> run;
};

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    unsigned jobs = 1;
    std::vector<int> only;
    app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--only", only, "run only these criteria (repeatable)")->check(CLI::Range(1, 9));
    CLI11_PARSE(app, argc, argv);

    const std::vector<Criterion> criteria{{1, 10, criterion1},  {2, 30, criterion2},  {3, 30, criterion3},
                                          {4, 120, criterion4}, {5, 30, criterion5},  {6, 10, criterion6},
                                          {7, 900, criterion7}, {8, 1200, criterion8}, {9, 120, criterion9}};
    bool all = true;
    for (const auto& c : criteria) {
        if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run(jobs);
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = secs < c.budget_seconds;
        const bool pass = o.pass && in_budget;
        all = all && pass;
        std::cout << "Criterion " << c.id << ": " << (pass ? "PASS" : "FAIL") << " (" << fmt(secs, 1) << " s, budget "
                  << fmt(c.budget_seconds, 0) << " s" << (in_budget ? "" : ", over budget") << ") " << o.detail << std::endl;
    }
    return all ? 0 : 1;
}
