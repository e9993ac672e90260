#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "simex/simex.hpp"

namespace fs = std::filesystem;
using namespace simex;

namespace {

struct Options {
    std::string command;
    std::string tableau;
    std::vector<std::string> methods;
    std::vector<std::string> filters;
    std::vector<double> h;
    std::vector<int> grid_j;
    std::size_t grid_n = 0;
    double t_end = 1.0;
    std::uint64_t seed = 1;
    std::string out = "out";
    unsigned jobs = 1;
    double guard = 1e3;
    std::size_t fit_points = 3;
    bool allow_large = false;

    // stability-region
    std::size_t model_n = 50;
    int steps = 30;
    double re_min = -60, re_max = 10, im_min = -40, im_max = 40;
    std::size_t res_re = 36, res_im = 36;
    std::string amp_norm = "two";
    double re_limit = 1e4;
    double im_limit = 100;
    bool skip_map = false;
    double scan_level = 1.0 + 1e-6;
};

std::string slug(const std::string& s) {
    std::string o;
    for (char c : s) o += std::isalnum(static_cast<unsigned char>(c)) || c == '.' ? c : '_';
    while (!o.empty() && o.back() == '_') o.pop_back();
    return o;
}

std::string fmt(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string slope_text(const ConvergenceRecord& r) { return r.slope ? fmt(*r.slope, 3) : "n/a"; }

std::string status_text(const ConvergenceRecord& r) {
    std::size_t bad = 0;
    for (const auto& p : r.points)
        if (p.status != TraceStatus::completed) ++bad;
    return bad ? std::to_string(bad) + "/" + std::to_string(r.points.size()) + " not completed" : "all completed";
}

void write_record_summary(std::ostream& os, const std::vector<ConvergenceRecord>& recs) {
    for (const auto& r : recs)
        os << r.method << ' ' << r.tableau << ' ' << r.filter << " slope=" << slope_text(r) << " fit="
           << (r.fit_points ? std::to_string(r.fit_points) + "-smallest-h" : std::string("all")) << " status=" << status_text(r)
           << '\n';
}

ConvergeConfig converge_config(const Options& o, const std::string& default_tableau) {
    ConvergeConfig c;
    c.tableau = o.tableau.empty() ? default_tableau : o.tableau;
    if (!o.methods.empty()) c.methods = o.methods;
    c.filters = o.filters;
    if (!o.h.empty()) c.h = o.h;
    if (o.grid_n) c.grid_n = o.grid_n;
    c.t_end = o.t_end;
    c.guard = o.guard;
    c.fit_points = o.fit_points;
    c.jobs = o.jobs;
    return c;
}

int run_converge(const Options& o, std::ostream& summary) {
    const auto cfg = converge_config(o, "ark548");
    std::vector<ConvergenceRecord> recs;
    if (o.command == "converge-heat") recs = converge_heat(cfg);
    else if (o.command == "converge-nonlinear") recs = converge_nonlinear(cfg);
    else recs = converge_alternation(cfg);
    std::ofstream csv(fs::path(o.out) / "convergence.csv");
    write_convergence_csv(recs, csv);
    summary << o.command << " tableau=" << cfg.tableau << " N=" << cfg.grid_n << " t_end=" << cfg.t_end << '\n';
    write_record_summary(summary, recs);
    return 0;
}

int run_pde2d(const Options& o, std::ostream& summary) {
    Pde2dConfig cfg;
    if (!o.tableau.empty()) cfg.tableau = o.tableau;
    if (!o.methods.empty()) cfg.methods = o.methods;
    if (!o.filters.empty()) cfg.filters = o.filters;
    if (!o.grid_j.empty()) cfg.grid_j = o.grid_j;
    cfg.t_end = o.t_end;
    cfg.guard = o.guard;
    cfg.fit_points = o.fit_points;
    cfg.jobs = o.jobs;
    for (int j : cfg.grid_j)
        if (j >= 6) {
            if (!o.allow_large) throw std::invalid_argument("grid index " + std::to_string(j) + " needs --allow-large");
            std::cerr << "warning: grid j=" << j << " has " << pde2d_grid_n(j) * pde2d_grid_n(j)
                      << " unknowns; expect a long run\n";
        }
    const auto res = pde2d(cfg);
    std::ofstream csv(fs::path(o.out) / "pde2d.csv");
    write_pde2d_csv(res.records, csv);
    summary << "pde2d tableau=" << cfg.tableau << " t_end=" << cfg.t_end << " guard=" << cfg.guard << '\n';
    write_record_summary(summary, res.records);
    write_record_summary(summary, res.best);
    for (const auto& l : res.best_filter_names) summary << "best " << l << '\n';
    summary << "ilu_fill_ratio N=" << res.finest_n << " (nnz(L)+nnz(U))/(9N^2)=" << fmt(res.ilu_fill_ratio, 4) << '\n';
    return 0;
}

int run_stability(const Options& o, std::ostream& summary) {
    const std::string tab_name = o.tableau.empty() ? "ark436" : o.tableau;
    const auto tab = tableau_by_name(tab_name);
    const std::vector<std::string> filters = o.filters.empty() ? std::vector<std::string>{"ilu(0.02)"} : o.filters;
    AmpNorm norm;
    if (o.amp_norm == "two") norm = AmpNorm::two;
    else if (o.amp_norm == "inf") norm = AmpNorm::inf;
    else throw std::invalid_argument("--amp-norm must be 'two' or 'inf'");
    summary << "stability-region tableau=" << tab.name << " N=" << o.model_n << " steps=" << o.steps << " seed=" << o.seed
            << " norm=" << to_string(norm) << " scan_level=" << std::to_string(o.scan_level) << '\n';
    for (const auto& fname : filters) {
        AmplificationSetup s{tab, make_filter<complex>(fname), o.model_n, o.steps, o.guard, norm, o.scan_level};
        const std::string tag = slug(s.filter.name());
        if (!o.skip_map) {
            const auto map = region_map(s, {o.re_min, o.re_max, o.im_min, o.im_max, o.res_re, o.res_im}, o.seed, o.jobs);
            std::ofstream rc(fs::path(o.out) / ("region_" + tab.name + "_" + tag + ".csv"));
            write_region_csv(map, rc);
            std::ofstream cc(fs::path(o.out) / ("contours_" + tab.name + "_" + tag + ".csv"));
            write_contours_csv(map.contours, cc);
            summary << s.filter.name() << " map " << o.res_re << "x" << o.res_im << " contours=" << map.contours.size() << '\n';
        }
        const auto re = stable_extent_geometric(s, Axis::real, -1.0, 1.0, o.re_limit, 1.25, o.seed, 1e-3);
        const auto im = stable_extent(s, Axis::imaginary, 1.0, 0.5, o.im_limit, o.seed, 1e-3);
        summary << s.filter.name() << " real_axis_crossing="
                << (re.crossed ? "-" + fmt(re.extent, 3) : "none in [-" + fmt(o.re_limit, 0) + ",-1]")
                << " imag_axis_stable_to=" << fmt(im.extent, 3) << (im.crossed ? "" : " (scan limit)") << '\n';
    }
    return 0;
}

int run_tableau_check(std::ostream& summary) {
    bool ok = true;
    for (const auto& l : tableau_check()) {
        summary << l.tableau << " gamma=" << l.gamma << " violations=" << l.violations.size()
                << " max_order_residual(p<=" << l.checked_order << ")=" << l.residuals.max_abs(l.checked_order)
                << (l.ok ? " PASS" : " FAIL") << '\n';
        for (const auto& v : l.violations) summary << "  " << v.describe() << '\n';
        ok = ok && l.ok;
    }
    for (const auto& t : shipped_tableaus()) summary << format_tableau(t, 6);
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SIMEX-RK experiments"};
    app.set_help_flag("--help", "print this help message and exit");
    app.require_subcommand(0, 1);
    app.fallthrough();
    app.set_config("--config", "", "flat key = value run configuration");
    app.allow_config_extras(false);
    app.option_defaults()->always_capture_default();

    Options o;
    bool print_config = false;
    app.add_option("--command", o.command, "command to run when no subcommand is given");
    app.add_option("--tableau", o.tableau, "cnh, ark436 or ark548");
    app.add_option("--method", o.methods, "simex and/or imex (repeatable)")->default_str("");
    app.add_option("--filter", o.filters, "filter spec, e.g. jacobi(3), gs(5,0.9), ilu(0.02), cgs(2,0.02) (repeatable)")->default_str("");
    app.add_option("--h", o.h, "step size (repeatable)")->check(CLI::PositiveNumber)->default_str("");
    app.add_option("--grid-j", o.grid_j, "space-time grid index j, N = 5*2^j (repeatable)")->default_str("");
    app.add_option("--grid-n", o.grid_n, "1D grid intervals (default 10)");
    app.add_option("--t-end", o.t_end, "final time")->check(CLI::PositiveNumber);
    app.add_option("--seed", o.seed, "random seed");
    app.add_option("--out", o.out, "output directory");
    app.add_option("--jobs", o.jobs, "worker threads")->check(CLI::PositiveNumber);
    app.add_option("--guard", o.guard, "instability threshold on any component")->check(CLI::PositiveNumber);
    app.add_option("--fit-points", o.fit_points, "smallest completed h used for slopes (0 = all)");
    app.add_flag("--allow-large", o.allow_large, "permit grid indices j >= 6");
    app.add_option("--model-n", o.model_n, "model grid size N for stability scans")->check(CLI::Range(4, 400));
    app.add_option("--steps", o.steps, "steps per amplification run")->check(CLI::Range(2, 100000));
    app.add_option("--re-min", o.re_min);
    app.add_option("--re-max", o.re_max);
    app.add_option("--im-min", o.im_min);
    app.add_option("--im-max", o.im_max);
    app.add_option("--res-re", o.res_re)->check(CLI::Range(8, 4096));
    app.add_option("--res-im", o.res_im)->check(CLI::Range(8, 4096));
    app.add_option("--amp-norm", o.amp_norm, "two or inf");
    app.add_option("--re-limit", o.re_limit, "real-axis scan limit |z|")->check(CLI::PositiveNumber);
    app.add_option("--im-limit", o.im_limit, "imaginary-axis scan limit |z|")->check(CLI::PositiveNumber);
    app.add_option("--scan-level", o.scan_level, "axis scans count amplification above this as unstable")
        ->check(CLI::PositiveNumber)
        ->default_str("1.000001");
    app.add_flag("--skip-map", o.skip_map, "axis scans only");
    app.add_flag("--print-config", print_config, "print the effective configuration and exit")->configurable(false);

    const std::vector<std::string> commands{"converge-heat", "converge-nonlinear", "converge-alternation",
                                            "stability-region", "pde2d", "tableau-check"};
    for (const auto& c : commands) app.add_subcommand(c)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    for (auto* sub : app.get_subcommands()) o.command = sub->get_name();

    if (print_config) {
        std::cout << app.config_to_str(true, false);
        return 0;
    }
    if (std::find(commands.begin(), commands.end(), o.command) == commands.end()) {
        std::cerr << "error: choose a command: ";
        for (const auto& c : commands) std::cerr << c << ' ';
        std::cerr << '\n';
        return 2;
    }

    try {
        fs::create_directories(o.out);
        std::ostringstream summary;
        int rc = 0;
        if (o.command == "pde2d") rc = run_pde2d(o, summary);
        else if (o.command == "stability-region") rc = run_stability(o, summary);
        else if (o.command == "tableau-check") rc = run_tableau_check(summary);
        else rc = run_converge(o, summary);
        std::ofstream(fs::path(o.out) / "summary.txt") << summary.str();
        std::cout << summary.str();
        return rc;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
