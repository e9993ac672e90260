#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "simex/integrator.hpp"

namespace simex {

struct ConvergencePoint {
    double h = 0.0;
    double error = std::numeric_limits<double>::quiet_NaN();  // NaN when not completed
    TraceStatus status = TraceStatus::completed;
    double seconds = 0.0;
    int grid_j = 0;  // grid index for space-time refinement runs, else 0
};

struct ConvergenceRecord {
    std::string method;  // "imex" or "simex"
    std::string tableau;
    std::string filter;
    std::vector<ConvergencePoint> points;
    std::optional<double> slope;
    std::size_t fit_points = 3;  // smallest completed h used by the fit; 0 = all

    bool all_completed() const {
        return std::all_of(points.begin(), points.end(), [](const auto& p) { return p.status == TraceStatus::completed; });
    }
};

/// Least-squares slope of log10(error) against log10(h) over the `use_smallest`
/// smallest completed h (all completed points when 0). Needs three points.
inline std::optional<double> fit_slope(const std::vector<ConvergencePoint>& pts, std::size_t use_smallest = 3) {
    std::vector<ConvergencePoint> ok;
    for (const auto& p : pts)
        if (p.status == TraceStatus::completed && p.error > 0.0 && std::isfinite(p.error)) ok.push_back(p);
    std::sort(ok.begin(), ok.end(), [](const auto& a, const auto& b) { return a.h < b.h; });
    if (use_smallest && ok.size() > use_smallest) ok.resize(use_smallest);
    if (ok.size() < 3) return std::nullopt;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const double n = static_cast<double>(ok.size());
    for (const auto& p : ok) {
        const double x = std::log10(p.h), y = std::log10(p.error);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double den = n * sxx - sx * sx;
    if (den == 0.0) return std::nullopt;
    return (n * sxy - sx * sy) / den;
}

inline void refit(ConvergenceRecord& r) { r.slope = fit_slope(r.points, r.fit_points); }

inline TraceStatus parse_status(const std::string& s) {
    if (s == "completed") return TraceStatus::completed;
    if (s == "unstable") return TraceStatus::unstable;
    if (s == "solver_failure") return TraceStatus::solver_failure;
    throw std::runtime_error("unknown status '" + s + "'");
}

namespace detail {

inline std::string fmt17(double v) {
    if (std::isnan(v)) return "";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline double parse17(const std::string& s) {
    if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::runtime_error("bad number '" + s + "'");
    return v;
}

// Filter names contain commas (e.g. gs(5,0.9)); quote fields that need it.
inline std::string quote(const std::string& s) {
    return s.find(',') == std::string::npos ? s : "\"" + s + "\"";
}

inline std::vector<std::string> split_csv_quoted(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool in_quotes = false;
    for (char c : line) {
        if (c == '"') in_quotes = !in_quotes;
        else if (c == ',' && !in_quotes) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (in_quotes) throw std::runtime_error("unterminated quote in csv row");
    out.push_back(cur);
    return out;
}

inline ConvergenceRecord& find_or_add(std::vector<ConvergenceRecord>& recs, const std::string& m, const std::string& t,
                                      const std::string& f) {
    for (auto& r : recs)
        if (r.method == m && r.tableau == t && r.filter == f) return r;
    recs.push_back({m, t, f, {}, std::nullopt, 3});
    return recs.back();
}

}  // namespace detail

/// `method,tableau,filter,h,error,status`
inline void write_convergence_csv(const std::vector<ConvergenceRecord>& recs, std::ostream& os) {
    os << "method,tableau,filter,h,error,status\n";
    for (const auto& r : recs)
        for (const auto& p : r.points)
            os << r.method << ',' << r.tableau << ',' << detail::quote(r.filter) << ',' << detail::fmt17(p.h) << ','
               << detail::fmt17(p.error) << ',' << to_string(p.status) << '\n';
}

inline std::vector<ConvergenceRecord> read_convergence_csv(std::istream& is, std::size_t fit_points = 3) {
    std::string line;
    if (!std::getline(is, line) || line != "method,tableau,filter,h,error,status")
        throw std::runtime_error("convergence csv: bad header");
    std::vector<ConvergenceRecord> recs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_quoted(line);
        if (f.size() != 6) throw std::runtime_error("convergence csv: expected 6 fields in '" + line + "'");
        auto& r = detail::find_or_add(recs, f[0], f[1], f[2]);
        r.points.push_back({detail::parse17(f[3]), detail::parse17(f[4]), parse_status(f[5]), 0.0, 0});
    }
    for (auto& r : recs) {
        r.fit_points = fit_points;
        refit(r);
    }
    return recs;
}

/// `method,filter,j,h,error,seconds,status`
inline void write_pde2d_csv(const std::vector<ConvergenceRecord>& recs, std::ostream& os) {
    os << "method,filter,j,h,error,seconds,status\n";
    for (const auto& r : recs)
        for (const auto& p : r.points)
            os << r.method << ',' << detail::quote(r.filter) << ',' << p.grid_j << ',' << detail::fmt17(p.h) << ','
               << detail::fmt17(p.error) << ',' << detail::fmt17(p.seconds) << ',' << to_string(p.status) << '\n';
}

inline std::vector<ConvergenceRecord> read_pde2d_csv(std::istream& is, const std::string& tableau, std::size_t fit_points = 3) {
    std::string line;
    if (!std::getline(is, line) || line != "method,filter,j,h,error,seconds,status")
        throw std::runtime_error("pde2d csv: bad header");
    std::vector<ConvergenceRecord> recs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        const auto f = detail::split_csv_quoted(line);
        if (f.size() != 7) throw std::runtime_error("pde2d csv: expected 7 fields in '" + line + "'");
        auto& r = detail::find_or_add(recs, f[0], tableau, f[1]);
        r.points.push_back({detail::parse17(f[3]), detail::parse17(f[4]), parse_status(f[6]), detail::parse17(f[5]),
                            std::stoi(f[2])});
    }
    for (auto& r : recs) {
        r.fit_points = fit_points;
        refit(r);
    }
    return recs;
}

}  // namespace simex
