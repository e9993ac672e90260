#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <exception>
#include <optional>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "simex/integrator.hpp"
#include "simex/problems.hpp"

namespace simex {

inline constexpr double kUnstableSentinel = 1e6;

/// Uniform [-1, 1] components scaled to unit inf-norm.
inline Vector<complex> random_unit_state(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    Vector<complex> y(n);
    double m = 0.0;
    for (auto& v : y) {
        const double x = dist(gen);
        v = complex(x, 0.0);
        m = std::max(m, std::abs(x));
    }
    if (m == 0.0) {
        y[0] = 1.0;
        m = 1.0;
    }
    for (auto& v : y) v /= m;
    return y;
}

/// splitmix64 finalizer; used to derive independent per-point seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Norm of the last-step ratio.
enum class AmpNorm { two, inf };

inline const char* to_string(AmpNorm n) { return n == AmpNorm::two ? "two" : "inf"; }

struct AmplificationSetup {
    ImexTableau tableau;
    Filter<complex> filter;
    std::size_t n = 50;
    int steps = 30;
    double guard = 1e3;
    AmpNorm norm = AmpNorm::two;
    double level = 1.0;  // axis scans treat amplification > level as unstable
};

/// ||y_steps|| / ||y_{steps-1}|| for SIMEX with h = 1 on dy/dt = z A_N y from
/// a seeded random state with unit inf-norm. Guard trips (inf-norm) and filter
/// failures give the sentinel.
inline double amplification(const AmplificationSetup& s, complex z, std::uint64_t seed) {
    if (s.steps < 2) throw std::invalid_argument("amplification: steps must be >= 2");
    const auto sys = model_2d(z, s.n);
    auto y = random_unit_state(sys.dim, seed);
    StageCache<complex> cache;
    auto measure = [&](const Vector<complex>& v) { return s.norm == AmpNorm::two ? norm2<complex>(v) : norm_inf<complex>(v); };
    double prev = measure(y);
    double last = prev;
    try {
        for (int k = 0; k < s.steps; ++k) {
            y = simex_rk_step<complex>(s.tableau, sys, s.filter, y, static_cast<double>(k), 1.0, &cache);
            if (!(norm_inf<complex>(y) <= s.guard)) return kUnstableSentinel;
            prev = last;
            last = measure(y);
        }
    } catch (const SolverError&) {
        return kUnstableSentinel;
    }
    if (prev == 0.0) return last == 0.0 ? 1.0 : kUnstableSentinel;
    return last / prev;
}

/// Runs fn(i) for i in [0, count) on up to `jobs` threads. Each index is
/// handled exactly once, so results written by index are schedule-independent.
template <class Fn>
void parallel_for(std::size_t count, unsigned jobs, Fn&& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr error;
    std::mutex error_mutex;
    std::vector<std::thread> pool;
    const unsigned workers = static_cast<unsigned>(std::min<std::size_t>(jobs, count));
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i; (i = next.fetch_add(1)) < count;) {
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard lock(error_mutex);
                    if (!error) error = std::current_exception();
                }
            }
        });
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

struct ContourPoint {
    double re = 0.0;
    double im = 0.0;
};
using Contour = std::vector<ContourPoint>;

struct RegionMap {
    double re_min = 0, re_max = 0, im_min = 0, im_max = 0;
    std::size_t n_re = 0, n_im = 0;
    std::uint64_t seed = 0;
    std::vector<double> values;    // raw amplification, row-major with re fastest
    std::vector<double> smoothed;  // after low-pass filtering
    std::vector<Contour> contours; // level-1 curves of the smoothed field

    double re_at(std::size_t i) const { return n_re == 1 ? re_min : re_min + (re_max - re_min) * static_cast<double>(i) / static_cast<double>(n_re - 1); }
    double im_at(std::size_t j) const { return n_im == 1 ? im_min : im_min + (im_max - im_min) * static_cast<double>(j) / static_cast<double>(n_im - 1); }
    double value(std::size_t i, std::size_t j) const { return values[j * n_re + i]; }
};

/// Two passes of a 3x3 box blur with edge replication.
inline std::vector<double> box_blur(std::span<const double> v, std::size_t nx, std::size_t ny, int passes = 2) {
    std::vector<double> cur(v.begin(), v.end()), nxt(v.size());
    auto at = [&](long i, long j) {
        i = std::clamp<long>(i, 0, static_cast<long>(nx) - 1);
        j = std::clamp<long>(j, 0, static_cast<long>(ny) - 1);
        return cur[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)];
    };
    for (int p = 0; p < passes; ++p) {
        for (long j = 0; j < static_cast<long>(ny); ++j)
            for (long i = 0; i < static_cast<long>(nx); ++i) {
                double acc = 0.0;
                for (long dj = -1; dj <= 1; ++dj)
                    for (long di = -1; di <= 1; ++di) acc += at(i + di, j + dj);
                nxt[static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i)] = acc / 9.0;
            }
        std::swap(cur, nxt);
    }
    return cur;
}

/// Marching squares at `level` with linear interpolation on cell edges.
/// Segments are chained into polylines; closed curves repeat their first point.
/// Coordinates are returned in grid units (x = column, y = row).
inline std::vector<Contour> marching_squares(std::span<const double> v, std::size_t nx, std::size_t ny, double level) {
    if (nx < 2 || ny < 2) return {};
    auto val = [&](std::size_t i, std::size_t j) { return v[j * nx + i]; };
    // Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
    auto h_edge = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i); };
    auto v_edge = [&](std::size_t i, std::size_t j) { return 2 * (j * nx + i) + 1; };
    std::map<std::size_t, ContourPoint> points;
    auto crossing = [&](std::size_t id) -> ContourPoint {
        auto it = points.find(id);
        if (it != points.end()) return it->second;
        const std::size_t node = id / 2;
        const std::size_t i = node % nx, j = node / nx;
        const bool horiz = id % 2 == 0;
        const double a = val(i, j);
        const double b = horiz ? val(i + 1, j) : val(i, j + 1);
        const double t = (a == b) ? 0.5 : std::clamp((level - a) / (b - a), 0.0, 1.0);
        ContourPoint p = horiz ? ContourPoint{static_cast<double>(i) + t, static_cast<double>(j)}
                               : ContourPoint{static_cast<double>(i), static_cast<double>(j) + t};
        points.emplace(id, p);
        return p;
    };

    std::multimap<std::size_t, std::size_t> adjacency;
    std::vector<std::pair<std::size_t, std::size_t>> segments;
    for (std::size_t j = 0; j + 1 < ny; ++j)
        for (std::size_t i = 0; i + 1 < nx; ++i) {
            const double v0 = val(i, j), v1 = val(i + 1, j), v2 = val(i + 1, j + 1), v3 = val(i, j + 1);
            const int code = (v0 >= level) | ((v1 >= level) << 1) | ((v2 >= level) << 2) | ((v3 >= level) << 3);
            if (code == 0 || code == 15) continue;
            const std::size_t bottom = h_edge(i, j), right = v_edge(i + 1, j), top = h_edge(i, j + 1), left = v_edge(i, j);
            auto seg = [&](std::size_t a, std::size_t b) { segments.emplace_back(a, b); };
            const bool center_high = (v0 + v1 + v2 + v3) / 4.0 >= level;
            switch (code) {
                case 1: case 14: seg(left, bottom); break;
                case 2: case 13: seg(bottom, right); break;
                case 3: case 12: seg(left, right); break;
                case 4: case 11: seg(right, top); break;
                case 6: case 9: seg(bottom, top); break;
                case 7: case 8: seg(left, top); break;
                case 5:
                    if (center_high) { seg(left, top); seg(bottom, right); }
                    else { seg(left, bottom); seg(right, top); }
                    break;
                case 10:
                    if (center_high) { seg(left, bottom); seg(right, top); }
                    else { seg(left, top); seg(bottom, right); }
                    break;
                default: break;
            }
        }
    for (std::size_t s = 0; s < segments.size(); ++s) {
        adjacency.emplace(segments[s].first, s);
        adjacency.emplace(segments[s].second, s);
    }

    std::vector<char> used(segments.size(), 0);
    auto next_segment = [&](std::size_t edge) -> std::optional<std::size_t> {
        auto [lo, hi] = adjacency.equal_range(edge);
        for (auto it = lo; it != hi; ++it)
            if (!used[it->second]) return it->second;
        return std::nullopt;
    };
    auto walk = [&](std::size_t edge, std::vector<std::size_t>& chain) {
        while (auto s = next_segment(edge)) {
            used[*s] = 1;
            edge = segments[*s].first == edge ? segments[*s].second : segments[*s].first;
            chain.push_back(edge);
        }
    };

    std::vector<Contour> out;
    auto degree = [&](std::size_t edge) { return adjacency.count(edge); };
    // Open chains start at edges with a single incident segment (the grid border).
    for (int pass = 0; pass < 2; ++pass)
        for (std::size_t s = 0; s < segments.size(); ++s) {
            if (used[s]) continue;
            std::size_t start = segments[s].first;
            if (pass == 0) {
                if (degree(segments[s].first) == 1) start = segments[s].first;
                else if (degree(segments[s].second) == 1) start = segments[s].second;
                else continue;
            }
            std::vector<std::size_t> chain{start};
            walk(start, chain);
            Contour c;
            for (auto e : chain) c.push_back(crossing(e));
            out.push_back(std::move(c));
        }
    return out;
}

/// Even-odd point-in-polygon test for a closed contour.
inline bool inside_contour(const Contour& c, double x, double y) {
    bool in = false;
    for (std::size_t i = 0, j = c.size() - 1; i < c.size(); j = i++) {
        const auto& a = c[i];
        const auto& b = c[j];
        if ((a.im > y) != (b.im > y) && x < (b.re - a.re) * (y - a.im) / (b.im - a.im) + a.re) in = !in;
    }
    return in;
}

inline bool is_closed(const Contour& c) {
    return c.size() > 3 && c.front().re == c.back().re && c.front().im == c.back().im;
}

struct RegionWindow {
    double re_min = -100, re_max = 20, im_min = -60, im_max = 60;
    std::size_t n_re = 64, n_im = 64;
};

/// Amplification on a grid of z values, smoothed, with level-1 contours in
/// z coordinates. Point (i, j) uses seed mix_seed(seed, j * n_re + i).
inline RegionMap region_map(const AmplificationSetup& s, const RegionWindow& w, std::uint64_t seed, unsigned jobs = 1) {
    if (w.n_re < 8 || w.n_im < 8) throw std::invalid_argument("region_map: resolution must be at least 8x8");
    if (!(w.re_max > w.re_min) || !(w.im_max > w.im_min)) throw std::invalid_argument("region_map: empty window");
    RegionMap m;
    m.re_min = w.re_min;
    m.re_max = w.re_max;
    m.im_min = w.im_min;
    m.im_max = w.im_max;
    m.n_re = w.n_re;
    m.n_im = w.n_im;
    m.seed = seed;
    m.values.assign(w.n_re * w.n_im, 0.0);
    parallel_for(m.values.size(), jobs, [&](std::size_t k) {
        const std::size_t i = k % w.n_re, j = k / w.n_re;
        m.values[k] = amplification(s, complex(m.re_at(i), m.im_at(j)), mix_seed(seed, k));
    });
    // Sentinel values are clamped at 2 before smoothing.
    std::vector<double> clipped(m.values);
    for (auto& v : clipped) v = std::min(v, 2.0);
    m.smoothed = box_blur(clipped, w.n_re, w.n_im);
    const double sx = (w.re_max - w.re_min) / static_cast<double>(w.n_re - 1);
    const double sy = (w.im_max - w.im_min) / static_cast<double>(w.n_im - 1);
    for (auto c : marching_squares(m.smoothed, w.n_re, w.n_im, 1.0)) {
        for (auto& p : c) p = {w.re_min + p.re * sx, w.im_min + p.im * sy};
        m.contours.push_back(std::move(c));
    }
    return m;
}

enum class Axis { real, imaginary };

inline complex on_axis(Axis a, double x) { return a == Axis::real ? complex(x, 0.0) : complex(0.0, x); }

/// Bisects the amplification = s.level crossing on [lo, hi] along an axis.
/// Throws std::domain_error when the endpoints do not straddle the level.
inline double axis_scan(const AmplificationSetup& s, Axis axis, double lo, double hi, std::uint64_t seed, double tol) {
    double a_lo = amplification(s, on_axis(axis, lo), seed);
    double a_hi = amplification(s, on_axis(axis, hi), seed);
    if ((a_lo > s.level) == (a_hi > s.level)) throw std::domain_error("axis_scan: no crossing in bracket");
    while (std::abs(hi - lo) > tol) {
        const double mid = 0.5 * (lo + hi);
        const double a_mid = amplification(s, on_axis(axis, mid), seed);
        if ((a_mid > s.level) == (a_lo > s.level)) {
            lo = mid;
            a_lo = a_mid;
        } else {
            hi = mid;
            a_hi = a_mid;
        }
    }
    return 0.5 * (lo + hi);
}

struct ExtentResult {
    double extent = 0.0;       // first crossing found, or `limit` if none
    bool crossed = false;
    double max_amplification = 0.0;  // over the sampled points before the crossing
};

/// Walks outward from the origin along an axis (direction +1 or -1) in steps of
/// `sample` up to |x| = limit and bisects the first point with amplification > s.level.
inline ExtentResult stable_extent(const AmplificationSetup& s, Axis axis, double direction, double sample, double limit,
                                  std::uint64_t seed, double tol) {
    ExtentResult r;
    double prev = 0.0;
    for (double x = sample; x <= limit + 1e-12; x += sample) {
        const double a = amplification(s, on_axis(axis, direction * x), seed);
        if (a > s.level) {
            r.crossed = true;
            r.extent = std::abs(axis_scan(s, axis, direction * prev, direction * x, seed, tol));
            if (prev == 0.0) r.extent = std::min(r.extent, x);
            return r;
        }
        r.max_amplification = std::max(r.max_amplification, a);
        prev = x;
    }
    r.extent = limit;
    return r;
}

/// Same as stable_extent but with geometrically spaced samples from `start`
/// to `limit`, for scans spanning several decades.
inline ExtentResult stable_extent_geometric(const AmplificationSetup& s, Axis axis, double direction, double start,
                                            double limit, double ratio, std::uint64_t seed, double rel_tol) {
    ExtentResult r;
    double prev = 0.0;
    for (double x = std::min(start, limit);; x = std::min(x * ratio, limit)) {
        const double a = amplification(s, on_axis(axis, direction * x), seed);
        if (a > s.level) {
            r.crossed = true;
            r.extent = std::abs(axis_scan(s, axis, direction * prev, direction * x, seed, rel_tol * x));
            return r;
        }
        r.max_amplification = std::max(r.max_amplification, a);
        prev = x;
        if (x >= limit) break;
    }
    r.extent = limit;
    return r;
}

namespace detail {
inline std::string g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}
}  // namespace detail

inline void write_region_csv(const RegionMap& m, std::ostream& os) {
    os << "re,im,amplification\n";
    for (std::size_t j = 0; j < m.n_im; ++j)
        for (std::size_t i = 0; i < m.n_re; ++i)
            os << detail::g17(m.re_at(i)) << ',' << detail::g17(m.im_at(j)) << ',' << detail::g17(m.value(i, j)) << '\n';
}

inline void write_contours_csv(const std::vector<Contour>& cs, std::ostream& os) {
    os << "contour_id,re,im\n";
    for (std::size_t k = 0; k < cs.size(); ++k)
        for (const auto& p : cs[k]) os << k << ',' << detail::g17(p.re) << ',' << detail::g17(p.im) << '\n';
}

struct RegionSample {
    double re = 0, im = 0, amplification = 0;
};

inline std::vector<RegionSample> read_region_csv(std::istream& is) {
    std::string line;
    if (!std::getline(is, line) || line != "re,im,amplification") throw std::runtime_error("region csv: bad header");
    std::vector<RegionSample> out;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        RegionSample s;
        char c1 = 0, c2 = 0;
        std::istringstream ls(line);
        if (!(ls >> s.re >> c1 >> s.im >> c2 >> s.amplification) || c1 != ',' || c2 != ',')
            throw std::runtime_error("region csv: bad row '" + line + "'");
        out.push_back(s);
    }
    return out;
}

}  // namespace simex
