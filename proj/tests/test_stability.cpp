#include <catch_amalgamated.hpp>

#include <atomic>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "support/oracles.hpp"

using namespace simex;
using Catch::Approx;

namespace {

// Largest eigenvalue of A_N in closed form: sin^2((N-1) pi / 2N).
double lambda_max(std::size_t n) {
    const double s = std::sin(static_cast<double>(n - 1) * std::numbers::pi / (2.0 * static_cast<double>(n)));
    return s * s;
}

// ||y_30|| / ||y_29|| for the trapezoidal rule applied through an eigendecomposition of A_N.
double trapezoid_ratio(double z, std::size_t n, int steps, std::uint64_t seed) {
    Eigen::SelfAdjointEigenSolver<oracle::Mat<double>> es(oracle::dense(model_matrix(n)));
    const auto y0 = random_unit_state((n - 1) * (n - 1), seed);
    std::vector<double> re(y0.size());
    for (std::size_t i = 0; i < re.size(); ++i) re[i] = y0[i].real();
    oracle::Vec<double> c = es.eigenvectors().transpose() * oracle::vec<double>(re);
    const oracle::Vec<double> r = es.eigenvalues().unaryExpr([z](double l) { return (1 + z * l / 2) / (1 - z * l / 2); });
    oracle::Vec<double> prev = c;
    for (int k = 0; k < steps; ++k) {
        prev = c;
        c = c.cwiseProduct(r);
    }
    return c.norm() / prev.norm();
}

}  // namespace

TEST_CASE("amplification at z = 0 is exactly one") {
    for (const auto& f : {default_filter<complex>(), gs_filter<complex>(5), exact_filter<complex>()}) {
        AmplificationSetup s{ark436(), f, 8, 30};
        CHECK(amplification(s, complex(0.0, 0.0), 3) == 1.0);
    }
}

TEST_CASE("amplification argument checks") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 1};
    CHECK_THROWS_AS(amplification(s, complex(-1.0, 0.0), 1), std::invalid_argument);
}

TEST_CASE("CNH with the exact filter matches the trapezoidal eigen oracle") {
    AmplificationSetup s{cnh(), exact_filter<complex>(), 8, 30};
    for (double z : {-1.0, -50.0, -3000.0}) {
        INFO(z);
        const double a = amplification(s, complex(z, 0.0), 7);
        CHECK(a < 1.0);
        CHECK(a == Approx(trapezoid_ratio(z, 8, 30, 7)).epsilon(1e-10));
    }
}

TEST_CASE("amplification is symmetric under complex conjugation") {
    for (const auto& f : {default_filter<complex>(), gs_filter<complex>(3), ilu_filter<complex>(0.02), cgs_filter<complex>(2, 0.02)}) {
        AmplificationSetup s{ark436(), f, 10, 30};
        for (const auto z : {complex(-30.0, 20.0), complex(-2.0, 5.0), complex(-400.0, 150.0)}) {
            INFO(f.name() << " " << z);
            const double a = amplification(s, z, 5);
            const double b = amplification(s, std::conj(z), 5);
            CHECK(std::abs(a - b) <= 1e-10 * std::max(1.0, a));
        }
    }
}

TEST_CASE("ARK436 with the exact filter is bounded on the negative real axis") {
    AmplificationSetup s{ark436(), exact_filter<complex>(), 8, 30};
    double worst = 0.0;
    for (double x = 1.0; x <= 1e5; x *= 1.5) worst = std::max(worst, amplification(s, complex(-x, 0.0), 2));
    CHECK(worst <= 1.0 + 1e-12);
}

TEST_CASE("CNH with the exact filter shows no real-axis crossing") {
    AmplificationSetup s{cnh(), exact_filter<complex>(), 8, 30};
    const auto r = stable_extent_geometric(s, Axis::real, -1.0, 1.0, 1e6, 1.25, 1, 1e-3);
    CHECK_FALSE(r.crossed);
    CHECK(r.extent == 1e6);
    CHECK(r.max_amplification < 1.0);
}

TEST_CASE("CNH with the default filter reproduces the explicit RK2 boundary") {
    // Explicit trapezoid: |1 + w + w^2/2| <= 1 for real w in [-2, 0], so the
    // crossing sits at z = -2 / lambda_max(A_8).
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 400};
    const double expect = -2.0 / lambda_max(8);
    CHECK(expect == Approx(-2.0791).margin(1e-4));
    CHECK(axis_scan(s, Axis::real, -3.0, -1.0, 1, 1e-7) == Approx(expect).epsilon(1e-5));

    s.steps = 30;
    CHECK(amplification(s, complex(-1.0, 0.0), 1) <= 1.0);
    CHECK(amplification(s, complex(-4.0, 0.0), 1) > 1.0);
    // |R(iy)|^2 = 1 + y^4 / 4 > 1 on the imaginary axis.
    CHECK(amplification(s, complex(0.0, 4.0), 1) > 1.0);
    const auto ext = stable_extent(s, Axis::imaginary, 1.0, 0.5, 10.0, 1, 1e-3);
    CHECK(ext.crossed);
    CHECK(ext.extent <= 0.5);
}

TEST_CASE("scan level shifts the decision threshold") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 30};
    const auto base = stable_extent(s, Axis::real, -1.0, 0.5, 4.0, 1, 1e-6);
    CHECK(base.crossed);
    CHECK(base.extent == Approx(2.0876).margin(1e-3));
    double top = 0.0;
    for (double x = 0.5; x <= 4.0; x += 0.5) top = std::max(top, amplification(s, complex(-x, 0.0), 1));
    s.level = top * 1.01;
    const auto raised = stable_extent(s, Axis::real, -1.0, 0.5, 4.0, 1, 1e-6);
    CHECK_FALSE(raised.crossed);
    CHECK(raised.extent == 4.0);
}

TEST_CASE("axis_scan requires a bracketing interval") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 30};
    CHECK_THROWS_AS(axis_scan(s, Axis::real, -1.5, -1.0, 1, 1e-3), std::domain_error);
}

TEST_CASE("guard trips return the sentinel") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 30};
    CHECK(amplification(s, complex(-2000.0, 0.0), 1) == kUnstableSentinel);
}

TEST_CASE("seeds and initial states") {
    std::set<std::uint64_t> seen;
    for (std::uint64_t k = 0; k < 1000; ++k) seen.insert(mix_seed(42, k));
    CHECK(seen.size() == 1000);
    CHECK(mix_seed(1, 0) != mix_seed(2, 0));
    CHECK(mix_seed(7, 3) == mix_seed(7, 3));

    const auto a = random_unit_state(100, 5);
    const auto b = random_unit_state(100, 5);
    CHECK(a == b);
    CHECK(norm_inf<complex>(a) == 1.0);
    for (const auto& v : a) CHECK(v.imag() == 0.0);
    CHECK(random_unit_state(100, 6) != a);
}

TEST_CASE("parallel_for visits each index once and propagates errors") {
    std::vector<std::atomic<int>> hits(257);
    parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
    CHECK_THROWS_AS(parallel_for(10, 3, [](std::size_t i) {
                        if (i == 7) throw std::runtime_error("boom");
                    }),
                    std::runtime_error);
}

TEST_CASE("box blur preserves constants and averages a spike") {
    const std::vector<double> c(30, 2.5);
    for (double v : box_blur(c, 6, 5)) CHECK(v == Approx(2.5).epsilon(1e-15));
    std::vector<double> spike(49, 0.0);
    spike[24] = 81.0;
    const auto once = box_blur(spike, 7, 7, 1);
    CHECK(once[24] == Approx(9.0));
    CHECK(once[0] == 0.0);
    double total = 0.0;
    for (double v : box_blur(spike, 7, 7)) total += v;
    CHECK(total == Approx(81.0));
}

TEST_CASE("marching squares traces a circle") {
    const std::size_t n = 41;
    std::vector<double> f(n * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t i = 0; i < n; ++i) f[j * n + i] = std::hypot(static_cast<double>(i) - 20.0, static_cast<double>(j) - 20.0);
    const auto cs = marching_squares(f, n, n, 12.0);
    REQUIRE(cs.size() == 1);
    CHECK(is_closed(cs[0]));
    double worst = 0.0;
    for (const auto& p : cs[0]) worst = std::max(worst, std::abs(std::hypot(p.re - 20.0, p.im - 20.0) - 12.0));
    CHECK(worst < 0.1);
    CHECK(inside_contour(cs[0], 20.0, 20.0));
    CHECK_FALSE(inside_contour(cs[0], 2.0, 2.0));

    // A level crossing the border gives open curves ending on the boundary.
    const auto open = marching_squares(f, n, n, 25.0);
    REQUIRE_FALSE(open.empty());
    for (const auto& c : open) {
        CHECK_FALSE(is_closed(c));
        const auto on_border = [n](const ContourPoint& p) {
            return p.re == 0.0 || p.im == 0.0 || p.re == static_cast<double>(n - 1) || p.im == static_cast<double>(n - 1);
        };
        CHECK(on_border(c.front()));
        CHECK(on_border(c.back()));
    }
    CHECK(marching_squares(std::vector<double>(16, 0.0), 4, 4, 1.0).empty());
}

TEST_CASE("region maps") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 30};
    const RegionWindow w{-5.0, 1.0, -3.0, 3.0, 16, 12};
    const auto m = region_map(s, w, 9, 1);
    const auto p = region_map(s, w, 9, 3);
    CHECK(m.values == p.values);
    CHECK(m.smoothed == p.smoothed);
    REQUIRE(m.values.size() == 16 * 12);
    CHECK(m.re_at(0) == -5.0);
    CHECK(m.re_at(15) == 1.0);
    CHECK(m.im_at(11) == 3.0);

    for (std::size_t k : {0u, 37u, 191u}) {
        const std::size_t i = k % 16, j = k / 16;
        CHECK(m.values[k] == amplification(s, complex(m.re_at(i), m.im_at(j)), mix_seed(9, k)));
    }
    for (double v : m.smoothed) CHECK(v <= 2.0);

    REQUIRE_FALSE(m.contours.empty());
    for (const auto& c : m.contours)
        for (const auto& q : c) {
            CHECK(q.re >= w.re_min - 1e-12);
            CHECK(q.re <= w.re_max + 1e-12);
            CHECK(q.im >= w.im_min - 1e-12);
            CHECK(q.im <= w.im_max + 1e-12);
        }

    CHECK_THROWS_AS(region_map(s, {-1.0, 1.0, -1.0, 1.0, 4, 4}, 1), std::invalid_argument);
    CHECK_THROWS_AS(region_map(s, {1.0, -1.0, -1.0, 1.0, 8, 8}, 1), std::invalid_argument);
}

TEST_CASE("region CSV round trip") {
    AmplificationSetup s{cnh(), default_filter<complex>(), 8, 30};
    const auto m = region_map(s, {-5.0, 1.0, -3.0, 3.0, 8, 8}, 4);
    std::stringstream ss;
    write_region_csv(m, ss);
    const auto rows = read_region_csv(ss);
    REQUIRE(rows.size() == 64);
    for (std::size_t k = 0; k < rows.size(); ++k) {
        CHECK(rows[k].re == m.re_at(k % 8));
        CHECK(rows[k].im == m.im_at(k / 8));
        CHECK(rows[k].amplification == m.values[k]);
    }
    std::stringstream bad("x,y\n1,2\n");
    CHECK_THROWS(read_region_csv(bad));
    std::stringstream contours;
    write_contours_csv(m.contours, contours);
    std::string header;
    std::getline(contours, header);
    CHECK(header == "contour_id,re,im");
}
