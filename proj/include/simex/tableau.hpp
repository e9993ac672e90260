#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace simex {

/// Joint implicit (ESDIRK) / explicit Butcher tableau with shared weights and
/// abscissae. Storage is 0-based and row-major; row i of `a_impl` holds the
/// coefficients of stage i+1.
struct ImexTableau {
    std::string name;
    std::size_t s = 0;
    double gamma = 0.0;
    int declared_order = 0;
    std::vector<double> c;
    std::vector<double> b;
    std::vector<double> a_impl;  // s*s, lower triangular with gamma on the diagonal (stage 1 explicit)
    std::vector<double> a_expl;  // s*s, strictly lower triangular

    double impl(std::size_t i, std::size_t j) const { return a_impl[i * s + j]; }
    double expl(std::size_t i, std::size_t j) const { return a_expl[i * s + j]; }
    double& impl(std::size_t i, std::size_t j) { return a_impl[i * s + j]; }
    double& expl(std::size_t i, std::size_t j) { return a_expl[i * s + j]; }
};

namespace detail {

constexpr double ratio(std::int64_t p, std::int64_t q) {
    return static_cast<double>(p) / static_cast<double>(q);
}

inline ImexTableau empty_tableau(std::string name, std::size_t s, double gamma, int order) {
    ImexTableau t;
    t.name = std::move(name);
    t.s = s;
    t.gamma = gamma;
    t.declared_order = order;
    t.c.assign(s, 0.0);
    t.b.assign(s, 0.0);
    t.a_impl.assign(s * s, 0.0);
    t.a_expl.assign(s * s, 0.0);
    return t;
}

}  // namespace detail

/// Crank-Nicolson (implicit) paired with Heun (explicit); second order.
inline ImexTableau cnh() {
    auto t = detail::empty_tableau("cnh", 2, 0.5, 2);
    t.c = {0.0, 1.0};
    t.b = {0.5, 0.5};
    t.impl(1, 0) = 0.5;
    t.impl(1, 1) = 0.5;
    t.expl(1, 0) = 1.0;
    return t;
}

/// ARK4(3)6L[2]SA of Kennedy and Carpenter; embedded weights omitted.
inline ImexTableau ark436() {
    using detail::ratio;
    auto t = detail::empty_tableau("ark436", 6, 0.25, 4);
    const double g = 0.25;
    t.c = {0.0, 0.5, ratio(83, 250), ratio(31, 50), ratio(17, 20), 1.0};

    t.impl(1, 0) = g;
    t.impl(2, 0) = ratio(8611, 62500);
    t.impl(2, 1) = ratio(-1743, 31250);
    t.impl(3, 0) = ratio(5012029, 34652500);
    t.impl(3, 1) = ratio(-654441, 2922500);
    t.impl(3, 2) = ratio(174375, 388108);
    t.impl(4, 0) = ratio(15267082809, 155376265600);
    t.impl(4, 1) = ratio(-71443401, 120774400);
    t.impl(4, 2) = ratio(730878875, 902184768);
    t.impl(4, 3) = ratio(2285395, 8070912);
    t.impl(5, 0) = ratio(82889, 524892);
    t.impl(5, 1) = 0.0;
    t.impl(5, 2) = ratio(15625, 83664);
    t.impl(5, 3) = ratio(69875, 102672);
    t.impl(5, 4) = ratio(-2260, 8211);
    for (std::size_t i = 1; i < t.s; ++i) t.impl(i, i) = g;

    t.expl(1, 0) = 0.5;
    t.expl(2, 0) = ratio(13861, 62500);
    t.expl(2, 1) = ratio(6889, 62500);
    t.expl(3, 0) = ratio(-116923316275, 2393684061468);
    t.expl(3, 1) = ratio(-2731218467317, 15368042101831);
    t.expl(3, 2) = ratio(9408046702089, 11113171139209);
    t.expl(4, 0) = ratio(-451086348788, 2902428689909);
    t.expl(4, 1) = ratio(-2682348792572, 7519795681897);
    t.expl(4, 2) = ratio(12662868775082, 11960479115383);
    t.expl(4, 3) = ratio(3355817975965, 11060851509271);
    t.expl(5, 0) = ratio(647845179188, 3216320057751);
    t.expl(5, 1) = ratio(73281519250, 8382639484533);
    t.expl(5, 2) = ratio(552539513391, 3454668386233);
    t.expl(5, 3) = ratio(3354512671639, 8306763924573);
    t.expl(5, 4) = ratio(4040, 17871);

    // Stiffly accurate: the weights are the last implicit row.
    for (std::size_t j = 0; j < t.s; ++j) t.b[j] = t.impl(t.s - 1, j);
    return t;
}

/// ARK5(4)8L[2]SA of Kennedy and Carpenter; embedded weights omitted.
inline ImexTableau ark548() {
    using detail::ratio;
    auto t = detail::empty_tableau("ark548", 8, ratio(41, 200), 5);
    const double g = ratio(41, 200);
    t.c = {0.0,
           ratio(41, 100),
           ratio(2935347310677, 11292855782101),
           ratio(1426016391358, 7196633302097),
           ratio(92, 100),
           ratio(24, 100),
           ratio(3, 5),
           1.0};

    t.impl(1, 0) = g;
    t.impl(2, 0) = ratio(41, 400);
    t.impl(2, 1) = ratio(-567603406766, 11931857230679);
    t.impl(3, 0) = ratio(683785636431, 9252920307686);
    t.impl(3, 2) = ratio(-110385047103, 1367015193373);
    t.impl(4, 0) = ratio(3016520224154, 10081342136671);
    t.impl(4, 2) = ratio(30586259806659, 12414158314087);
    t.impl(4, 3) = ratio(-22760509404356, 11113319521817);
    t.impl(5, 0) = ratio(218866479029, 1489978393911);
    t.impl(5, 2) = ratio(638256894668, 5436446318841);
    t.impl(5, 3) = ratio(-1179710474555, 5321154724896);
    t.impl(5, 4) = ratio(-60928119172, 8023461067671);
    t.impl(6, 0) = ratio(1020004230633, 5715676835656);
    t.impl(6, 2) = ratio(25762820946817, 25263940353407);
    t.impl(6, 3) = ratio(-2161375909145, 9755907335909);
    t.impl(6, 4) = ratio(-211217309593, 5846859502534);
    t.impl(6, 5) = ratio(-4269925059573, 7827059040749);
    t.impl(7, 0) = ratio(-872700587467, 9133579230613);
    t.impl(7, 3) = ratio(22348218063261, 9555858737531);
    t.impl(7, 4) = ratio(-1143369518992, 8141816002931);
    t.impl(7, 5) = ratio(-39379526789629, 19018526304540);
    t.impl(7, 6) = ratio(32727382324388, 42900044865799);
    for (std::size_t i = 1; i < t.s; ++i) t.impl(i, i) = g;

    t.expl(1, 0) = ratio(41, 100);
    t.expl(2, 0) = ratio(367902744464, 2072280473677);
    t.expl(2, 1) = ratio(677623207551, 8224143866563);
    t.expl(3, 0) = ratio(1268023523408, 10340822734521);
    t.expl(3, 2) = ratio(1029933939417, 13636558850479);
    t.expl(4, 0) = ratio(14463281900351, 6315353703477);
    t.expl(4, 2) = ratio(66114435211212, 5879490589093);
    t.expl(4, 3) = ratio(-54053170152839, 4284798021562);
    t.expl(5, 0) = ratio(14090043504691, 34967701212078);
    t.expl(5, 2) = ratio(15191511035443, 11219624916014);
    t.expl(5, 3) = ratio(-18461159152457, 12425892160975);
    t.expl(5, 4) = ratio(-281667163811, 9011619295870);
    t.expl(6, 0) = ratio(19230459214898, 13134317526959);
    t.expl(6, 2) = ratio(21275331358303, 2942455364971);
    t.expl(6, 3) = ratio(-38145345988419, 4862620318723);
    t.expl(6, 4) = ratio(-1, 8);
    t.expl(6, 5) = ratio(-1, 8);
    t.expl(7, 0) = ratio(-19977161125411, 11928030595625);
    t.expl(7, 2) = ratio(-40795976796054, 6384907823539);
    t.expl(7, 3) = ratio(177454434618887, 12078138498510);
    t.expl(7, 4) = ratio(782672205425, 8267701900261);
    t.expl(7, 5) = ratio(-69563011059811, 9646580694205);
    t.expl(7, 6) = ratio(7356628210526, 4942186776405);

    for (std::size_t j = 0; j < t.s; ++j) t.b[j] = t.impl(t.s - 1, j);
    return t;
}

inline std::vector<ImexTableau> shipped_tableaus() { return {cnh(), ark436(), ark548()}; }

/// Looks up a shipped tableau by name ("cnh", "ark436", "ark548").
inline ImexTableau tableau_by_name(const std::string& name) {
    for (auto& t : shipped_tableaus())
        if (t.name == name) return t;
    throw std::invalid_argument("unknown tableau '" + name + "'");
}

struct TableauViolation {
    std::string invariant;
    std::size_t row = 0;  // 1-based, 0 when not row specific
    std::size_t col = 0;
    double magnitude = 0.0;

    std::string describe() const {
        std::ostringstream os;
        os << invariant;
        if (row) os << " at (" << row << (col ? "," + std::to_string(col) : std::string()) << ")";
        os << ", magnitude " << magnitude;
        return os.str();
    }
};

/// Checks every structural invariant of a joint ESDIRK tableau to `tol`.
inline std::vector<TableauViolation> validate(const ImexTableau& t, double tol = 1e-12) {
    std::vector<TableauViolation> out;
    const std::size_t s = t.s;
    if (s < 2 || t.c.size() != s || t.b.size() != s || t.a_impl.size() != s * s ||
        t.a_expl.size() != s * s) {
        out.push_back({"shape: s >= 2 and array sizes consistent", 0, 0, static_cast<double>(s)});
        return out;
    }
    if (std::abs(t.impl(0, 0)) > tol) out.push_back({"explicit first stage: a_impl[1][1] != 0", 1, 1, std::abs(t.impl(0, 0))});
    for (std::size_t i = 1; i < s; ++i) {
        const double dev = std::abs(t.impl(i, i) - t.gamma);
        if (dev > tol) out.push_back({"ESDIRK diagonal != gamma", i + 1, i + 1, dev});
    }
    for (std::size_t i = 0; i < s; ++i) {
        for (std::size_t j = i + 1; j < s; ++j)
            if (std::abs(t.impl(i, j)) > tol) out.push_back({"a_impl upper triangle nonzero", i + 1, j + 1, std::abs(t.impl(i, j))});
        for (std::size_t j = i; j < s; ++j)
            if (std::abs(t.expl(i, j)) > tol) out.push_back({"a_expl not strictly lower", i + 1, j + 1, std::abs(t.expl(i, j))});
    }
    for (std::size_t i = 0; i < s; ++i) {
        double si = 0.0, se = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            si += t.impl(i, j);
            se += t.expl(i, j);
        }
        if (std::abs(si - t.c[i]) > tol) out.push_back({"implicit row sum != c", i + 1, 0, std::abs(si - t.c[i])});
        if (std::abs(se - t.c[i]) > tol) out.push_back({"explicit row sum != c", i + 1, 0, std::abs(se - t.c[i])});
    }
    double sb = 0.0;
    for (double bj : t.b) sb += bj;
    if (std::abs(sb - 1.0) > tol) out.push_back({"sum(b) != 1", 0, 0, std::abs(sb - 1.0)});
    return out;
}

struct OrderCondition {
    std::string label;
    int order = 0;
    double residual = 0.0;
};

struct OrderResiduals {
    std::vector<OrderCondition> implicit_side;
    std::vector<OrderCondition> explicit_side;

    double max_abs(int up_to_order = 3) const {
        double m = 0.0;
        for (const auto* side : {&implicit_side, &explicit_side})
            for (const auto& oc : *side)
                if (oc.order <= up_to_order) m = std::max(m, std::abs(oc.residual));
        return m;
    }
};

/// Classical single-tableau order conditions up to order p (1 <= p <= 3),
/// evaluated separately on (a_impl, b, c) and (a_expl, b, c).
inline OrderResiduals order_conditions_residual(const ImexTableau& t, int p) {
    if (p < 1 || p > 3) throw std::invalid_argument("order_conditions_residual: p must be 1, 2 or 3");
    const std::size_t s = t.s;
    auto side = [&](bool implicit) {
        std::vector<OrderCondition> r;
        double sb = 0.0, sbc = 0.0, sbc2 = 0.0, sbac = 0.0;
        for (std::size_t j = 0; j < s; ++j) {
            sb += t.b[j];
            sbc += t.b[j] * t.c[j];
            sbc2 += t.b[j] * t.c[j] * t.c[j];
            double ac = 0.0;
            for (std::size_t k = 0; k < s; ++k) ac += (implicit ? t.impl(j, k) : t.expl(j, k)) * t.c[k];
            sbac += t.b[j] * ac;
        }
        r.push_back({"sum b - 1", 1, sb - 1.0});
        if (p >= 2) r.push_back({"sum b c - 1/2", 2, sbc - 0.5});
        if (p >= 3) {
            r.push_back({"sum b c^2 - 1/3", 3, sbc2 - 1.0 / 3.0});
            r.push_back({"sum b A c - 1/6", 3, sbac - 1.0 / 6.0});
        }
        return r;
    };
    return {side(true), side(false)};
}

/// Renders the joint tableau in the usual `c | A || c | Â` layout with the
/// shared weights below the rule.
inline std::string format_tableau(const ImexTableau& t, int precision = 6) {
    const int w = precision + 8;
    auto cell = [&](double v, bool blank) {
        char buf[64];
        if (blank) std::snprintf(buf, sizeof buf, "%*s", w, "");
        else std::snprintf(buf, sizeof buf, "%*.*g", w, precision, v);
        return std::string(buf);
    };
    std::ostringstream os;
    os << t.name << " (s = " << t.s << ", gamma = " << t.gamma << ", order " << t.declared_order << ")\n";
    for (std::size_t i = 0; i < t.s; ++i) {
        os << cell(t.c[i], false) << " |";
        for (std::size_t j = 0; j < t.s; ++j) os << cell(t.impl(i, j), j > i || (i == 0 && j == 0));
        os << " ||" << cell(t.c[i], false) << " |";
        for (std::size_t j = 0; j < t.s; ++j) os << cell(t.expl(i, j), j >= i);
        os << '\n';
    }
    const std::size_t rule = static_cast<std::size_t>(w) * (2 * t.s + 2) + 6;
    os << std::string(rule, '-') << '\n';
    os << cell(0, true) << " |";
    for (double bj : t.b) os << cell(bj, false);
    os << " ||" << cell(0, true) << " |";
    for (double bj : t.b) os << cell(bj, false);
    os << '\n';
    return os.str();
}

}  // namespace simex
