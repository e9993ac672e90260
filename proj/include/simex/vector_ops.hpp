#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

namespace simex {

using complex = std::complex<double>;

template <typename S>
using Vector = std::vector<S>;

template <typename T>
struct is_complex : std::false_type {};
template <typename T>
struct is_complex<std::complex<T>> : std::true_type {};

/// Scalar fields the kernels are instantiated for.
template <typename S>
concept Scalar = std::is_same_v<S, double> || std::is_same_v<S, complex>;

/// Raised when a numerical kernel cannot proceed (zero pivot, breakdown,
/// non-convergence). The integrator turns it into a solver_failure status.
class SolverError : public std::runtime_error {
public:
    explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

template <typename S>
inline double abs_value(const S& x) { return std::abs(x); }

template <typename S>
inline S conj_value(const S& x) {
    if constexpr (is_complex<S>::value) return std::conj(x);
    else return x;
}

template <typename S>
double norm_inf(std::span<const S> x) {
    double m = 0.0;
    for (const auto& v : x) m = std::max(m, std::abs(v));
    return m;
}

template <typename S>
double norm2(std::span<const S> x) {
    double s = 0.0;
    for (const auto& v : x) s += std::norm(v);
    return std::sqrt(s);
}

/// Conjugated inner product x^H y.
template <typename S>
S dot(std::span<const S> x, std::span<const S> y) {
    S s{};
    for (std::size_t i = 0; i < x.size(); ++i) s += conj_value(x[i]) * y[i];
    return s;
}

/// y += a * x
template <typename S>
void axpy(S a, std::span<const S> x, std::span<S> y) {
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

template <typename S>
Vector<S> operator_sub(std::span<const S> a, std::span<const S> b) {
    Vector<S> out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

template <typename S>
double max_abs_diff(std::span<const S> a, std::span<const S> b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

inline void require_same_size(std::size_t a, std::size_t b, const char* where) {
    if (a != b) throw std::invalid_argument(std::string(where) + ": dimension mismatch");
}

}  // namespace simex
