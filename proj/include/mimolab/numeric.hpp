#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>
#include <boost/math/tools/minima.hpp>
#include <boost/math/tools/roots.hpp>
#include <boost/math/tools/toms748_solve.hpp>

#include "errors.hpp"

namespace mimolab {

inline constexpr double ln2 = std::numbers::ln2;

// ln cosh(x) without overflow.
inline double logcosh(double x) noexcept {
    const double a = std::abs(x);
    return a + std::log1p(std::exp(-2.0 * a)) - ln2;
}

// ln(1 + e^x) without overflow.
inline double softplus(double x) noexcept {
    return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

// atanh(tanh(j) * tanh(x)), evaluated through log-cosh differences so that
// large |x| or |j| never hits atanh(±1).
inline double atanh_tanh_product(double j, double x) noexcept {
    return 0.5 * (logcosh(x + j) - logcosh(x - j));
}

inline double normal_cdf(double x) noexcept { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

inline double normal_pdf(double x) noexcept {
    return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi);
}

// Fixed-order pairwise summation; the result depends only on the input order.
inline double pairwise_sum(std::span<const double> v) {
    if (v.size() <= 16) {
        double s = 0.0;
        for (double x : v) s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

struct sample_summary {
    double mean = 0.0;
    double stderr_ = 0.0;
    std::size_t n = 0;
};

inline sample_summary summarize(std::span<const double> v) {
    sample_summary s;
    s.n = v.size();
    if (v.empty()) return s;
    s.mean = pairwise_sum(v) / static_cast<double>(s.n);
    if (s.n > 1) {
        std::vector<double> dev(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) dev[i] = (v[i] - s.mean) * (v[i] - s.mean);
        const double var = pairwise_sum(dev) / static_cast<double>(s.n - 1);
        s.stderr_ = std::sqrt(var / static_cast<double>(s.n));
    }
    return s;
}

namespace quad {

inline constexpr double default_tol = 1e-13;

template <class F>
double integrate(F&& f, double a, double b, double tol = default_tol, double* error = nullptr) {
    using boost::math::quadrature::gauss_kronrod;
    double err = 0.0;
    const double v = gauss_kronrod<double, 31>::integrate(f, a, b, 20, tol, &err);
    if (error) *error = err;
    return v;
}

// Tanh-sinh rule, for integrands with endpoint singularities or endpoint peaks.
template <class F>
double integrate_endpoint(F&& f, double a, double b, double tol = default_tol) {
    static thread_local boost::math::quadrature::tanh_sinh<double> rule(15);
    return rule.integrate(f, a, b, tol);
}

// E f(z), z ~ N(0,1). The split point lets callers put a panel boundary where
// the integrand bends sharply. The Gaussian tail beyond |z| = 13 is < 1e-37.
template <class F>
double gaussian_expectation(F&& f, double split = 0.0, double tol = default_tol) {
    constexpr double cut = 13.0;
    split = std::clamp(split, -cut + 1.0, cut - 1.0);
    auto g = [&](double z) { return f(z) * normal_pdf(z); };
    return integrate(g, -cut, split, tol) + integrate(g, split, cut, tol);
}

// Probabilists' Gauss-Hermite rule (weights sum to 1), Golub-Welsch.
struct rule {
    std::vector<double> nodes;
    std::vector<double> weights;
};

inline rule gauss_hermite(int n) {
    if (n < 1) throw dimension_error("gauss_hermite: n must be >= 1");
    Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
    for (int k = 1; k < n; ++k) jac(k, k - 1) = jac(k - 1, k) = std::sqrt(static_cast<double>(k));
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(jac);
    rule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < n; ++i) {
        r.nodes[i] = es.eigenvalues()(i);
        const double v0 = es.eigenvectors()(0, i);
        r.weights[i] = v0 * v0;
    }
    return r;
}

}  // namespace quad

namespace solve {

// Bracketed root of a continuous function, to within `xtol` in x.
template <class F>
double bracketed_root(F&& f, double lo, double hi, double xtol = 1e-15, std::uintmax_t max_iter = 200) {
    double flo = f(lo), fhi = f(hi);
    if (flo == 0.0) return lo;
    if (fhi == 0.0) return hi;
    if ((flo > 0.0) == (fhi > 0.0))
        throw range_error("bracketed_root: function has the same sign at both ends");
    auto tol = [xtol](double a, double b) { return std::abs(b - a) <= xtol * std::max(1.0, std::abs(a)); };
    std::uintmax_t it = max_iter;
    auto [a, b] = boost::math::tools::toms748_solve(f, lo, hi, flo, fhi, tol, it);
    const double fa = f(a), fb = f(b);
    return std::abs(fa) <= std::abs(fb) ? a : b;
}

struct minimum {
    double x;
    double fx;
};

// Brent (golden section with parabolic steps) on [lo, hi].
template <class F>
minimum bracketed_minimum(F&& f, double lo, double hi) {
    std::uintmax_t it = 500;
    auto r = boost::math::tools::brent_find_minima(f, lo, hi, 30, it);
    return {r.first, r.second};
}

}  // namespace solve

}  // namespace mimolab
