#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "numeric.hpp"

namespace mimolab {

// Eigenvalue distribution: point mass, arcsine law on [c - w, c + w], or an
// empirical list of eigenvalues.
class spectrum {
public:
    enum class form { delta, arcsine, empirical };

    static spectrum delta(double at) {
        spectrum s;
        s.form_ = form::delta;
        s.center_ = at;
        return s;
    }

    static spectrum arcsine(double center, double halfwidth) {
        if (!(halfwidth > 0.0)) return delta(center);
        spectrum s;
        s.form_ = form::arcsine;
        s.center_ = center;
        s.halfwidth_ = halfwidth;
        return s;
    }

    static spectrum empirical(std::vector<double> eigenvalues) {
        if (eigenvalues.empty()) throw dimension_error("empirical spectrum needs at least one eigenvalue");
        std::sort(eigenvalues.begin(), eigenvalues.end());
        spectrum s;
        s.form_ = form::empirical;
        s.eigs_ = std::move(eigenvalues);
        s.center_ = pairwise_sum(s.eigs_) / static_cast<double>(s.eigs_.size());
        return s;
    }

    form kind() const { return form_; }
    double center() const { return center_; }
    double halfwidth() const { return halfwidth_; }
    const std::vector<double>& eigenvalues() const { return eigs_; }

    double lo() const {
        switch (form_) {
            case form::delta: return center_;
            case form::arcsine: return center_ - halfwidth_;
            default: return eigs_.front();
        }
    }
    double hi() const {
        switch (form_) {
            case form::delta: return center_;
            case form::arcsine: return center_ + halfwidth_;
            default: return eigs_.back();
        }
    }

    // E f(lambda). The arcsine law is integrated in theta with lambda = c + w sin(theta),
    // which removes the inverse-square-root endpoint singularities.
    template <class F>
    double expect(F&& f, double tol = quad::default_tol) const {
        switch (form_) {
            case form::delta: return f(center_);
            case form::arcsine: {
                // Integrands peaked at theta = +-pi/2 (Cauchy transforms just outside the
                // support) are resolved by the endpoint clustering of tanh-sinh.
                auto g = [&](double th) { return f(center_ + halfwidth_ * std::sin(th)); };
                const double h = 0.5 * std::numbers::pi;
                return (quad::integrate_endpoint(g, -h, 0.0, tol) + quad::integrate_endpoint(g, 0.0, h, tol)) /
                       std::numbers::pi;
            }
            default: {
                std::vector<double> v(eigs_.size());
                for (std::size_t i = 0; i < eigs_.size(); ++i) v[i] = f(eigs_[i]);
                return pairwise_sum(v) / static_cast<double>(v.size());
            }
        }
    }

    double mean() const { return center_; }

    // n-th raw moment.
    double moment(int n) const {
        if (n < 0) throw domain_error("moment order must be >= 0", n);
        if (form_ == form::arcsine) {
            // E (c + w s)^n with E s^{2m} = binom(2m, m) / 4^m for the arcsine law on [-1, 1].
            double total = 0.0;
            for (int k = 0; k <= n; k += 2) {
                const int m = k / 2;
                double central = 1.0;
                for (int i = 1; i <= m; ++i) central *= static_cast<double>(m + i) / (4.0 * i);
                total += binom(n, k) * std::pow(center_, n - k) * std::pow(halfwidth_, k) * central;
            }
            return total;
        }
        return expect([n](double l) { return std::pow(l, n); });
    }

    double cdf(double x) const {
        switch (form_) {
            case form::delta: return x >= center_ ? 1.0 : 0.0;
            case form::arcsine: {
                const double u = std::clamp((x - center_) / halfwidth_, -1.0, 1.0);
                return 0.5 + std::asin(u) / std::numbers::pi;
            }
            default: {
                const auto it = std::upper_bound(eigs_.begin(), eigs_.end(), x);
                return static_cast<double>(it - eigs_.begin()) / static_cast<double>(eigs_.size());
            }
        }
    }

    // Cauchy transform E 1/(z - lambda) and its z-derivative, for z outside the support.
    double cauchy(double z) const {
        check_outside(z);
        return expect([z](double l) { return 1.0 / (z - l); });
    }
    double cauchy_derivative(double z) const {
        check_outside(z);
        return -expect([z](double l) { return 1.0 / ((z - l) * (z - l)); });
    }
    // E ln|z - lambda|.
    double log_potential(double z) const {
        check_outside(z);
        return expect([z](double l) { return std::log(std::abs(z - l)); });
    }

private:
    static double binom(int n, int k) {
        double r = 1.0;
        for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
        return r;
    }
    void check_outside(double z) const {
        if (z >= lo() && z <= hi()) throw domain_error("point inside the spectrum support", z);
    }

    form form_ = form::delta;
    double center_ = 1.0;
    double halfwidth_ = 0.0;
    std::vector<double> eigs_;
};

// Spectrum of the tridiagonal matrix with unit diagonal and rho off-diagonal.
inline spectrum tridiagonal_spectrum(double rho, int K) {
    if (!(std::abs(rho) <= 0.5)) throw domain_error("tridiagonal_spectrum: |rho| must be <= 1/2", rho);
    if (K < 1) throw dimension_error("tridiagonal_spectrum: K must be >= 1");
    if (rho == 0.0) return spectrum::delta(1.0);
    std::vector<double> ev(K);
    for (int k = 1; k <= K; ++k) ev[k - 1] = 1.0 + 2.0 * rho * std::cos(k * std::numbers::pi / (K + 1));
    return spectrum::empirical(std::move(ev));
}

// K -> infinity limit: arcsine law on [1 - 2|rho|, 1 + 2|rho|].
inline spectrum tridiagonal_spectrum_asymptotic(double rho) {
    if (!(std::abs(rho) <= 0.5)) throw domain_error("tridiagonal_spectrum: |rho| must be <= 1/2", rho);
    return spectrum::arcsine(1.0, 2.0 * std::abs(rho));
}

namespace detail {

inline void check_g_domain(const spectrum& s, double beta, double x) {
    for (double l : {s.lo(), s.hi()})
        if (!(1.0 - beta * l * x > 0.0)) throw domain_error("g_function: 1 - beta*lambda*x <= 0", l);
}

}  // namespace detail

// G(x) = (1/beta) E ln(1 - beta lambda x).
inline double g_function(const spectrum& s, double beta, double x) {
    detail::check_g_domain(s, beta, x);
    if (x == 0.0) return 0.0;
    return s.expect([&](double l) { return std::log1p(-beta * l * x); }) / beta;
}

// G'(x) = -E lambda / (1 - beta lambda x).
inline double g_derivative(const spectrum& s, double beta, double x) {
    detail::check_g_domain(s, beta, x);
    return -s.expect([&](double l) { return l / (1.0 - beta * l * x); });
}

// G''(x) = -beta E lambda^2 / (1 - beta lambda x)^2.
inline double g_second_derivative(const spectrum& s, double beta, double x) {
    detail::check_g_domain(s, beta, x);
    return -beta * s.expect([&](double l) {
        const double d = 1.0 - beta * l * x;
        return l * l / (d * d);
    });
}

// Effective-noise precision fed to the demodulator: -(1/sigma2) G'(-chi/sigma2).
// For a point spectrum at 1 this is 1/(sigma2 + beta chi).
inline double effective_precision(const spectrum& rr, double beta, double sigma2, double chi) {
    const double v = -g_derivative(rr, beta, -chi / sigma2) / sigma2;
    if (!(v > 0.0)) throw domain_error("effective precision must be positive", v);
    return v;
}

// Which rank-one spherical integral a Legendre transform is taken of.
//   product:   the matrix Xi^H Rr Xi built from a receive spectrum (beta matters);
//              its integrated R-transform is -G(x) with G as above.
//   spherical: a fixed spectrum rotated by a Haar unitary/orthogonal matrix;
//              its integrated R-transform is the integral of the R-transform.
enum class g_kernel { product, spherical };

// G_hat(lambda) = Extr_x { lambda x - Gint(x) }, Gint the integrated R-transform.
// For the real field the whole transform is halved.
struct legendre_value {
    double value = 0.0;
    double slope = 0.0;      // dG_hat/dlambda
    double curvature = 0.0;  // d^2G_hat/dlambda^2
    double conjugate = 0.0;  // extremizing x (complex normalization)
    double residual = 0.0;   // |lambda - Gint'(x)|
};

// Integrated R-transform of a spherical kernel at x, using the Cauchy-transform
// inverse z(x): Gint(x) = x z - 1 - ln|x| - E ln|z - lambda|.
struct spherical_point {
    double z = 0.0;
    double r = 0.0;        // R-transform value = z - 1/x
    double r_prime = 0.0;  // dR/dx
    double gint = 0.0;
};

namespace detail {

inline spherical_point spherical_from_z(const spectrum& s, double z) {
    spherical_point p;
    p.z = z;
    const double x = s.cauchy(z);
    const double gp = s.cauchy_derivative(z);
    p.r = z - 1.0 / x;
    p.r_prime = (1.0 + gp / (x * x)) / gp;
    p.gint = x * z - 1.0 - std::log(std::abs(x)) - s.log_potential(z);
    return p;
}

// z above (sign > 0) or below (sign < 0) the support, parameterized by e^u.
inline double z_of(const spectrum& s, int sign, double u) {
    return sign > 0 ? s.hi() + std::exp(u) : s.lo() - std::exp(u);
}

template <class F>
double expand_and_solve(F&& f, double lo, double hi, const char* who) {
    double flo = f(lo), fhi = f(hi);
    for (int i = 0; i < 80 && (flo > 0.0) == (fhi > 0.0); ++i) {
        const double w = hi - lo;
        if (std::abs(flo) < std::abs(fhi)) {
            lo -= w;
            flo = f(lo);
        } else {
            hi += w;
            fhi = f(hi);
        }
    }
    if ((flo > 0.0) == (fhi > 0.0)) throw range_error(std::string(who) + ": no root in bracket");
    return solve::bracketed_root(f, lo, hi, 1e-15);
}

inline double field_scale(field_kind f) { return f == field_kind::real ? 0.5 : 1.0; }

inline legendre_value scaled(legendre_value v, field_kind f) {
    const double a = field_scale(f);
    v.value *= a;
    v.slope *= a;
    v.curvature *= a;
    return v;
}

}  // namespace detail

inline spherical_point integrated_r_transform(const spectrum& s, double x) {
    if (s.kind() == spectrum::form::delta) {
        spherical_point p;
        p.r = s.center();
        p.gint = s.center() * x;
        p.z = x != 0.0 ? s.center() + 1.0 / x : 0.0;
        return p;
    }
    if (x == 0.0) {
        spherical_point p;
        p.r = s.mean();
        const double var = s.moment(2) - s.mean() * s.mean();
        p.r_prime = var;
        return p;
    }
    const int sign = x > 0.0 ? 1 : -1;
    auto f = [&](double u) { return s.cauchy(detail::z_of(s, sign, u)) - x; };
    // g(z) is monotone in u on each side; sign * g decreases as u grows.
    const double u = detail::expand_and_solve([&](double v) { return -sign * f(v); }, -2.0, 2.0, "integrated_r_transform");
    return detail::spherical_from_z(s, detail::z_of(s, sign, u));
}

// Numerical Legendre transform.
inline legendre_value legendre_g_hat(const spectrum& s, double beta, double lambda, g_kernel kernel,
                                     field_kind field = field_kind::complex) {
    legendre_value v;
    if (kernel == g_kernel::product) {
        if (!(lambda > 0.0)) throw range_error("legendre_g_hat: lambda outside the range of R");
        const double top = beta * std::max(s.hi(), 1e-300);
        // x = (1 - e^{-u}) / top covers (-inf, 1/top).
        auto x_of = [&](double u) { return -std::expm1(-u) / top; };
        auto rt = [&](double u) { return -g_derivative(s, beta, x_of(u)); };
        const double u = detail::expand_and_solve([&](double w) { return rt(w) - lambda; }, -1.0, 1.0, "legendre_g_hat");
        const double x = x_of(u);
        const double gint = -g_function(s, beta, x);
        v.conjugate = x;
        v.value = lambda * x - gint;
        v.slope = x;
        v.curvature = 1.0 / (-g_second_derivative(s, beta, x));
        v.residual = std::abs(lambda + g_derivative(s, beta, x));
    } else {
        if (s.kind() == spectrum::form::delta) {
            if (lambda != s.center()) throw range_error("legendre_g_hat: point spectrum has a single admissible lambda");
            return v;
        }
        if (!(lambda > s.lo() && lambda < s.hi())) throw range_error("legendre_g_hat: lambda outside the range of R");
        const double m1 = s.mean();
        if (lambda == m1) {
            v.curvature = 1.0 / (s.moment(2) - m1 * m1);
        } else {
            const int sign = lambda > m1 ? 1 : -1;
            // lambda(z) = z - 1/g(z) decreases in z on both sides of the support.
            auto lam = [&](double u) {
                const double z = detail::z_of(s, sign, u);
                return z - 1.0 / s.cauchy(z);
            };
            const double u = detail::expand_and_solve([&](double w) { return sign * (lambda - lam(w)); }, -2.0, 2.0,
                                                      "legendre_g_hat");
            const spherical_point p = detail::spherical_from_z(s, detail::z_of(s, sign, u));
            const double x = s.cauchy(p.z);
            v.conjugate = x;
            v.value = lambda * x - p.gint;
            v.slope = x;
            v.curvature = 1.0 / p.r_prime;
            v.residual = std::abs(lambda - p.r);
        }
    }
    return detail::scaled(v, field);
}

// Closed forms: point receive spectrum under the product kernel, and the arcsine
// law under the spherical kernel.
inline legendre_value legendre_g_hat_closed(const spectrum& s, double beta, double lambda, g_kernel kernel,
                                            field_kind field = field_kind::complex) {
    legendre_value v;
    if (kernel == g_kernel::product && s.kind() == spectrum::form::delta) {
        const double a = s.center();
        if (!(lambda > 0.0 && a > 0.0)) throw range_error("legendre_g_hat_closed: lambda outside the range of R");
        const double t = lambda / a;
        v.value = (t - 1.0 - std::log(t)) / beta;
        v.conjugate = v.slope = (1.0 / a - 1.0 / lambda) / beta;
        v.curvature = 1.0 / (beta * lambda * lambda);
    } else if (kernel == g_kernel::spherical && s.kind() == spectrum::form::arcsine) {
        const double w = s.halfwidth();
        const double d = lambda - s.center();
        if (!(std::abs(d) < w)) throw range_error("legendre_g_hat_closed: lambda outside the arcsine support");
        const double q = w * w - d * d;
        v.value = -std::log1p(-(d * d) / (w * w));
        v.conjugate = v.slope = 2.0 * d / q;
        v.curvature = 2.0 * (w * w + d * d) / (q * q);
    } else if (kernel == g_kernel::spherical && s.kind() == spectrum::form::delta) {
        if (lambda != s.center()) throw range_error("legendre_g_hat_closed: point spectrum has a single admissible lambda");
    } else {
        throw range_error("legendre_g_hat_closed: no closed form for this spectrum/kernel");
    }
    return detail::scaled(v, field);
}

inline bool has_closed_legendre(const spectrum& s, g_kernel kernel) {
    return (kernel == g_kernel::product && s.kind() == spectrum::form::delta) ||
           (kernel == g_kernel::spherical && s.kind() != spectrum::form::empirical);
}

inline legendre_value legendre_g_hat_auto(const spectrum& s, double beta, double lambda, g_kernel kernel,
                                          field_kind field) {
    return has_closed_legendre(s, kernel) ? legendre_g_hat_closed(s, beta, lambda, kernel, field)
                                          : legendre_g_hat(s, beta, lambda, kernel, field);
}

// Coefficients c_n of Gint(z) = sum c_n z^n for a spherical kernel, n = 0..order:
// c1 = m1, c2 = k2/2, c3 = k3/3, c4 = (m4 - 2 m2^2)/4 with central moments of a
// zero-mean spectrum (free cumulants).
inline std::vector<double> g_series_coefficients(const spectrum& s, int order = 4) {
    if (order > 4) throw domain_error("g_series_coefficients: order > 4 unsupported", order);
    if (order < 0) throw domain_error("g_series_coefficients: negative order", order);
    const double m1 = s.mean();
    auto central = [&](int n) { return s.expect([&](double l) { return std::pow(l - m1, n); }); };
    const double k2 = central(2), k3 = central(3), m4 = central(4);
    const double all[5] = {0.0, m1, 0.5 * k2, k3 / 3.0, 0.25 * (m4 - 2.0 * k2 * k2)};
    return std::vector<double>(all, all + order + 1);
}

// Marchenko-Pastur law of Xi^H Xi (K x K, entries of variance 1/L, beta = K/L).
inline double marchenko_pastur_cdf(double beta, double x) {
    if (!(beta > 0.0)) throw domain_error("marchenko_pastur_cdf: beta must be > 0", beta);
    const double a = (1.0 - std::sqrt(beta)) * (1.0 - std::sqrt(beta));
    const double b = (1.0 + std::sqrt(beta)) * (1.0 + std::sqrt(beta));
    const double atom = beta > 1.0 ? 1.0 - 1.0 / beta : 0.0;
    if (x < 0.0) return 0.0;
    if (x <= a) return atom;
    if (x >= b) return 1.0;
    const double c = 0.5 * (a + b), w = 0.5 * (b - a);
    // lambda = c + w sin(t); density sqrt((b-l)(l-a)) / (2 pi beta l). With
    // s = sin(t), cos^2 t = (1-s)(1+s) and l = a + w(1+s); the (1+s) cancels so
    // the hard edge at a = 0 (beta = 1) stays finite.
    auto f = [&](double t) {
        const double sn = std::sin(t);
        const double up = 1.0 + sn;
        const double q = a > 0.0 ? a / up : 0.0;
        return w * w * (1.0 - sn) / (2.0 * std::numbers::pi * beta * (q + w));
    };
    const double tx = std::asin(std::clamp((x - c) / w, -1.0, 1.0));
    return atom + quad::integrate(f, -0.5 * std::numbers::pi, tx, 1e-12);
}

// sup |F_n - F| for sorted samples.
template <class Cdf>
double kolmogorov_distance(const std::vector<double>& sorted, Cdf&& cdf) {
    const double n = static_cast<double>(sorted.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const double f = cdf(sorted[i]);
        d = std::max({d, std::abs(f - i / n), std::abs((i + 1) / n - f)});
    }
    return d;
}

}  // namespace mimolab
