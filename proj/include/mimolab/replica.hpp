#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "channel.hpp"
#include "errors.hpp"
#include "ising_bp.hpp"
#include "numeric.hpp"
#include "rng.hpp"
#include "spectral.hpp"

namespace mimolab {

// The scalar real BPSK channel y = sqrt(chi) b + z, with u = chi + sqrt(chi) z
// the log-likelihood ratio seen by the receiver when b = +1.
//   I1(chi)   = ln 2 - E ln(1 + e^{-2u})  (= chi - E ln cosh u)
//   I1'(chi)  = E[1 - tanh^2 u] / 2
//   I1''(chi) = -E[(1 - tanh^2 u)^2] / 2
enum class i1_form {
    saturating,  // chi - E ln cosh(u); tends to ln 2
    printed,     // chi - (1/2) E ln cosh(u); kept for comparison only, grows without bound
};

struct scalar_terms {
    double value = 0.0;
    double d1 = 0.0;
    double d2 = 0.0;
};

namespace detail {

template <class F>
double llr_expectation(double chi, F&& f) {
    const double sc = std::sqrt(chi);
    return quad::gaussian_expectation([&](double z) { return f(chi + sc * z); }, -sc);
}

}  // namespace detail

inline double mi_scalar_bpsk(double chi, i1_form form = i1_form::saturating) {
    if (!(chi >= 0.0)) throw domain_error("mi_scalar_bpsk: chi must be >= 0", chi);
    if (chi == 0.0) return 0.0;
    if (form == i1_form::printed) return chi - 0.5 * detail::llr_expectation(chi, [](double u) { return logcosh(u); });
    return ln2 - detail::llr_expectation(chi, [](double u) { return softplus(-2.0 * u); });
}

inline scalar_terms bpsk_terms(double chi) {
    if (!(chi >= 0.0)) throw domain_error("bpsk_terms: chi must be >= 0", chi);
    scalar_terms t;
    t.value = mi_scalar_bpsk(chi);
    if (chi == 0.0) {
        t.d1 = 0.5;
        t.d2 = -0.5;
        return t;
    }
    t.d1 = 0.5 * detail::llr_expectation(chi, [](double u) {
        const double th = std::tanh(u);
        return 1.0 - th * th;
    });
    t.d2 = -0.5 * detail::llr_expectation(chi, [](double u) {
        const double s = 1.0 - std::tanh(u) * std::tanh(u);
        return s * s;
    });
    return t;
}

// Per-symbol MI of the identity channel r = sqrt(chi) b + n. QPSK splits into two
// real BPSK channels at the same chi (each component carries power 1/2 against
// noise variance 1/2).
inline scalar_terms identity_terms(double chi, const constellation& c) {
    scalar_terms t = bpsk_terms(chi);
    if (c.kind == modulation::qpsk) {
        t.value *= 2.0;
        t.d1 *= 2.0;
        t.d2 *= 2.0;
    }
    return t;
}

inline double mi_identity(double chi, const constellation& c) {
    if (!(chi >= 0.0)) throw domain_error("mi_identity: chi must be >= 0", chi);
    return identity_terms(chi, c).value;
}

enum class mi_method { scalar, matrix_integration, exact_chain_mc, perturbative };

inline std::string to_string(mi_method m) {
    switch (m) {
        case mi_method::scalar: return "scalar";
        case mi_method::matrix_integration: return "matrix_integration";
        case mi_method::exact_chain_mc: return "exact_mc";
        default: return "perturbative";
    }
}

struct mi_result {
    double value = 0.0;              // nats per transmit symbol
    double extremizer_lambda = 1.0;  // outer lambda (or inner when there is no outer level)
    double extremizer_chi = 0.0;     // effective SNR seen by the transmit side
    double inner_lambda = 1.0;       // transmit-side gain at the inner extremum
    mi_method method = mi_method::scalar;
    std::optional<double> mc_stderr;
    std::size_t n = 0;
    double gradient = 0.0;  // |dF/dlambda| at the returned extremum
};

inline double conditional_entropy(const mi_result& mi, const constellation& c) { return c.entropy() - mi.value; }

namespace detail {

struct extremum {
    double x = 0.0;
    double fx = 0.0;
    double grad = 0.0;
};

// Minimize F on (lo, hi) given F and F': grid scan, Brent, then a bracketed root
// of F' around the minimizer. `grid` points are mapped through `at`.
template <class F, class DF, class At>
extremum minimize_1d(F&& f, DF&& df, At&& at, int n_grid, double grad_tol, const char* who) {
    std::vector<std::pair<double, double>> scan;
    scan.reserve(n_grid);
    for (int i = 0; i < n_grid; ++i) {
        const double x = at((i + 0.5) / n_grid);
        scan.emplace_back(x, f(x));
    }
    int best = 0;
    for (int i = 1; i < n_grid; ++i)
        if (scan[i].second < scan[best].second) best = i;
    const double lo = best > 0 ? scan[best - 1].first : at(0.0);
    const double hi = best + 1 < n_grid ? scan[best + 1].first : at(1.0);
    auto safe = [&](double x) {
        const double v = f(x);
        return std::isfinite(v) ? v : INFINITY;
    };
    const auto br = solve::bracketed_minimum(safe, lo, hi);
    extremum e{br.x, br.fx, df(br.x)};
    if (std::abs(e.grad) > grad_tol) {
        double a = lo, b = hi;
        const double ga = df(a), gb = df(b);
        if (!(std::isfinite(ga) && std::isfinite(gb)) || (ga > 0.0) == (gb > 0.0)) {
            // Narrow to the Brent point's neighbourhood if the outer bracket is unusable.
            const double w = std::max(1e-9, 1e-3 * (hi - lo));
            a = std::max(lo, br.x - w);
            b = std::min(hi, br.x + w);
            if ((df(a) > 0.0) == (df(b) > 0.0)) throw extremum_error(std::string(who) + ": stationary point not bracketed", scan);
        }
        e.x = solve::bracketed_root(df, a, b, 1e-16);
        e.fx = f(e.x);
        e.grad = df(e.x);
    }
    if (!(std::abs(e.grad) <= grad_tol)) throw extremum_error(std::string(who) + ": gradient tolerance not met", scan);
    return e;
}

}  // namespace detail

struct extremization_options {
    int grid = 48;
    double grad_tol = 1e-10;
    bool closed_forms = true;  // use closed-form Legendre transforms where known
};

// Transmit-side matrix-integration value for a Haar-rotated correlation with
// spectrum rt: Extr_mu { G_hat_rt(mu) + I_I(mu chi) }.
inline mi_result mi_rotated_subchannel(const spectrum& rt, double chi, const constellation& c,
                                       const extremization_options& opt = {}) {
    if (!(chi >= 0.0)) throw domain_error("mi_rotated_subchannel: chi must be >= 0", chi);
    mi_result r;
    r.method = mi_method::matrix_integration;
    r.extremizer_chi = chi;
    if (rt.kind() == spectrum::form::delta || chi == 0.0) {
        const double mu = rt.mean();
        r.value = mi_identity(mu * chi, c);
        r.extremizer_lambda = r.inner_lambda = mu;
        return r;
    }
    const field_kind fk = c.field();
    auto ghat = [&](double mu) {
        return opt.closed_forms ? legendre_g_hat_auto(rt, 1.0, mu, g_kernel::spherical, fk)
                                : legendre_g_hat(rt, 1.0, mu, g_kernel::spherical, fk);
    };
    auto f = [&](double mu) { return ghat(mu).value + mi_identity(mu * chi, c); };
    auto df = [&](double mu) { return ghat(mu).slope + chi * identity_terms(mu * chi, c).d1; };
    const double lo = rt.lo(), hi = rt.hi();
    // Chebyshev-like spacing crowds points toward the edges of the support.
    auto at = [&](double t) {
        const double s = -std::cos(std::numbers::pi * std::clamp(t, 1e-9, 1.0 - 1e-9));
        return 0.5 * (lo + hi) + 0.5 * (hi - lo) * s;
    };
    const auto e = detail::minimize_1d(f, df, at, opt.grid, opt.grad_tol, "mi_rotated_subchannel");
    r.value = e.fx;
    r.extremizer_lambda = r.inner_lambda = e.x;
    r.gradient = std::abs(e.grad);
    return r;
}

// d/dchi of the transmit-side value at its extremum: mu* I_I'(mu* chi).
inline double rotated_subchannel_slope(const mi_result& inner, const constellation& c) {
    return inner.inner_lambda * identity_terms(inner.inner_lambda * inner.extremizer_chi, c).d1;
}

// Kronecker channel: Extr_lambda { G_hat_{Xi^H Rr Xi}(lambda) + I_bar_rt(lambda / sigma2) }.
inline mi_result mi_matrix_integration(const spectrum& rr, const spectrum& rt, double sigma2, double beta,
                                       const constellation& c, const extremization_options& opt = {}) {
    if (!(sigma2 > 0.0)) throw domain_error("mi_matrix_integration: sigma2 must be > 0", sigma2);
    if (!(beta > 0.0)) throw domain_error("mi_matrix_integration: beta must be > 0", beta);
    if (!(rr.lo() >= 0.0 && rt.lo() >= 0.0)) throw domain_error("mi_matrix_integration: spectra must be nonnegative", std::min(rr.lo(), rt.lo()));
    const field_kind fk = c.field();
    auto ghat = [&](double lam) {
        return opt.closed_forms ? legendre_g_hat_auto(rr, beta, lam, g_kernel::product, fk)
                                : legendre_g_hat(rr, beta, lam, g_kernel::product, fk);
    };
    auto inner = [&](double lam) { return mi_rotated_subchannel(rt, lam / sigma2, c, opt); };
    auto f = [&](double lam) { return ghat(lam).value + inner(lam).value; };
    auto df = [&](double lam) { return ghat(lam).slope + rotated_subchannel_slope(inner(lam), c) / sigma2; };
    // The stationary point lies below the receive-side mean, where G_hat' <= 0.
    const double top = rr.mean();
    auto at = [&](double t) { return top * std::exp(-30.0 * (1.0 - t)); };
    const auto e = detail::minimize_1d(f, df, at, opt.grid, opt.grad_tol, "mi_matrix_integration");
    const auto in = inner(e.x);
    mi_result r;
    r.method = mi_method::matrix_integration;
    r.value = e.fx;
    r.extremizer_lambda = e.x;
    r.extremizer_chi = e.x / sigma2;
    r.inner_lambda = in.inner_lambda;
    r.gradient = std::abs(e.grad);
    return r;
}

// Hard-decision BER of real BPSK on a scalar channel of SNR s.
inline double scalar_bpsk_ber(double snr) { return normal_cdf(-std::sqrt(std::max(0.0, snr))); }

// Matrix-integration BER prediction for real BPSK: the rotated model decouples
// into scalar channels of SNR mu* lambda* / sigma2.
inline double matrix_integration_ber(const mi_result& r) { return scalar_bpsk_ber(r.inner_lambda * r.extremizer_chi); }

struct chain_mc_options {
    std::optional<chain_boundary> boundary;  // default: ring when K is even, else open
    bool variance_reduction = true;
    double curvature_step = 1e-4;
};

// MI per symbol of the real BPSK sub-channel with transmit correlation I + rho R,
// by Monte-Carlo over the gauge-transformed chain disorder:
//   I = -(1/K) E ln sum_tau prod phi.
// The 1/2 in each factor and the zero-mean noise cross term make this exact
// (no additive constant is dropped).
//
// With variance reduction, each sample uses the antithetic pair +-rho (the
// chain depends on l1 only through l1 tau_bar, so -rho is a relabelling of the
// disorder) and a control variate built from the rho^2 curvature of ln Z, whose
// exact mean on a ring is K (2 chi I1')^2.
inline mi_result mi_exact_chain_mc(double rho, double chi, int K, std::size_t n_samples, std::uint64_t seed,
                                   const chain_mc_options& opt = {}) {
    if (!(std::abs(rho) <= 0.5)) throw domain_error("mi_exact_chain_mc: |rho| must be <= 1/2", rho);
    if (!(chi >= 0.0)) throw domain_error("mi_exact_chain_mc: chi must be >= 0", chi);
    if (K < 2) throw dimension_error("mi_exact_chain_mc: K must be >= 2");
    if (n_samples < 100) throw domain_error("mi_exact_chain_mc: need at least 100 samples", static_cast<double>(n_samples));
    const chain_boundary bc = opt.boundary.value_or(K % 2 == 0 && K >= 4 ? chain_boundary::periodic : chain_boundary::open);
    if (bc == chain_boundary::periodic && (K % 2 != 0 || K < 4))
        throw dimension_error("mi_exact_chain_mc: ring needs even K >= 4");
    const bool cv = opt.variance_reduction && bc == chain_boundary::periodic;
    const auto f_plus = cholesky_chain(rho), f_minus = cholesky_chain(-rho), f_zero = cholesky_chain(0.0);
    const double h = opt.curvature_step;
    const auto f_hp = cholesky_chain(h), f_hm = cholesky_chain(-h);
    const scalar_terms t1 = bpsk_terms(chi);
    const double mu2 = K * 4.0 * chi * chi * t1.d1 * t1.d1;

    std::vector<double> y(n_samples);
    for (std::size_t i = 0; i < n_samples; ++i) {
        rng_engine rng = make_stream(seed, i);
        const chain_disorder d = sample_chain_disorder(K, bc, rng);
        const double lz = chain_log_partition(d, chi, f_plus);
        if (!opt.variance_reduction) {
            y[i] = -lz / K;
            continue;
        }
        const double lz0 = chain_log_partition(d, chi, f_zero);
        double delta = 0.5 * (lz + chain_log_partition(d, chi, f_minus)) - lz0;
        if (cv) {
            const double d2 = (chain_log_partition(d, chi, f_hp) + chain_log_partition(d, chi, f_hm) - 2.0 * lz0) / (h * h);
            delta -= 0.5 * rho * rho * (d2 - mu2);
        }
        // For the open chain the rho = 0 term is averaged exactly instead of sampled.
        y[i] = -delta / K;
    }
    const auto s = summarize(y);
    mi_result r;
    r.method = mi_method::exact_chain_mc;
    r.value = opt.variance_reduction ? t1.value + s.mean : s.mean;
    r.mc_stderr = s.stderr_;
    r.n = n_samples;
    r.extremizer_chi = chi;
    return r;
}

// Replica BER prediction for real BPSK with tridiagonal transmit correlation:
// iterate chi_hat = E_rr[lambda / (sigma2 + beta lambda chi)] against the bulk
// chain posterior variance chi(chi_hat) obtained from population dynamics.
struct ber_prediction {
    double ber = 0.0;
    double stderr_ = 0.0;
    double effective_snr = 0.0;
    double rt_variance = 0.0;
    int outer_iterations = 0;
    int sweeps = 0;
};

struct ber_prediction_options {
    population_options population;
    int max_outer = 60;
    double rel_tol = 2e-3;
};

inline ber_prediction chain_ber_prediction(const spectrum& rr, double beta, double sigma2, double rho,
                                           std::uint64_t seed, const ber_prediction_options& opt = {}) {
    rng_engine rng = make_stream(seed, 0);
    double chi = 1.0;
    population_pair pops;
    bool have = false;
    ber_prediction out;
    for (int it = 1; it <= opt.max_outer; ++it) {
        const double s = effective_precision(rr, beta, sigma2, chi);
        pops = population_dynamics(s, rho, opt.population, rng, have ? &pops : nullptr);
        have = true;
        const auto st = posterior_statistics(pops, s, rho, 2 * opt.population.pop_size, rng);
        out.sweeps += pops.sweeps;
        out.outer_iterations = it;
        out.effective_snr = s;
        out.rt_variance = st.rt_variance;
        out.ber = st.ber;
        const double change = std::abs(st.rt_variance - chi);
        chi = st.rt_variance;
        if (change <= opt.rel_tol * std::max(chi, 1e-3)) break;
    }
    const double n = static_cast<double>(opt.population.pop_size);
    out.stderr_ = std::sqrt(std::max(out.ber * (1.0 - out.ber), 1.0 / n) / n);
    return out;
}

}  // namespace mimolab
