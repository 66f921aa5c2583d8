#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "numeric.hpp"
#include "rng.hpp"

namespace mimolab {

// Bidiagonal Cholesky factor of I + rho R for the nearest-neighbour chain:
// l0^2 + l1^2 = 1, l0 l1 = rho.
struct chain_factorization {
    double l0 = 1.0;
    double l1 = 0.0;
    double rho = 0.0;
};

inline chain_factorization cholesky_chain(double rho) {
    if (!(std::abs(rho) <= 0.5)) throw domain_error("cholesky_chain: |rho| must be <= 1/2", rho);
    const double disc = std::sqrt(std::max(0.0, 1.0 - 4.0 * rho * rho));
    const double l0 = std::sqrt(0.5 * (1.0 + disc));
    return {l0, rho / l0, rho};
}

// Lambda with Lambda_kk = l0 and Lambda_(k+1)k = l1. Lambda Lambda^T equals I + rho R
// except at entry (0, 0), which is l0^2: the first row has no upper neighbour.
inline Eigen::MatrixXd chain_lambda(const chain_factorization& f, int K) {
    Eigen::MatrixXd L = Eigen::MatrixXd::Zero(K, K);
    for (int k = 0; k < K; ++k) {
        L(k, k) = f.l0;
        if (k + 1 < K) L(k + 1, k) = f.l1;
    }
    return L;
}

enum class chain_boundary { open, periodic };

// One factor of the gauge-transformed chain, in log form:
// ln(1/2) - (chi/2) |l0 (t_k - 1) + l1 tb (t_k1 - 1)|^2 + sqrt(chi) eta (l0 t_k + l1 tb t_k1).
inline double factor_log_weight(int tk, int tk1, int tbar, double eta, double chi, const chain_factorization& f) {
    const double d = f.l0 * (tk - 1) + f.l1 * tbar * (tk1 - 1);
    return -ln2 - 0.5 * chi * d * d + std::sqrt(chi) * eta * (f.l0 * tk + f.l1 * tbar * tk1);
}

inline double factor_weight(int tk, int tk1, int tbar, double eta, double chi, const chain_factorization& f) {
    return std::exp(factor_log_weight(tk, tk1, tbar, eta, chi, f));
}

// Single-site factor closing an open chain (only the l0 term survives).
inline double terminal_log_weight(int tk, double eta, double chi, const chain_factorization& f) {
    const double d = f.l0 * (tk - 1);
    return -ln2 - 0.5 * chi * d * d + std::sqrt(chi) * eta * f.l0 * tk;
}

inline double terminal_field(double eta, double chi, const chain_factorization& f) {
    return chi * f.l0 * f.l0 + std::sqrt(chi) * f.l0 * eta;
}

namespace detail {

// Field terms of one factor: exponent = a t_k + b t_k1 + J t_k t_k1 + const.
struct factor_fields {
    double a, b, j;
};

inline factor_fields fields_of(int tbar, double eta, double chi, const chain_factorization& f) {
    const double sc = std::sqrt(chi);
    const double cr = chi * f.rho * tbar;
    return {chi * f.l0 * f.l0 + cr + sc * f.l0 * eta, chi * f.l1 * f.l1 + cr + sc * f.l1 * tbar * eta, -cr};
}

}  // namespace detail

// h_{->k+1} from h_{->k}.
inline double forward_cavity(double h_in, int tbar, double eta, double chi, const chain_factorization& f) {
    const auto ff = detail::fields_of(tbar, eta, chi, f);
    return ff.b + atanh_tanh_product(ff.j, h_in + ff.a);
}

// h_{k<-} from h_{k+1<-}.
inline double backward_cavity(double h_in, int tbar, double eta, double chi, const chain_factorization& f) {
    const auto ff = detail::fields_of(tbar, eta, chi, f);
    return ff.a + atanh_tanh_product(ff.j, h_in + ff.b);
}

// Disorder of a gauge-transformed chain. Open chains of K sites carry K-1 pair
// factors plus a terminal factor (eta has K entries, tau_bar K-1); rings carry
// K pair factors with prod(tau_bar) = 1.
struct chain_disorder {
    std::vector<int> tau_bar;
    std::vector<double> eta;
    chain_boundary boundary = chain_boundary::open;
    int sites() const { return static_cast<int>(eta.size()); }
};

inline chain_disorder sample_chain_disorder(int K, chain_boundary boundary, rng_engine& rng) {
    if (K < 2) throw dimension_error("chain needs K >= 2");
    chain_disorder d;
    d.boundary = boundary;
    d.eta.resize(K);
    for (auto& e : d.eta) e = standard_normal(rng);
    if (boundary == chain_boundary::open) {
        d.tau_bar.resize(K - 1);
        for (auto& t : d.tau_bar) t = random_spin(rng);
    } else {
        // tau_bar_k = bbar_k bbar_{k+1} for a uniform reference word bbar.
        std::vector<int> bbar(K);
        for (auto& b : bbar) b = random_spin(rng);
        d.tau_bar.resize(K);
        for (int k = 0; k < K; ++k) d.tau_bar[k] = bbar[k] * bbar[(k + 1) % K];
    }
    return d;
}

// ln sum_tau prod(phi) by 2x2 transfer matrices in the log domain.
inline double chain_log_partition(const chain_disorder& d, double chi, const chain_factorization& f) {
    const int K = d.sites();
    using mat = std::array<double, 4>;  // row-major (t_k, t_k1), index 0 is +1
    auto factor = [&](int k, double& shift) {
        mat e;
        double mx = -INFINITY;
        for (int a = 0; a < 2; ++a)
            for (int b = 0; b < 2; ++b) {
                e[2 * a + b] = factor_log_weight(a ? -1 : 1, b ? -1 : 1, d.tau_bar[k], d.eta[k], chi, f);
                mx = std::max(mx, e[2 * a + b]);
            }
        for (double& v : e) v = std::exp(v - mx);
        shift = mx;
        return e;
    };
    double log_scale = 0.0;
    if (d.boundary == chain_boundary::open) {
        std::array<double, 2> v{1.0, 1.0};
        for (int k = 0; k + 1 < K; ++k) {
            double sh;
            const mat t = factor(k, sh);
            std::array<double, 2> w{v[0] * t[0] + v[1] * t[2], v[0] * t[1] + v[1] * t[3]};
            const double n = std::max(w[0], w[1]);
            v = {w[0] / n, w[1] / n};
            log_scale += sh + std::log(n);
        }
        const double tp = terminal_log_weight(1, d.eta[K - 1], chi, f);
        const double tm = terminal_log_weight(-1, d.eta[K - 1], chi, f);
        const double mx = std::max(tp, tm);
        return log_scale + mx + std::log(v[0] * std::exp(tp - mx) + v[1] * std::exp(tm - mx));
    }
    mat m{1.0, 0.0, 0.0, 1.0};
    for (int k = 0; k < K; ++k) {
        double sh;
        const mat t = factor(k, sh);
        mat p{m[0] * t[0] + m[1] * t[2], m[0] * t[1] + m[1] * t[3], m[2] * t[0] + m[3] * t[2],
              m[2] * t[1] + m[3] * t[3]};
        const double n = std::max({p[0], p[1], p[2], p[3]});
        for (int i = 0; i < 4; ++i) m[i] = p[i] / n;
        log_scale += sh + std::log(n);
    }
    return log_scale + std::log(m[0] + m[3]);
}

// Magnetizations <tau_k> of an open chain from forward/backward cavity fields.
inline std::vector<double> chain_marginals_bp(const chain_disorder& d, double chi, const chain_factorization& f) {
    if (d.boundary != chain_boundary::open) throw dimension_error("chain_marginals_bp: open chain expected");
    const int K = d.sites();
    std::vector<double> fwd(K, 0.0), bwd(K, 0.0), m(K);
    for (int k = 0; k + 1 < K; ++k) fwd[k + 1] = forward_cavity(fwd[k], d.tau_bar[k], d.eta[k], chi, f);
    bwd[K - 1] = terminal_field(d.eta[K - 1], chi, f);
    for (int k = K - 2; k >= 0; --k) bwd[k] = backward_cavity(bwd[k + 1], d.tau_bar[k], d.eta[k], chi, f);
    for (int k = 0; k < K; ++k) m[k] = std::tanh(fwd[k] + bwd[k]);
    return m;
}

// Exhaustive 2^K enumeration of the open-chain magnetizations.
inline std::vector<double> exact_chain_marginals(const chain_disorder& d, double chi, const chain_factorization& f) {
    const int K = d.sites();
    if (K > 16) throw dimension_error("exact_chain_marginals: K must be <= 16");
    if (d.boundary != chain_boundary::open) throw dimension_error("exact_chain_marginals: open chain expected");
    const std::uint32_t n = 1u << K;
    std::vector<double> logw(n);
    double mx = -INFINITY;
    for (std::uint32_t c = 0; c < n; ++c) {
        auto s = [c](int k) { return (c >> k) & 1u ? -1 : 1; };
        double lw = terminal_log_weight(s(K - 1), d.eta[K - 1], chi, f);
        for (int k = 0; k + 1 < K; ++k) lw += factor_log_weight(s(k), s(k + 1), d.tau_bar[k], d.eta[k], chi, f);
        logw[c] = lw;
        mx = std::max(mx, lw);
    }
    std::vector<double> m(K, 0.0);
    double z = 0.0;
    for (std::uint32_t c = 0; c < n; ++c) {
        const double w = std::exp(logw[c] - mx);
        z += w;
        for (int k = 0; k < K; ++k) m[k] += ((c >> k) & 1u ? -w : w);
    }
    for (double& v : m) v /= z;
    return m;
}

// Ising chain P(s) ~ exp(sum_k field_k s_k + sum_k coupling_k s_k s_{k+1}), open
// boundary. Returns magnetizations, nearest-neighbour correlations and ln Z.
struct ising_chain_moments {
    Eigen::VectorXd m;
    Eigen::VectorXd pair;  // <s_k s_{k+1}>, size K-1
    double log_z = 0.0;
};

inline ising_chain_moments solve_ising_chain(const Eigen::VectorXd& field, const Eigen::VectorXd& coupling) {
    const int K = static_cast<int>(field.size());
    if (K < 1 || coupling.size() != std::max(0, K - 1)) throw dimension_error("solve_ising_chain: size mismatch");
    Eigen::VectorXd left = Eigen::VectorXd::Zero(K), right = Eigen::VectorXd::Zero(K);
    for (int k = 0; k + 1 < K; ++k) left(k + 1) = atanh_tanh_product(coupling(k), left(k) + field(k));
    for (int k = K - 1; k > 0; --k) right(k - 1) = atanh_tanh_product(coupling(k - 1), right(k) + field(k));
    ising_chain_moments out;
    out.m.resize(K);
    out.pair.resize(std::max(0, K - 1));
    for (int k = 0; k < K; ++k) out.m(k) = std::tanh(left(k) + field(k) + right(k));
    for (int k = 0; k + 1 < K; ++k) {
        const double tj = std::tanh(coupling(k));
        const double tx = std::tanh(left(k) + field(k));
        const double ty = std::tanh(right(k + 1) + field(k + 1));
        out.pair(k) = (tj + tx * ty) / (1.0 + tj * tx * ty);
    }
    // ln Z by eliminating s_0, s_1, ... in turn:
    // sum_s exp(x s + j s s') = exp(ln 2 + (lncosh(x+j) + lncosh(x-j))/2 + h' s').
    double lz = 0.0;
    double h = 0.0;
    for (int k = 0; k + 1 < K; ++k) {
        const double x = h + field(k), j = coupling(k);
        lz += ln2 + 0.5 * (logcosh(x + j) + logcosh(x - j));
        h = atanh_tanh_product(j, x);
    }
    lz += ln2 + logcosh(h + field(K - 1));
    out.log_z = lz;
    return out;
}

// Exhaustive reference for solve_ising_chain (K <= 16).
inline ising_chain_moments exact_ising_chain(const Eigen::VectorXd& field, const Eigen::VectorXd& coupling) {
    const int K = static_cast<int>(field.size());
    if (K > 16) throw dimension_error("exact_ising_chain: K must be <= 16");
    const std::uint32_t n = 1u << K;
    std::vector<double> logw(n);
    double mx = -INFINITY;
    for (std::uint32_t c = 0; c < n; ++c) {
        auto s = [c](int k) { return (c >> k) & 1u ? -1.0 : 1.0; };
        double e = 0.0;
        for (int k = 0; k < K; ++k) e += field(k) * s(k);
        for (int k = 0; k + 1 < K; ++k) e += coupling(k) * s(k) * s(k + 1);
        logw[c] = e;
        mx = std::max(mx, e);
    }
    ising_chain_moments out;
    out.m = Eigen::VectorXd::Zero(K);
    out.pair = Eigen::VectorXd::Zero(std::max(0, K - 1));
    double z = 0.0;
    for (std::uint32_t c = 0; c < n; ++c) {
        auto s = [c](int k) { return (c >> k) & 1u ? -1.0 : 1.0; };
        const double w = std::exp(logw[c] - mx);
        z += w;
        for (int k = 0; k < K; ++k) out.m(k) += w * s(k);
        for (int k = 0; k + 1 < K; ++k) out.pair(k) += w * s(k) * s(k + 1);
    }
    out.m /= z;
    out.pair /= z;
    out.log_z = mx + std::log(z);
    return out;
}

// Equally weighted sample of cavity fields.
struct cavity_population {
    enum class direction { forward, backward };
    std::vector<double> samples;
    direction dir = direction::forward;
    double chi = 0.0;
    double rho = 0.0;
};

struct population_options {
    std::size_t pop_size = 100000;
    int max_sweeps = 200;
    int min_sweeps = 5;
    double ks_tol = 0.01;
};

struct population_pair {
    cavity_population plus;   // forward fields h_{->k}
    cavity_population minus;  // backward fields h_{k<-}
    int sweeps = 0;
    std::vector<double> ks_trace;
};

inline double ks_distance_sorted(const std::vector<double>& a, const std::vector<double>& b) {
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(i / na - j / nb));
    }
    return d;
}

// Stationary cavity-field distributions of the infinite chain by population dynamics.
// `warm` may supply starting populations (for continuation in chi).
inline population_pair population_dynamics(double chi, double rho, const population_options& opt, rng_engine& rng,
                                           const population_pair* warm = nullptr) {
    if (opt.pop_size < 1000) throw domain_error("population_dynamics: pop_size must be >= 1000", opt.pop_size);
    const auto f = cholesky_chain(rho);
    population_pair p;
    p.plus.dir = cavity_population::direction::forward;
    p.minus.dir = cavity_population::direction::backward;
    p.plus.chi = p.minus.chi = chi;
    p.plus.rho = p.minus.rho = rho;
    if (warm && warm->plus.samples.size() == opt.pop_size && warm->minus.samples.size() == opt.pop_size) {
        p.plus.samples = warm->plus.samples;
        p.minus.samples = warm->minus.samples;
    } else {
        p.plus.samples.assign(opt.pop_size, 0.0);
        p.minus.samples.assign(opt.pop_size, 0.0);
    }
    const std::size_t n = opt.pop_size;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    std::vector<double> prev_p = p.plus.samples, prev_m = p.minus.samples;
    std::sort(prev_p.begin(), prev_p.end());
    std::sort(prev_m.begin(), prev_m.end());
    for (int s = 1; s <= opt.max_sweeps; ++s) {
        for (std::size_t u = 0; u < n; ++u) {
            {
                const double h = p.plus.samples[pick(rng)];
                const int tb = random_spin(rng);
                const double eta = standard_normal(rng);
                p.plus.samples[pick(rng)] = forward_cavity(h, tb, eta, chi, f);
            }
            {
                const double h = p.minus.samples[pick(rng)];
                const int tb = random_spin(rng);
                const double eta = standard_normal(rng);
                p.minus.samples[pick(rng)] = backward_cavity(h, tb, eta, chi, f);
            }
        }
        std::vector<double> cur_p = p.plus.samples, cur_m = p.minus.samples;
        std::sort(cur_p.begin(), cur_p.end());
        std::sort(cur_m.begin(), cur_m.end());
        const double ks = std::max(ks_distance_sorted(cur_p, prev_p), ks_distance_sorted(cur_m, prev_m));
        p.ks_trace.push_back(ks);
        prev_p.swap(cur_p);
        prev_m.swap(cur_m);
        p.sweeps = s;
        if (s >= opt.min_sweeps && ks < opt.ks_tol) return p;
    }
    throw convergence_error("population_dynamics: no convergence within max_sweeps", p.ks_trace);
}

// P(h_plus + h_minus < 0) + P(= 0)/2 over independent draws from the two populations.
inline double ber_from_populations(const std::vector<double>& plus, const std::vector<double>& minus) {
    if (plus.empty() || minus.empty()) throw dimension_error("ber_from_populations: empty population");
    std::vector<double> sm = minus;
    std::sort(sm.begin(), sm.end());
    std::vector<double> part(plus.size());
    for (std::size_t i = 0; i < plus.size(); ++i) {
        const double t = -plus[i];
        const auto lo = std::lower_bound(sm.begin(), sm.end(), t);
        const auto hi = std::upper_bound(lo, sm.end(), t);
        part[i] = static_cast<double>(lo - sm.begin()) + 0.5 * static_cast<double>(hi - lo);
    }
    return pairwise_sum(part) / (static_cast<double>(plus.size()) * static_cast<double>(sm.size()));
}

inline double ber_from_populations(const population_pair& p) {
    return ber_from_populations(p.plus.samples, p.minus.samples);
}

// Bulk posterior statistics from stationary populations, sampling pairs of
// neighbouring sites joined by a fresh factor.
struct chain_posterior_stats {
    double site_variance = 0.0;  // E[1 - <tau_k>^2]
    double rt_variance = 0.0;    // site variance + 2 rho E[tb (<t t'> - <t><t'>)]
    double ber = 0.0;
};

inline chain_posterior_stats posterior_statistics(const population_pair& p, double chi, double rho, std::size_t n_pairs,
                                                  rng_engine& rng) {
    const auto f = cholesky_chain(rho);
    const auto& hp = p.plus.samples;
    const auto& hm = p.minus.samples;
    std::uniform_int_distribution<std::size_t> pp(0, hp.size() - 1), pm(0, hm.size() - 1);
    std::vector<double> var(n_pairs), cov(n_pairs);
    for (std::size_t i = 0; i < n_pairs; ++i) {
        const double hl = hp[pp(rng)], hr = hm[pm(rng)];
        const int tb = random_spin(rng);
        const double eta = standard_normal(rng);
        const auto ff = detail::fields_of(tb, eta, chi, f);
        // Ising pair with fields x = hl + a, y = hr + b and coupling j.
        const double x = hl + ff.a, y = hr + ff.b, j = ff.j;
        const double tj = std::tanh(j);
        const double tx = std::tanh(x), ty = std::tanh(y);
        const double den = 1.0 + tj * tx * ty;
        const double m1 = (tx + tj * ty) / den;
        const double m2 = (ty + tj * tx) / den;
        const double c12 = (tj + tx * ty) / den;
        var[i] = 0.5 * ((1.0 - m1 * m1) + (1.0 - m2 * m2));
        cov[i] = tb * (c12 - m1 * m2);
    }
    chain_posterior_stats s;
    s.site_variance = pairwise_sum(var) / static_cast<double>(n_pairs);
    s.rt_variance = s.site_variance + 2.0 * rho * pairwise_sum(cov) / static_cast<double>(n_pairs);
    s.ber = ber_from_populations(p);
    return s;
}

}  // namespace mimolab
