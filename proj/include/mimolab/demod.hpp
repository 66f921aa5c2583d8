#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"
#include "ising_bp.hpp"
#include "spectral.hpp"

namespace mimolab {

// Iterative mean-field demodulator for real BPSK over H = sqrt(Rr) Xi sqrt(Rt)
// with Rt tridiagonal. Real-channel form of the updates:
//   chi_hat = E_rr[lambda / (sigma2 + beta lambda chi)]
//   h      <- h + sigma2 chi_hat (H^T (r - H m) / sigma2 - h)
//   m, chi <- moments of P(b) exp(-(chi_hat/2)(b - m)^T Rt (b - m) + h^T b)
struct demod_state {
    Eigen::VectorXd m;
    Eigen::VectorXd h;
    double chi = 1.0;
    double chi_hat = 0.0;
    int t = 0;
};

inline demod_state demod_init(int K) {
    if (K < 1) throw dimension_error("demod_init: K must be >= 1");
    demod_state s;
    s.m = Eigen::VectorXd::Zero(K);
    s.h = Eigen::VectorXd::Zero(K);
    s.chi = 1.0;
    s.chi_hat = 0.0;
    s.t = 0;
    return s;
}

inline demod_state demod_step1(const demod_state& s, const channel_instance<double>& ch, const Eigen::VectorXd& r,
                               const spectrum& rr) {
    if (r.size() != ch.L || s.m.size() != ch.K) throw dimension_error("demod_step1: dimension mismatch");
    demod_state o = s;
    o.chi_hat = effective_precision(rr, ch.beta(), ch.sigma2, s.chi);
    const Eigen::VectorXd target = ch.H.transpose() * (r - ch.H * s.m) / ch.sigma2;
    o.h = s.h + ch.sigma2 * o.chi_hat * (target - s.h);
    return o;
}

namespace detail {

inline void check_chain(const correlation_matrix& rt, int K) {
    if (rt.dim() != K) throw dimension_error("demod: Rt dimension != K");
    if (rt.kind() == correlation_matrix::form::dense) throw dimension_error("demod: Rt must be identity or tridiagonal");
}

inline Eigen::VectorXd rt_times(const correlation_matrix& rt, const Eigen::VectorXd& v) {
    const double rho = rt.kind() == correlation_matrix::form::tridiagonal ? rt.rho() : 0.0;
    Eigen::VectorXd out = v;
    const int K = static_cast<int>(v.size());
    for (int k = 0; k + 1 < K; ++k) {
        out(k) += rho * v(k + 1);
        out(k + 1) += rho * v(k);
    }
    return out;
}

}  // namespace detail

struct tilted_chain_moments {
    Eigen::VectorXd m;
    Eigen::VectorXd pair;
    double chi = 0.0;
};

// Moments of the tilted chain measure around `m_ref`.
inline tilted_chain_moments tilted_chain(const Eigen::VectorXd& m_ref, const Eigen::VectorXd& h, double chi_hat,
                                         const correlation_matrix& rt) {
    const int K = static_cast<int>(m_ref.size());
    detail::check_chain(rt, K);
    const double rho = rt.kind() == correlation_matrix::form::tridiagonal ? rt.rho() : 0.0;
    const Eigen::VectorXd field = chi_hat * detail::rt_times(rt, m_ref) + h;
    const Eigen::VectorXd coupling = Eigen::VectorXd::Constant(std::max(0, K - 1), -chi_hat * rho);
    const auto mom = solve_ising_chain(field, coupling);
    tilted_chain_moments out;
    out.m = mom.m;
    out.pair = mom.pair;
    const double quad = K + 2.0 * rho * mom.pair.sum();
    out.chi = std::max(0.0, (quad - out.m.dot(detail::rt_times(rt, out.m))) / K);
    return out;
}

inline demod_state demod_step2_chain(const demod_state& s, const correlation_matrix& rt, double damping = 0.0) {
    const auto mom = tilted_chain(s.m, s.h, s.chi_hat, rt);
    demod_state o = s;
    o.m = damping > 0.0 ? Eigen::VectorXd((1.0 - damping) * mom.m + damping * s.m) : mom.m;
    o.chi = mom.chi;
    return o;
}

struct demod_options {
    double tol = 1e-6;
    int t_max = 200;
    double damping = 0.0;
};

struct demod_trace_entry {
    double chi;
    double chi_hat;
    double h_norm;
    double m_change;
};

struct demod_result {
    Eigen::VectorXd b_hat;
    demod_state state;
    std::vector<demod_trace_entry> trace;
    bool converged = false;
    int iterations = 0;
};

inline Eigen::VectorXd hard_decision(const Eigen::VectorXd& m) {
    Eigen::VectorXd b(m.size());
    for (int k = 0; k < m.size(); ++k) b(k) = m(k) >= 0.0 ? 1.0 : -1.0;
    return b;
}

inline demod_result demod_run(const channel_instance<double>& ch, const Eigen::VectorXd& r, const correlation_matrix& rt,
                              const spectrum& rr, const demod_options& opt = {}) {
    detail::check_chain(rt, ch.K);
    demod_result res;
    demod_state s = demod_init(ch.K);
    for (int t = 1; t <= opt.t_max; ++t) {
        const Eigen::VectorXd m_prev = s.m;
        s = demod_step1(s, ch, r, rr);
        s = demod_step2_chain(s, rt, opt.damping);
        s.t = t;
        const double dm = (s.m - m_prev).cwiseAbs().maxCoeff();
        res.trace.push_back({s.chi, s.chi_hat, s.h.norm(), dm});
        res.iterations = t;
        if (!std::isfinite(dm)) break;
        if (dm < opt.tol) {
            res.converged = true;
            break;
        }
    }
    res.state = s;
    res.b_hat = hard_decision(s.m);
    return res;
}

// Stationarity residuals at a state: chi_hat, h, m and chi conditions.
struct demod_residuals {
    double chi_hat = 0.0;
    double h = 0.0;
    double m = 0.0;
    double chi = 0.0;
};

inline demod_residuals stationarity_residuals(const demod_state& s, const channel_instance<double>& ch,
                                              const Eigen::VectorXd& r, const correlation_matrix& rt, const spectrum& rr) {
    demod_residuals out;
    out.chi_hat = std::abs(s.chi_hat - effective_precision(rr, ch.beta(), ch.sigma2, s.chi));
    out.h = (s.h - ch.H.transpose() * (r - ch.H * s.m) / ch.sigma2).cwiseAbs().maxCoeff();
    const auto mom = tilted_chain(s.m, s.h, s.chi_hat, rt);
    out.m = (mom.m - s.m).cwiseAbs().maxCoeff();
    out.chi = std::abs(mom.chi - s.chi);
    return out;
}

// Maximizer of each exact posterior marginal of b given (r, H), by exhaustive
// enumeration in Gray-code order. Ties go to +1.
struct map_result {
    Eigen::VectorXd b_hat;
    Eigen::VectorXd marginal_mean;
};

inline map_result map_oracle(const channel_instance<double>& ch, const Eigen::VectorXd& r) {
    const int K = ch.K;
    if (K > 16) throw dimension_error("map_oracle: K must be <= 16");
    if (r.size() != ch.L) throw dimension_error("map_oracle: r has wrong length");
    const std::uint32_t n = 1u << K;
    Eigen::VectorXd b = Eigen::VectorXd::Ones(K);
    Eigen::VectorXd res = r - ch.H * b;
    std::vector<double> logw(n);
    std::vector<std::uint32_t> code(n);
    std::uint32_t g = 0;
    for (std::uint32_t i = 0; i < n; ++i) {
        if (i > 0) {
            const int k = __builtin_ctz(i);
            g ^= 1u << k;
            // b_k flips sign: residual changes by 2 b_k_old H_k.
            res += 2.0 * b(k) * ch.H.col(k);
            b(k) = -b(k);
        }
        code[i] = g;
        logw[i] = -res.squaredNorm() / (2.0 * ch.sigma2);
    }
    const double mx = *std::max_element(logw.begin(), logw.end());
    Eigen::VectorXd num = Eigen::VectorXd::Zero(K);
    double z = 0.0;
    for (std::uint32_t i = 0; i < n; ++i) {
        const double w = std::exp(logw[i] - mx);
        z += w;
        for (int k = 0; k < K; ++k) num(k) += ((code[i] >> k) & 1u) ? -w : w;
    }
    map_result out;
    out.marginal_mean = num / z;
    out.b_hat = hard_decision(out.marginal_mean);
    return out;
}

}  // namespace mimolab
