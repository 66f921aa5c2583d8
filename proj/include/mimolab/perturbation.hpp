#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <numeric>

#include <Eigen/Dense>

#include "channel.hpp"
#include "errors.hpp"
#include "ising_bp.hpp"
#include "numeric.hpp"
#include "replica.hpp"

namespace mimolab {

// Trace statistics of a zero-diagonal Hermitian R, each divided by K.
struct matrix_stats {
    double tr_r2 = 0.0;
    double tr_r3 = 0.0;
    double tr_r4 = 0.0;
    double sum_diag_r2_sq = 0.0;  // sum_i ((R^2)_ii)^2
    double sum_rij4 = 0.0;        // sum_ij (Re R_ij)^4 + (Im R_ij)^4
};

// Nearest-neighbour chain R (ones on the first off-diagonals).
inline matrix_stats chain_matrix_stats(int K, chain_boundary bc) {
    if (K < 2) throw dimension_error("chain_matrix_stats: K must be >= 2");
    const double k = K;
    if (bc == chain_boundary::periodic) {
        if (K < 5) throw dimension_error("chain_matrix_stats: ring needs K >= 5");
        return {2.0, 0.0, 6.0, 4.0, 2.0};
    }
    return {2.0 * (k - 1) / k, 0.0, (6.0 * k - 10.0) / k, (4.0 * k - 6.0) / k, 2.0 * (k - 1) / k};
}

inline matrix_stats chain_matrix_stats_asymptotic() { return {2.0, 0.0, 6.0, 4.0, 2.0}; }

inline matrix_stats matrix_stats_dense(const Eigen::MatrixXcd& R) {
    if (R.rows() != R.cols() || R.rows() == 0) throw dimension_error("matrix_stats_dense: square nonempty matrix expected");
    const double k = static_cast<double>(R.rows());
    const Eigen::MatrixXcd r2 = R * R;
    matrix_stats s;
    s.tr_r2 = r2.trace().real() / k;
    s.tr_r3 = (r2 * R).trace().real() / k;
    s.tr_r4 = (r2 * r2).trace().real() / k;
    s.sum_diag_r2_sq = r2.diagonal().real().array().square().sum() / k;
    s.sum_rij4 = (R.real().array().pow(4).sum() + R.imag().array().pow(4).sum()) / k;
    return s;
}

// C_hat(chi) = -2 E[(1 - tanh^2 u)(1 - 3 tanh^2 u)]: the mean fourth posterior
// cumulant of a +-1 symbol on the scalar real channel.
inline double c_hat(double chi) {
    if (!(chi >= 0.0)) throw domain_error("c_hat: chi must be >= 0", chi);
    if (chi == 0.0) return -2.0;
    return -2.0 * detail::llr_expectation(chi, [](double u) {
        const double t2 = std::tanh(u) * std::tanh(u);
        return (1.0 - t2) * (1.0 - 3.0 * t2);
    });
}

struct quadrature_value {
    double value = 0.0;
    double error = 0.0;
};

namespace detail {

inline void check_qpsk_class(const constellation& c) {
    const double n = static_cast<double>(c.size());
    cplx mean = 0.0;
    double pre = 0.0, pim = 0.0, cross = 0.0;
    for (const cplx& s : c.symbols) {
        mean += s;
        pre += s.real() * s.real();
        pim += s.imag() * s.imag();
        cross += s.real() * s.imag();
    }
    const double tol = 1e-12;
    if (std::abs(mean) / n > tol || std::abs(pre / n - 0.5) > tol || std::abs(pim / n - 0.5) > tol ||
        std::abs(cross) / n > tol)
        throw domain_error("c_complex: constellation must be zero-mean with power 1/2 in each uncorrelated component",
                           pim / n);
}

// Fourth cumulant of a discrete variable with the given values and weights.
// Central moments keep full relative accuracy when one weight is close to 1.
inline double fourth_cumulant(const double* x, const double* w, int n) {
    double m1 = 0.0;
    for (int i = 0; i < n; ++i) m1 += w[i] * x[i];
    double c2 = 0.0, c4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double d2 = (x[i] - m1) * (x[i] - m1);
        c2 += w[i] * d2;
        c4 += w[i] * d2 * d2;
    }
    return c4 - 3.0 * c2 * c2;
}

inline double c_complex_at(double chi, const constellation& c, double tol) {
    const int n = static_cast<int>(c.size());
    const double sd = 1.0 / std::sqrt(2.0 * chi);
    double total = 0.0;
    for (const cplx& b0 : c.symbols) {
        auto inner = [&](double z1) {
            return quad::gaussian_expectation(
                [&](double z2) {
                    const cplx r = b0 + cplx(z1, z2) * sd;
                    double lw[16], w[16], re[16], im[16];
                    double mx = -INFINITY;
                    for (int i = 0; i < n; ++i) {
                        lw[i] = -chi * std::norm(r - c.symbols[i]);
                        mx = std::max(mx, lw[i]);
                    }
                    double z = 0.0;
                    for (int i = 0; i < n; ++i) {
                        w[i] = std::exp(lw[i] - mx);
                        z += w[i];
                        re[i] = c.symbols[i].real();
                        im[i] = c.symbols[i].imag();
                    }
                    for (int i = 0; i < n; ++i) w[i] /= z;
                    return fourth_cumulant(re, w, n) + fourth_cumulant(im, w, n);
                },
                -b0.imag() / sd, tol);
        };
        total += quad::gaussian_expectation(inner, -b0.real() / sd, tol);
    }
    return 2.0 * total / static_cast<double>(c.size());
}

}  // namespace detail

// C(chi) = 2 E[kappa4(Re b | r) + kappa4(Im b | r)] on the complex scalar channel
// r = b + n, n ~ CN(0, 1/chi), evaluated by nested adaptive quadrature over the
// full symbol posterior. `error` is the change between two tolerances.
inline quadrature_value c_complex(double chi, const constellation& c) {
    if (c.size() > 16) throw domain_error("c_complex: at most 16 symbols", static_cast<double>(c.size()));
    detail::check_qpsk_class(c);
    if (!(chi >= 0.0)) throw domain_error("c_complex: chi must be >= 0", chi);
    if (chi == 0.0) {
        std::vector<double> re, im, w(c.size(), 1.0 / c.size());
        for (const cplx& s : c.symbols) {
            re.push_back(s.real());
            im.push_back(s.imag());
        }
        const int n = static_cast<int>(c.size());
        return {2.0 * (detail::fourth_cumulant(re.data(), w.data(), n) + detail::fourth_cumulant(im.data(), w.data(), n)), 0.0};
    }
    const double fine = detail::c_complex_at(chi, c, 1e-11);
    const double coarse = detail::c_complex_at(chi, c, 1e-7);
    return {fine, std::abs(fine - coarse)};
}

enum class expansion_method { matrix_integration, exact };

// terms[n] is the rho^n contribution at the given rho; sum() is the truncated series.
struct expansion_coefficients {
    std::array<double, 5> terms{};
    expansion_method method = expansion_method::exact;
    matrix_stats stats;
    double sum() const { return std::accumulate(terms.begin(), terms.end(), 0.0); }
};

namespace detail {

// Complex-channel quantities entering the expansions. A real BPSK channel is half
// of a complex channel built from two copies of it, so it reuses the complex
// formulas with doubled derivatives and an overall factor 1/2.
struct expansion_inputs {
    double value, d1, d2, c4, scale;
};

inline expansion_inputs expansion_inputs_for(double chi, const constellation& c) {
    const scalar_terms t = bpsk_terms(chi);
    const double c4 = c_hat(chi);
    if (c.kind == modulation::bpsk) return {2.0 * t.value, 2.0 * t.d1, 2.0 * t.d2, c4, 0.5};
    if (c.kind == modulation::qpsk) return {2.0 * t.value, 2.0 * t.d1, 2.0 * t.d2, c4, 1.0};
    throw domain_error("expansion: unsupported constellation", 0.0);
}

}  // namespace detail

inline expansion_coefficients expand_matrix_integration(double chi, double rho, const matrix_stats& st,
                                                        const constellation& c) {
    if (!(chi >= 0.0)) throw domain_error("expand_matrix_integration: chi must be >= 0", chi);
    const auto in = detail::expansion_inputs_for(chi, c);
    const double x = rho * chi, a = in.d1, a2 = a * a;
    expansion_coefficients e;
    e.method = expansion_method::matrix_integration;
    e.stats = st;
    e.terms[0] = in.value;
    e.terms[1] = 0.0;
    e.terms[2] = -x * x / 2.0 * st.tr_r2 * a2;
    e.terms[3] = x * x * x / 3.0 * st.tr_r3 * a2 * a;
    e.terms[4] = -std::pow(x, 4) / 4.0 * (st.tr_r4 - 2.0 * st.tr_r2 * st.tr_r2) * a2 * a2 +
                 std::pow(x, 4) / 2.0 * st.tr_r2 * st.tr_r2 * in.d2 * a2;
    for (double& t : e.terms) t *= in.scale;
    return e;
}

inline expansion_coefficients expand_exact(double chi, double rho, const matrix_stats& st, const constellation& c) {
    if (!(chi >= 0.0)) throw domain_error("expand_exact: chi must be >= 0", chi);
    const auto in = detail::expansion_inputs_for(chi, c);
    const double x = rho * chi, a = in.d1, a2 = a * a;
    const double v = -in.d2 - a2;
    expansion_coefficients e;
    e.method = expansion_method::exact;
    e.stats = st;
    e.terms[0] = in.value;
    e.terms[1] = 0.0;
    e.terms[2] = -x * x / 2.0 * st.tr_r2 * a2;
    e.terms[3] = x * x * x / 3.0 * st.tr_r3 * a2 * a;
    e.terms[4] = -std::pow(x, 4) / 4.0 * st.tr_r4 * a2 * a2 -
                 std::pow(x, 4) / 4.0 *
                     (2.0 * st.sum_diag_r2_sq * v * a2 + st.sum_rij4 * (v * v + in.c4 * in.c4 / 6.0));
    for (double& t : e.terms) t *= in.scale;
    return e;
}

// Fourth-order gap I_exact - I_matrix_integration:
//   -(rho chi)^4 / 2 * [sum_i ((R^2)_ii - tr R^2/K)^2 / K] * (-I'' - I'^2) I'^2
//   -(rho chi)^4 / 4 * [sum_ij Re^4 + Im^4 / K] * ((-I'' - I'^2)^2 + C^2 / 6)
inline double discrepancy(double chi, double rho, const matrix_stats& st, const constellation& c) {
    if (!(chi >= 0.0)) throw domain_error("discrepancy: chi must be >= 0", chi);
    const auto in = detail::expansion_inputs_for(chi, c);
    const double a2 = in.d1 * in.d1;
    const double v = -in.d2 - a2;
    const double spread = st.sum_diag_r2_sq - st.tr_r2 * st.tr_r2;
    const double x4 = std::pow(rho * chi, 4);
    return in.scale * (-x4 / 2.0 * spread * v * a2 - x4 / 4.0 * st.sum_rij4 * (v * v + in.c4 * in.c4 / 6.0));
}

// -I'' - I'^2 of the identity channel (nonnegative).
inline double curvature_gap(double chi, const constellation& c) {
    const scalar_terms t = identity_terms(chi, c);
    return -t.d2 - t.d1 * t.d1;
}

}  // namespace mimolab
