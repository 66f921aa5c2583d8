#pragma once

#include <cmath>
#include <functional>
#include <ostream>
#include <string>
#include <vector>

#include "../channel.hpp"
#include "../demod.hpp"
#include "../ising_bp.hpp"
#include "../perturbation.hpp"
#include "../replica.hpp"
#include "../spectral.hpp"

namespace mimolab::harness {

struct selftest_check {
    std::string name;
    std::function<bool()> run;
};

inline std::vector<selftest_check> selftest_checks() {
    std::vector<selftest_check> c;
    c.push_back({"scalar MI saturates at ln 2", [] { return std::abs(mi_scalar_bpsk(50.0) - ln2) < 1e-6; }});
    c.push_back({"scalar MI is increasing", [] {
                     double prev = 0.0;
                     for (double chi : {0.1, 0.5, 1.0, 2.0, 5.0}) {
                         const double v = mi_scalar_bpsk(chi);
                         if (!(v > prev)) return false;
                         prev = v;
                     }
                     return true;
                 }});
    c.push_back({"Cholesky chain identities", [] {
                     for (int i = 0; i <= 20; ++i) {
                         const double rho = -0.5 + 0.05 * i;
                         const auto f = cholesky_chain(rho);
                         if (std::abs(f.l0 * f.l0 + f.l1 * f.l1 - 1.0) > 1e-14 || std::abs(f.l0 * f.l1 - rho) > 1e-14)
                             return false;
                     }
                     return true;
                 }});
    c.push_back({"chain BP equals enumeration", [] {
                     rng_engine rng = make_stream(11, 0);
                     for (int t = 0; t < 5; ++t) {
                         const int K = 4 + 2 * t;
                         const auto d = sample_chain_disorder(K, chain_boundary::open, rng);
                         const auto f = cholesky_chain(0.3);
                         const auto a = chain_marginals_bp(d, 1.5, f);
                         const auto b = exact_chain_marginals(d, 1.5, f);
                         for (int k = 0; k < K; ++k)
                             if (std::abs(a[k] - b[k]) > 1e-10) return false;
                     }
                     return true;
                 }});
    c.push_back({"arcsine Legendre closed form", [] {
                     const auto s = spectrum::arcsine(1.0, 0.4);
                     for (double lam : {0.7, 0.95, 1.1, 1.3}) {
                         const double a = legendre_g_hat(s, 1.0, lam, g_kernel::spherical, field_kind::real).value;
                         const double b = legendre_g_hat_closed(s, 1.0, lam, g_kernel::spherical, field_kind::real).value;
                         if (std::abs(a - b) > 1e-8) return false;
                     }
                     return true;
                 }});
    c.push_back({"fourth-order discrepancy is nonpositive", [] {
                     for (double chi : {0.0, 0.5, 1.0, 3.0, 10.0})
                         for (const auto& cn : {constellation::bpsk(), constellation::qpsk()})
                             if (discrepancy(chi, 0.2, chain_matrix_stats_asymptotic(), cn) > 0.0) return false;
                     return true;
                 }});
    c.push_back({"noiseless demodulation is error free", [] {
                     rng_engine rng = make_stream(12, 0);
                     const int K = 32, L = 64;
                     const auto rr = correlation_matrix::identity(L);
                     const auto rt = correlation_matrix::tridiagonal(K, 0.2);
                     const double sigma2 = snr_to_sigma2(30.0, rr, rt);
                     const auto ch = make_channel<double>(rr, rt, sigma2, rng);
                     const auto b = random_symbols<double>(constellation::bpsk(), K, rng);
                     const auto r = transmit(ch, b, rng);
                     const auto res = demod_run(ch, r, rt, spectrum::delta(1.0));
                     return (res.b_hat - b).cwiseAbs().maxCoeff() == 0.0;
                 }});
    c.push_back({"single-symbol MAP is the matched filter sign", [] {
                     rng_engine rng = make_stream(13, 0);
                     const auto rr = correlation_matrix::identity(3);
                     const auto rt = correlation_matrix::identity(1);
                     const auto ch = make_channel<double>(rr, rt, 0.5, rng);
                     const auto b = random_symbols<double>(constellation::bpsk(), 1, rng);
                     const auto r = transmit(ch, b, rng);
                     const double mf = (ch.H.transpose() * r)(0);
                     return map_oracle(ch, r).b_hat(0) == (mf >= 0.0 ? 1.0 : -1.0);
                 }});
    return c;
}

// Prints one line per check; true when all pass.
inline bool run_selftest(std::ostream& os) {
    bool all = true;
    for (const auto& ch : selftest_checks()) {
        bool ok = false;
        std::string err;
        try {
            ok = ch.run();
        } catch (const std::exception& e) {
            err = e.what();
        }
        os << (ok ? "ok   " : "FAIL ") << ch.name;
        if (!err.empty()) os << " (" << err << ")";
        os << '\n';
        all = all && ok;
    }
    return all;
}

}  // namespace mimolab::harness
