#include <cmath>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include <mimolab/perturbation.hpp>

using namespace mimolab;

namespace {

Eigen::MatrixXcd chain_r(int K, bool ring) {
    Eigen::MatrixXcd r = Eigen::MatrixXcd::Zero(K, K);
    for (int k = 0; k + 1 < K; ++k) r(k, k + 1) = r(k + 1, k) = 1.0;
    if (ring) r(0, K - 1) = r(K - 1, 0) = 1.0;
    return r;
}

void expect_stats_eq(const matrix_stats& a, const matrix_stats& b) {
    EXPECT_NEAR(a.tr_r2, b.tr_r2, 1e-12);
    EXPECT_NEAR(a.tr_r3, b.tr_r3, 1e-12);
    EXPECT_NEAR(a.tr_r4, b.tr_r4, 1e-12);
    EXPECT_NEAR(a.sum_diag_r2_sq, b.sum_diag_r2_sq, 1e-12);
    EXPECT_NEAR(a.sum_rij4, b.sum_rij4, 1e-12);
}

}  // namespace

TEST(MatrixStats, ChainFormulasMatchDenseTraces) {
    for (int K : {4, 7, 12}) expect_stats_eq(chain_matrix_stats(K, chain_boundary::open), matrix_stats_dense(chain_r(K, false)));
    for (int K : {6, 10}) expect_stats_eq(chain_matrix_stats(K, chain_boundary::periodic), matrix_stats_dense(chain_r(K, true)));
    // A ring of K >= 5 already has the limiting per-site statistics; an open
    // chain differs by its edge terms, tr R^2 = 2(K-1) and tr R^4 = 6K - 10.
    const auto lim = chain_matrix_stats_asymptotic();
    expect_stats_eq(matrix_stats_dense(chain_r(256, true)), lim);
    const auto open = matrix_stats_dense(chain_r(256, false));
    EXPECT_NEAR(open.tr_r2, lim.tr_r2 - 2.0 / 256, 1e-12);
    EXPECT_NEAR(open.tr_r4, lim.tr_r4 - 10.0 / 256, 1e-12);
}

TEST(CHat, FrozenAndLimits) {
    EXPECT_EQ(c_hat(0.0), -2.0);
    EXPECT_NEAR(c_hat(1.0), -0.100934035600, 1e-11);
    EXPECT_NEAR(c_hat(200.0), 0.0, 1e-12);
    // Independent tanh-sinh evaluation over the Gaussian.
    const double chi = 1.0;
    const double alt = quad::integrate_endpoint(
        [&](double, double pc) {
            // pc is the signed distance to the nearer endpoint of (0, 1).
            const double z = pc < 0.0 ? -std::sqrt(2.0) * boost::math::erfc_inv(-2.0 * pc)
                                      : std::sqrt(2.0) * boost::math::erfc_inv(2.0 * pc);
            const double t2 = std::pow(std::tanh(chi + std::sqrt(chi) * z), 2);
            return (1.0 - t2) * (1.0 - 3.0 * t2);
        },
        0.0, 1.0, 1e-12);
    EXPECT_NEAR(c_hat(chi), -2.0 * alt, 1e-8);
}

TEST(CComplex, DoublingMapAndLimits) {
    const auto q = constellation::qpsk();
    for (double chi : {0.5, 1.0, 3.0}) {
        const auto v = c_complex(chi, q);
        EXPECT_NEAR(v.value, c_hat(chi), 1e-9);
        EXPECT_LT(v.error, 1e-6);
    }
    // Prior cumulant of +-1/sqrt(2): kappa4 = -2 (1/2)^2 = -1/2 per component.
    EXPECT_NEAR(c_complex(0.0, q).value, 2.0 * (-0.5 - 0.5), 1e-15);
    EXPECT_NEAR(c_complex(60.0, q).value, 0.0, 1e-9);
    EXPECT_THROW(c_complex(1.0, constellation::bpsk()), domain_error);
}

TEST(Expansion, ZeroCorrelation) {
    const auto st = chain_matrix_stats_asymptotic();
    for (const auto& c : {constellation::bpsk(), constellation::qpsk()}) {
        const auto a = expand_matrix_integration(1.2, 0.0, st, c);
        const auto b = expand_exact(1.2, 0.0, st, c);
        EXPECT_NEAR(a.terms[0], mi_identity(1.2, c), 1e-14);
        EXPECT_EQ(a.terms[0], b.terms[0]);
        for (int n = 1; n < 5; ++n) {
            EXPECT_EQ(a.terms[n], 0.0);
            EXPECT_EQ(b.terms[n], 0.0);
        }
    }
}

TEST(Expansion, OrdersZeroToThreeAgree) {
    const auto st = matrix_stats_dense(chain_r(9, false));
    for (double chi : {0.3, 1.0, 4.0})
        for (const auto& c : {constellation::bpsk(), constellation::qpsk()}) {
            const auto a = expand_matrix_integration(chi, 0.17, st, c);
            const auto b = expand_exact(chi, 0.17, st, c);
            for (int n = 0; n < 4; ++n) EXPECT_NEAR(a.terms[n], b.terms[n], 1e-14);
        }
    EXPECT_EQ(expand_exact(1.0, 0.2, chain_matrix_stats_asymptotic(), constellation::bpsk()).terms[3], 0.0);
}

TEST(Expansion, MatrixIntegrationTruncationIsHigherOrder) {
    const double chi = 1.0;
    const auto st = chain_matrix_stats_asymptotic();
    auto residual = [&](double rho) {
        const double num = mi_rotated_subchannel(tridiagonal_spectrum_asymptotic(rho), chi, constellation::bpsk()).value;
        return std::abs(num - expand_matrix_integration(chi, rho, st, constellation::bpsk()).sum());
    };
    const double r1 = residual(0.1), r2 = residual(0.05), r3 = residual(0.025);
    EXPECT_GT(std::log2(r1 / r2), 4.7);
    EXPECT_GT(std::log2(r2 / r3), 4.7);
}

TEST(Expansion, DiscrepancyIsGapOfExpansions) {
    const auto st = matrix_stats_dense(chain_r(10, true));
    for (const auto& c : {constellation::bpsk(), constellation::qpsk()}) {
        const double gap = expand_exact(1.7, 0.2, st, c).sum() - expand_matrix_integration(1.7, 0.2, st, c).sum();
        EXPECT_NEAR(discrepancy(1.7, 0.2, st, c), gap, 1e-14);
    }
}

TEST(Discrepancy, ChainBpskSpecialization) {
    const auto st = chain_matrix_stats_asymptotic();
    for (double chi : {0.5, 2.0, 6.0}) {
        const auto t = bpsk_terms(chi);
        const double v = -2.0 * t.d2 - 4.0 * t.d1 * t.d1;
        const double c = c_hat(chi);
        const double expect = -std::pow(0.1 * chi, 4) / 4.0 * (v * v + c * c / 6.0);
        EXPECT_NEAR(discrepancy(chi, 0.1, st, constellation::bpsk()), expect, 1e-15);
    }
    EXPECT_NEAR(discrepancy(2.0, 0.05, st, constellation::bpsk()), -2.2718e-7, 1e-10);
    EXPECT_EQ(discrepancy(2.0, 0.0, st, constellation::bpsk()), 0.0);
}

TEST(Discrepancy, NonpositiveAndCurvatureGapNonnegative) {
    const auto st = chain_matrix_stats_asymptotic();
    for (int i = 0; i <= 40; ++i) {
        const double chi = 0.25 * i;
        for (const auto& c : {constellation::bpsk(), constellation::qpsk()}) {
            EXPECT_LE(discrepancy(chi, 0.3, st, c), 0.0);
            EXPECT_GE(curvature_gap(chi, c), 0.0);
        }
    }
}
