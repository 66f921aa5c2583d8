#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <mimolab/spectral.hpp>

using namespace mimolab;

namespace {

spectrum chain_empirical(double rho, int K) { return tridiagonal_spectrum(rho, K); }

}  // namespace

TEST(Spectrum, TridiagonalSpectrumForms) {
    EXPECT_EQ(tridiagonal_spectrum(0.0, 10).kind(), spectrum::form::delta);
    const auto s = tridiagonal_spectrum(0.2, 6);
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(6, 6);
    for (int k = 0; k < 5; ++k) m(k, k + 1) = m(k + 1, k) = 0.2;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(s.eigenvalues()[k], es.eigenvalues()(k), 1e-12);
    EXPECT_THROW(tridiagonal_spectrum(0.51, 6), domain_error);
}

TEST(Spectrum, ArcsineMomentsMatchChainTraces) {
    const double rho = 0.3;
    const auto a = tridiagonal_spectrum_asymptotic(rho);
    EXPECT_NEAR(a.moment(2) - 1.0, 2.0 * rho * rho, 1e-14);
    const auto e = chain_empirical(rho, 4096);
    for (int n = 1; n <= 4; ++n) EXPECT_NEAR(a.moment(n), e.moment(n), 2e-3);
    auto central = [&](const spectrum& s, int n) { return s.expect([&](double l) { return std::pow(l - 1.0, n); }); };
    EXPECT_NEAR(central(a, 2), 2.0 * rho * rho, 1e-12);
    EXPECT_NEAR(central(a, 3), 0.0, 1e-12);
    EXPECT_NEAR(central(a, 4), 6.0 * std::pow(rho, 4), 1e-12);
}

TEST(Spectrum, CdfAndCauchy) {
    const auto a = spectrum::arcsine(1.0, 0.4);
    EXPECT_NEAR(a.cdf(1.0), 0.5, 1e-15);
    EXPECT_EQ(a.cdf(0.0), 0.0);
    EXPECT_EQ(a.cdf(2.0), 1.0);
    // Arcsine Cauchy transform: 1 / sqrt((z - c)^2 - w^2).
    EXPECT_NEAR(a.cauchy(1.5), 1.0 / std::sqrt(0.25 - 0.16), 1e-12);
    EXPECT_NEAR(a.cauchy(0.5), -1.0 / std::sqrt(0.25 - 0.16), 1e-12);
    EXPECT_THROW(a.cauchy(1.2), domain_error);
    const double h = 1e-5;
    EXPECT_NEAR(a.cauchy_derivative(1.6), (a.cauchy(1.6 + h) - a.cauchy(1.6 - h)) / (2 * h), 1e-7);
}

TEST(GFunction, ClosedFormsAndZero) {
    const auto d = spectrum::delta(1.0);
    EXPECT_NEAR(g_function(d, 1.0, -1.0), std::log(2.0), 1e-15);
    for (const auto& s : {d, spectrum::arcsine(1.0, 0.4), chain_empirical(0.2, 12)}) EXPECT_EQ(g_function(s, 1.3, 0.0), 0.0);
    for (double beta : {0.5, 1.1})
        for (double x : {-2.0, -0.3, 0.4}) EXPECT_NEAR(g_derivative(d, beta, x), -1.0 / (1.0 - beta * x), 1e-14);
    EXPECT_NEAR(g_derivative(spectrum::arcsine(1.0, 0.4), 1.1, 0.0), -1.0, 1e-13);
    EXPECT_THROW(g_function(d, 1.0, 1.0), domain_error);
}

TEST(GFunction, ArcsineMatchesLargeTridiagonal) {
    const auto a = tridiagonal_spectrum_asymptotic(0.3);
    const auto e = chain_empirical(0.3, 4096);
    // The finite chain differs from its limit by O(1/K) in every moment.
    EXPECT_NEAR(g_function(a, 1.0, -0.5), g_function(e, 1.0, -0.5), 1e-4);
    const double exact = g_function(a, 1.0, -0.5);
    const double reference = spectrum::arcsine(1.0, 0.6).expect([](double l) { return std::log1p(0.5 * l); }, 1e-14);
    EXPECT_NEAR(exact, reference, 1e-12);
}

TEST(GFunction, DerivativesMatchFiniteDifferences) {
    const auto a = tridiagonal_spectrum_asymptotic(0.2);
    const double beta = 1.1, x = -1.0, h = 1e-5;
    EXPECT_NEAR(g_derivative(a, beta, x), (g_function(a, beta, x + h) - g_function(a, beta, x - h)) / (2 * h), 1e-8);
    EXPECT_NEAR(g_second_derivative(a, beta, x), (g_derivative(a, beta, x + h) - g_derivative(a, beta, x - h)) / (2 * h), 1e-7);
}

TEST(EffectivePrecision, PointSpectrumClosedForm) {
    EXPECT_NEAR(effective_precision(spectrum::delta(1.0), 1.1, 1.0, 1.0), 1.0 / 2.1, 1e-15);
    for (double chi : {0.1, 0.7, 3.0}) EXPECT_NEAR(effective_precision(spectrum::delta(1.0), 1.1, 0.25, chi), 1.0 / (0.25 + 1.1 * chi), 1e-14);
}

TEST(Legendre, ProductKernelRoundTrip) {
    const auto d = spectrum::delta(1.0);
    const double beta = 1.1;
    for (double lam : {0.2, 0.5, 0.9, 1.4}) {
        const auto n = legendre_g_hat(d, beta, lam, g_kernel::product);
        const auto c = legendre_g_hat_closed(d, beta, lam, g_kernel::product);
        EXPECT_NEAR(n.value, c.value, 1e-10);
        EXPECT_NEAR(n.slope, c.slope, 1e-9);
        // Stationarity: lambda = -G'(x*).
        EXPECT_NEAR(lam, -g_derivative(d, beta, n.conjugate), 1e-10);
    }
    // Duality: Gint(x) = Extr_lambda { lambda x - G_hat(lambda) }, with Gint = -G.
    const double x = -0.7;
    const double lam_star = -g_derivative(d, beta, x);
    const auto at = legendre_g_hat_closed(d, beta, lam_star, g_kernel::product);
    EXPECT_NEAR(lam_star * x - at.value, -g_function(d, beta, x), 1e-12);
}

TEST(Legendre, ArcsineNumericEqualsClosedForm) {
    for (double rho : {0.1, 0.2, 0.4}) {
        const auto s = tridiagonal_spectrum_asymptotic(rho);
        for (int i = 1; i < 20; ++i) {
            const double lam = 1.0 - 2.0 * rho + 4.0 * rho * i / 20.0;
            const double closed = -0.5 * std::log(1.0 - (lam - 1.0) * (lam - 1.0) / (4.0 * rho * rho));
            EXPECT_NEAR(legendre_g_hat(s, 1.0, lam, g_kernel::spherical, field_kind::real).value, closed, 1e-8);
            EXPECT_NEAR(legendre_g_hat_closed(s, 1.0, lam, g_kernel::spherical, field_kind::real).value, closed, 1e-14);
        }
        EXPECT_NEAR(legendre_g_hat(s, 1.0, 1.0, g_kernel::spherical, field_kind::real).value, 0.0, 1e-15);
        EXPECT_THROW(legendre_g_hat(s, 1.0, 1.0 + 2.5 * rho, g_kernel::spherical), range_error);
    }
}

TEST(Legendre, EmpiricalSpectrumUsesNumericTransform) {
    const auto s = chain_empirical(0.2, 64);
    EXPECT_FALSE(has_closed_legendre(s, g_kernel::spherical));
    const auto v = legendre_g_hat_auto(s, 1.0, 1.1, g_kernel::spherical, field_kind::real);
    EXPECT_LT(v.residual, 1e-10);
    EXPECT_GT(v.value, 0.0);
}

TEST(Series, ChainCoefficients) {
    const auto c = g_series_coefficients(tridiagonal_spectrum_asymptotic(0.5), 4);
    // Zero-diagonal chain R scaled by rho = 1/2 around 1: moments 2 rho^2, 0, 6 rho^4.
    EXPECT_NEAR(c[1], 1.0, 1e-14);
    EXPECT_NEAR(c[2], 0.5 * 2.0 * 0.25, 1e-12);
    EXPECT_NEAR(c[3], 0.0, 1e-12);
    EXPECT_NEAR(c[4], 0.25 * (6.0 - 8.0) / 16.0, 1e-12);
    const auto z = g_series_coefficients(spectrum::delta(0.0), 4);
    for (double v : z) EXPECT_EQ(v, 0.0);
}

TEST(Series, TaylorRemainderIsFifthOrder) {
    // Skewed spectrum, so the fifth free cumulant does not vanish.
    const auto s = spectrum::empirical({0.5, 0.8, 1.0, 2.0, 3.5});
    const auto c = g_series_coefficients(s, 4);
    auto remainder = [&](double z) {
        const double exact = integrated_r_transform(s, z).gint;
        double series = 0.0;
        for (int n = 0; n <= 4; ++n) series += c[n] * std::pow(z, n);
        return std::abs(exact - series);
    };
    const double r1 = remainder(0.1), r2 = remainder(0.05), r3 = remainder(0.025);
    EXPECT_NEAR(std::log2(r1 / r2), 5.0, 0.3);
    EXPECT_NEAR(std::log2(r2 / r3), 5.0, 0.3);
}

TEST(MarchenkoPastur, CdfEndpoints) {
    EXPECT_EQ(marchenko_pastur_cdf(0.5, -1.0), 0.0);
    EXPECT_EQ(marchenko_pastur_cdf(0.5, 100.0), 1.0);
    EXPECT_NEAR(marchenko_pastur_cdf(2.0, 1e-9), 0.5, 1e-12);
    EXPECT_NEAR(marchenko_pastur_cdf(1.0, 4.0 - 1e-12), 1.0, 1e-6);
}
