#include <algorithm>
#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include <mimolab/channel.hpp>
#include <mimolab/numeric.hpp>
#include <mimolab/spectral.hpp>

using namespace mimolab;

TEST(Constellation, EntropyAndPower) {
    const auto b = constellation::bpsk(), q = constellation::qpsk();
    EXPECT_NEAR(b.entropy(), std::log(2.0), 1e-15);
    EXPECT_NEAR(q.entropy(), std::log(4.0), 1e-15);
    for (const auto& c : {b, q}) {
        double p = 0.0;
        for (const auto& s : c.symbols) p += std::norm(s);
        EXPECT_NEAR(p / c.size(), 1.0, 1e-15);
    }
    EXPECT_EQ(b.field(), field_kind::real);
    EXPECT_EQ(q.field(), field_kind::complex);
}

TEST(Xi, UnitLVarianceOverSeeds) {
    std::vector<double> v;
    for (int s = 0; s < 1000000; ++s) {
        rng_engine rng = make_stream(99, s);
        v.push_back(sample_xi<double>(1, 1, rng)(0, 0));
    }
    double m2 = 0.0;
    for (double x : v) m2 += x * x;
    EXPECT_NEAR(m2 / v.size(), 1.0, 0.01);
}

TEST(Xi, EmpiricalSpectrumFollowsMarchenkoPastur) {
    rng_engine rng = make_stream(7, 0);
    const int n = 512;
    const auto xi = sample_xi<double>(n, n, rng);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(xi.transpose() * xi, Eigen::EigenvaluesOnly);
    std::vector<double> ev(es.eigenvalues().data(), es.eigenvalues().data() + n);
    std::sort(ev.begin(), ev.end());
    EXPECT_LT(kolmogorov_distance(ev, [](double x) { return marchenko_pastur_cdf(1.0, x); }), 0.05);
}

TEST(Correlation, IdentityAndTridiagonalForms) {
    const auto id = correlation_matrix::identity(4);
    EXPECT_TRUE(id.matrix().isApprox(Eigen::MatrixXcd::Identity(4, 4)));
    const auto t0 = correlation_matrix::tridiagonal(5, 0.0);
    EXPECT_TRUE(t0.real_matrix().isApprox(Eigen::MatrixXd::Identity(5, 5)));
    EXPECT_THROW(correlation_matrix::tridiagonal(50, 0.6), domain_error);
    EXPECT_NO_THROW(correlation_matrix::tridiagonal(50, 0.5));
    Eigen::MatrixXcd bad(2, 2);
    bad << 1.0, 2.0, 2.0, 1.0;
    EXPECT_THROW(correlation_matrix::dense(bad), domain_error);
    Eigen::MatrixXcd nonherm(2, 2);
    nonherm << 1.0, 0.1, 0.3, 1.0;
    EXPECT_THROW(correlation_matrix::dense(nonherm), domain_error);
}

TEST(Correlation, TridiagonalEigenvaluesMatchDenseSolver) {
    const auto t = correlation_matrix::tridiagonal(6, 0.2);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(t.real_matrix());
    EXPECT_LT((t.eigenvalues() - es.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Correlation, SquareRootSquaresBack) {
    const auto t = correlation_matrix::tridiagonal(8, 0.2);
    const auto s = matrix_sqrt_real(t);
    EXPECT_LT((s * s - t.real_matrix()).cwiseAbs().maxCoeff(), 1e-10);
    const auto sc = matrix_sqrt(t);
    EXPECT_LT((sc * sc - t.matrix()).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_TRUE(matrix_sqrt_real(correlation_matrix::identity(4)).isApprox(Eigen::MatrixXd::Identity(4, 4)));
}

TEST(Channel, NoiselessReceiveIsHb) {
    rng_engine rng = make_stream(1, 0);
    const auto rr = correlation_matrix::identity(6), rt = correlation_matrix::tridiagonal(5, 0.3);
    const auto ch = make_channel<double>(rr, rt, 0.0, rng);
    const auto b = random_symbols<double>(constellation::bpsk(), 5, rng);
    EXPECT_EQ((transmit(ch, b, rng) - ch.H * b).cwiseAbs().maxCoeff(), 0.0);
}

TEST(Channel, NoiseVarianceIsSigma2) {
    rng_engine rng = make_stream(2, 0);
    channel_instance<double> ch;
    ch.L = ch.K = 1;
    ch.H = Eigen::MatrixXd::Identity(1, 1);
    ch.sigma2 = 0.37;
    const int n = 100000;
    double s = 0.0, s2 = 0.0;
    Eigen::VectorXd b = Eigen::VectorXd::Ones(1);
    for (int i = 0; i < n; ++i) {
        const double e = transmit(ch, b, rng)(0) - 1.0;
        s += e;
        s2 += e * e;
    }
    const double var = s2 / n - (s / n) * (s / n);
    EXPECT_NEAR(var, 0.37, 3.0 * 0.37 * std::sqrt(2.0 / n));
}

TEST(Channel, ReceivedPowerMatchesTraceFormula) {
    rng_engine rng = make_stream(3, 0);
    const int K = 440, L = 400;
    const auto rr = correlation_matrix::identity(L), rt = correlation_matrix::tridiagonal(K, 0.2);
    const double sigma2 = 0.3;
    const auto ch = make_channel<double>(rr, rt, sigma2, rng);
    const double expect = (ch.H * ch.H.transpose()).trace() / L + sigma2;
    std::vector<double> p;
    for (int t = 0; t < 200; ++t) {
        const auto b = random_symbols<double>(constellation::bpsk(), K, rng);
        p.push_back(transmit(ch, b, rng).squaredNorm() / L);
    }
    const auto s = summarize(p);
    EXPECT_NEAR(s.mean, expect, 4.0 * s.stderr_);
}

TEST(Channel, SamplerMatchesMakeChannel) {
    const auto rr = correlation_matrix::identity(20), rt = correlation_matrix::tridiagonal(22, 0.4);
    rng_engine a = make_stream(4, 0), b = make_stream(4, 0);
    const auto c1 = make_channel<double>(rr, rt, 0.5, a);
    const auto c2 = channel_sampler<double>(rr, rt, 0.5)(b);
    EXPECT_LT((c1.H - c2.H).cwiseAbs().maxCoeff(), 1e-14);
}

TEST(Channel, ComplexChannelHasUnitEntryPowerPerL) {
    rng_engine rng = make_stream(5, 0);
    const auto xi = sample_xi<cplx>(200, 300, rng);
    EXPECT_NEAR(xi.squaredNorm() / 300.0, 1.0, 0.02);
}

TEST(Snr, SigmaConvention) {
    EXPECT_NEAR(snr_to_sigma2(0.0, 1.0), 1.0, 1e-15);
    EXPECT_NEAR(snr_to_sigma2(10.0, 1.0), 0.1, 1e-15);
    const auto rr = correlation_matrix::identity(4000), rt = correlation_matrix::identity(4400);
    EXPECT_NEAR(snr_to_sigma2(6.0, rr, rt), 1.1 * std::pow(10.0, -0.6), 1e-14);
}

TEST(Snr, SignalPowerMonteCarlo) {
    rng_engine rng = make_stream(6, 0);
    const auto rr = correlation_matrix::identity(100), rt = correlation_matrix::identity(110);
    std::vector<double> p;
    for (int t = 0; t < 200; ++t) {
        const auto ch = make_channel<double>(rr, rt, 0.0, rng);
        const auto b = random_symbols<double>(constellation::bpsk(), 110, rng);
        p.push_back((ch.H * b).squaredNorm() / 100.0);
    }
    const auto s = summarize(p);
    EXPECT_NEAR(s.mean, kronecker_signal_power(rr, rt), 4.0 * s.stderr_);
}
