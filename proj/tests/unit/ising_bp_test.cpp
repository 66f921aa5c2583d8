#include <algorithm>
#include <cmath>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include <mimolab/ising_bp.hpp>
#include <mimolab/replica.hpp>

using namespace mimolab;

TEST(Cholesky, IdentitiesAndKnownPoints) {
    for (int i = 0; i <= 100; ++i) {
        const double rho = -0.5 + i * 0.01;
        const auto f = cholesky_chain(rho);
        EXPECT_NEAR(f.l0 * f.l0 + f.l1 * f.l1, 1.0, 1e-14);
        EXPECT_NEAR(f.l0 * f.l1, rho, 1e-14);
    }
    EXPECT_EQ(cholesky_chain(0.0).l0, 1.0);
    EXPECT_EQ(cholesky_chain(0.0).l1, 0.0);
    EXPECT_NEAR(cholesky_chain(0.5).l0, 1.0 / std::numbers::sqrt2, 1e-15);
    EXPECT_NEAR(cholesky_chain(0.5).l1, 1.0 / std::numbers::sqrt2, 1e-15);
    EXPECT_NEAR(cholesky_chain(0.2).l0, 0.9789063129, 1e-10);
    EXPECT_NEAR(cholesky_chain(0.2).l1, 0.2043096437, 1e-10);
    EXPECT_THROW(cholesky_chain(0.51), domain_error);
}

TEST(Cholesky, LambdaProductIsChainCorrelationAwayFromCorner) {
    const auto f = cholesky_chain(0.3);
    const auto L = chain_lambda(f, 6);
    Eigen::MatrixXd c = L * L.transpose();
    EXPECT_NEAR(c(0, 0), f.l0 * f.l0, 1e-15);
    c(0, 0) = 1.0;
    Eigen::MatrixXd t = Eigen::MatrixXd::Identity(6, 6);
    for (int k = 0; k < 5; ++k) t(k, k + 1) = t(k + 1, k) = 0.3;
    EXPECT_LT((c - t).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Factor, AllPlusWeight) {
    const auto f = cholesky_chain(0.2);
    for (int tb : {-1, 1}) {
        const double eta = 0.37, chi = 1.4;
        EXPECT_NEAR(factor_weight(1, 1, tb, eta, chi, f), 0.5 * std::exp(std::sqrt(chi) * eta * (f.l0 + f.l1 * tb)), 1e-14);
    }
}

TEST(Cavity, MatchesTwoSpinTrace) {
    rng_engine rng = make_stream(1, 0);
    const auto f = cholesky_chain(0.35);
    for (int i = 0; i < 100; ++i) {
        const double h = 2.0 * standard_normal(rng), eta = standard_normal(rng), chi = 0.2 + 3.0 * uniform01(rng);
        const int tb = random_spin(rng);
        auto trace = [&](int out, bool forward) {
            double s = 0.0;
            for (int t : {-1, 1})
                s += forward ? std::exp(h * t) * factor_weight(t, out, tb, eta, chi, f)
                             : std::exp(h * t) * factor_weight(out, t, tb, eta, chi, f);
            return s;
        };
        EXPECT_NEAR(forward_cavity(h, tb, eta, chi, f), 0.5 * std::log(trace(1, true) / trace(-1, true)), 1e-12);
        EXPECT_NEAR(backward_cavity(h, tb, eta, chi, f), 0.5 * std::log(trace(1, false) / trace(-1, false)), 1e-12);
    }
}

TEST(Cavity, ZeroCorrelationIgnoresInput) {
    const auto f = cholesky_chain(0.0);
    EXPECT_EQ(forward_cavity(-3.0, 1, 0.4, 2.0, f), forward_cavity(5.0, 1, 0.4, 2.0, f));
}

TEST(Cavity, SignOfCorrelationIsARelabelling) {
    // The factor sees l1 only through l1 * tau_bar, so rho -> -rho equals tau_bar -> -tau_bar.
    const auto fp = cholesky_chain(0.3), fm = cholesky_chain(-0.3);
    for (double h : {-1.0, 0.2, 2.5})
        for (double eta : {-0.7, 0.3})
            for (int tb : {-1, 1}) {
                EXPECT_NEAR(forward_cavity(h, tb, eta, 1.1, fp), forward_cavity(h, -tb, eta, 1.1, fm), 1e-14);
                EXPECT_NEAR(backward_cavity(h, tb, eta, 1.1, fp), backward_cavity(h, -tb, eta, 1.1, fm), 1e-14);
            }
}

TEST(Chain, BpEqualsEnumerationOnRandomChains) {
    rng_engine rng = make_stream(2, 0);
    for (int t = 0; t < 100; ++t) {
        const int K = 2 + t % 11;
        const double rho = -0.5 + uniform01(rng);
        const double chi = 0.1 + 4.0 * uniform01(rng);
        const auto d = sample_chain_disorder(K, chain_boundary::open, rng);
        const auto f = cholesky_chain(rho);
        const auto a = chain_marginals_bp(d, chi, f);
        const auto b = exact_chain_marginals(d, chi, f);
        for (int k = 0; k < K; ++k) EXPECT_NEAR(a[k], b[k], 1e-10);
    }
}

TEST(Chain, ZeroCorrelationFactorizes) {
    rng_engine rng = make_stream(3, 0);
    const auto d = sample_chain_disorder(6, chain_boundary::open, rng);
    const auto f = cholesky_chain(0.0);
    const auto m = chain_marginals_bp(d, 1.3, f);
    for (int k = 0; k < 6; ++k) EXPECT_NEAR(m[k], std::tanh(1.3 + std::sqrt(1.3) * d.eta[k]), 1e-12);
}

TEST(Chain, SingleSiteClosedForm) {
    chain_disorder d;
    d.eta = {0.4};
    const auto f = cholesky_chain(0.0);
    // A lone site sees only the terminal factor.
    EXPECT_NEAR(exact_chain_marginals(d, 2.0, f)[0], std::tanh(2.0 + std::sqrt(2.0) * 0.4), 1e-14);
}

TEST(Chain, LogPartitionMatchesEnumeration) {
    rng_engine rng = make_stream(4, 0);
    for (auto bc : {chain_boundary::open, chain_boundary::periodic}) {
        const int K = 8;
        const auto d = sample_chain_disorder(K, bc, rng);
        const auto f = cholesky_chain(0.27);
        const double chi = 1.7;
        double z = 0.0;
        for (std::uint32_t c = 0; c < (1u << K); ++c) {
            auto s = [c](int k) { return (c >> k) & 1u ? -1 : 1; };
            double lw = 0.0;
            if (bc == chain_boundary::open) {
                for (int k = 0; k + 1 < K; ++k) lw += factor_log_weight(s(k), s(k + 1), d.tau_bar[k], d.eta[k], chi, f);
                lw += terminal_log_weight(s(K - 1), d.eta[K - 1], chi, f);
            } else {
                for (int k = 0; k < K; ++k) lw += factor_log_weight(s(k), s((k + 1) % K), d.tau_bar[k], d.eta[k], chi, f);
            }
            z += std::exp(lw);
        }
        EXPECT_NEAR(chain_log_partition(d, chi, f), std::log(z), 1e-12);
    }
}

TEST(Chain, RingDisorderHasUnitProduct) {
    rng_engine rng = make_stream(5, 0);
    for (int t = 0; t < 20; ++t) {
        const auto d = sample_chain_disorder(10, chain_boundary::periodic, rng);
        int p = 1;
        for (int v : d.tau_bar) p *= v;
        EXPECT_EQ(p, 1);
    }
}

TEST(IsingChain, TransferMatchesEnumeration) {
    rng_engine rng = make_stream(6, 0);
    for (int t = 0; t < 20; ++t) {
        const int K = 1 + t % 10;
        Eigen::VectorXd h(K), j(std::max(0, K - 1));
        for (int k = 0; k < K; ++k) h(k) = 2.0 * standard_normal(rng);
        for (int k = 0; k + 1 < K; ++k) j(k) = standard_normal(rng);
        const auto a = solve_ising_chain(h, j), b = exact_ising_chain(h, j);
        EXPECT_LT((a.m - b.m).cwiseAbs().maxCoeff(), 1e-12);
        if (K > 1) { EXPECT_LT((a.pair - b.pair).cwiseAbs().maxCoeff(), 1e-12); }
        EXPECT_NEAR(a.log_z, b.log_z, 1e-12);
    }
}

TEST(Population, ZeroCorrelationGivesQFunction) {
    rng_engine rng = make_stream(7, 0);
    population_options opt;
    opt.pop_size = 50000;
    for (double chi : {0.5, 2.0}) {
        const auto p = population_dynamics(chi, 0.0, opt, rng);
        EXPECT_NEAR(ber_from_populations(p), normal_cdf(-std::sqrt(chi)), 4e-3);
    }
}

TEST(Population, Deterministic) {
    population_options opt;
    opt.pop_size = 5000;
    rng_engine a = make_stream(8, 0), b = make_stream(8, 0);
    const auto p = population_dynamics(1.0, 0.2, opt, a), q = population_dynamics(1.0, 0.2, opt, b);
    EXPECT_EQ(p.plus.samples, q.plus.samples);
    EXPECT_EQ(p.minus.samples, q.minus.samples);
}

TEST(Population, WeakCorrelationMatchesFiniteChain) {
    const double chi = 1.0, rho = 0.05;
    rng_engine rng = make_stream(9, 0);
    population_options opt;
    opt.pop_size = 100000;
    const double pb = ber_from_populations(population_dynamics(chi, rho, opt, rng));
    const auto f = cholesky_chain(rho);
    std::vector<double> errs;
    for (int s = 0; s < 200; ++s) {
        rng_engine r = make_stream(10, s);
        const auto d = sample_chain_disorder(1000, chain_boundary::open, r);
        const auto m = chain_marginals_bp(d, chi, f);
        double e = 0.0;
        // Bulk sites only; the two ends see fewer factors.
        for (int k = 50; k < 950; ++k) e += m[k] < 0.0 ? 1.0 : (m[k] == 0.0 ? 0.5 : 0.0);
        errs.push_back(e / 900.0);
    }
    const auto s = summarize(errs);
    EXPECT_NEAR(pb, s.mean, 3.0 * std::hypot(s.stderr_, std::sqrt(pb * (1 - pb) / opt.pop_size)));
}

TEST(Population, BerEdgeCases) {
    EXPECT_EQ(ber_from_populations({1.0, 2.0}, {0.5, 3.0}), 0.0);
    EXPECT_NEAR(ber_from_populations({-1.0, 1.0}, {-2.0, 2.0}), 0.5, 1e-15);
    EXPECT_NEAR(ber_from_populations({0.0}, {0.0}), 0.5, 1e-15);
}

TEST(Population, KolmogorovDistance) {
    EXPECT_EQ(ks_distance_sorted({1.0, 2.0}, {1.0, 2.0}), 0.0);
    EXPECT_NEAR(ks_distance_sorted({0.0, 1.0}, {2.0, 3.0}), 1.0, 1e-15);
}
