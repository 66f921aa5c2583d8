#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"
#include "rng.hpp"

namespace mimolab {

enum class modulation { bpsk, qpsk };
enum class field_kind { real, complex };

using cplx = std::complex<double>;

struct constellation {
    modulation kind = modulation::bpsk;
    std::vector<cplx> symbols;

    static constellation bpsk() { return {modulation::bpsk, {cplx(1, 0), cplx(-1, 0)}}; }
    static constellation qpsk() {
        const double a = 1.0 / std::numbers::sqrt2;
        return {modulation::qpsk, {cplx(a, a), cplx(a, -a), cplx(-a, a), cplx(-a, -a)}};
    }

    field_kind field() const { return kind == modulation::bpsk ? field_kind::real : field_kind::complex; }
    std::size_t size() const { return symbols.size(); }
    double entropy() const { return std::log(static_cast<double>(symbols.size())); }
    std::string name() const { return kind == modulation::bpsk ? "bpsk" : "qpsk"; }
};

// Hermitian PSD correlation matrix: identity, tridiagonal I + rho*R, or dense.
class correlation_matrix {
public:
    enum class form { identity, tridiagonal, dense };

    static correlation_matrix identity(int dim) {
        check_dim(dim);
        correlation_matrix c;
        c.dim_ = dim;
        c.form_ = form::identity;
        return c;
    }

    static correlation_matrix tridiagonal(int dim, double rho) {
        check_dim(dim);
        correlation_matrix c;
        c.dim_ = dim;
        c.form_ = form::tridiagonal;
        c.rho_ = rho;
        const double lmin = 1.0 - 2.0 * std::abs(rho) * std::cos(std::numbers::pi / (dim + 1));
        if (!(lmin >= -1e-12)) throw domain_error("tridiagonal correlation is not PSD", rho);
        return c;
    }

    static correlation_matrix dense(const Eigen::MatrixXcd& m, double tol = 1e-10) {
        if (m.rows() != m.cols() || m.rows() == 0) throw dimension_error("dense correlation must be square and nonempty");
        const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
        if ((m - m.adjoint()).cwiseAbs().maxCoeff() > tol * scale)
            throw domain_error("dense correlation is not Hermitian", (m - m.adjoint()).cwiseAbs().maxCoeff());
        correlation_matrix c;
        c.dim_ = static_cast<int>(m.rows());
        c.form_ = form::dense;
        c.dense_ = 0.5 * (m + m.adjoint());
        const double lmin = c.eigenvalues().minCoeff();
        if (lmin < -tol * scale) throw domain_error("dense correlation is not PSD", lmin);
        return c;
    }

    int dim() const { return dim_; }
    form kind() const { return form_; }
    double rho() const { return rho_; }
    bool is_real() const { return form_ != form::dense || dense_.imag().cwiseAbs().maxCoeff() == 0.0; }

    Eigen::MatrixXcd matrix() const {
        switch (form_) {
            case form::identity: return Eigen::MatrixXcd::Identity(dim_, dim_);
            case form::tridiagonal: return real_matrix().cast<cplx>();
            default: return dense_;
        }
    }

    Eigen::MatrixXd real_matrix() const {
        switch (form_) {
            case form::identity: return Eigen::MatrixXd::Identity(dim_, dim_);
            case form::tridiagonal: {
                Eigen::MatrixXd m = Eigen::MatrixXd::Identity(dim_, dim_);
                for (int k = 0; k + 1 < dim_; ++k) m(k, k + 1) = m(k + 1, k) = rho_;
                return m;
            }
            default:
                if (!is_real()) throw domain_error("correlation matrix has imaginary entries", 0.0);
                return dense_.real();
        }
    }

    double trace() const { return form_ == form::dense ? dense_.trace().real() : static_cast<double>(dim_); }

    // Ascending eigenvalues.
    Eigen::VectorXd eigenvalues() const {
        switch (form_) {
            case form::identity: return Eigen::VectorXd::Ones(dim_);
            case form::tridiagonal: {
                Eigen::VectorXd ev(dim_);
                for (int k = 1; k <= dim_; ++k)
                    ev(k - 1) = 1.0 + 2.0 * rho_ * std::cos(k * std::numbers::pi / (dim_ + 1));
                std::sort(ev.data(), ev.data() + dim_);
                return ev;
            }
            default: return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(dense_, Eigen::EigenvaluesOnly).eigenvalues();
        }
    }

private:
    static void check_dim(int dim) {
        if (dim < 1) throw dimension_error("correlation matrix dimension must be >= 1");
    }

    int dim_ = 0;
    form form_ = form::identity;
    double rho_ = 0.0;
    Eigen::MatrixXcd dense_;
};

namespace detail {

template <class M>
M psd_sqrt(const M& a, double tol) {
    Eigen::SelfAdjointEigenSolver<M> es(a);
    const auto& ev = es.eigenvalues();
    const double scale = std::max(1.0, ev.cwiseAbs().maxCoeff());
    if (ev.minCoeff() < -tol * scale) throw domain_error("matrix_sqrt: negative eigenvalue", ev.minCoeff());
    Eigen::VectorXd s = ev.cwiseMax(0.0).cwiseSqrt();
    M out = es.eigenvectors() * s.asDiagonal() * es.eigenvectors().adjoint();
    return 0.5 * (out + M(out.adjoint()));
}

}  // namespace detail

// Hermitian PSD square root via eigendecomposition.
inline Eigen::MatrixXcd matrix_sqrt(const correlation_matrix& c, double tol = 1e-10) {
    if (c.kind() == correlation_matrix::form::identity) return Eigen::MatrixXcd::Identity(c.dim(), c.dim());
    return detail::psd_sqrt<Eigen::MatrixXcd>(c.matrix(), tol);
}

inline Eigen::MatrixXd matrix_sqrt_real(const correlation_matrix& c, double tol = 1e-10) {
    if (c.kind() == correlation_matrix::form::identity) return Eigen::MatrixXd::Identity(c.dim(), c.dim());
    return detail::psd_sqrt<Eigen::MatrixXd>(c.real_matrix(), tol);
}

template <class Scalar>
using matrix_t = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <class Scalar>
using vector_t = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <class Scalar>
constexpr field_kind field_of() {
    return std::is_same_v<Scalar, double> ? field_kind::real : field_kind::complex;
}

// Unit-variance noise sample of the given field (complex: variance 1/2 per component).
template <class Scalar>
Scalar noise_sample(rng_engine& rng) {
    if constexpr (std::is_same_v<Scalar, double>) {
        return standard_normal(rng);
    } else {
        const double re = standard_normal(rng);
        const double im = standard_normal(rng);
        return Scalar(re, im) / std::numbers::sqrt2;
    }
}

// L x K matrix with i.i.d. zero-mean entries, E|Xi_lk|^2 = 1/L.
template <class Scalar>
matrix_t<Scalar> sample_xi(int L, int K, rng_engine& rng) {
    if (L < 1 || K < 1) throw dimension_error("sample_xi: dimensions must be >= 1");
    matrix_t<Scalar> xi(L, K);
    const double s = 1.0 / std::sqrt(static_cast<double>(L));
    for (int k = 0; k < K; ++k)
        for (int l = 0; l < L; ++l) xi(l, k) = s * noise_sample<Scalar>(rng);
    return xi;
}

template <class Scalar>
struct channel_instance {
    matrix_t<Scalar> H;
    matrix_t<Scalar> xi;
    double sigma2 = 1.0;
    int L = 0;
    int K = 0;

    double beta() const { return static_cast<double>(K) / static_cast<double>(L); }
    static constexpr field_kind field() { return field_of<Scalar>(); }
};

template <class Scalar>
matrix_t<Scalar> sqrt_for(const correlation_matrix& c) {
    if constexpr (std::is_same_v<Scalar, double>) return matrix_sqrt_real(c);
    else return matrix_sqrt(c);
}

// H = sqrt(Rr) * Xi * sqrt(Rt).
template <class Scalar>
channel_instance<Scalar> make_channel(const correlation_matrix& rr, const correlation_matrix& rt, double sigma2,
                                      rng_engine& rng) {
    if (sigma2 < 0.0) throw domain_error("make_channel: sigma2 must be >= 0", sigma2);
    channel_instance<Scalar> ch;
    ch.L = rr.dim();
    ch.K = rt.dim();
    ch.sigma2 = sigma2;
    ch.xi = sample_xi<Scalar>(ch.L, ch.K, rng);
    const bool rr_id = rr.kind() == correlation_matrix::form::identity;
    const bool rt_id = rt.kind() == correlation_matrix::form::identity;
    matrix_t<Scalar> h = rt_id ? ch.xi : matrix_t<Scalar>(ch.xi * sqrt_for<Scalar>(rt));
    ch.H = rr_id ? h : matrix_t<Scalar>(sqrt_for<Scalar>(rr) * h);
    return ch;
}

// Caches the correlation square roots so that repeated draws skip the
// eigendecompositions.
template <class Scalar>
class channel_sampler {
public:
    channel_sampler(const correlation_matrix& rr, const correlation_matrix& rt, double sigma2)
        : L_(rr.dim()), K_(rt.dim()), sigma2_(sigma2),
          rr_id_(rr.kind() == correlation_matrix::form::identity),
          rt_id_(rt.kind() == correlation_matrix::form::identity) {
        if (sigma2 < 0.0) throw domain_error("channel_sampler: sigma2 must be >= 0", sigma2);
        if (!rr_id_) sqrt_rr_ = sqrt_for<Scalar>(rr);
        if (!rt_id_) sqrt_rt_ = sqrt_for<Scalar>(rt);
    }

    channel_instance<Scalar> operator()(rng_engine& rng) const {
        channel_instance<Scalar> ch;
        ch.L = L_;
        ch.K = K_;
        ch.sigma2 = sigma2_;
        ch.xi = sample_xi<Scalar>(L_, K_, rng);
        matrix_t<Scalar> h = rt_id_ ? ch.xi : matrix_t<Scalar>(ch.xi * sqrt_rt_);
        ch.H = rr_id_ ? h : matrix_t<Scalar>(sqrt_rr_ * h);
        return ch;
    }

private:
    int L_, K_;
    double sigma2_;
    bool rr_id_, rt_id_;
    matrix_t<Scalar> sqrt_rr_, sqrt_rt_;
};

template <class Scalar>
vector_t<Scalar> random_symbols(const constellation& c, int K, rng_engine& rng) {
    if (field_of<Scalar>() != c.field()) throw dimension_error("random_symbols: constellation does not match field");
    vector_t<Scalar> b(K);
    for (int k = 0; k < K; ++k) {
        const cplx s = c.symbols[rng() % c.size()];
        if constexpr (std::is_same_v<Scalar, double>) b(k) = s.real();
        else b(k) = s;
    }
    return b;
}

// r = H b + sigma * eta.
template <class Scalar>
vector_t<Scalar> transmit(const channel_instance<Scalar>& ch, const vector_t<Scalar>& b, rng_engine& rng) {
    if (b.size() != ch.K) throw dimension_error("transmit: symbol vector length != K");
    vector_t<Scalar> r = ch.H * b;
    if (ch.sigma2 > 0.0) {
        const double s = std::sqrt(ch.sigma2);
        for (int l = 0; l < ch.L; ++l) r(l) += s * noise_sample<Scalar>(rng);
    }
    return r;
}

// Expected received signal power per receive dimension, E|Hb|^2 / L, for
// unit-power symbols: Tr(Rr) Tr(Rt) / L^2.
inline double kronecker_signal_power(const correlation_matrix& rr, const correlation_matrix& rt) {
    const double L = rr.dim();
    return rr.trace() * rt.trace() / (L * L);
}

// sigma2 = (signal power per receive dimension) / 10^(snr_db/10).
inline double snr_to_sigma2(double snr_db, double signal_power_per_rx = 1.0) {
    return signal_power_per_rx / std::pow(10.0, snr_db / 10.0);
}

inline double snr_to_sigma2(double snr_db, const correlation_matrix& rr, const correlation_matrix& rt) {
    return snr_to_sigma2(snr_db, kronecker_signal_power(rr, rt));
}

inline constexpr const char* sigma2_convention = "sigma2=TrRr*TrRt/L^2/10^(snr_db/10)";

}  // namespace mimolab
