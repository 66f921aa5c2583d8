#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <filesystem>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "../channel.hpp"
#include "../demod.hpp"
#include "../perturbation.hpp"
#include "../replica.hpp"
#include "../spectral.hpp"
#include "config.hpp"
#include "plot.hpp"
#include "table.hpp"

namespace mimolab::harness {

inline constexpr const char* library_version = "mimolab 1.0.0";
inline constexpr const char* entropy_convention = "chi=10^(snr_db/10)";

inline unsigned default_workers() { return std::max(1u, std::thread::hardware_concurrency()); }

// Runs fn(i) for i in [0, n) on a bounded pool. fn must not throw.
inline void parallel_for(std::size_t n, unsigned workers, const std::function<void(std::size_t)>& fn) {
    workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (workers == 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w)
        pool.emplace_back([&] {
            for (std::size_t i = next++; i < n; i = next++) fn(i);
        });
    for (auto& th : pool) th.join();
}

inline std::uint64_t point_seed(std::uint64_t seed, std::size_t point) { return splitmix64(seed ^ splitmix64(point + 1)); }

inline spectrum transmit_spectrum(double rho) {
    return rho == 0.0 ? spectrum::delta(1.0) : tridiagonal_spectrum_asymptotic(rho);
}

// Monte-Carlo demodulation BER at one operating point (Rr = I, tridiagonal Rt).
struct demod_point {
    double ber = 0.0;
    double stderr_ = 0.0;
    std::size_t trials = 0;
    std::size_t converged = 0;
    std::size_t within_60 = 0;
    std::vector<int> iterations;
    double sigma2 = 0.0;
};

struct demod_point_options {
    demod_options demod;
    bool adaptive = true;  // add batches while the relative stderr exceeds 20%
    int max_batches = 8;
    unsigned workers = 1;
};

inline demod_point simulate_demod_ber(int K, int L, double rho, double snr_db, int trials, std::uint64_t seed,
                                      const demod_point_options& opt = {}) {
    const auto rr = correlation_matrix::identity(L);
    const auto rt = rho == 0.0 ? correlation_matrix::identity(K) : correlation_matrix::tridiagonal(K, rho);
    demod_point out;
    out.sigma2 = snr_to_sigma2(snr_db, rr, rt);
    const channel_sampler<double> sampler(rr, rt, out.sigma2);
    const spectrum rr_spec = spectrum::delta(1.0);
    std::vector<double> ber;
    std::vector<int> iters;
    std::vector<char> conv;
    for (int batch = 0; batch < opt.max_batches; ++batch) {
        const std::size_t first = ber.size();
        ber.resize(first + trials);
        iters.resize(first + trials);
        conv.resize(first + trials);
        parallel_for(static_cast<std::size_t>(trials), opt.workers, [&](std::size_t j) {
            const std::size_t i = first + j;
            rng_engine rng = make_stream(seed, i);
            const auto ch = sampler(rng);
            const auto b = random_symbols<double>(constellation::bpsk(), K, rng);
            const auto r = transmit(ch, b, rng);
            const auto res = demod_run(ch, r, rt, rr_spec, opt.demod);
            ber[i] = static_cast<double>((res.b_hat.array() != b.array()).count()) / K;
            iters[i] = res.iterations;
            conv[i] = res.converged ? 1 : 0;
        });
        const auto s = summarize(ber);
        out.ber = s.mean;
        out.stderr_ = s.stderr_;
        if (!opt.adaptive || (s.mean > 0.0 && s.stderr_ <= 0.2 * s.mean)) break;
    }
    out.trials = ber.size();
    out.iterations = iters;
    for (std::size_t i = 0; i < ber.size(); ++i) {
        out.converged += conv[i] ? 1 : 0;
        out.within_60 += (conv[i] && iters[i] <= 60) ? 1 : 0;
    }
    for (double v : ber)
        if (!std::isfinite(v)) throw range_error("simulate_demod_ber: non-finite BER");
    return out;
}

namespace detail {

struct task {
    std::size_t point;
    double x, rho, snr_db;
    std::string method;
};

inline result_row entropy_row(const experiment_config& cfg, const task& t, std::uint64_t seed) {
    result_row row;
    const double chi = std::pow(10.0, t.snr_db / 10.0);
    const auto c = constellation::bpsk();
    row.sigma2_convention = entropy_convention;
    row.meta["chi"] = format_number(chi);
    if (t.method == "identity") {
        row.y = ln2 - mi_identity(chi, c);
    } else if (t.method == "matrix_integration") {
        const auto r = mi_rotated_subchannel(transmit_spectrum(t.rho), chi, c);
        row.y = ln2 - r.value;
        row.meta["extremizer"] = format_number(r.extremizer_lambda);
        row.meta["gradient"] = format_number(r.gradient);
    } else if (t.method == "perturbative") {
        const auto r = mi_rotated_subchannel(transmit_spectrum(t.rho), chi, c);
        const double d = discrepancy(chi, t.rho, chain_matrix_stats_asymptotic(), c);
        row.y = ln2 - (r.value + d);
        row.meta["discrepancy"] = format_number(d);
    } else if (t.method == "exact_mc") {
        const auto r = mi_exact_chain_mc(t.rho, chi, cfg.K, static_cast<std::size_t>(cfg.trials), seed);
        row.y = ln2 - r.value;
        row.stderr_ = r.mc_stderr.value_or(0.0);
        row.n = static_cast<long long>(r.n);
        row.meta["boundary"] = cfg.K % 2 == 0 && cfg.K >= 4 ? "periodic" : "open";
    }
    return row;
}

inline result_row ber_row(const experiment_config& cfg, const task& t, std::uint64_t seed) {
    result_row row;
    row.sigma2_convention = sigma2_convention;
    const auto rr_m = correlation_matrix::identity(cfg.L);
    const auto rt_m = t.rho == 0.0 ? correlation_matrix::identity(cfg.K) : correlation_matrix::tridiagonal(cfg.K, t.rho);
    const double sigma2 = snr_to_sigma2(t.snr_db, rr_m, rt_m);
    const double beta = cfg.beta();
    const auto rr = spectrum::delta(1.0);
    const auto c = constellation::bpsk();
    row.meta["sigma2"] = format_number(sigma2);
    if (t.method == "population_dynamics") {
        const ber_prediction_options opt;
        const auto p = chain_ber_prediction(rr, beta, sigma2, t.rho, seed, opt);
        row.y = p.ber;
        row.stderr_ = p.stderr_;
        row.n = static_cast<long long>(opt.population.pop_size);
        row.meta["outer_iterations"] = std::to_string(p.outer_iterations);
        row.meta["sweeps"] = std::to_string(p.sweeps);
        row.meta["effective_snr"] = format_number(p.effective_snr);
    } else if (t.method == "matrix_integration" || t.method == "identity") {
        const auto rt = t.method == "identity" ? spectrum::delta(1.0) : transmit_spectrum(t.rho);
        const auto r = mi_matrix_integration(rr, rt, sigma2, beta, c);
        row.y = matrix_integration_ber(r);
        row.meta["lambda"] = format_number(r.extremizer_lambda);
        row.meta["mu"] = format_number(r.inner_lambda);
    } else if (t.method == "demod_sim") {
        const auto d = simulate_demod_ber(cfg.K, cfg.L, t.rho, t.snr_db, cfg.trials, seed);
        row.y = d.ber;
        row.stderr_ = d.stderr_;
        row.n = static_cast<long long>(d.trials);
        row.meta["converged"] = std::to_string(d.converged);
        row.meta["converged_within_60"] = std::to_string(d.within_60);
        row.meta["tol"] = "1e-06";
        row.meta["t_max"] = "200";
        row.meta["damping"] = "0";
    }
    if (!(row.y >= 0.0 && row.y <= 1.0)) throw range_error("BER outside [0, 1]");
    return row;
}

}  // namespace detail

struct run_report {
    result_table rows;
    std::size_t failed = 0;
};

inline run_report run_experiment(const experiment_config& cfg, unsigned workers = default_workers()) {
    validate(cfg);
    if (cfg.experiment == experiment_kind::selftest) throw config_error("run_experiment: use the selftest command");
    const bool snr_x = sweeps_snr(cfg.experiment);
    const auto& xs = cfg.x_grid();
    const auto& cs = cfg.curve_grid();
    std::vector<detail::task> tasks;
    for (std::size_t ci = 0; ci < cs.size(); ++ci)
        for (std::size_t xi = 0; xi < xs.size(); ++xi)
            for (const auto& m : cfg.effective_methods()) {
                const double rho = snr_x ? cs[ci] : xs[xi];
                const double snr = snr_x ? xs[xi] : cs[ci];
                tasks.push_back({ci * xs.size() + xi, xs[xi], rho, snr, m});
            }
    run_report rep;
    rep.rows.resize(tasks.size());
    parallel_for(tasks.size(), workers, [&](std::size_t i) {
        const auto& t = tasks[i];
        const std::uint64_t seed = point_seed(cfg.seed, t.point);
        result_row row;
        try {
            row = is_entropy(cfg.experiment) ? detail::entropy_row(cfg, t, seed) : detail::ber_row(cfg, t, seed);
            if (!std::isfinite(row.y)) throw range_error("non-finite result");
        } catch (const std::exception& e) {
            row = result_row{};
            row.y = std::nan("");
            row.stderr_ = std::nan("");
            row.failed = true;
            row.sigma2_convention = is_entropy(cfg.experiment) ? entropy_convention : sigma2_convention;
            row.meta["error"] = e.what();
        }
        row.x = t.x;
        row.method = t.method;
        row.seed = seed;
        row.k = cfg.K;
        row.l = cfg.L;
        row.rho = t.rho;
        row.snr_db = t.snr_db;
        rep.rows[i] = std::move(row);
    });
    sort_rows(rep.rows);
    for (const auto& r : rep.rows) rep.failed += r.failed ? 1 : 0;
    return rep;
}

// Provenance sidecar: config, versions, tolerances and per-row diagnostics.
inline nlohmann::json provenance(const experiment_config& cfg, const result_table& rows) {
    nlohmann::json j;
    j["library"] = library_version;
    j["config"] = to_json(cfg);
    j["tolerances"] = {{"quadrature", quad::default_tol},
                       {"demod_tol", demod_options{}.tol},
                       {"demod_t_max", demod_options{}.t_max},
                       {"population_size", population_options{}.pop_size},
                       {"population_ks_tol", population_options{}.ks_tol},
                       {"prediction_rel_tol", ber_prediction_options{}.rel_tol}};
    j["rng"] = "mt19937_64 streams keyed by splitmix64(seed, index)";
    nlohmann::json arr = nlohmann::json::array();
    for (const auto& r : rows) {
        nlohmann::json e;
        e["x"] = r.x;
        e["method"] = r.method;
        e["rho"] = r.rho;
        e["snr_db"] = r.snr_db;
        e["seed"] = r.seed;
        e["failed"] = r.failed;
        for (const auto& [k, v] : r.meta) e["meta"][k] = v;
        arr.push_back(e);
    }
    j["rows"] = arr;
    return j;
}

struct output_paths {
    std::string csv, svg, script, meta;
};

inline output_paths write_outputs(const experiment_config& cfg, const result_table& rows) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(cfg.output_dir, ec);
    if (ec) throw config_error("cannot create output directory '" + cfg.output_dir + "': " + ec.message());
    const std::string stem = (fs::path(cfg.output_dir) / to_string(cfg.experiment)).string();
    output_paths p{stem + ".csv", stem + ".svg", stem + ".gp", stem + ".meta.json"};
    write_text(p.csv, to_csv(rows));
    write_text(p.meta, provenance(cfg, rows).dump(2) + "\n");
    const auto style = is_ber(cfg.experiment) ? plot_style::log_y : plot_style::linear;
    bool any = false;
    for (const auto& r : rows) any = any || (std::isfinite(r.y) && (style == plot_style::linear || r.y > 0.0));
    if (any) {
        const auto files = emit_plot(rows, style, to_string(cfg.experiment));
        write_text(p.svg, files.svg);
        write_text(p.script, files.script);
    } else {
        p.svg.clear();
        p.script.clear();
    }
    return p;
}

}  // namespace mimolab::harness
